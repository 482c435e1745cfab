//! Finite binary strings with the canonical (length, lexicographic) order.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Longest string representable by [`BitString`].
pub const MAX_LEN: u32 = 128;

/// A binary string of at most [`MAX_LEN`] symbols.
///
/// Symbols are stored most-significant first, so for two strings of the same
/// length lexicographic order coincides with numeric order of `value()`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    len: u8,
    value: u128,
}

impl BitString {
    pub const EMPTY: BitString = BitString { len: 0, value: 0 };

    /// String of `len` symbols whose big-endian reading is `value`.
    pub fn new(value: u128, len: u32) -> Result<Self> {
        if len > MAX_LEN {
            return Err(Error::Parameter(format!("bit string length {len} exceeds {MAX_LEN}")));
        }
        if len < 128 && value >> len != 0 {
            return Err(Error::Parameter(format!("value {value} does not fit in {len} bits")));
        }
        Ok(BitString { len: len as u8, value })
    }

    /// Like [`BitString::new`] for callers that already guarantee the bounds.
    pub(crate) fn from_parts(value: u128, len: u32) -> Self {
        debug_assert!(len <= MAX_LEN && (len == 128 || value >> len == 0));
        BitString { len: len as u8, value }
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let mut s = BitString::EMPTY;
        for &b in bits {
            s = s.push(b)?;
        }
        Ok(s)
    }

    /// `count` copies of the symbol `bit`.
    pub fn repeat_bit(bit: bool, count: u32) -> Result<Self> {
        let value = if bit && count > 0 {
            if count == 128 {
                u128::MAX
            } else {
                (1u128 << count) - 1
            }
        } else {
            0
        };
        BitString::new(value, count)
    }

    pub fn len(&self) -> u32 {
        self.len as u32
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn value(&self) -> u128 {
        self.value
    }

    /// Symbol at position `i`, counted from the left.
    pub fn bit(&self, i: u32) -> bool {
        assert!(i < self.len(), "bit index {i} out of range for length {}", self.len);
        (self.value >> (self.len() - 1 - i)) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| self.bit(i))
    }

    pub fn push(&self, bit: bool) -> Result<Self> {
        if self.len() == MAX_LEN {
            return Err(Error::Parameter(format!("bit string would exceed {MAX_LEN} symbols")));
        }
        Ok(BitString::from_parts((self.value << 1) | bit as u128, self.len() + 1))
    }

    pub fn concat(&self, other: &BitString) -> Result<Self> {
        let len = self.len() + other.len();
        if len > MAX_LEN {
            return Err(Error::Parameter(format!(
                "concatenation of length {len} exceeds {MAX_LEN}"
            )));
        }
        let head = if other.len() == 128 {
            0
        } else {
            self.value << other.len()
        };
        Ok(BitString::from_parts(head | other.value, len))
    }

    /// First `n` symbols.
    pub fn prefix(&self, n: u32) -> BitString {
        assert!(n <= self.len());
        let drop = self.len() - n;
        let value = if drop == 128 { 0 } else { self.value >> drop };
        BitString::from_parts(value, n)
    }

    /// Everything after the first `n` symbols.
    pub fn suffix_from(&self, n: u32) -> BitString {
        assert!(n <= self.len());
        let keep = self.len() - n;
        let value = if keep == 128 {
            self.value
        } else {
            self.value & ((1u128 << keep) - 1)
        };
        BitString::from_parts(value, keep)
    }

    /// Bitwise XOR of two strings of equal length.
    pub fn xor(&self, other: &BitString) -> Option<BitString> {
        (self.len == other.len).then(|| BitString::from_parts(self.value ^ other.value, self.len()))
    }

    /// All strings of length `n` in lexicographic order.
    pub fn all_of_length(n: u32) -> impl Iterator<Item = BitString> {
        assert!(n < 64, "enumerating 2^{n} strings is not supported");
        (0..1u128 << n).map(move |v| BitString::from_parts(v, n))
    }

    /// All strings with length at most `max_len`, in canonical order.
    pub fn all_up_to(max_len: u32) -> impl Iterator<Item = BitString> {
        (0..=max_len).flat_map(BitString::all_of_length)
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| self.value.cmp(&other.value))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The empty string renders as `-`.
impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "-" {
            return Ok(BitString::EMPTY);
        }
        let mut out = BitString::EMPTY;
        for c in s.chars() {
            out = match c {
                '0' => out.push(false)?,
                '1' => out.push(true)?,
                _ => return Err(Error::Parameter(format!("invalid symbol {c:?} in bit string {s:?}"))),
            };
        }
        Ok(out)
    }
}
