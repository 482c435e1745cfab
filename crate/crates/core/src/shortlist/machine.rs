//! Toy description machines small enough for exact brute-force complexity.
//!
//! `RLE1` programs:
//! * `0 w` prints `w`;
//! * `1 LLL w CCCC` prints the `l`-bit block `w` repeated `count` times,
//!   with `l = LLL + 1` and `count = CCCC + 1`.
//!
//! `COND1` programs, run with a condition `y`:
//! * `00 w` prints `w`;
//! * `01` prints `y`;
//! * `10 w` with `|w| = |y|` prints `y xor w`;
//! * `11 q` runs the `RLE1` program `q`.

use std::fmt;
use std::str::FromStr;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Largest program length accepted by the complexity oracles.
pub const ENUMERATION_CAP: u32 = 22;

pub const DEFAULT_STEP_BUDGET: u64 = 10_000;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum MachineKind {
    Rle1,
    Cond1,
}

impl fmt::Display for MachineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MachineKind::Rle1 => "RLE1",
            MachineKind::Cond1 => "COND1",
        })
    }
}

impl FromStr for MachineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "RLE1" | "rle1" => Ok(MachineKind::Rle1),
            "COND1" | "cond1" => Ok(MachineKind::Cond1),
            _ => Err(Error::Parameter(format!("unknown machine {s:?}"))),
        }
    }
}

/// A total, deterministic machine. One step is charged per program bit
/// read and per output bit written.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ToyMachine {
    pub kind: MachineKind,
    pub step_budget: u64,
}

impl ToyMachine {
    pub fn rle1() -> Self {
        ToyMachine {
            kind: MachineKind::Rle1,
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }

    pub fn cond1() -> Self {
        ToyMachine {
            kind: MachineKind::Cond1,
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }

    /// Output on the empty condition.
    pub fn run(&self, p: &BitString) -> Option<BitString> {
        self.run_cond(p, &BitString::EMPTY)
    }

    /// Output with condition `y`. `RLE1` ignores the condition.
    pub fn run_cond(&self, p: &BitString, y: &BitString) -> Option<BitString> {
        let out = match self.kind {
            MachineKind::Rle1 => rle1(p),
            MachineKind::Cond1 => cond1(p, y),
        }?;
        (p.len() as u64 + out.len() as u64 <= self.step_budget).then_some(out)
    }
}

fn rle1(p: &BitString) -> Option<BitString> {
    if p.is_empty() {
        return None;
    }
    if !p.bit(0) {
        return Some(p.suffix_from(1));
    }
    if p.len() < 4 {
        return None;
    }
    let l = p.suffix_from(1).prefix(3).value() as u32 + 1;
    if p.len() != 1 + 3 + l + 4 {
        return None;
    }
    let block = p.suffix_from(4).prefix(l);
    let count = p.suffix_from(4 + l).value() as u32 + 1;
    let mut out = BitString::EMPTY;
    for _ in 0..count {
        out = out.concat(&block).ok()?;
    }
    Some(out)
}

fn cond1(p: &BitString, y: &BitString) -> Option<BitString> {
    if p.len() < 2 {
        return None;
    }
    let body = p.suffix_from(2);
    match (p.bit(0), p.bit(1)) {
        (false, false) => Some(body),
        (false, true) => body.is_empty().then_some(*y),
        (true, false) => body.xor(y),
        (true, true) => rle1(&body),
    }
}

fn check_cap(p_max: u32) -> Result<()> {
    if p_max > ENUMERATION_CAP {
        return Err(Error::Parameter(format!(
            "program length bound {p_max} exceeds the enumeration cap {ENUMERATION_CAP}"
        )));
    }
    Ok(())
}

/// Length of the shortest program of length at most `p_max` printing `x`,
/// by enumeration in canonical order.
pub fn complexity(m: &ToyMachine, x: &BitString, p_max: u32) -> Result<Option<u32>> {
    complexity_cond(m, x, &BitString::EMPTY, p_max)
}

/// As [`complexity`], with every program run on condition `y`.
pub fn complexity_cond(m: &ToyMachine, x: &BitString, y: &BitString, p_max: u32) -> Result<Option<u32>> {
    check_cap(p_max)?;
    Ok(BitString::all_up_to(p_max)
        .find(|p| m.run_cond(p, y).as_ref() == Some(x))
        .map(|p| p.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn rle1_literal_and_runs() {
        let m = ToyMachine::rle1();
        assert_eq!(m.run(&bs("0101")), Some(bs("101")));
        assert_eq!(m.run(&bs("0")), Some(BitString::EMPTY));
        assert_eq!(m.run(&bs("100011111")), Some(BitString::repeat_bit(true, 16).unwrap()));
        assert_eq!(m.run(&bs("1001100010")), Some(bs("101010")));
        assert_eq!(m.run(&bs("1000")), None);
        assert_eq!(m.run(&bs("10001111")), None);
        assert_eq!(m.run(&bs("1000111111")), None);
        assert_eq!(m.run(&BitString::EMPTY), None);
    }

    #[test]
    fn cond1_rules() {
        let m = ToyMachine::cond1();
        let y = bs("1100");
        assert_eq!(m.run_cond(&bs("00111"), &y), Some(bs("111")));
        assert_eq!(m.run_cond(&bs("01"), &y), Some(y));
        assert_eq!(m.run_cond(&bs("010"), &y), None);
        assert_eq!(m.run_cond(&bs("100110"), &y), Some(bs("1010")));
        assert_eq!(m.run_cond(&bs("10011"), &y), None);
        assert_eq!(
            m.run_cond(&bs("11100011111"), &y),
            Some(BitString::repeat_bit(true, 16).unwrap())
        );
        assert_eq!(m.run_cond(&bs("1"), &y), None);
    }

    #[test]
    fn step_budget_cuts_long_outputs() {
        let m = ToyMachine {
            kind: MachineKind::Rle1,
            step_budget: 20,
        };
        assert_eq!(m.run(&bs("100011111")), None);
        assert_eq!(m.run(&bs("100010111")), Some(BitString::repeat_bit(true, 8).unwrap()));
    }

    #[test]
    fn complexities() {
        let m = ToyMachine::rle1();
        let ones = BitString::repeat_bit(true, 16).unwrap();
        assert_eq!(complexity(&m, &ones, 12).unwrap(), Some(9));
        assert_eq!(complexity(&m, &BitString::EMPTY, 5).unwrap(), Some(1));
        assert_eq!(complexity(&m, &bs("0110"), 3).unwrap(), None);
        assert!(complexity(&m, &ones, 23).is_err());

        let c = ToyMachine::cond1();
        let y = bs("0110");
        assert_eq!(complexity_cond(&c, &y, &y, 8).unwrap(), Some(2));
        assert!(complexity_cond(&c, &bs("0011"), &y, 8).unwrap().unwrap() <= 6);
        assert_eq!(complexity_cond(&c, &ones, &BitString::EMPTY, 12).unwrap(), Some(11));
    }

    #[test]
    fn literal_bounds() {
        let m = ToyMachine::rle1();
        for x in BitString::all_up_to(6) {
            assert!(complexity(&m, &x, 10).unwrap().unwrap() <= x.len() + 1);
        }
    }
}
