//! Short lists of candidate descriptions.
//!
//! The list for `x` holds one entry per neighbor of `x` in every layered
//! graph of level `k <= |x|`, plus an entry carrying `x` itself. Computing
//! it needs only neighbor enumeration; the dovetail is consulted when an
//! entry is decoded.

mod dovetail;
mod machine;

pub use dovetail::{build_dovetail, dovetail_over, DovetailMap, LevelGraphs};
pub use machine::{complexity, complexity_cond, MachineKind, ToyMachine, DEFAULT_STEP_BUDGET, ENUMERATION_CAP};

use std::fmt;

use crate::bits::BitString;
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EntryKind {
    /// Right vertex `z` of the level-`k` graph.
    Eomt {
        k: u32,
        z: usize,
    },
    Identity(BitString),
}

/// One candidate description. For a level-`k` entry the core is `z`
/// written with `k + 1` bits; for the identity entry it is `x`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ListEntry {
    pub kind: EntryKind,
    pub core_length: u32,
}

impl ListEntry {
    pub fn eomt(k: u32, z: usize) -> Self {
        ListEntry {
            kind: EntryKind::Eomt { k, z },
            core_length: k + 1,
        }
    }

    pub fn identity(x: BitString) -> Self {
        ListEntry {
            kind: EntryKind::Identity(x),
            core_length: x.len(),
        }
    }

    /// The core as a bit string.
    pub fn core(&self) -> BitString {
        match self.kind {
            EntryKind::Eomt { k, z } => BitString::new(z as u128, k + 1).expect("z fits k + 1 bits"),
            EntryKind::Identity(x) => x,
        }
    }
}

impl fmt::Display for ListEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            EntryKind::Eomt { k, z } => write!(f, "EOMT {k} {z} corelen={}", self.core_length),
            EntryKind::Identity(x) => write!(f, "ID {x} corelen={}", self.core_length),
        }
    }
}

/// The list for `x`: neighbors level by level (level 0 first, global order
/// within a level), then the identity entry.
pub fn list_for(x: &BitString, dm: &DovetailMap) -> Result<Vec<ListEntry>> {
    let graphs = dm.graphs();
    if x.len() > graphs.hi() {
        return Err(Error::Domain(*x, 0, graphs.hi()));
    }
    let mut out = Vec::new();
    for k in 0..=x.len().min(graphs.top()) {
        let g = graphs.level(k).expect("level built");
        out.extend(g.neighbors(x)?.into_iter().map(|z| ListEntry::eomt(k, z)));
    }
    out.push(ListEntry::identity(*x));
    Ok(out)
}

/// `1 + sum of the level degrees of x`, without building the list.
pub fn list_size(x: &BitString, dm: &DovetailMap) -> Result<usize> {
    let graphs = dm.graphs();
    let mut total = 1;
    for k in 0..=x.len().min(graphs.top()) {
        total += graphs.level(k).expect("level built").degree_of(x)?;
    }
    Ok(total)
}

pub fn decode_entry(e: &ListEntry, dm: &DovetailMap) -> Option<BitString> {
    match e.kind {
        EntryKind::Eomt { k, z } => dm.lookup(k, z),
        EntryKind::Identity(x) => Some(x),
    }
}

/// Outcome of checking one string against its list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortlistCheck {
    pub x: BitString,
    pub complexity: u32,
    pub list_size: usize,
    /// Shortest core among entries decoding to `x`.
    pub best_core: u32,
    pub passed: bool,
}

impl ShortlistCheck {
    /// `x,len,C,listsize,bestcore,pass`
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.x,
            self.x.len(),
            self.complexity,
            self.list_size,
            self.best_core,
            self.passed
        )
    }
}

pub const SHORTLIST_CSV_HEADER: &str = "x,len,C,listsize,bestcore,pass";

/// Checks that the list of `x` holds a description within one bit of the
/// shortest program, or the identity entry when no program is shorter than
/// `x` itself.
pub fn verify_shortlist(x: &BitString, dm: &DovetailMap, m: &ToyMachine, p_max: u32) -> Result<ShortlistCheck> {
    let c = match dm.condition() {
        None => complexity(m, x, p_max)?,
        Some(y) => complexity_cond(m, x, y, p_max)?,
    }
    .ok_or_else(|| Error::Parameter(format!("no program of length <= {p_max} prints {x}")))?;
    let list = list_for(x, dm)?;
    let best_core = list
        .iter()
        .filter(|e| decode_entry(e, dm).as_ref() == Some(x))
        .map(|e| e.core_length)
        .min()
        .expect("identity entry decodes to x");
    let passed = if c <= x.len() {
        best_core <= c + 1
    } else {
        list.last() == Some(&ListEntry::identity(*x))
    };
    Ok(ShortlistCheck {
        x: *x,
        complexity: c,
        list_size: list.len(),
        best_core,
        passed,
    })
}

/// Position in `list_for(x)` of the entry decoding to `x` with the shortest
/// core (first such on ties).
pub fn locate_description(x: &BitString, dm: &DovetailMap) -> Result<usize> {
    let list = list_for(x, dm)?;
    let mut best: Option<(u32, usize)> = None;
    for (i, e) in list.iter().enumerate() {
        if decode_entry(e, dm).as_ref() == Some(x) && best.is_none_or(|(c, _)| e.core_length < c) {
            best = Some((e.core_length, i));
        }
    }
    Ok(best.expect("identity entry decodes to x").1)
}

/// Bits needed to write `index` in binary; zero for index 0.
pub fn index_bits(index: usize) -> u32 {
    usize::BITS - index.leading_zeros()
}

/// Advice bits accompanying a conditional description.
pub const ADVICE_BITS: u32 = 3;

/// A description of `x` given `y` of length exactly `C(x|y)`, plus a
/// constant number of advice bits.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ConditionalDescription {
    pub p: BitString,
    pub advice: BitString,
}

/// Builds `(p, advice)` from the conditional list of `x`.
///
/// When `C(x|y) <= |x|`, `x` sits at level `C(x|y)` of `dm_y` and its
/// `(C(x|y)+1)`-bit core loses its last bit; the advice is `0 0 b` with `b`
/// that bit. Otherwise `p` is `x` padded with `C(x|y) - |x|` zeros and the
/// advice is `1` followed by the pad count in two bits.
pub fn conditional_description(
    x: &BitString,
    y: &BitString,
    dm_y: &DovetailMap,
    m: &ToyMachine,
    p_max: u32,
) -> Result<ConditionalDescription> {
    if dm_y.condition() != Some(y) {
        return Err(Error::Parameter(format!(
            "dovetail map was not built for condition {y}"
        )));
    }
    let c = complexity_cond(m, x, y, p_max)?
        .ok_or_else(|| Error::Parameter(format!("no program of length <= {p_max} prints {x} given {y}")))?;
    let advice = |bits: [bool; 3]| BitString::from_bits(&bits).expect("three bits");
    if c <= x.len() {
        let list = list_for(x, dm_y)?;
        let q = list
            .iter()
            .find(|e| {
                matches!(e.kind, EntryKind::Eomt { .. })
                    && e.core_length == c + 1
                    && decode_entry(e, dm_y).as_ref() == Some(x)
            })
            .ok_or_else(|| Error::Invariant(format!("{x} has no level-{c} entry given {y}")))?
            .core();
        return Ok(ConditionalDescription {
            p: q.prefix(c),
            advice: advice([false, false, q.bit(c)]),
        });
    }
    let pad = c - x.len();
    if pad > 3 {
        return Err(Error::Invariant(format!("C({x}|{y}) = {c} exceeds |x| + 3")));
    }
    let padded = x.concat(&BitString::new(0, pad)?)?;
    Ok(ConditionalDescription {
        p: padded,
        advice: advice([true, pad & 2 != 0, pad & 1 != 0]),
    })
}

/// Inverse of [`conditional_description`] given the condition's dovetail.
pub fn reconstruct(p: &BitString, advice: &BitString, dm_y: &DovetailMap) -> Option<BitString> {
    if advice.len() != ADVICE_BITS {
        return None;
    }
    if advice.bit(0) {
        let pad = (advice.bit(1) as u32) << 1 | advice.bit(2) as u32;
        return (pad <= p.len()).then(|| p.prefix(p.len() - pad));
    }
    let z = p.push(advice.bit(2)).ok()?;
    dm_y.lookup(p.len(), z.value() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::BuildConfig;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn entry_formats() {
        assert_eq!(ListEntry::eomt(3, 5).to_string(), "EOMT 3 5 corelen=4");
        assert_eq!(ListEntry::identity(bs("0110")).to_string(), "ID 0110 corelen=4");
        assert_eq!(ListEntry::identity(BitString::EMPTY).to_string(), "ID - corelen=0");
        assert_eq!(ListEntry::eomt(3, 5).core(), bs("0101"));
    }

    #[test]
    fn empty_string_list() {
        let dm = build_dovetail(&ToyMachine::rle1(), 4, 4, &BuildConfig::new(1)).unwrap();
        let list = list_for(&BitString::EMPTY, &dm).unwrap();
        assert_eq!(list, vec![ListEntry::eomt(0, 0), ListEntry::identity(BitString::EMPTY)]);
        assert_eq!(decode_entry(&list[0], &dm), None);
        assert_eq!(locate_description(&BitString::EMPTY, &dm).unwrap(), 1);
        let check = verify_shortlist(&BitString::EMPTY, &dm, &ToyMachine::rle1(), 10).unwrap();
        assert!(check.passed);
        assert_eq!(check.csv_row(), "-,0,1,2,0,true");
    }

    #[test]
    fn list_size_is_one_plus_degrees() {
        let dm = build_dovetail(&ToyMachine::rle1(), 5, 5, &BuildConfig::new(1)).unwrap();
        for x in BitString::all_up_to(5) {
            assert_eq!(list_for(&x, &dm).unwrap().len(), list_size(&x, &dm).unwrap());
        }
        assert!(list_for(&bs("000000"), &dm).is_err());
    }

    #[test]
    fn index_bit_lengths() {
        assert_eq!(index_bits(0), 0);
        assert_eq!(index_bits(1), 1);
        assert_eq!(index_bits(4), 3);
    }

    #[test]
    fn conditional_round_trip_small() {
        let m = ToyMachine::cond1();
        let graphs = LevelGraphs::build(6, 4, &BuildConfig::new(2)).unwrap();
        for y in [BitString::EMPTY, bs("1"), bs("0110")] {
            let dm = dovetail_over(&m, &graphs, Some(&y)).unwrap();
            for x in BitString::all_up_to(4) {
                let d = conditional_description(&x, &y, &dm, &m, 8).unwrap();
                assert_eq!(Some(d.p.len()), complexity_cond(&m, &x, &y, 8).unwrap());
                assert_eq!(d.advice.len(), ADVICE_BITS);
                assert_eq!(reconstruct(&d.p, &d.advice, &dm), Some(x), "x = {x}, y = {y}");
            }
        }
    }

    #[test]
    fn copy_rule_gives_two_bits() {
        let m = ToyMachine::cond1();
        let y = bs("0110");
        let graphs = LevelGraphs::build(4, 4, &BuildConfig::new(2)).unwrap();
        let dm = dovetail_over(&m, &graphs, Some(&y)).unwrap();
        let d = conditional_description(&y, &y, &dm, &m, 8).unwrap();
        assert_eq!(d.p.len(), 2);
        assert!(!d.advice.bit(0));
    }
}
