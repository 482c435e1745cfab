//! Experiment configuration: `key=value` lines, `#` comments.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `kind` | `eomt` | what to build or check (see the CLI help) |
//! | `k` | `2` | level parameter |
//! | `lo` | `auto` | shortest left length; `auto` is `k` |
//! | `hi` | `auto` | longest left length; `auto` is `k + 2` |
//! | `seed` | `0` | root seed |
//! | `K` | `auto` | subset threshold for checks and bases; `auto` is `2^k` |
//! | `eps` | `1/3` | disperser error |
//! | `c` | `1` | expansion factor |
//! | `s` | `auto` | online matching size for the game oracle; `auto` is `2^k` |
//! | `delta` | `none` | fractional right-size exponent for dispersers |
//! | `strategy` | `random-verified` | base graph strategy |
//! | `degree` | `auto` | base degree; `auto` searches powers of two |
//! | `right` | `4` | right size for `base`, `complete` and `star` graphs |
//! | `base_right_cap` | `16` | largest base right side before cloning and folding |
//! | `method` | `auto` | check route: `auto`, `exhaustive`, `dual`, `sampled` |
//! | `trials` | `100000` | random adversary sequences |
//! | `exhaustive_bound` | `1000000` | largest exhaustive enumeration |
//! | `samples` | `10000` | sampled subsets per size |
//! | `adversary` | `auto` | `auto`, `exhaustive` or `random` |
//! | `machine` | `RLE1` | toy machine for short lists |
//! | `p_max` | `10` | longest program enumerated |
//! | `x_max` | `8` | longest string swept, also the graphs' length cap |
//! | `graph` | `none` | graph file read by `check` and `matchsim` |
//! | `map` | `none` | where `shortlist` writes the dovetail map |

use std::fmt::Write as _;
use std::str::FromStr;

use crate::base::Strategy;
use crate::error::{Error, Result};
use crate::shortlist::MachineKind;
use crate::verify::Method;
use crate::Rational;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum AdversaryMode {
    #[default]
    Auto,
    Exhaustive,
    Random,
}

impl AdversaryMode {
    fn name(self) -> &'static str {
        match self {
            AdversaryMode::Auto => "auto",
            AdversaryMode::Exhaustive => "exhaustive",
            AdversaryMode::Random => "random",
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExperimentConfig {
    pub kind: String,
    pub k: u32,
    pub lo: Option<u32>,
    pub hi: Option<u32>,
    pub seed: u64,
    pub big_k: Option<u64>,
    pub eps: Rational,
    pub c: Rational,
    pub s: Option<usize>,
    pub delta: Option<Rational>,
    pub strategy: Strategy,
    pub degree: Option<usize>,
    pub right: usize,
    pub base_right_cap: usize,
    pub method: Method,
    pub trials: u64,
    pub exhaustive_bound: u64,
    pub samples: u64,
    pub adversary: AdversaryMode,
    pub machine: MachineKind,
    pub p_max: u32,
    pub x_max: u32,
    pub graph: Option<String>,
    pub map: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: "eomt".into(),
            k: 2,
            lo: None,
            hi: None,
            seed: 0,
            big_k: None,
            eps: Rational::new(1, 3),
            c: Rational::from_integer(1),
            s: None,
            delta: None,
            strategy: Strategy::RandomVerified,
            degree: None,
            right: 4,
            base_right_cap: 16,
            method: Method::Auto,
            trials: 100_000,
            exhaustive_bound: 1_000_000,
            samples: 10_000,
            adversary: AdversaryMode::Auto,
            machine: MachineKind::Rle1,
            p_max: 10,
            x_max: 8,
            graph: None,
            map: None,
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("bad value {v:?} for key `{key}`"))
}

fn auto<T: FromStr>(key: &str, v: &str) -> std::result::Result<Option<T>, String> {
    if v == "auto" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

fn rational(key: &str, v: &str) -> std::result::Result<Rational, String> {
    let bad = || format!("bad rational {v:?} for key `{key}`");
    match v.split_once('/') {
        Some((n, d)) => {
            let (n, d): (u64, u64) = (n.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?);
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(v.parse().map_err(|_| bad())?)),
    }
}

fn show_rational(r: Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn show_auto<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "auto".to_string(), |v| v.to_string())
}

fn path(v: &str) -> Option<String> {
    (v != "none").then(|| v.to_string())
}

impl ExperimentConfig {
    /// Sets one key; the error message names the key.
    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "kind" => self.kind = v.to_string(),
            "k" => self.k = num(key, v)?,
            "lo" => self.lo = auto(key, v)?,
            "hi" => self.hi = auto(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "K" => self.big_k = auto(key, v)?,
            "eps" => self.eps = rational(key, v)?,
            "c" => self.c = rational(key, v)?,
            "s" => self.s = auto(key, v)?,
            "delta" => self.delta = if v == "none" { None } else { Some(rational(key, v)?) },
            "strategy" => self.strategy = v.parse().map_err(|_| format!("bad value {v:?} for key `strategy`"))?,
            "degree" => self.degree = auto(key, v)?,
            "right" => self.right = num(key, v)?,
            "base_right_cap" => self.base_right_cap = num(key, v)?,
            "method" => self.method = v.parse().map_err(|_| format!("bad value {v:?} for key `method`"))?,
            "trials" => self.trials = num(key, v)?,
            "exhaustive_bound" => self.exhaustive_bound = num(key, v)?,
            "samples" => self.samples = num(key, v)?,
            "adversary" => {
                self.adversary = match v {
                    "auto" => AdversaryMode::Auto,
                    "exhaustive" => AdversaryMode::Exhaustive,
                    "random" => AdversaryMode::Random,
                    _ => return Err(format!("bad value {v:?} for key `adversary`")),
                }
            }
            "machine" => self.machine = v.parse().map_err(|_| format!("bad value {v:?} for key `machine`"))?,
            "p_max" => self.p_max = num(key, v)?,
            "x_max" => self.x_max = num(key, v)?,
            "graph" => self.graph = path(v),
            "map" => self.map = path(v),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Applies a `key=value` assignment.
    pub fn assign(&mut self, pair: &str) -> std::result::Result<(), String> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got {pair:?}"))?;
        self.set(key.trim(), value.trim())
    }

    /// Parses the text format over the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            cfg.assign(line).map_err(|msg| Error::parse(i + 1, msg))?;
        }
        Ok(cfg)
    }

    /// Every key in table order, one `key=value` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        put("kind", self.kind.clone());
        put("k", self.k.to_string());
        put("lo", show_auto(self.lo));
        put("hi", show_auto(self.hi));
        put("seed", self.seed.to_string());
        put("K", show_auto(self.big_k));
        put("eps", show_rational(self.eps));
        put("c", show_rational(self.c));
        put("s", show_auto(self.s));
        put("delta", self.delta.map_or_else(|| "none".into(), show_rational));
        put("strategy", self.strategy.to_string());
        put("degree", show_auto(self.degree));
        put("right", self.right.to_string());
        put("base_right_cap", self.base_right_cap.to_string());
        put("method", self.method.to_string());
        put("trials", self.trials.to_string());
        put("exhaustive_bound", self.exhaustive_bound.to_string());
        put("samples", self.samples.to_string());
        put("adversary", self.adversary.name().into());
        put("machine", self.machine.to_string());
        put("p_max", self.p_max.to_string());
        put("x_max", self.x_max.to_string());
        put("graph", self.graph.clone().unwrap_or_else(|| "none".into()));
        put("map", self.map.clone().unwrap_or_else(|| "none".into()));
        out
    }

    pub fn lo(&self) -> u32 {
        self.lo.unwrap_or(self.k)
    }

    pub fn hi(&self) -> u32 {
        self.hi.unwrap_or(self.k + 2)
    }

    pub fn threshold(&self) -> u64 {
        self.big_k.unwrap_or(1 << self.k.min(63))
    }

    pub fn match_size(&self) -> usize {
        self.s.unwrap_or(1 << self.k.min(63))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let text = c.to_text();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), c);
        assert!(text.contains("eps=1/3\n"));
        assert_eq!((c.lo(), c.hi(), c.threshold()), (2, 4, 4));
    }

    #[test]
    fn comments_and_overrides() {
        let c = ExperimentConfig::parse("# demo\nkind=disperser\n\n k = 3 # level\nseed=7\ndelta=1/2\n").unwrap();
        assert_eq!(c.kind, "disperser");
        assert_eq!(c.k, 3);
        assert_eq!(c.seed, 7);
        assert_eq!(c.delta, Some(Rational::new(1, 2)));
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap().to_text(), c.to_text());
    }

    #[test]
    fn unknown_and_malformed_keys_are_named() {
        let e = ExperimentConfig::parse("k=2\nwidth=3\n").unwrap_err().to_string();
        assert!(e.contains("width") && e.contains('2'), "{e}");
        let e = ExperimentConfig::parse("k=two\n").unwrap_err().to_string();
        assert!(e.contains("`k`"), "{e}");
        assert!(ExperimentConfig::parse("eps=1/0\n").is_err());
        assert!(ExperimentConfig::parse("kind\n").is_err());
    }

    proptest! {
        #[test]
        fn reserializes_identically(k in 0u32..10, seed: u64, lo in proptest::option::of(0u32..9),
                                    n in 0u64..20, d in 1u64..20, trials in 0u64..1000, deg in proptest::option::of(1usize..64)) {
            let c = ExperimentConfig { k, seed, lo, eps: Rational::new(n, d), trials, degree: deg, ..Default::default() };
            let text = c.to_text();
            let back = ExperimentConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
