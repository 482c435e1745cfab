use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::sample::subsequence;

use shortlist_core::construct::{build_eomt, build_lemma4, BuildConfig};
use shortlist_core::graph::MATERIALIZE_BOUND;
use shortlist_core::matcher::new_matcher;
use shortlist_core::LeftDomain;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lemma4_is_the_composition(k in 0u32..=2, lo_off in 0u32..=1, span in 0u32..=3, seed in 0u64..4) {
        let lo = k + lo_off;
        let d = LeftDomain::new(lo, lo + span).unwrap();
        let l = build_lemma4(d, k, &BuildConfig::new(seed)).unwrap();
        prop_assert_eq!(l.graph.right_size(), 2 << k);
        for x in d.iter() {
            let direct: BTreeSet<usize> = l.graph.neighbors(&x).unwrap().into_iter().collect();
            let expected: BTreeSet<usize> = match (&l.expanders, &l.disperser) {
                (Some(a), Some(b)) if x.len() <= l.short_lengths.unwrap().1 => {
                    let mid = b.domain();
                    a.neighbors(&x)
                        .unwrap()
                        .into_iter()
                        .flat_map(|m| b.neighbors(&mid.nth(m as u64).unwrap()).unwrap())
                        .collect()
                }
                _ => (0..1usize << k).collect(),
            };
            prop_assert_eq!(direct, expected, "x = {}", x);
        }
    }

    #[test]
    fn eomt_rebuilds_byte_identically(k in 0u32..=3, extra in 0u32..=2, seed: u64) {
        let a = build_eomt(k, k + extra, &BuildConfig::new(seed)).unwrap();
        let b = build_eomt(k, k + extra, &BuildConfig::new(seed)).unwrap();
        prop_assert_eq!(a.to_text(MATERIALIZE_BOUND).unwrap(), b.to_text(MATERIALIZE_BOUND).unwrap());
        prop_assert_eq!(a.right_size(), (2usize << k) - 1);
    }

    #[test]
    fn greedy_matches_any_arrival_order(
        (k, order) in (0u32..=3).prop_flat_map(|k| {
            let n = LeftDomain::new(k, k + 2).unwrap().cardinality() as usize;
            (Just(k), subsequence((0..n).collect::<Vec<_>>(), 1usize << k).prop_shuffle())
        }),
        seed in 0u64..8,
    ) {
        let g = build_eomt(k, k + 2, &BuildConfig::new(seed)).unwrap();
        let mut st = new_matcher(&g);
        for i in order {
            let x = g.domain().nth(i as u64).unwrap();
            prop_assert!(st.match_vertex(&x).is_ok(), "{} unmatched", x);
            prop_assert!(st.check_invariants().is_ok());
        }
        prop_assert_eq!(st.arrivals(), 1usize << k);
    }
}
