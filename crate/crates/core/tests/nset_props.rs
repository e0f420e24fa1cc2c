use proptest::prelude::*;
use statlim_core::IndexSet;

fn leaf() -> impl Strategy<Value = IndexSet> {
    prop_oneof![
        Just(IndexSet::Empty),
        Just(IndexSet::All),
        Just(IndexSet::Squares),
        prop::collection::vec(1u64..4000, 0..8).prop_map(|v| IndexSet::finite(v).unwrap()),
        (1u64..13, 0u64..13).prop_map(|(m, r)| IndexSet::ap(r, m).unwrap()),
        (0u32..6).prop_map(IndexSet::ScaledOdd),
        (2u64..5, 0u32..4).prop_map(|(b, e)| IndexSet::power_multiples(b, e).unwrap()),
        (2u64..5).prop_map(|b| IndexSet::powers(b).unwrap()),
    ]
}

fn descriptor() -> impl Strategy<Value = IndexSet> {
    leaf().prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| IndexSet::Union(vec![a, b])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| IndexSet::Intersect(vec![a, b])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| IndexSet::diff(a, b)),
            (inner.clone(), 0u64..3000, 0u64..3000).prop_map(|(a, lo, w)| IndexSet::window(a, lo, lo + w)),
            (inner.clone(), 0u64..3000).prop_map(|(a, c)| IndexSet::tail(a, c)),
            (inner.clone(), inner.clone()).prop_map(|(a, s)| IndexSet::factorial_filter(a, s)),
            inner.prop_map(IndexSet::complement),
        ]
    })
}

/// Factorial filters may stay empty until 3000!, so no prefix ratio tracks them.
fn has_factorial_filter(s: &IndexSet) -> bool {
    match s {
        IndexSet::FactorialFilter { .. } => true,
        IndexSet::Union(cs) | IndexSet::Intersect(cs) => cs.iter().any(has_factorial_filter),
        IndexSet::Diff(a, b) => has_factorial_filter(a) || has_factorial_filter(b),
        IndexSet::Window { inner, .. } | IndexSet::Tail { inner, .. } => has_factorial_filter(inner),
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn count_matches_enumeration(s in descriptor(), n in 1u64..6000) {
        prop_assert_eq!(s.count_to(n), s.brute_count(n));
        prop_assert_eq!(s.count(&n.into()).unwrap(), s.brute_count(n).into());
    }

    #[test]
    fn members_are_sorted_and_exact(s in descriptor(), n in 1u64..3000) {
        let m = s.members_to(n);
        prop_assert!(m.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(m.len() as u64, s.count_to(n));
        prop_assert!(m.iter().all(|&k| s.contains(k) && s.contains_big(&k.into())));
    }

    #[test]
    fn complement_counts_add_up(s in descriptor(), n in 1u64..6000) {
        prop_assert_eq!(s.count_to(n) + s.clone().complement().count_to(n), n);
    }

    #[test]
    fn nth_inverts_count(s in descriptor(), m in 1u64..200) {
        if let Ok(k) = s.nth(m) {
            prop_assert!(s.contains(k));
            prop_assert_eq!(s.count_to(k), m);
        }
    }

    #[test]
    fn finite_sets_are_detected(v in prop::collection::vec(1u64..4000, 0..8), t in descriptor()) {
        let f = IndexSet::finite(v).unwrap();
        prop_assert_eq!(f.is_finite(), Some(true));
        prop_assert_eq!(IndexSet::Intersect(vec![f, t]).is_finite(), Some(true));
    }

    #[test]
    fn density_bounds_prefix_ratios(s in descriptor().prop_filter("no factorial filter", |s| !has_factorial_filter(s))) {
        if let Some(d) = s.density() {
            let n = 1u64 << 20;
            let ratio = s.count_to(n) as f64 / n as f64;
            prop_assert!((ratio - statlim_core::arith::q_to_f64(&d)).abs() < 0.02, "{} vs {}", ratio, d);
        }
    }
}
