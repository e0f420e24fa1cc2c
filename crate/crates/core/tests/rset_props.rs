use proptest::prelude::*;
use statlim_core::arith::{q, Q};
use statlim_core::rset::{lebesgue_on, set_algebra, Interval, SetOp};
use statlim_core::RClosedSet;

fn rational() -> impl Strategy<Value = Q> {
    (0i64..=64).prop_map(|n| q(n, 64))
}

fn closed() -> impl Strategy<Value = RClosedSet> {
    prop::collection::vec((rational(), 0i64..16), 0..5).prop_map(|v| {
        RClosedSet::from_pairs(v.into_iter().map(|(lo, w)| {
            let hi = &lo + q(w, 64);
            (lo, hi)
        }))
        .unwrap()
    })
}

fn probe_points() -> Vec<Q> {
    (0..=200).map(|n| q(n, 128)).collect()
}

proptest! {
    #[test]
    fn union_and_intersection_are_pointwise(a in closed(), b in closed()) {
        let u = set_algebra(&a, &b, &SetOp::Union);
        let i = set_algebra(&a, &b, &SetOp::Intersect);
        for x in probe_points() {
            prop_assert_eq!(u.contains(&x), a.contains(&x) || b.contains(&x));
            prop_assert_eq!(i.contains(&x), a.contains(&x) && b.contains(&x));
        }
        prop_assert!(a.is_subset_of(&u) && i.is_subset_of(&a));
        prop_assert!(u.length() <= a.length() + b.length());
    }

    #[test]
    fn normal_form_is_canonical(a in closed(), b in closed()) {
        prop_assert_eq!(a.union(&b), b.union(&a));
        prop_assert_eq!(a.union(&a), a.clone());
        let parts = a.parts();
        prop_assert!(parts.windows(2).all(|w| w[0].hi() < w[1].lo()));
    }

    #[test]
    fn difference_removes_interior(a in closed(), b in closed()) {
        let bounds = Interval::new(q(-1, 1), q(3, 1)).unwrap();
        let d = a.diff_within(&b, &bounds);
        prop_assert!(d.is_subset_of(&a));
        for x in probe_points() {
            let interior = b.parts().iter().any(|p| p.lo() < &x && &x < p.hi());
            if interior {
                prop_assert!(!d.contains(&x));
            } else if a.contains(&x) {
                prop_assert!(d.contains(&x));
            }
        }
    }

    #[test]
    fn isolated_split(a in closed()) {
        let iso = a.isolated_points();
        let reg = a.without_isolated();
        prop_assert_eq!(reg.is_regular_closed(), !reg.is_empty());
        prop_assert_eq!(iso.union(&reg), a.clone());
        prop_assert!(iso.parts().iter().all(|p| p.is_point()));
    }

    #[test]
    fn dense_enum_stays_inside(a in closed(), i in 1u64..500) {
        if !a.is_empty() {
            prop_assert!(a.contains(&a.dense_enum(i).unwrap()));
        }
    }

    #[test]
    fn normalized_length_is_a_probability(a in closed(), v in closed()) {
        let f = a.without_isolated();
        if !f.is_empty() {
            let mu = lebesgue_on(&f, &v).unwrap();
            prop_assert!(mu >= q(0, 1) && mu <= q(1, 1));
            prop_assert_eq!(lebesgue_on(&f, &f).unwrap(), q(1, 1));
        }
    }
}
