use proptest::prelude::*;
use statlim_core::arith::{q, Q};
use statlim_core::forge::{self, base_partition, cell_of, Cell};
use statlim_core::{RClosedSet, RFSigma};

/// `A ⊆ B ⊆ C` with one isolated point of `B` placed in `A`.
fn triple() -> impl Strategy<Value = (RFSigma, RClosedSet, RClosedSet)> {
    (1i64..=8, 0i64..=8, 9i64..=15, 16i64..=24).prop_map(|(b_hi, a_hi, p, c_hi)| {
        let (b_hi, p, c_hi) = (q(b_hi, 16), q(p, 16), q(c_hi, 16));
        let a_hi = q(a_hi, 16).min(b_hi.clone());
        let a = RFSigma::new(vec![RClosedSet::interval(q(0, 1), a_hi).unwrap(), RClosedSet::point(p.clone())]);
        let b = RClosedSet::from_pairs([(q(0, 1), b_hi), (p.clone(), p)]).unwrap();
        let c = RClosedSet::from_pairs([(q(0, 1), c_hi), (q(2, 1), q(2, 1))]).unwrap();
        (a, b, c)
    })
}

proptest! {
    #[test]
    fn triple_terms_follow_their_cell((a, b, c) in triple(), n in 1u64..2_000_000) {
        let x = forge::assemble_triple(&a, &b, &c).unwrap();
        let v = x.x(n);
        prop_assert!(c.contains(&v));
        match cell_of(n) {
            Cell::A { .. } => prop_assert!(a.contains(&v)),
            Cell::B { .. } => prop_assert!(b.contains(&v)),
            Cell::C { .. } => {}
        }
    }

    #[test]
    fn partition_cells_are_exclusive(n in 1u64..10_000_000) {
        let p = base_partition();
        let mut hits = u32::from(p.b().contains(n)) + u32::from(p.c().contains(n));
        hits += (1..=40).filter(|&k| p.a(k).contains(n)).count() as u32;
        prop_assert_eq!(hits, 1);
    }

    #[test]
    fn lambda_terms_stay_in_b((a, _, _) in triple(), n in 1u64..1_000_000) {
        let x = forge::lambda_only(&a).unwrap();
        prop_assert!(a.contains(&x.x(n)));
    }

    #[test]
    fn quantile_is_monotone_into_f(u in 0i64..=1000, w in 0i64..=1000, (_, b, _) in triple()) {
        let f = b.without_isolated();
        let (u, w) = (q(u.min(w), 1000), q(u.max(w), 1000));
        let (qu, qw) = (forge::quantile_transport(&f, &u).unwrap(), forge::quantile_transport(&f, &w).unwrap());
        prop_assert!(f.contains(&qu) && f.contains(&qw));
        prop_assert!(qu <= qw);
    }

    #[test]
    fn cantor_transport_is_monotone(a in 0i64..=300, b in 0i64..=300, d in 1i64..=300) {
        let (lo, hi) = (q(a.min(b) % (d + 1), d), q(a.max(b) % (d + 1), d));
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let (tl, th) = (forge::cantor_transport(&lo).unwrap(), forge::cantor_transport(&hi).unwrap());
        prop_assert!(tl <= th);
        prop_assert!(tl >= Q::from_integer(0.into()) && th <= Q::from_integer(1.into()));
    }

    #[test]
    fn ud_terms_lie_in_unit_interval(t in 1u64..10_000_000) {
        let u = forge::ud_unit(t);
        prop_assert!(u >= q(0, 1) && u <= q(1, 1));
    }
}
