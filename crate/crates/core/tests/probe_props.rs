use proptest::prelude::*;
use statlim_core::arith::{ceil_sqrt, q, Q};
use statlim_core::forge::{self, SeqGen};
use statlim_core::measure::Submeasure;
use statlim_core::probe::{self, Sample};
use statlim_core::{RClosedSet, RFSigma};

const N: u64 = 1 << 13;

fn period() -> impl Strategy<Value = Vec<Q>> {
    prop::collection::vec((0i64..=8).prop_map(|k| q(k, 8)), 1..6)
}

fn sample_of(values: &[Q]) -> Sample {
    Sample::from_seq(&SeqGen::periodic(values.to_vec()).unwrap(), N).unwrap()
}

fn grid() -> Vec<Q> {
    probe::grid(&q(0, 1), &q(1, 1), &q(1, 16))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flags_are_nested(values in period()) {
        let s = sample_of(&values);
        for phi in [Submeasure::Density, Submeasure::HARMONIC] {
            let report = probe::spectrum(&s, &grid(), &q(1, 64), &phi, &q(1, 100)).unwrap();
            for p in &report.points {
                prop_assert!(!p.limit || p.cluster);
                prop_assert!(!p.cluster || p.ordinary);
            }
        }
    }

    #[test]
    fn attained_values_are_limits(values in period()) {
        let s = sample_of(&values);
        let report = probe::spectrum(&s, &grid(), &q(1, 64), &Submeasure::Density, &q(1, 100)).unwrap();
        for p in &report.points {
            prop_assert_eq!(p.limit, values.contains(&p.point));
        }
    }

    #[test]
    fn u_profile_is_monotone(values in period(), c in 0i64..=16) {
        let s = sample_of(&values);
        let radii = probe::dyadic_radii(&q(1, 2), 6);
        let slack = q(2, 1) / Q::from_integer(ceil_sqrt(N).into());
        for phi in [Submeasure::Density, Submeasure::HARMONIC, Submeasure::Counting] {
            let profile = probe::u_profile(&s, &q(c, 16), &radii, &phi).unwrap();
            prop_assert!(profile.is_monotone(&slack));
        }
    }

    #[test]
    fn witnesses_are_sound(values in period(), c in 0i64..=8) {
        let s = sample_of(&values);
        let center = q(c, 8);
        let delta = q(1, 100);
        if let Some(w) = probe::witness_analytic_p(&s, &center, &Submeasure::Density, &delta, &q(1, 4)) {
            prop_assert!(w.is_sound(&s, &center));
            prop_assert!(w.strength >= delta);
            prop_assert!(w.members.windows(2).all(|p| p[0] < p[1]));
        }
        if let Some(w) = probe::witness_fsigma(&s, &center, &Submeasure::HARMONIC, &q(1, 2), &delta, &q(1, 4)) {
            prop_assert!(w.is_sound(&s, &center));
            prop_assert!(w.strength >= q(1, 2));
        }
    }

    #[test]
    fn head_modifications_keep_flags(values in period(), noise in prop::collection::vec((0i64..=16).prop_map(|k| q(k, 16)), 1..=91)) {
        // 91 = ⌈√N⌉
        let base = SeqGen::periodic(values).unwrap().prefix(N);
        let mut moved = base.clone();
        for (i, v) in noise.into_iter().enumerate() {
            moved[i] = v;
        }
        let (a, b) = (Sample::from_values(base).unwrap(), Sample::from_values(moved).unwrap());
        let ra = probe::spectrum(&a, &grid(), &q(1, 64), &Submeasure::Density, &q(1, 100)).unwrap();
        let rb = probe::spectrum(&b, &grid(), &q(1, 64), &Submeasure::Density, &q(1, 100)).unwrap();
        for (pa, pb) in ra.points.iter().zip(&rb.points) {
            prop_assert_eq!(pa.cluster, pb.cluster, "cluster at {}", pa.point);
            prop_assert_eq!(pa.limit, pb.limit, "limit at {}", pa.point);
        }
    }

    #[test]
    fn isolated_cluster_points_are_limits(b_hi in 1i64..=7, p in 9i64..=16) {
        let b_hi = q(b_hi, 16);
        let p = q(p, 16);
        let a = RFSigma::new(vec![RClosedSet::interval(q(0, 1), b_hi.clone()).unwrap(), RClosedSet::point(p.clone())]);
        let b = RClosedSet::from_pairs([(q(0, 1), b_hi.clone()), (p.clone(), p.clone())]).unwrap();
        let c = RClosedSet::interval(q(0, 1), q(1, 1)).unwrap();
        let x = forge::assemble_triple(&a, &b, &c).unwrap();
        let s = Sample::from_seq(&x, 10_000).unwrap();
        let report = probe::spectrum(&s, std::slice::from_ref(&p), &q(1, 64), &Submeasure::Density, &q(1, 100)).unwrap();
        let pt = &report.points[0];
        prop_assert!(!pt.cluster || pt.limit);
    }
}
