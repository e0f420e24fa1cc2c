//! The verification suite: ten end-to-end checks over the constructions,
//! estimators and counting engine, each with fixed tolerances.

use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use statlim_core::arith::{abs_diff, pow2_inv, q, q_to_f64, qi, Q};
use statlim_core::forge::{self, base_partition, PowerMultipleFamily};
use statlim_core::measure::{tail_estimate, Submeasure};
use statlim_core::probe::{self, Flag, Sample};
use statlim_core::rset::lebesgue_on;
use statlim_core::{IdealSpec, IndexSet, RClosedSet, RFSigma};

/// Prefix length for enumerated sequences.
pub const SEQ_N: u64 = 100_000;
/// Prefix length for exact counting checks.
pub const COUNT_N: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct Check {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub details: Vec<String>,
    pub elapsed: Duration,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{status} [{}] {} ({:.2}s)", self.id, self.title, self.elapsed.as_secs_f64())?;
        for d in &self.details {
            write!(f, "\n    {d}")?;
        }
        Ok(())
    }
}

struct Recorder {
    pass: bool,
    details: Vec<String>,
}

impl Recorder {
    fn new() -> Self {
        Recorder { pass: true, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.details.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.details.push(format!("     {line}"));
    }
}

fn run(id: u8, title: &'static str, body: impl FnOnce(&mut Recorder)) -> Check {
    let start = Instant::now();
    let mut rec = Recorder::new();
    body(&mut rec);
    Check { id, title, pass: rec.pass, details: rec.details, elapsed: start.elapsed() }
}

fn f(x: &Q) -> f64 {
    q_to_f64(x)
}

fn set(pairs: &[(Q, Q)]) -> RClosedSet {
    RClosedSet::from_pairs(pairs.iter().cloned()).expect("valid literal intervals")
}

fn unit_grid(step: &Q) -> Vec<Q> {
    probe::grid(&Q::zero(), &Q::one(), step)
}

/// `A = [0,1/4] ∪ {3/4}` in two layers, `B = [0,1/2] ∪ {3/4}`, `C = [0,1]`.
pub fn principal_triple() -> (RFSigma, RClosedSet, RClosedSet) {
    let a = RFSigma::new(vec![set(&[(qi(0), q(1, 4))]), RClosedSet::point(q(3, 4))]);
    let b = set(&[(qi(0), q(1, 2)), (q(3, 4), q(3, 4))]);
    let c = set(&[(qi(0), qi(1))]);
    (a, b, c)
}

pub fn partition_densities() -> Check {
    run(1, "partition densities by exact counting", |r| {
        let start = Instant::now();
        let p = base_partition();
        let n = COUNT_N;
        for k in 1..=6u32 {
            let d = q_u(p.a(k).count_to(n), n);
            let want = pow2_inv(k + 1);
            r.check(abs_diff(&d, &want) <= q(1, 100), format!("A_{k}: count/N = {:.6}, target {}", f(&d), want));
        }
        let db = q_u(p.b().count_to(n), n);
        r.check(abs_diff(&db, &q(1, 2)) <= q(1, 100), format!("B: count/N = {:.6}, target 1/2", f(&db)));
        let dc = q_u(p.c().count_to(n), n);
        r.check(dc <= q(1, 1000), format!("C: count/N = {:.6}, bound 0.001", f(&dc)));
        let elapsed = start.elapsed();
        r.check(elapsed < Duration::from_secs(1), format!("runtime {:.3}s < 1s", elapsed.as_secs_f64()));
        for k in 1..=6u32 {
            let exact = p.a(k).density();
            r.check(exact == Some(pow2_inv(k + 1)), format!("exact density of A_{k}: {exact:?}"));
        }
        r.check(p.b().density() == Some(q(1, 2)), "exact density of B is 1/2".to_string());
        r.check(p.c().density() == Some(Q::zero()), "exact density of C is 0".to_string());
    })
}

fn q_u(a: u64, b: u64) -> Q {
    statlim_core::arith::q_u64(a, b)
}

/// Expected flag for a grid point given the three target sets.
fn expected_flag(l: &Q, a: &RFSigma, b: &RClosedSet, c: &RClosedSet) -> Flag {
    if a.contains(l) {
        Flag::Limit
    } else if b.contains(l) {
        Flag::Cluster
    } else if c.contains(l) {
        Flag::Ordinary
    } else {
        Flag::None
    }
}

fn boundary_points(s: &RClosedSet) -> Vec<Q> {
    s.parts().iter().flat_map(|p| [p.lo().clone(), p.hi().clone()]).collect()
}

/// A grid point whose flag differs from the one its set membership predicts.
#[derive(Debug, Clone)]
pub struct Mismatch {
    pub point: Q,
    pub expected: Flag,
    pub got: Flag,
    pub hits: u64,
    pub estimate: Q,
    /// Within one grid cell of a boundary point of `A`, `B` or `C`.
    pub boundary: bool,
}

/// Grid flags of the principal triple at `N = 10^5` that differ from membership.
pub fn principal_triple_mismatches() -> Vec<Mismatch> {
    let (a, b, c) = principal_triple();
    let x = forge::assemble_triple(&a, &b, &c).expect("valid triple");
    let sample = Sample::from_seq(&x, SEQ_N).expect("non-empty");
    let step = q(1, 32);
    let grid = unit_grid(&step);
    let report = probe::spectrum(&sample, &grid, &q(1, 64), &Submeasure::Density, &q(1, 100)).expect("valid grid");
    let mut boundaries = boundary_points(&a.union_all());
    boundaries.extend(boundary_points(&b));
    boundaries.extend(boundary_points(&c));
    report
        .points
        .iter()
        .filter_map(|p| {
            let expected = expected_flag(&p.point, &a, &b, &c);
            let got = p.flag();
            (expected != got).then(|| Mismatch {
                point: p.point.clone(),
                expected,
                got,
                hits: p.hits,
                estimate: p.cluster_estimate.clone(),
                boundary: boundaries.iter().any(|e| abs_diff(e, &p.point) <= step),
            })
        })
        .collect()
}

pub fn principal_triple_experiment() -> Check {
    run(2, "principal triple: limit, cluster and ordinary flags", |r| {
        let start = Instant::now();
        let found = principal_triple_mismatches();
        let off: Vec<&Mismatch> = found.iter().filter(|m| !m.boundary).collect();
        for m in &found {
            let place = if m.boundary { "boundary cell" } else { "point" };
            r.note(format!(
                "{place} {}: expected {:?}, got {:?} (hits {}, estimate {:.4})",
                m.point,
                m.expected,
                m.got,
                m.hits,
                f(&m.estimate)
            ));
        }
        r.check(
            off.is_empty(),
            format!("{} mismatches off the boundary cells ({} boundary cells differ)", off.len(), found.len() - off.len()),
        );
        let elapsed = start.elapsed();
        r.check(elapsed < Duration::from_secs(30), format!("runtime {:.2}s < 30s", elapsed.as_secs_f64()));
    })
}

pub fn uniform_distribution() -> Check {
    run(3, "uniform distribution on the regular part of B", |r| {
        let (_, b, _) = principal_triple();
        let f_set = b.without_isolated();
        let values: Vec<Q> = (1..=SEQ_N)
            .map(|m| forge::quantile_transport(&f_set, &forge::ud_unit(m)).expect("regular closed"))
            .collect();
        let sample = Sample::from_values(values).expect("non-empty");
        let lo = f_set.min().cloned().expect("non-empty");
        let hi = f_set.max().cloned().expect("non-empty");
        let width = (&hi - &lo) / qi(32);
        let mut worst = f64::NEG_INFINITY;
        let mut ok = true;
        for i in 0..32 {
            let v_lo = &lo + &width * qi(i);
            let v_hi = &v_lo + &width;
            let v = set(&[(v_lo.clone(), v_hi.clone())]);
            let mu = lebesgue_on(&f_set, &v).expect("positive length");
            let est = tail_estimate(&Submeasure::Density, &sample.hits_in(&v_lo, &v_hi), SEQ_N);
            let excess = f(&est) - f(&mu);
            worst = worst.max(excess);
            if est > &mu + q(1, 20) {
                ok = false;
                r.note(format!("window [{v_lo}, {v_hi}]: estimate {:.4} > {:.4} + 0.05", f(&est), f(&mu)));
            }
        }
        r.check(ok, format!("32 windows: max(estimate - mu_F(V)) = {worst:.4} <= 0.05"));
    })
}

pub fn witness_constants() -> Check {
    run(4, "witness densities for layer points", |r| {
        let delta = q(1, 100);
        let radius = q(1, 64);
        let points = [q(1, 16), q(3, 16), q(5, 16), q(3, 4)];
        let a = RFSigma::new(points.iter().cloned().map(RClosedSet::point).collect());
        let b = set(&[(qi(0), q(1, 2)), (q(3, 4), q(3, 4))]);
        let c = set(&[(qi(0), qi(1))]);
        let x = forge::assemble_triple(&a, &b, &c).expect("valid triple");
        let sample = Sample::from_seq(&x, SEQ_N).expect("non-empty");
        let mut cases: Vec<(String, Sample, Q, u32)> = Vec::new();
        for (k, l) in points.iter().enumerate() {
            cases.push(("singleton layers".to_string(), sample.clone(), l.clone(), k as u32 + 1));
        }
        let (pa, pb, pc) = principal_triple();
        let px = forge::assemble_triple(&pa, &pb, &pc).expect("valid triple");
        let psample = Sample::from_seq(&px, SEQ_N).expect("non-empty");
        cases.push(("principal triple".to_string(), psample.clone(), qi(0), 1));
        cases.push(("principal triple".to_string(), psample, q(3, 4), 2));
        for (label, s, l, k) in cases {
            let target = pow2_inv(k + 2) - q(1, 50);
            let w = probe::witness_analytic_p(&s, &l, &Submeasure::Density, &delta, &radius);
            match w {
                Some(w) => {
                    let sound = w.is_sound(&s, &l);
                    r.check(
                        w.strength >= target && sound,
                        format!(
                            "{label}: point {l} (layer {k}) witness density {:.4} >= {:.4}, {} blocks, sound {sound}",
                            f(&w.strength),
                            f(&target),
                            w.complete_blocks()
                        ),
                    );
                }
                None => r.check(false, format!("{label}: point {l} (layer {k}) no witness found")),
            }
        }
    })
}

pub fn fsigma_equality() -> Check {
    run(5, "F-sigma construction: limit flags equal cluster flags", |r| {
        let b = set(&[(qi(0), q(1, 2))]);
        let c = set(&[(qi(0), qi(1))]);
        let ideal = IdealSpec::FSigma(Submeasure::HARMONIC);
        let index = IndexSet::powers(2).expect("base 2");
        let x = forge::fsigma_pair(&b, &c, &ideal, index, SEQ_N).expect("valid inputs");
        let ends = x.block_ends().map(|e| e.to_vec()).unwrap_or_default();
        r.note(format!("block ends m_k: {ends:?}"));
        let sample = Sample::from_seq(&x, SEQ_N).expect("non-empty");
        let grid = unit_grid(&q(1, 32));
        let report = probe::spectrum(&sample, &grid, &q(1, 64), &Submeasure::HARMONIC, &q(1, 100)).expect("valid grid");
        let mut discrepancies = 0;
        let mut limits = Vec::new();
        for p in &report.points {
            if p.limit != p.cluster {
                discrepancies += 1;
                r.note(format!("point {}: limit {} cluster {} (mass {:.4})", p.point, p.limit, p.cluster, f(&p.cluster_estimate)));
            }
            if p.limit {
                limits.push(p.point.to_string());
            }
        }
        r.note(format!("limit points on the grid: {}", limits.join(", ")));
        r.check(discrepancies == 0, format!("{discrepancies} discrepancies over {} grid points", report.points.len()));
        r.check(!limits.is_empty(), "at least one limit point detected".to_string());
    })
}

pub fn nonclosed_limits() -> Check {
    run(6, "non-closed limit set", |r| {
        let x = forge::nonclosed_demo();
        let sample = Sample::from_seq(&x, SEQ_N).expect("non-empty");
        let grid = vec![qi(0), q(1, 4), q(1, 3), q(1, 2), qi(1)];
        // 1/5 keeps 1/4 out of the ball at 0
        let radius = q(1, 5);
        let report = probe::spectrum(&sample, &grid, &radius, &Submeasure::Density, &q(1, 100)).expect("valid grid");
        for p in &report.points {
            let want = if p.point.is_zero() { Flag::Cluster } else { Flag::Limit };
            r.check(p.flag() == want, format!("point {}: {:?} (estimate {:.4})", p.point, p.flag(), f(&p.cluster_estimate)));
        }
        let radii = vec![q(1, 8), q(1, 16), q(1, 32), q(1, 64)];
        let profile = probe::u_profile(&sample, &Q::zero(), &radii, &Submeasure::Density).expect("valid radii");
        let shown: Vec<String> = profile.estimates.iter().map(|e| format!("{:.6}", f(e))).collect();
        r.note(format!("u-profile at 0 for radii 1/8..1/64: {}", shown.join(", ")));
        let decays = profile.estimates.windows(2).all(|w| &w[1] * q(3, 2) <= w[0]);
        r.check(decays, "estimate shrinks by a factor >= 1.5 per radius halving".to_string());
    })
}

pub fn cantor_bound() -> Check {
    run(7, "Cantor transport hit densities", |r| {
        let sample = Sample::from_values((1..=SEQ_N).map(forge::cantor_sequence).collect()).expect("non-empty");
        let center = q(2, 3);
        for k in 1..=4u32 {
            let radius = Q::new(BigInt::one(), BigInt::from(3).pow(k));
            let est = tail_estimate(&Submeasure::Density, &sample.hits(&center, &radius), SEQ_N);
            let target = pow2_inv(k) - q(1, 20);
            r.check(est >= target, format!("k = {k}: estimate {:.4} >= {:.4}", f(&est), f(&target)));
        }
    })
}

pub fn fin_times_fin() -> Check {
    run(8, "Fin x Fin scaffolding", |r| {
        let window = 50;
        match forge::union_step_threshold(64, window) {
            Some(k0) => {
                let ok = (k0..=k0 + window).all(forge::union_step_identity);
                r.check(ok, format!("union step identity holds on [{k0}, {}], k0 = {k0} <= 64", k0 + window));
                for t in 1..=10u64 {
                    let k = k0.max(t as u32);
                    let qt = forge::q_term(t);
                    let excluded = (k..=k + window).all(|m| !forge::c_set(m).contains(&qt));
                    r.check(excluded, format!("q_{t} = {qt} avoids C_m for m in [{k}, {}]", k + window));
                }
            }
            None => r.check(false, "union step identity threshold not found below 64".to_string()),
        }
        let top = 10_000;
        match forge::minqi_threshold(top) {
            Some(m0) => {
                let direct = (m0..=top).all(forge::minqi_holds);
                r.check(m0 <= 100 && direct, format!("separation > 1/(3m) for m in [{m0}, {top}], m0 = {m0} <= 100 (direct scan agrees: {direct})"));
            }
            None => r.check(false, "separation fails at the top of the scan".to_string()),
        }
    })
}

pub fn set_recursion() -> Check {
    run(9, "set recursion with multiples of 3^k", |r| {
        match forge::set_recursion_partition(PowerMultipleFamily::default(), 12) {
            Ok(rec) => {
                for (n, (norm, tail)) in rec.checks.iter().enumerate() {
                    r.check(norm > tail && tail > &Q::zero(), format!("n = {}: ‖M_n‖ = {norm} > Σ φ(M_k) = {tail} > 0", n + 1));
                }
                for n in 1..=12u32 {
                    let want = Q::new(BigInt::one(), BigInt::from(3).pow(n));
                    let got = rec.tail(n).density();
                    r.check(got.as_ref() == Some(&want), format!("n = {n}: tail density {want} exact"));
                }
            }
            Err(e) => r.check(false, format!("recursion rejected: {e}")),
        }
    })
}

/// A deterministic corpus of descriptors covering every variant.
pub fn regression_corpus() -> Vec<IndexSet> {
    let p = base_partition();
    let finite = IndexSet::finite(vec![1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 99_999, 100_000]).expect("valid");
    let atoms: Vec<IndexSet> = vec![
        IndexSet::Empty,
        IndexSet::All,
        finite.clone(),
        IndexSet::ap(0, 3).expect("valid"),
        IndexSet::ap(2, 7).expect("valid"),
        IndexSet::ap(5, 12).expect("valid"),
        IndexSet::ScaledOdd(0),
        IndexSet::ScaledOdd(1),
        IndexSet::ScaledOdd(3),
        IndexSet::ScaledOdd(6),
        IndexSet::Squares,
        IndexSet::power_multiples(3, 2).expect("valid"),
        IndexSet::power_multiples(2, 5).expect("valid"),
        IndexSet::power_multiples(5, 1).expect("valid"),
        IndexSet::powers(2).expect("valid"),
        IndexSet::powers(3).expect("valid"),
        p.a(1),
        p.a(2),
        p.b(),
        IndexSet::evens(),
    ];
    let mut corpus = atoms.clone();
    let n = atoms.len();
    let mut i = 0usize;
    while corpus.len() < 100 {
        let a = atoms[i % n].clone();
        let b = atoms[(3 * i + 1) % n].clone();
        let c = atoms[(7 * i + 5) % n].clone();
        let next = match i % 8 {
            0 => IndexSet::Union(vec![a, b]),
            1 => IndexSet::Intersect(vec![a, b]),
            2 => IndexSet::diff(a, b),
            3 => IndexSet::window(a, (i as u64 * 977) % 50_000, 50_000 + (i as u64 * 1_313) % 50_000),
            4 => IndexSet::tail(a, (i as u64 * 7_919) % 90_000),
            5 => IndexSet::factorial_filter(a, b),
            6 => IndexSet::Union(vec![IndexSet::diff(a, c), IndexSet::Intersect(vec![b, IndexSet::Squares])]),
            _ => IndexSet::factorial_filter(IndexSet::diff(a, b), forge::factorial_subpartition(1, 1 + (i as u32 % 3))),
        };
        corpus.push(next);
        i += 1;
    }
    corpus
}

/// Prefixes compared against enumeration: every `N ≤ 1000`, factorial
/// edges and a geometric ladder up to `top`.
pub fn checkpoints(top: u64) -> Vec<u64> {
    let mut pts: Vec<u64> = (1..=1000).collect();
    pts.extend([5_039, 5_040, 5_041, 40_319, 40_320, 40_321]);
    let mut v = 10u64;
    while v < top {
        pts.extend([v - 1, v, v + 1]);
        v = v * 3 / 2 + 1;
    }
    pts.push(top);
    pts.retain(|&p| p >= 1 && p <= top);
    pts.sort_unstable();
    pts.dedup();
    pts
}

pub fn oracle_equivalence() -> Check {
    run(10, "exact counting agrees with enumeration", |r| {
        let top = SEQ_N;
        let pts = checkpoints(top);
        let corpus = regression_corpus();
        let mut bad = 0;
        for s in &corpus {
            let mut running = 0u64;
            let mut next = 0usize;
            for n in 1..=top {
                if s.contains(n) {
                    running += 1;
                }
                if next < pts.len() && pts[next] == n {
                    next += 1;
                    let got = s.count_to(n);
                    let big = s.count(&n.into()).ok().and_then(|c| num_traits::ToPrimitive::to_u64(&c));
                    if got != running || big != Some(running) {
                        bad += 1;
                        r.note(format!("{s} at N = {n}: count {got}, big count {big:?}, enumeration {running}"));
                        break;
                    }
                }
            }
        }
        r.check(
            bad == 0,
            format!("{} descriptors x {} checkpoints up to {top}: {bad} disagreements", corpus.len(), pts.len()),
        );
    })
}

pub const SUITES: &[&str] = &[
    "all", "densities", "triple", "muud", "witness", "fsigma", "nonclosed", "cantor", "finxfin", "recursion", "oracle",
];

/// Runs the named suite (`all` runs every check).
pub fn run_suite(name: &str) -> Option<Vec<Check>> {
    let checks: Vec<fn() -> Check> = match name {
        "all" => vec![
            partition_densities,
            principal_triple_experiment,
            uniform_distribution,
            witness_constants,
            fsigma_equality,
            nonclosed_limits,
            cantor_bound,
            fin_times_fin,
            set_recursion,
            oracle_equivalence,
        ],
        "densities" => vec![partition_densities],
        "triple" => vec![principal_triple_experiment],
        "muud" => vec![uniform_distribution],
        "witness" => vec![witness_constants],
        "fsigma" => vec![fsigma_equality],
        "nonclosed" => vec![nonclosed_limits],
        "cantor" => vec![cantor_bound],
        "finxfin" => vec![fin_times_fin],
        "recursion" => vec![set_recursion],
        "oracle" => vec![oracle_equivalence],
        _ => return None,
    };
    Some(checks.into_iter().map(|c| c()).collect())
}
