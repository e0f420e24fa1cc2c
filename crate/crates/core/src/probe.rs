//! Finite-prefix estimation of ideal limit points, ideal cluster points and
//! ordinary limit points, with witness subsequences built greedily.

use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::arith::{pow2_inv, q_u64, Q};
use crate::forge::SeqGen;
use crate::measure::{fixed_to_q, tail_estimate, Submeasure, Weights};
use crate::nset::IndexSet;

/// Number of shrinking radii tried by the witness searches.
pub const MAX_WITNESS_LEVELS: u32 = 40;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProbeError {
    #[error("empty sample")]
    EmptySample,
    #[error("radii must be positive and strictly decreasing")]
    BadRadii,
    #[error("radius must be positive")]
    BadRadius,
    #[error("grid must be non-empty")]
    EmptyGrid,
}

/// `x_1, …, x_N` with a value-sorted index for ball queries.
#[derive(Debug, Clone)]
pub struct Sample {
    values: Vec<Q>,
    /// `(value, n)` sorted by value then index
    by_value: Vec<(Q, u64)>,
}

impl Sample {
    pub fn from_values(values: Vec<Q>) -> Result<Self, ProbeError> {
        if values.is_empty() {
            return Err(ProbeError::EmptySample);
        }
        let mut by_value: Vec<(Q, u64)> =
            values.iter().enumerate().map(|(i, v)| (v.clone(), i as u64 + 1)).collect();
        by_value.sort();
        Ok(Sample { values, by_value })
    }

    pub fn from_seq(x: &SeqGen, n: u64) -> Result<Self, ProbeError> {
        Sample::from_values(x.prefix(n))
    }

    pub fn len(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, n: u64) -> &Q {
        &self.values[(n - 1) as usize]
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    /// Sorted indices `n` with `lo ≤ x_n ≤ hi`.
    pub fn hits_in(&self, lo: &Q, hi: &Q) -> Vec<u64> {
        let a = self.by_value.partition_point(|(v, _)| v < lo);
        let b = self.by_value.partition_point(|(v, _)| v <= hi);
        let mut out: Vec<u64> = if a < b { self.by_value[a..b].iter().map(|(_, n)| *n).collect() } else { Vec::new() };
        out.sort_unstable();
        out
    }

    /// Sorted indices `n` with `|x_n − ℓ| ≤ r`.
    pub fn hits(&self, center: &Q, r: &Q) -> Vec<u64> {
        self.hits_in(&(center - r), &(center + r))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UProfile {
    pub center: Q,
    pub radii: Vec<Q>,
    pub estimates: Vec<Q>,
    pub prefix: u64,
}

impl UProfile {
    /// Whether the estimates are non-increasing along the radii up to `slack`.
    pub fn is_monotone(&self, slack: &Q) -> bool {
        self.estimates.windows(2).all(|w| w[1] <= &w[0] + slack)
    }
}

/// Star-norm estimates of `{n ≤ N : |x_n − ℓ| ≤ r}` for each radius.
pub fn u_profile(sample: &Sample, center: &Q, radii: &[Q], phi: &Submeasure) -> Result<UProfile, ProbeError> {
    if radii.iter().any(|r| *r <= Q::zero()) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ProbeError::BadRadii);
    }
    let n = sample.len();
    let estimates = radii.iter().map(|r| tail_estimate(phi, &sample.hits(center, r), n)).collect();
    Ok(UProfile { center: center.clone(), radii: radii.to_vec(), estimates, prefix: n })
}

/// Dyadic radii `r, r/2, …, r/2^{count−1}`.
pub fn dyadic_radii(r: &Q, count: u32) -> Vec<Q> {
    (0..count).map(|j| r * pow2_inv(j)).collect()
}

/// One greedy block `(start, end]` of a witness whose members lie within `radius`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessBlock {
    pub start: u64,
    pub end: u64,
    pub radius: Q,
    /// `false` for the trailing block that reached the end of the prefix.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub members: Vec<u64>,
    pub blocks: Vec<WitnessBlock>,
    /// Density estimate (bounded `φ`) or tail mass (unbounded `φ`).
    pub strength: Q,
}

impl Witness {
    pub fn to_index_set(&self) -> IndexSet {
        IndexSet::Finite(self.members.clone())
    }

    pub fn complete_blocks(&self) -> usize {
        self.blocks.iter().filter(|b| b.complete).count()
    }

    /// Independent pass: every member of block `j` lies within its radius.
    pub fn is_sound(&self, sample: &Sample, center: &Q) -> bool {
        let mut members = self.members.iter().peekable();
        for b in &self.blocks {
            while let Some(&&n) = members.peek() {
                if n > b.end {
                    break;
                }
                if n <= b.start || crate::arith::abs_diff(sample.x(n), center) > b.radius {
                    return false;
                }
                members.next();
            }
        }
        members.next().is_none()
    }
}

/// Greedy blocks `A_k ∩ (θ_{k−1}, θ_k]` where `A_k` are the hits of the
/// radius `base · 2^{−(k−1)}` and `θ_k` is minimal above `θ_{k−1}` and
/// `min A_{k+1}` with `φ(A_k ∩ (θ_{k−1}, θ_k]) ≥ (1 − 1/k) u_k`, where `u_k`
/// is the tail estimate of `A_k`.
///
/// Succeeds when at least two blocks close, the witness density is at least
/// `delta` and the estimate at the last radius used is at least `delta`.
pub fn witness_analytic_p(sample: &Sample, center: &Q, phi: &Submeasure, delta: &Q, base: &Q) -> Option<Witness> {
    let n_max = sample.len();
    let mut next_hits = sample.hits(center, base);
    let mut members = Vec::new();
    let mut blocks = Vec::new();
    let mut theta = 0u64;
    let mut last_u = Q::zero();
    for k in 1..=MAX_WITNESS_LEVELS {
        let a_k = core::mem::replace(&mut next_hits, sample.hits(center, &(base * pow2_inv(k))));
        let u_k = tail_estimate(phi, &a_k, n_max);
        last_u = u_k.clone();
        let radius = base * pow2_inv(k - 1);
        let next_min = next_hits.first().copied();
        let target = (Q::one() - q_u64(1, u64::from(k))) * &u_k;
        let from = a_k.partition_point(|&e| e <= theta);
        let close = next_min.and_then(|m| {
            let floor = theta.max(m) + 1;
            close_block(phi, &a_k[from..], &target, floor, n_max)
        });
        match close {
            Some((end, taken)) => {
                members.extend_from_slice(&a_k[from..from + taken]);
                blocks.push(WitnessBlock { start: theta, end, radius, complete: true });
                theta = end;
                if theta >= n_max {
                    break;
                }
            }
            None => {
                members.extend_from_slice(&a_k[from..]);
                blocks.push(WitnessBlock { start: theta, end: n_max, radius, complete: false });
                break;
            }
        }
    }
    let strength = tail_estimate(phi, &members, n_max);
    let complete = blocks.iter().filter(|b| b.complete).count();
    (complete >= 2 && strength >= *delta && last_u >= *delta).then_some(Witness { members, blocks, strength })
}

/// Smallest `θ ≥ floor` (and `≤ n_max`) with `φ(members ∩ (·, θ]) ≥ target`;
/// returns `θ` and the number of members taken.
fn close_block(phi: &Submeasure, members: &[u64], target: &Q, floor: u64, n_max: u64) -> Option<(u64, usize)> {
    if floor > n_max {
        return None;
    }
    let mut taken = members.partition_point(|&e| e <= floor);
    let mut mass = Mass::new(phi, &members[..taken]);
    if mass.value() >= *target {
        return Some((floor, taken));
    }
    while taken < members.len() {
        let e = members[taken];
        taken += 1;
        mass.push(taken, e);
        if mass.value() >= *target {
            return Some((e, taken));
        }
    }
    None
}

/// Running lower bound for `φ` over a growing sorted prefix.
enum Mass {
    Density(Q),
    Fixed(Weights, u128),
    Counting(u64),
}

impl Mass {
    fn new(phi: &Submeasure, members: &[u64]) -> Self {
        match phi {
            Submeasure::Density => Mass::Density(phi.of_sorted(members)),
            Submeasure::Summable(w) => Mass::Fixed(*w, members.iter().map(|&n| w.weight_fixed_floor(n)).sum()),
            Submeasure::Counting => Mass::Counting(members.len() as u64),
        }
    }

    /// Adds member `e`, the `taken`-th of the prefix.
    fn push(&mut self, taken: usize, e: u64) {
        match self {
            Mass::Density(best) => {
                let d = q_u64(taken as u64, e);
                if d > *best {
                    *best = d;
                }
            }
            Mass::Fixed(w, acc) => *acc += w.weight_fixed_floor(e),
            Mass::Counting(c) => *c += 1,
        }
    }

    fn value(&self) -> Q {
        match self {
            Mass::Density(best) => best.clone(),
            Mass::Fixed(_, acc) => fixed_to_q(*acc),
            Mass::Counting(c) => q_u64(*c, 1),
        }
    }
}

/// Greedy blocks `a_k` from `a_0 = ⌈√N⌉` with `φ(A_k ∩ (a_{k−1}, a_k]) ≥ k · unit`
/// over the shrinking radii `base · 2^{−(k−1)}`; the trailing open block is
/// kept. Succeeds when two blocks close and the total mass reaches `target`.
pub fn witness_fsigma(
    sample: &Sample,
    center: &Q,
    phi: &Submeasure,
    target: &Q,
    unit: &Q,
    base: &Q,
) -> Option<Witness> {
    let n_max = sample.len();
    let mut a = crate::arith::ceil_sqrt(n_max);
    let mut members = Vec::new();
    let mut blocks = Vec::new();
    for k in 1..=MAX_WITNESS_LEVELS {
        let radius = base * pow2_inv(k - 1);
        let a_k = sample.hits(center, &radius);
        let from = a_k.partition_point(|&e| e <= a);
        let need = unit * q_u64(u64::from(k), 1);
        match close_block(phi, &a_k[from..], &need, a + 1, n_max) {
            Some((end, taken)) if taken > 0 => {
                members.extend_from_slice(&a_k[from..from + taken]);
                blocks.push(WitnessBlock { start: a, end, radius, complete: true });
                a = end;
            }
            _ => {
                members.extend_from_slice(&a_k[from..]);
                blocks.push(WitnessBlock { start: a, end: n_max, radius, complete: false });
                break;
            }
        }
    }
    let strength = phi.lower_bound_sorted(&members);
    let complete = blocks.iter().filter(|b| b.complete).count();
    (complete >= 2 && strength >= *target).then_some(Witness { members, blocks, strength })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flag {
    Limit,
    Cluster,
    Ordinary,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointReport {
    pub point: Q,
    pub hits: u64,
    pub ordinary: bool,
    pub cluster_estimate: Q,
    pub cluster: bool,
    pub limit: bool,
    pub witness_strength: Option<Q>,
}

impl PointReport {
    pub fn flag(&self) -> Flag {
        if self.limit {
            Flag::Limit
        } else if self.cluster {
            Flag::Cluster
        } else if self.ordinary {
            Flag::Ordinary
        } else {
            Flag::None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectrumReport {
    pub radius: Q,
    pub prefix: u64,
    pub delta: Q,
    pub phi: Submeasure,
    pub points: Vec<PointReport>,
}

impl SpectrumReport {
    pub fn grid(&self) -> Vec<Q> {
        self.points.iter().map(|p| p.point.clone()).collect()
    }
}

/// Grid `lo, lo + step, …` up to `hi`.
pub fn grid(lo: &Q, hi: &Q, step: &Q) -> Vec<Q> {
    let mut out = Vec::new();
    let mut p = lo.clone();
    while p <= *hi {
        out.push(p.clone());
        p += step;
    }
    out
}

/// Per grid point: ordinary if at least `⌊log₂ N⌋` terms lie within `r`;
/// cluster if also the star-norm estimate exceeds `delta`; limit if also the
/// witness search succeeds at threshold `delta`.
pub fn spectrum(
    sample: &Sample,
    grid: &[Q],
    r: &Q,
    phi: &Submeasure,
    delta: &Q,
) -> Result<SpectrumReport, ProbeError> {
    if grid.is_empty() {
        return Err(ProbeError::EmptyGrid);
    }
    if *r <= Q::zero() {
        return Err(ProbeError::BadRadius);
    }
    let n = sample.len();
    // hits ≥ log2(n)
    let threshold = u64::from(n.next_power_of_two().trailing_zeros());
    let points = grid
        .iter()
        .map(|l| {
            let hits = sample.hits(l, r);
            let ordinary = hits.len() as u64 >= threshold;
            let cluster_estimate = tail_estimate(phi, &hits, n);
            let cluster = ordinary && cluster_estimate > *delta;
            let witness = if !cluster {
                None
            } else if phi.is_bounded() {
                witness_analytic_p(sample, l, phi, delta, r)
            } else {
                witness_fsigma(sample, l, phi, delta, delta, r)
            };
            PointReport {
                point: l.clone(),
                hits: hits.len() as u64,
                ordinary,
                cluster_estimate,
                cluster,
                limit: witness.is_some(),
                witness_strength: witness.map(|w| w.strength),
            }
        })
        .collect();
    Ok(SpectrumReport { radius: r.clone(), prefix: n, delta: delta.clone(), phi: *phi, points })
}
