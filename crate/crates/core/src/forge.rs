//! Sequence constructions with prescribed ideal limit, cluster and ordinary
//! limit sets.
//!
//! Most constructions route indices through the base partition of ℕ:
//!
//! * `𝒞` = the non-zero squares;
//! * `ℬ` = odd non-squares;
//! * `𝒜_k` = `{2^k · odd} ∖ 𝒞` for `k ≥ 1`, of density `2^{−k−1}`;
//!
//! and its factorial refinement `𝒜_{k,m} = 𝒜_k ∩ ⋃_{j ∈ 𝒜_m} [j!, (j+1)!)`,
//! where the selector for `m = 1` also takes `j ∈ ℬ ∪ 𝒞`.
//!
//! All values are exact rationals.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::arith::{factorial_block, is_square, isqrt, pow2_inv, q_u64, qi, v2, Q};
use crate::ideals::{IdealSpec, Membership};
use crate::measure::{Submeasure, Weights};
use crate::nset::IndexSet;
use crate::rset::{Interval, RClosedSet, RFSigma, RSetError};

/// Upper bound on prefixes searched by the block constructions.
pub const SEARCH_BOUND: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ForgeError {
    #[error("S ⊄ A: isolated point {0} of B is not in A")]
    IsolatedNotInA(String),
    #[error("A ⊄ B: layer {0} of A is not contained in B")]
    ANotInB(usize),
    #[error("B ⊄ C")]
    BNotInC,
    #[error("B∖S not regular closed")]
    NotRegularClosed,
    #[error("empty set where a non-empty one is required: {0}")]
    Empty(&'static str),
    #[error("unit value {0} outside [0, 1]")]
    UnitRange(String),
    #[error("ideal {0} is not an F-sigma ideal")]
    NotFSigma(String),
    #[error("index set is not an infinite member of the ideal")]
    IndexNotInIdeal,
    #[error("block search exceeded the prefix bound {0}")]
    SearchBound(u64),
    #[error("set recursion fails at level {level}: {reason}")]
    Recursion { level: u32, reason: String },
    #[error(transparent)]
    Set(#[from] RSetError),
}

/// Cell of the base partition holding an index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    /// `n ∈ 𝒜_{k,m}`.
    A { k: u32, m: u32 },
    /// `n` is the `rank`-th term of `ℬ`.
    B { rank: u64 },
    /// `n = root²`.
    C { root: u64 },
}

/// The factorial selector index `m` with `j ∈ 𝒜_m`, or `1` for `j ∈ ℬ ∪ 𝒞`.
pub fn selector_index(j: u64) -> u32 {
    if j.is_multiple_of(2) && !is_square(j) {
        v2(j)
    } else {
        1
    }
}

/// Number of terms of `ℬ` in `[1, n]`.
pub fn count_b(n: u64) -> u64 {
    n.div_ceil(2) - isqrt(n).div_ceil(2)
}

pub fn cell_of(n: u64) -> Cell {
    debug_assert!(n >= 1);
    if is_square(n) {
        Cell::C { root: isqrt(n) }
    } else if n % 2 == 1 {
        Cell::B { rank: count_b(n) }
    } else {
        Cell::A { k: v2(n), m: selector_index(u64::from(factorial_block(n))) }
    }
}

/// Symbolic descriptors of the base partition.
#[derive(Debug, Clone)]
pub struct BasePartition;

impl BasePartition {
    pub fn a(&self, k: u32) -> IndexSet {
        IndexSet::diff(IndexSet::ScaledOdd(k), IndexSet::Squares)
    }

    pub fn b(&self) -> IndexSet {
        IndexSet::diff(IndexSet::odds(), IndexSet::Squares)
    }

    pub fn c(&self) -> IndexSet {
        IndexSet::Squares
    }
}

pub fn base_partition() -> BasePartition {
    BasePartition
}

/// `𝒜_{k,m}` as a factorial filter.
pub fn factorial_subpartition(k: u32, m: u32) -> IndexSet {
    let p = base_partition();
    let selector = if m == 1 {
        IndexSet::Union(vec![p.a(1), p.b(), p.c()])
    } else {
        p.a(m)
    };
    IndexSet::factorial_filter(p.a(k), selector)
}

/// The sequence `0, 0, 1, 0, 1/2, 1, 0, 1/3, 2/3, 1, …`: block `j` holds
/// `a/(j − 1)` for `a = 0..j−1`.
pub fn ud_unit(t: u64) -> Q {
    assert!(t >= 1, "ud_unit is indexed from 1");
    // smallest j with j(j+1)/2 ≥ t
    let mut j = isqrt(2 * t);
    while j * (j + 1) / 2 < t {
        j += 1;
    }
    while j > 1 && (j - 1) * j / 2 >= t {
        j -= 1;
    }
    if j == 1 {
        return Q::zero();
    }
    let a = t - (j - 1) * j / 2 - 1;
    q_u64(a, j - 1)
}

/// Inverse distribution function of normalized length on `f`, at `u`.
pub fn quantile_transport(f: &RClosedSet, u: &Q) -> Result<Q, ForgeError> {
    if !f.is_regular_closed() {
        return Err(ForgeError::NotRegularClosed);
    }
    if u.is_negative() || *u > Q::one() {
        return Err(ForgeError::UnitRange(u.to_string()));
    }
    let target = u * f.length();
    let mut acc = Q::zero();
    for part in f.parts() {
        let len = part.length();
        if target <= &acc + &len {
            return Ok(part.lo() + (&target - &acc));
        }
        acc += len;
    }
    Ok(f.max().cloned().expect("non-empty"))
}

/// Name, inputs and partition behind a constructed sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqMeta {
    pub construction: String,
    pub inputs: Vec<(String, String)>,
    pub partition: String,
}

impl SeqMeta {
    fn new(construction: &str, inputs: Vec<(&str, String)>, partition: &str) -> Self {
        SeqMeta {
            construction: construction.to_string(),
            inputs: inputs.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            partition: partition.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Periodic(Vec<Q>),
    Triple { layers: Vec<RClosedSet>, f: RClosedSet, c: RClosedSet },
    TripleEmptyA { f: RClosedSet, c: RClosedSet },
    LambdaOnly { layers: Vec<RClosedSet> },
    NonClosed,
    Fsigma(Box<FsigmaData>),
    Cantor,
    NoFsigma { cells: Vec<RClosedSet> },
}

#[derive(Debug, Clone)]
struct FsigmaData {
    b: RClosedSet,
    c: RClosedSet,
    index: IndexSet,
    /// `m_1 < m_2 < … < m_K`, all within the horizon.
    ends: Vec<u64>,
}

/// A deterministic sequence `n ↦ x_n` (`n ≥ 1`) with its provenance.
#[derive(Debug, Clone)]
pub struct SeqGen {
    kind: Kind,
    meta: SeqMeta,
}

fn enum_at(set: &RClosedSet, i: u64) -> Q {
    set.dense_enum(i).expect("constructions only enumerate non-empty sets from 1")
}

impl SeqGen {
    pub fn constant(c: Q) -> Self {
        let meta = SeqMeta::new("constant", vec![("value", c.to_string())], "none");
        SeqGen { kind: Kind::Periodic(vec![c]), meta }
    }

    /// `x_n = values[(n − 1) mod len]`.
    pub fn periodic(values: Vec<Q>) -> Result<Self, ForgeError> {
        if values.is_empty() {
            return Err(ForgeError::Empty("periodic values"));
        }
        let shown: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        let meta = SeqMeta::new("periodic", vec![("values", shown.join(","))], "residues");
        Ok(SeqGen { kind: Kind::Periodic(values), meta })
    }

    pub fn meta(&self) -> &SeqMeta {
        &self.meta
    }

    /// `x_n`.
    ///
    /// # Panics
    /// If `n == 0`.
    pub fn x(&self, n: u64) -> Q {
        assert!(n >= 1, "sequences are indexed from 1");
        match &self.kind {
            Kind::Periodic(v) => v[((n - 1) % v.len() as u64) as usize].clone(),
            Kind::Triple { layers, f, c } => match cell_of(n) {
                Cell::A { k, m } => enum_at(&layers[(k as usize - 1) % layers.len()], u64::from(m)),
                Cell::B { rank } => b_term(f, rank),
                Cell::C { root } => enum_at(c, root),
            },
            Kind::TripleEmptyA { f, c } => {
                if is_square(n) {
                    enum_at(c, isqrt(n))
                } else {
                    b_term(f, n - isqrt(n))
                }
            }
            Kind::LambdaOnly { layers } => {
                let (k, m) = match cell_of(n) {
                    Cell::A { k, m } => (k, m),
                    _ => (1, selector_index(u64::from(factorial_block(n)))),
                };
                enum_at(&layers[(k as usize - 1) % layers.len()], u64::from(m))
            }
            Kind::NonClosed => match cell_of(n) {
                Cell::A { k, .. } => q_u64(1, u64::from(k)),
                _ => Q::one(),
            },
            Kind::Fsigma(d) => d.x(n),
            Kind::Cantor => cantor_sequence(n),
            Kind::NoFsigma { cells } => {
                let k = v2(n);
                let j = (n >> k).div_ceil(2);
                enum_at(&cells[k as usize], j)
            }
        }
    }

    /// `x_1, …, x_n`.
    pub fn prefix(&self, n: u64) -> Vec<Q> {
        (1..=n).map(|i| self.x(i)).collect()
    }
}

fn b_term(f: &RClosedSet, m: u64) -> Q {
    quantile_transport(f, &ud_unit(m)).expect("F validated as regular closed")
}

/// The three-set construction: `Λ = A`, `Γ = B`, `L = C` for the density ideal.
pub fn assemble_triple(a: &RFSigma, b: &RClosedSet, c: &RClosedSet) -> Result<SeqGen, ForgeError> {
    if b.is_empty() {
        return Err(ForgeError::Empty("B"));
    }
    for (i, layer) in a.layers().iter().enumerate() {
        if !layer.is_subset_of(b) {
            return Err(ForgeError::ANotInB(i + 1));
        }
    }
    if !b.is_subset_of(c) {
        return Err(ForgeError::BNotInC);
    }
    let s = b.isolated_points();
    if let Some(p) = s.parts().iter().find(|p| !a.contains(p.lo())) {
        return Err(ForgeError::IsolatedNotInA(p.lo().to_string()));
    }
    let f = b.without_isolated();
    if !f.is_regular_closed() {
        return Err(ForgeError::NotRegularClosed);
    }
    let layers: Vec<String> = a.layers().iter().map(|l| l.to_string()).collect();
    let inputs = vec![("A", layers.join(" ; ")), ("B", b.to_string()), ("C", c.to_string())];
    if a.is_empty() {
        let meta = SeqMeta::new("triple", inputs, "squares / non-squares (A empty)");
        return Ok(SeqGen { kind: Kind::TripleEmptyA { f, c: c.clone() }, meta });
    }
    let meta = SeqMeta::new("triple", inputs, "factorial double partition A_{k,m}, B, C");
    Ok(SeqGen { kind: Kind::Triple { layers: a.layers().to_vec(), f, c: c.clone() }, meta })
}

/// A sequence whose density-ideal limit set is the `F_σ` set `b`.
pub fn lambda_only(b: &RFSigma) -> Result<SeqGen, ForgeError> {
    if b.is_empty() {
        return Err(ForgeError::Empty("B"));
    }
    let layers: Vec<String> = b.layers().iter().map(|l| l.to_string()).collect();
    let meta = SeqMeta::new(
        "lambda-only",
        vec![("B", layers.join(" ; "))],
        "factorial double partition A_{k,m}; B and C absorbed into k = 1",
    );
    Ok(SeqGen { kind: Kind::LambdaOnly { layers: b.layers().to_vec() }, meta })
}

/// `x_n = 1/k` on `𝒜_k` and `1` on `ℬ ∪ 𝒞`: the limit set `{1/k}` is not closed.
pub fn nonclosed_demo() -> SeqGen {
    let meta = SeqMeta::new("nonclosed", vec![], "A_k, with B and C absorbed into A_1");
    SeqGen { kind: Kind::NonClosed, meta }
}

/// Lower and upper fixed-point bounds for harmonic block sums.
const FIX_SHIFT: u32 = 64;

fn fsigma_blocks(phi: Submeasure, index: &IndexSet, horizon: u64) -> Result<Vec<u64>, ForgeError> {
    let mut ends = Vec::new();
    let mut k: u64 = 1;
    let mut start = 0u64;
    match phi {
        Submeasure::Counting => {
            let mut cnt = 0u64;
            for n in 1..=horizon {
                if index.contains(n) {
                    continue;
                }
                cnt += 1;
                if cnt >= k {
                    ends.push(n);
                    k += 1;
                    cnt = 0;
                }
            }
        }
        Submeasure::Summable(Weights::Harmonic) => {
            // Σ ⌊2^64/n⌋ ≤ 2^64 Σ 1/n < Σ ⌊2^64/n⌋ + terms
            let scale: u128 = 1 << FIX_SHIFT;
            let mut lo: u128 = 0;
            let mut terms: u128 = 0;
            for n in 1..=horizon {
                if index.contains(n) {
                    continue;
                }
                lo += scale / u128::from(n);
                terms += 1;
                let target = u128::from(k) * scale;
                let reached = if lo >= target {
                    true
                } else if lo + terms < target {
                    false
                } else {
                    exact_harmonic(index, start, n) >= qi(k as i64)
                };
                if reached {
                    ends.push(n);
                    start = n;
                    k += 1;
                    lo = 0;
                    terms = 0;
                }
            }
        }
        Submeasure::Density => return Err(ForgeError::NotFSigma(phi.to_string())),
    }
    if ends.is_empty() {
        return Err(ForgeError::SearchBound(horizon));
    }
    Ok(ends)
}

fn exact_harmonic(index: &IndexSet, from: u64, to: u64) -> Q {
    (from + 1..=to).filter(|&n| !index.contains(n)).map(|n| q_u64(1, n)).sum()
}

impl FsigmaData {
    fn x(&self, n: u64) -> Q {
        if self.index.contains(n) {
            return enum_at(&self.c, self.index.count_to(n));
        }
        let block = self.ends.partition_point(|&e| e < n) as u64 + 1;
        enum_at(&self.b, u64::from(v2(block)) + 1)
    }

    fn block_ends(&self) -> &[u64] {
        &self.ends
    }
}

/// The `F_σ` construction: `Λ = Γ = B` for the ideal and `L = C`.
///
/// Block ends `m_k` are found greedily up to `horizon`; indices past the last
/// complete block belong to the open block `K + 1`. Blocks are grouped by
/// the dyadic columns of their index: block `b` feeds `M_{v2(b)+1}`.
pub fn fsigma_pair(
    b: &RClosedSet,
    c: &RClosedSet,
    ideal: &IdealSpec,
    index: IndexSet,
    horizon: u64,
) -> Result<SeqGen, ForgeError> {
    let IdealSpec::FSigma(phi) = ideal else {
        return Err(ForgeError::NotFSigma(ideal.to_string()));
    };
    if b.is_empty() {
        return Err(ForgeError::Empty("B"));
    }
    if !b.is_subset_of(c) {
        return Err(ForgeError::BNotInC);
    }
    if ideal.is_member(&index) != Membership::Member || index.is_finite() != Some(false) {
        return Err(ForgeError::IndexNotInIdeal);
    }
    if horizon > SEARCH_BOUND {
        return Err(ForgeError::SearchBound(SEARCH_BOUND));
    }
    let ends = fsigma_blocks(*phi, &index, horizon)?;
    let shown: Vec<String> = ends.iter().map(|e| e.to_string()).collect();
    let meta = SeqMeta::new(
        "fsigma-pair",
        vec![
            ("B", b.to_string()),
            ("C", c.to_string()),
            ("ideal", ideal.to_string()),
            ("I", index.to_string()),
            ("block_ends", shown.join(",")),
        ],
        "blocks (m_{k-1}, m_k] off I grouped by dyadic column of k; I enumerates C",
    );
    let data = FsigmaData { b: b.clone(), c: c.clone(), index, ends };
    Ok(SeqGen { kind: Kind::Fsigma(Box::new(data)), meta })
}

impl SeqGen {
    /// Block ends `m_k` of an `F_σ` construction.
    pub fn block_ends(&self) -> Option<&[u64]> {
        match &self.kind {
            Kind::Fsigma(d) => Some(d.block_ends()),
            _ => None,
        }
    }
}

/// A nested family `M_1 ⊇ M_2 ⊇ …` with exact `φ` values for the density
/// submeasure.
pub trait EpsFamily {
    fn member_set(&self, k: u32) -> IndexSet;
    /// `φ(M_k) = sup_n |M_k ∩ [1, n]| / n`.
    fn phi(&self, k: u32) -> Q;
    /// `Σ_{k ≥ n+1} φ(M_k)`.
    fn phi_tail_sum(&self, n: u32) -> Q;
}

/// `M_k = base^k ℕ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowerMultipleFamily {
    pub base: u64,
}

impl Default for PowerMultipleFamily {
    fn default() -> Self {
        PowerMultipleFamily { base: 3 }
    }
}

impl PowerMultipleFamily {
    fn inv_pow(&self, k: u32) -> Q {
        Q::new(BigInt::one(), BigInt::from(self.base).pow(k))
    }
}

impl EpsFamily for PowerMultipleFamily {
    fn member_set(&self, k: u32) -> IndexSet {
        IndexSet::PowerMultiples { base: self.base, exponent: k }
    }

    fn phi(&self, k: u32) -> Q {
        self.inv_pow(k)
    }

    fn phi_tail_sum(&self, n: u32) -> Q {
        self.inv_pow(n) / qi(self.base as i64 - 1)
    }
}

/// Validated partition `A_n = M_{n−1} ∖ M_n` built from a nested family.
#[derive(Debug, Clone)]
pub struct SetRecursion<F> {
    family: F,
    levels: u32,
    /// `(‖M_n‖, Σ_{k>n} φ(M_k))` per checked level.
    pub checks: Vec<(Q, Q)>,
}

impl<F: EpsFamily> SetRecursion<F> {
    fn m(&self, n: u32) -> IndexSet {
        if n == 0 {
            IndexSet::All
        } else {
            self.family.member_set(n)
        }
    }

    /// `A_n` for `n ≥ 1`.
    pub fn part(&self, n: u32) -> IndexSet {
        IndexSet::diff(self.m(n - 1), self.m(n))
    }

    /// `⋃_{k>n} A_k = M_n`.
    pub fn tail(&self, n: u32) -> IndexSet {
        self.m(n)
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }
}

/// Checks `‖M_n‖ > Σ_{k≥n+1} φ(M_k) > 0` for `n = 1..=levels` and
/// `Σ_k φ(M_k) < 1` in exact arithmetic, plus nestedness on `[1, 10^4]`.
pub fn set_recursion_partition<F: EpsFamily>(family: F, levels: u32) -> Result<SetRecursion<F>, ForgeError> {
    let fail = |level: u32, reason: String| ForgeError::Recursion { level, reason };
    if family.phi_tail_sum(0) >= Q::one() {
        return Err(fail(0, "total mass Σ φ(M_k) is not below φ(ℕ) = 1".to_string()));
    }
    let mut checks = Vec::new();
    for n in 1..=levels {
        let m = family.member_set(n);
        if n > 1 {
            let prev = family.member_set(n - 1);
            if (1..=10_000u64).any(|i| m.contains(i) && !prev.contains(i)) {
                return Err(fail(n, "family is not nested".to_string()));
            }
        }
        let norm = m
            .upper_density_exact()
            .ok_or_else(|| fail(n, "star norm not exactly computable".to_string()))?;
        let tail = family.phi_tail_sum(n);
        if norm <= tail {
            return Err(fail(n, format!("‖M_n‖ = {norm} is not above the tail sum {tail}")));
        }
        if !tail.is_positive() {
            return Err(fail(n, "tail sum is not positive".to_string()));
        }
        checks.push((norm, tail));
    }
    let rec = SetRecursion { family, levels, checks };
    for n in 1..=levels {
        match rec.part(n).upper_density_exact() {
            Some(d) if d.is_positive() => {}
            _ => return Err(fail(n, "part A_n has zero star norm".to_string())),
        }
    }
    Ok(rec)
}

/// Maps binary digits `a_i` of `r ∈ [0, 1]` to ternary digits `2a_i`;
/// dyadic rationals use their terminating expansion and `1 ↦ 1`.
pub fn cantor_transport(r: &Q) -> Result<Q, ForgeError> {
    if r.is_negative() || *r > Q::one() {
        return Err(ForgeError::UnitRange(r.to_string()));
    }
    if r.is_one() {
        return Ok(Q::one());
    }
    let den = r.denom().clone();
    let mut rem = r.numer().clone();
    let mut seen: BTreeMap<BigInt, usize> = BTreeMap::new();
    let mut digits: Vec<bool> = Vec::new();
    while !seen.contains_key(&rem) {
        seen.insert(rem.clone(), digits.len());
        rem <<= 1usize;
        if rem >= den {
            digits.push(true);
            rem -= &den;
        } else {
            digits.push(false);
        }
    }
    let start = seen[&rem];
    let three = BigInt::from(3);
    let horner = |ds: &[bool]| ds.iter().fold(BigInt::zero(), |acc, &d| acc * &three + if d { 2 } else { 0 });
    let pre = horner(&digits[..start]);
    let period = horner(&digits[start..]);
    let cycle = three.pow((digits.len() - start) as u32) - 1;
    let numer = pre * &cycle + period;
    Ok(Q::new(numer, three.pow(start as u32) * cycle))
}

/// `T(ud_unit(n))`.
pub fn cantor_sequence(n: u64) -> Q {
    cantor_transport(&ud_unit(n)).expect("ud_unit lies in [0, 1]")
}

pub fn cantor_seq() -> SeqGen {
    let meta = SeqMeta::new("cantor", vec![], "ud_unit blocks");
    SeqGen { kind: Kind::Cantor, meta }
}

/// The `t`-th pair `(a, b)` of `0/1, 1/1, 0/2, 1/2, 2/2, 0/3, …`.
pub fn q_enum(t: u64) -> (u64, u64) {
    assert!(t >= 1, "q_enum is indexed from 1");
    let cum = |b: u64| b * (b + 3) / 2;
    let mut b = isqrt(2 * t).max(1);
    while cum(b) < t {
        b += 1;
    }
    while b > 1 && cum(b - 1) >= t {
        b -= 1;
    }
    (t - cum(b - 1) - 1, b)
}

fn q_value(t: u64) -> Q {
    let (a, b) = q_enum(t);
    q_u64(a, b)
}

fn unit() -> Interval {
    crate::rset::unit_interval()
}

/// `[0, 1]` minus the open balls of radius `2^−radius_exp` around `q_1..q_m`.
fn punctured(m: u64, radius_exp: u32) -> RClosedSet {
    let r = pow2_inv(radius_exp);
    let mut set = RClosedSet::normalize(vec![unit()]);
    for t in 1..=m {
        let qt = q_value(t);
        set = set.remove_open(&(&qt - &r), &(&qt + &r));
    }
    set
}

/// `C_m = [0, 1] ∖ ⋃_{t ≤ m} (q_t − 2^{−m}, q_t + 2^{−m})`.
pub fn c_set(m: u32) -> RClosedSet {
    punctured(u64::from(m), m)
}

/// `C_m ∪ C_{m+1} = [0, 1] ∖ ⋃_{t ≤ m} (q_t − 2^{−m−1}, q_t + 2^{−m−1})`, tested exactly.
pub fn union_step_identity(m: u32) -> bool {
    c_set(m).union(&c_set(m + 1)) == punctured(u64::from(m), m + 1)
}

/// Least `k ≤ max_k` such that the union step identity holds for every
/// `m ∈ [k, k + window]`.
pub fn union_step_threshold(max_k: u32, window: u32) -> Option<u32> {
    let top = max_k + window;
    let cells: Vec<RClosedSet> = (1..=top + 1).map(c_set).collect();
    let holds: Vec<bool> = (1..=top)
        .map(|m| {
            let i = (m - 1) as usize;
            cells[i].union(&cells[i + 1]) == punctured(u64::from(m), m + 1)
        })
        .collect();
    (1..=max_k).find(|&k| holds[(k - 1) as usize..(k + window) as usize].iter().all(|&h| h))
}

/// `min_{i ≤ m, q_i ≠ q_m} |q_i − q_m| > 1/(3m)`; vacuous when no `q_i` differs.
pub fn minqi_holds(m: u64) -> bool {
    let (am, bm) = q_enum(m);
    let (am, bm) = (i128::from(am), i128::from(bm));
    let m3 = 3 * i128::from(m);
    (1..m).all(|i| {
        let (ai, bi) = q_enum(i);
        let (ai, bi) = (i128::from(ai), i128::from(bi));
        let cross = (ai * bm - am * bi).abs();
        cross == 0 || m3 * cross > bi * bm
    })
}

/// Least `m₀` with [`minqi_holds`] on all of `[m₀, max_m]`.
///
/// Uses one sweep per level of denominators: the nearest distinct earlier
/// value is a neighbour in the sorted set of earlier values.
pub fn minqi_threshold(max_m: u64) -> Option<u64> {
    let mut sorted: BTreeMap<Q, ()> = BTreeMap::new();
    let mut holds = Vec::with_capacity(max_m as usize);
    for m in 1..=max_m {
        let qm = q_value(m);
        let below = sorted.range(..qm.clone()).next_back().map(|(v, _)| &qm - v);
        let above = sorted
            .range((core::ops::Bound::Excluded(qm.clone()), core::ops::Bound::Unbounded))
            .next()
            .map(|(v, _)| v - &qm);
        let gap = match (below, above) {
            (Some(a), Some(b)) => Some(if a < b { a } else { b }),
            (a, b) => a.or(b),
        };
        holds.push(gap.is_none_or(|g| g * qi(3 * m as i64) > Q::one()));
        sorted.insert(qm, ());
    }
    let mut m0 = None;
    for m in (1..=max_m).rev() {
        if holds[(m - 1) as usize] {
            m0 = Some(m);
        } else {
            break;
        }
    }
    m0
}

/// `x_n = dense_enum(C_m, j)` for `n` the `j`-th term of `P_m = 2^{m−1}·odd`.
pub fn nofsigma_sequence(n: u64) -> Q {
    assert!(n >= 1, "sequences are indexed from 1");
    let k = v2(n);
    enum_at(&c_set(k + 1), (n >> k).div_ceil(2))
}

pub fn nofsigma() -> SeqGen {
    let cells = (1..=64).map(c_set).collect();
    let meta = SeqMeta::new("nofsigma", vec![], "dyadic columns P_m = 2^{m-1} odd");
    SeqGen { kind: Kind::NoFsigma { cells }, meta }
}

/// Exact `q_t` as a rational, for reporting.
pub fn q_term(t: u64) -> Q {
    q_value(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;

    fn cs(pairs: &[(Q, Q)]) -> RClosedSet {
        RClosedSet::from_pairs(pairs.iter().cloned()).unwrap()
    }

    #[test]
    fn ud_unit_listing() {
        let want = [q(0, 1), q(0, 1), q(1, 1), q(0, 1), q(1, 2), q(1, 1), q(0, 1), q(1, 3), q(2, 3), q(1, 1)];
        for (t, w) in want.iter().enumerate() {
            assert_eq!(&ud_unit(t as u64 + 1), w, "t={}", t + 1);
        }
    }

    #[test]
    fn quantile_examples() {
        let unit = cs(&[(qi(0), qi(1))]);
        assert_eq!(quantile_transport(&unit, &q(1, 2)).unwrap(), q(1, 2));
        let f = cs(&[(qi(0), q(1, 2)), (q(3, 4), qi(1))]);
        assert_eq!(quantile_transport(&f, &q(1, 3)).unwrap(), q(1, 4));
        assert_eq!(quantile_transport(&f, &qi(1)).unwrap(), qi(1));
        let bad = cs(&[(qi(0), q(1, 2)), (qi(1), qi(1))]);
        assert_eq!(quantile_transport(&bad, &q(1, 2)), Err(ForgeError::NotRegularClosed));
    }

    #[test]
    fn partition_cells_tile() {
        let p = base_partition();
        for n in 1..=10_000u64 {
            let mut hits = u32::from(p.b().contains(n)) + u32::from(p.c().contains(n));
            for k in 1..=14 {
                hits += u32::from(p.a(k).contains(n));
            }
            assert_eq!(hits, 1, "n={n}");
            match cell_of(n) {
                Cell::A { k, m } => {
                    assert!(p.a(k).contains(n));
                    assert!(factorial_subpartition(k, m).contains(n));
                }
                Cell::B { rank } => assert_eq!(p.b().nth(rank).unwrap(), n),
                Cell::C { root } => assert_eq!(root * root, n),
            }
        }
    }

    #[test]
    fn triple_examples() {
        let a = RFSigma::new(vec![cs(&[(qi(0), q(1, 4))]), RClosedSet::point(q(3, 4))]);
        let b = cs(&[(qi(0), q(1, 2)), (q(3, 4), q(3, 4))]);
        let c = cs(&[(qi(0), qi(1))]);
        let x = assemble_triple(&a, &b, &c).unwrap();
        assert_eq!(x.x(1), qi(0));
        assert_eq!(x.x(3), qi(0));
        // 12 ∈ 𝒜_2, block 3 (selector 1): layer 2 is {3/4}
        assert_eq!(x.x(12), q(3, 4));
        let empty = assemble_triple(&RFSigma::empty(), &c, &c).unwrap();
        assert_eq!(empty.x(4), enum_at(&c, 2));
    }

    #[test]
    fn triple_precondition_errors() {
        let c = cs(&[(qi(0), qi(2))]);
        let b = cs(&[(qi(0), qi(1)), (qi(2), qi(2))]);
        let a = RFSigma::new(vec![cs(&[(qi(0), q(1, 2))])]);
        let err = assemble_triple(&a, &b, &c).unwrap_err();
        assert!(err.to_string().starts_with("S ⊄ A"));
        let a_big = RFSigma::new(vec![cs(&[(qi(0), qi(3))])]);
        assert!(matches!(assemble_triple(&a_big, &b, &c), Err(ForgeError::ANotInB(1))));
        let small_c = cs(&[(qi(0), qi(1))]);
        assert_eq!(assemble_triple(&RFSigma::empty(), &b, &small_c).unwrap_err(), ForgeError::BNotInC);
    }

    #[test]
    fn nonclosed_values() {
        let x = nonclosed_demo();
        assert_eq!(x.x(12), q(1, 2));
        assert_eq!(x.x(2), qi(1));
        assert_eq!(x.x(8), q(1, 3));
        assert_eq!(x.x(9), qi(1));
    }

    #[test]
    fn cantor_examples() {
        assert_eq!(cantor_transport(&q(1, 2)).unwrap(), q(2, 3));
        assert_eq!(cantor_transport(&q(1, 4)).unwrap(), q(2, 9));
        assert_eq!(cantor_transport(&qi(1)).unwrap(), qi(1));
        assert_eq!(cantor_transport(&qi(0)).unwrap(), qi(0));
        // 1/3 = 0.(01)₂ ↦ 0.(02)₃ = 2/8 = 1/4
        assert_eq!(cantor_transport(&q(1, 3)).unwrap(), q(1, 4));
        assert_eq!(cantor_sequence(5), q(2, 3));
        assert_eq!(cantor_sequence(1), qi(0));
    }

    #[test]
    fn q_enum_listing() {
        assert_eq!(q_enum(1), (0, 1));
        assert_eq!(q_enum(2), (1, 1));
        assert_eq!(q_enum(4), (1, 2));
        assert_eq!(q_enum(6), (0, 3));
        let (_, b) = q_enum(10_000);
        let ratio = b as f64 / (20_000f64).sqrt();
        assert!((0.9..=1.1).contains(&ratio));
    }

    #[test]
    fn c_sets() {
        assert_eq!(c_set(1), cs(&[(q(1, 2), qi(1))]));
        assert_eq!(c_set(2), cs(&[(q(1, 4), q(3, 4))]));
        for m in 1..30u32 {
            let c = c_set(m);
            for t in 1..=u64::from(m) {
                assert!(!c.contains(&q_value(t)));
            }
        }
    }

    #[test]
    fn nofsigma_examples() {
        assert_eq!(nofsigma_sequence(1), q(1, 2));
        assert_eq!(nofsigma_sequence(2), q(1, 4));
        let x = nofsigma();
        for n in 1..200 {
            assert_eq!(x.x(n), nofsigma_sequence(n));
        }
    }

    #[test]
    fn minqi_sweep_matches_direct() {
        let m0 = minqi_threshold(400).unwrap();
        for m in m0..=400 {
            assert!(minqi_holds(m), "m={m}");
        }
    }

    #[test]
    fn set_recursion_default() {
        let rec = set_recursion_partition(PowerMultipleFamily::default(), 12).unwrap();
        assert_eq!(rec.part(1).upper_density_exact(), Some(q(2, 3)));
        assert_eq!(rec.part(2).upper_density_exact(), Some(q(2, 9)));
        for n in 1..=12 {
            assert_eq!(rec.tail(n).upper_density_exact(), Some(Q::new(1.into(), BigInt::from(3).pow(n))));
        }
        assert!(set_recursion_partition(PowerMultipleFamily { base: 2 }, 3).is_err());
    }

    #[test]
    fn fsigma_block_ends_match_exact_oracle() {
        let i = IndexSet::powers(2).unwrap();
        let ideal = IdealSpec::FSigma(Submeasure::HARMONIC);
        let b = RClosedSet::point(qi(0));
        let c = cs(&[(qi(0), qi(0)), (qi(1), qi(1))]);
        let x = fsigma_pair(&b, &c, &ideal, i.clone(), 2_000).unwrap();
        // exact greedy over rationals
        let mut want = Vec::new();
        let (mut acc, mut k) = (Q::zero(), 1i64);
        for n in 1..=2_000u64 {
            if i.contains(n) {
                continue;
            }
            acc += q_u64(1, n);
            if acc >= qi(k) {
                want.push(n);
                acc = Q::zero();
                k += 1;
            }
        }
        assert_eq!(x.block_ends().unwrap(), &want[..]);
        assert_eq!(want[0], 10);
        // I enumerates C: 0, 1, 0, 1, ...
        assert_eq!(x.x(1), qi(0));
        assert_eq!(x.x(2), qi(1));
        assert_eq!(x.x(4), qi(0));
        assert_eq!(x.x(3), qi(0));
    }

    #[test]
    fn fsigma_preconditions() {
        let b = RClosedSet::point(qi(0));
        let i = IndexSet::powers(2).unwrap();
        assert!(matches!(
            fsigma_pair(&b, &b, &IdealSpec::DENSITY_ZERO, i.clone(), 100),
            Err(ForgeError::NotFSigma(_))
        ));
        let ideal = IdealSpec::FSigma(Submeasure::HARMONIC);
        assert_eq!(fsigma_pair(&b, &b, &ideal, IndexSet::evens(), 100).unwrap_err(), ForgeError::IndexNotInIdeal);
        assert_eq!(
            fsigma_pair(&b, &b, &ideal, i, SEARCH_BOUND + 1).unwrap_err(),
            ForgeError::SearchBound(SEARCH_BOUND)
        );
    }

    #[test]
    fn thresholds() {
        let k0 = union_step_threshold(64, 50).unwrap();
        assert!(k0 <= 64, "k0={k0}");
        assert!(minqi_threshold(2_000).unwrap() <= 100);
    }
}
