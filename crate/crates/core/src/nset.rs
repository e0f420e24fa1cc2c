//! Symbolic subsets of the positive integers ℕ = {1, 2, 3, ...}.
//!
//! Every [`IndexSet`] answers membership and exact counting
//! `count(N) = |S ∩ [1, N]|` for arbitrarily large `N` (big integers), so
//! factorial-scale prefixes can be counted without enumeration.
//!
//! Counting compiles the descriptor tree into a [`Plan`] with three kinds
//! of leaves:
//!
//! * periodic atoms (progressions, fixed 2-adic valuation, multiples of a
//!   power): a union of residue classes modulo the common period `L`;
//! * the squares;
//! * sparse atoms (finite lists, powers of a base), whose elements up to `N`
//!   are listed explicitly.
//!
//! Windows, tails and factorial-block filters are range atoms: they are
//! constant between a handful of breakpoints (window ends, cutoffs,
//! `j! − 1`). On each constant segment the count is
//!
//! ```text
//! #{n: P0(n mod L)} − #{j: P0(j² mod L)} + #{j: P1(j² mod L)} + explicit corrections
//! ```
//!
//! where `P0`/`P1` are the residue patterns for non-squares/squares. The same
//! patterns give exact finiteness, asymptotic density and upper density.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::{factorial, factorial_block, is_square, isqrt_big, Q};

/// Largest common period for which residue patterns are materialized.
pub const PATTERN_CAP: u64 = 1 << 20;
/// Counts up to this bound may always fall back to direct enumeration.
pub const BRUTE_LIMIT: u64 = 10_000_000;
/// Maximum number of stored elements in a finite list.
pub const FINITE_LIST_CAP: usize = 10_000_000;
/// Search bound (in bits) for [`IndexSet::rank_enum`].
const RANK_SEARCH_BITS: u64 = 256;
/// Maximum number of distinct factorial filters analysed jointly.
const MAX_FACTORIAL_FILTERS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NSetError {
    #[error("finite list has {0} elements, above the cap of {FINITE_LIST_CAP}")]
    FiniteListTooLarge(usize),
    #[error("finite lists hold positive integers; 0 is not allowed")]
    ZeroElement,
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("base must be at least 2")]
    SmallBase,
    #[error("rank {rank} exceeds the size of the set")]
    RankOutOfRange { rank: u64 },
    #[error("rank must be positive")]
    ZeroRank,
    #[error("exact count beyond 64-bit range needs a common period <= {PATTERN_CAP}")]
    Unsupported,
}

/// A symbolic subset of ℕ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexSet {
    Empty,
    All,
    /// Sorted, deduplicated positive integers.
    Finite(Vec<u64>),
    /// `{n : n ≡ residue (mod modulus)}`.
    Ap { residue: u64, modulus: u64 },
    /// `{2^k (2j − 1) : j ≥ 1}`, the integers of 2-adic valuation exactly `k`.
    ScaledOdd(u32),
    /// Non-zero squares.
    Squares,
    /// `{n : base^exponent | n}`.
    PowerMultiples { base: u64, exponent: u32 },
    /// `{base^j : j ≥ 0}`.
    Powers(u64),
    /// `inner ∩ (lo, hi]`.
    Window { inner: Box<IndexSet>, lo: BigUint, hi: BigUint },
    /// `inner ∩ ⋃_{j ∈ selector} [j!, (j+1)!)`.
    FactorialFilter { inner: Box<IndexSet>, selector: Box<IndexSet> },
    Union(Vec<IndexSet>),
    Intersect(Vec<IndexSet>),
    /// `left ∖ right`.
    Diff(Box<IndexSet>, Box<IndexSet>),
    /// `inner ∖ {1, ..., cutoff}`.
    Tail { inner: Box<IndexSet>, cutoff: BigUint },
}

impl IndexSet {
    pub fn finite(mut elems: Vec<u64>) -> Result<Self, NSetError> {
        if elems.len() > FINITE_LIST_CAP {
            return Err(NSetError::FiniteListTooLarge(elems.len()));
        }
        if elems.contains(&0) {
            return Err(NSetError::ZeroElement);
        }
        elems.sort_unstable();
        elems.dedup();
        Ok(IndexSet::Finite(elems))
    }

    pub fn ap(residue: u64, modulus: u64) -> Result<Self, NSetError> {
        if modulus == 0 {
            return Err(NSetError::ZeroModulus);
        }
        Ok(IndexSet::Ap { residue: residue % modulus, modulus })
    }

    pub fn power_multiples(base: u64, exponent: u32) -> Result<Self, NSetError> {
        if base < 2 {
            return Err(NSetError::SmallBase);
        }
        Ok(IndexSet::PowerMultiples { base, exponent })
    }

    pub fn powers(base: u64) -> Result<Self, NSetError> {
        if base < 2 {
            return Err(NSetError::SmallBase);
        }
        Ok(IndexSet::Powers(base))
    }

    pub fn evens() -> Self {
        IndexSet::Ap { residue: 0, modulus: 2 }
    }

    pub fn odds() -> Self {
        IndexSet::Ap { residue: 1, modulus: 2 }
    }

    pub fn diff(left: IndexSet, right: IndexSet) -> Self {
        IndexSet::Diff(Box::new(left), Box::new(right))
    }

    pub fn complement(self) -> Self {
        IndexSet::diff(IndexSet::All, self)
    }

    pub fn window(inner: IndexSet, lo: u64, hi: u64) -> Self {
        IndexSet::Window { inner: Box::new(inner), lo: BigUint::from(lo), hi: BigUint::from(hi) }
    }

    pub fn tail(inner: IndexSet, cutoff: u64) -> Self {
        IndexSet::Tail { inner: Box::new(inner), cutoff: BigUint::from(cutoff) }
    }

    pub fn factorial_filter(inner: IndexSet, selector: IndexSet) -> Self {
        IndexSet::FactorialFilter { inner: Box::new(inner), selector: Box::new(selector) }
    }

    /// Exact membership of a positive integer.
    pub fn contains(&self, n: u64) -> bool {
        if n == 0 {
            return false;
        }
        match self {
            IndexSet::Empty => false,
            IndexSet::All => true,
            IndexSet::Finite(v) => v.binary_search(&n).is_ok(),
            IndexSet::Ap { residue, modulus } => n % modulus == *residue,
            IndexSet::ScaledOdd(k) => n.trailing_zeros() == *k,
            IndexSet::Squares => is_square(n),
            IndexSet::PowerMultiples { base, exponent } => match base.checked_pow(*exponent) {
                Some(d) => n.is_multiple_of(d),
                None => false,
            },
            IndexSet::Powers(b) => {
                let mut m = n;
                while m.is_multiple_of(*b) {
                    m /= b;
                }
                m == 1
            }
            IndexSet::Window { inner, lo, hi } => {
                let big = BigUint::from(n);
                *lo < big && big <= *hi && inner.contains(n)
            }
            IndexSet::FactorialFilter { inner, selector } => {
                inner.contains(n) && selector.contains(u64::from(factorial_block(n)))
            }
            IndexSet::Union(cs) => cs.iter().any(|c| c.contains(n)),
            IndexSet::Intersect(cs) => cs.iter().all(|c| c.contains(n)),
            IndexSet::Diff(a, b) => a.contains(n) && !b.contains(n),
            IndexSet::Tail { inner, cutoff } => BigUint::from(n) > *cutoff && inner.contains(n),
        }
    }

    /// Membership for integers beyond 64 bits.
    pub fn contains_big(&self, n: &BigUint) -> bool {
        if let Some(small) = n.to_u64() {
            return self.contains(small);
        }
        match self {
            IndexSet::Empty | IndexSet::Finite(_) => false,
            IndexSet::All => true,
            IndexSet::Ap { residue, modulus } => (n % modulus).to_u64() == Some(*residue),
            IndexSet::ScaledOdd(k) => n.trailing_zeros() == Some(u64::from(*k)),
            IndexSet::Squares => {
                let r = isqrt_big(n);
                &(&r * &r) == n
            }
            IndexSet::PowerMultiples { base, exponent } => {
                (n % BigUint::from(*base).pow(*exponent)).is_zero()
            }
            IndexSet::Powers(b) => {
                let b = BigUint::from(*b);
                let mut m = n.clone();
                while (&m % &b).is_zero() {
                    m /= &b;
                }
                m.is_one()
            }
            IndexSet::Window { inner, lo, hi } => lo < n && n <= hi && inner.contains_big(n),
            IndexSet::FactorialFilter { inner, selector } => {
                inner.contains_big(n) && selector.contains(u64::from(factorial_block_big(n)))
            }
            IndexSet::Union(cs) => cs.iter().any(|c| c.contains_big(n)),
            IndexSet::Intersect(cs) => cs.iter().all(|c| c.contains_big(n)),
            IndexSet::Diff(a, b) => a.contains_big(n) && !b.contains_big(n),
            IndexSet::Tail { inner, cutoff } => n > cutoff && inner.contains_big(n),
        }
    }

    /// `|S ∩ [1, n]|` for any `n`.
    pub fn count(&self, n: &BigUint) -> Result<BigUint, NSetError> {
        if let Some(small) = n.to_u64() {
            return Ok(BigUint::from(self.count_to(small)));
        }
        self.count_symbolic(n).ok_or(NSetError::Unsupported)
    }

    /// `|S ∩ [1, n]|` for 64-bit `n`; always exact.
    pub fn count_to(&self, n: u64) -> u64 {
        if n == 0 {
            return 0;
        }
        if let Some(c) = self.closed_form(n) {
            return c;
        }
        match self.count_symbolic(&BigUint::from(n)) {
            Some(c) => c.to_u64().expect("count is at most n"),
            None => self.brute_count(n),
        }
    }

    /// Direct enumeration; the reference oracle for every other counting path.
    pub fn brute_count(&self, n: u64) -> u64 {
        (1..=n).filter(|&k| self.contains(k)).count() as u64
    }

    /// Members in `[1, n]` by direct enumeration.
    pub fn members_to(&self, n: u64) -> Vec<u64> {
        (1..=n).filter(|&k| self.contains(k)).collect()
    }

    fn closed_form(&self, n: u64) -> Option<u64> {
        Some(match self {
            IndexSet::Empty => 0,
            IndexSet::All => n,
            IndexSet::Finite(v) => v.partition_point(|&x| x <= n) as u64,
            IndexSet::Ap { residue, modulus } => {
                let first = if *residue == 0 { *modulus } else { *residue };
                if first > n {
                    0
                } else {
                    (n - first) / modulus + 1
                }
            }
            IndexSet::ScaledOdd(k) => {
                if *k >= 64 {
                    0
                } else {
                    let m = n >> k;
                    m.div_ceil(2)
                }
            }
            IndexSet::Squares => crate::arith::isqrt(n),
            IndexSet::PowerMultiples { base, exponent } => match base.checked_pow(*exponent) {
                Some(d) => n / d,
                None => 0,
            },
            IndexSet::Powers(b) => {
                let mut c = 0;
                let mut p: u64 = 1;
                while p <= n {
                    c += 1;
                    match p.checked_mul(*b) {
                        Some(v) => p = v,
                        None => break,
                    }
                }
                c
            }
            IndexSet::Diff(a, b) => match (a.as_ref(), b.as_ref()) {
                (IndexSet::ScaledOdd(k), IndexSet::Squares) => {
                    IndexSet::ScaledOdd(*k).closed_form(n)? - squares_with_valuation(*k, n)
                }
                _ => return None,
            },
            IndexSet::Tail { inner, cutoff } => {
                let c = cutoff.to_u64().unwrap_or(u64::MAX);
                if n <= c {
                    0
                } else {
                    inner.count_to(n) - inner.count_to(c)
                }
            }
            IndexSet::Window { inner, lo, hi } => {
                let lo = lo.to_u64().unwrap_or(u64::MAX);
                let top = hi.to_u64().unwrap_or(u64::MAX).min(n);
                if top <= lo {
                    0
                } else {
                    inner.count_to(top) - inner.count_to(lo)
                }
            }
            _ => return None,
        })
    }

    fn count_symbolic(&self, n: &BigUint) -> Option<BigUint> {
        let plan = Plan::compile(self);
        plan.count(n)
    }

    /// The `m`-th smallest element (`m ≥ 1`).
    pub fn rank_enum(&self, m: u64) -> Result<BigUint, NSetError> {
        if m == 0 {
            return Err(NSetError::ZeroRank);
        }
        if self.is_finite() == Some(true) {
            // finite sets: check the total before searching
            if let Some(bound) = self.finite_bound() {
                if self.count(&bound)? < BigUint::from(m) {
                    return Err(NSetError::RankOutOfRange { rank: m });
                }
            }
        }
        let target = BigUint::from(m);
        let mut hi = BigUint::one();
        let mut bits = 0u64;
        while self.count(&hi)? < target {
            hi <<= 1;
            bits += 1;
            if bits > RANK_SEARCH_BITS {
                return Err(NSetError::RankOutOfRange { rank: m });
            }
        }
        let mut lo = &hi >> 1usize; // count(lo) < target (or lo = 0)
        while &lo + 1u32 < hi {
            let mid: BigUint = (&lo + &hi) >> 1usize;
            if self.count(&mid)? >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `rank_enum` for ranks whose value fits in 64 bits.
    pub fn nth(&self, m: u64) -> Result<u64, NSetError> {
        self.rank_enum(m)?.to_u64().ok_or(NSetError::RankOutOfRange { rank: m })
    }

    /// An upper bound on the elements of a set known to be finite by structure.
    fn finite_bound(&self) -> Option<BigUint> {
        match self {
            IndexSet::Empty => Some(BigUint::zero()),
            IndexSet::Finite(v) => Some(BigUint::from(v.last().copied().unwrap_or(0))),
            IndexSet::Window { hi, .. } => Some(hi.clone()),
            IndexSet::Union(cs) => cs.iter().map(|c| c.finite_bound()).try_fold(BigUint::zero(), |acc, b| {
                b.map(|b| if b > acc { b } else { acc })
            }),
            IndexSet::Intersect(cs) => cs.iter().filter_map(|c| c.finite_bound()).min(),
            IndexSet::Diff(a, _) | IndexSet::Tail { inner: a, .. } | IndexSet::FactorialFilter { inner: a, .. } => {
                a.finite_bound()
            }
            _ => None,
        }
    }

    /// Exact finiteness where decidable (`None` when undecided).
    pub fn is_finite(&self) -> Option<bool> {
        if self.finite_bound().is_some() {
            return Some(true);
        }
        Plan::compile(self).is_finite()
    }

    /// Exact upper asymptotic density d*(S), including factorial filters.
    pub fn upper_density_exact(&self) -> Option<Q> {
        if self.finite_bound().is_some() {
            return Some(Q::zero());
        }
        Plan::compile(self).densities().map(|(upper, _)| upper)
    }

    /// Exact asymptotic density; `None` if it does not exist or is undecided.
    pub fn density(&self) -> Option<Q> {
        if self.finite_bound().is_some() {
            return Some(Q::zero());
        }
        Plan::compile(self).densities().and_then(|(_, d)| d)
    }

    /// Whether `Σ_{n ∈ S} 1/n` converges.
    pub fn harmonic_converges(&self) -> Option<bool> {
        // Everything except residue patterns (squares, powers, finite lists)
        // has a convergent reciprocal sum; a positive-density pattern on
        // infinitely many factorial blocks diverges.
        if self.finite_bound().is_some() {
            return Some(true);
        }
        Plan::compile(self).positive_pattern_infinitely_often().map(|p| !p)
    }

    /// For the dyadic columns `P_m = ScaledOdd(m − 1)`: whether `S ∩ P_m` is
    /// infinite for infinitely many `m`.
    pub fn infinitely_many_infinite_dyadic_columns(&self) -> Option<bool> {
        if self.finite_bound().is_some() {
            return Some(false);
        }
        Plan::compile(self).dyadic_columns()
    }
}

/// Number of squares `≤ n` whose 2-adic valuation is exactly `k`.
///
/// Zero for odd `k`; for even `k` these are `(2^{k/2} o)²` with `o` odd.
pub fn squares_with_valuation(k: u32, n: u64) -> u64 {
    if k % 2 == 1 {
        return 0;
    }
    let half = k / 2;
    if half >= 32 {
        return 0;
    }
    let r = crate::arith::isqrt(n) >> half; // o ≤ √n / 2^{k/2}
    r.div_ceil(2)
}

/// Factorial block index of a big integer.
pub fn factorial_block_big(n: &BigUint) -> u32 {
    let mut j: u32 = 1;
    let mut next = BigUint::from(2u32);
    while &next <= n {
        j += 1;
        next *= BigUint::from(j + 1);
    }
    j
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSet::Empty => f.write_str("empty"),
            IndexSet::All => f.write_str("all"),
            IndexSet::Finite(v) => {
                if v.len() <= 8 {
                    write!(f, "finite{v:?}")
                } else {
                    write!(f, "finite[{} elements]", v.len())
                }
            }
            IndexSet::Ap { residue, modulus } => write!(f, "ap({residue} mod {modulus})"),
            IndexSet::ScaledOdd(k) => write!(f, "scaledOdd({k})"),
            IndexSet::Squares => f.write_str("squares"),
            IndexSet::PowerMultiples { base, exponent } => write!(f, "multiples({base}^{exponent})"),
            IndexSet::Powers(b) => write!(f, "powers({b})"),
            IndexSet::Window { inner, lo, hi } => write!(f, "window({inner}, ({lo}, {hi}])"),
            IndexSet::FactorialFilter { inner, selector } => {
                write!(f, "factorialFilter({inner}, {selector})")
            }
            IndexSet::Union(cs) => write_list(f, "union", cs),
            IndexSet::Intersect(cs) => write_list(f, "intersect", cs),
            IndexSet::Diff(a, b) => write!(f, "diff({a}, {b})"),
            IndexSet::Tail { inner, cutoff } => write!(f, "tail({inner}, {cutoff})"),
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, name: &str, cs: &[IndexSet]) -> fmt::Result {
    let inner: Vec<String> = cs.iter().map(|c| format!("{c}")).collect();
    write!(f, "{name}({})", inner.join(", "))
}

// ---------------------------------------------------------------------------
// compiled plans

#[derive(Debug, Clone)]
enum Node {
    Const(bool),
    Periodic { modulus: u64, class: u64 },
    Square,
    Sparse,
    Range { id: usize, inner: usize },
    Union(Vec<usize>),
    Intersect(Vec<usize>),
    Diff(usize, usize),
}

#[derive(Debug, Clone)]
enum RangeSpec<'s> {
    Window { lo: &'s BigUint, hi: &'s BigUint },
    Tail { cutoff: &'s BigUint },
    Factorial { selector: &'s IndexSet },
}

impl RangeSpec<'_> {
    fn flag_at(&self, n: &BigUint) -> bool {
        match self {
            RangeSpec::Window { lo, hi } => *lo < n && n <= *hi,
            RangeSpec::Tail { cutoff } => n > *cutoff,
            RangeSpec::Factorial { selector } => selector.contains(u64::from(factorial_block_big(n))),
        }
    }

    /// The value the flag takes for all sufficiently large `n` (factorial
    /// filters have none).
    fn eventual(&self) -> Option<bool> {
        match self {
            RangeSpec::Window { .. } => Some(false),
            RangeSpec::Tail { .. } => Some(true),
            RangeSpec::Factorial { .. } => None,
        }
    }
}

struct Plan<'s> {
    root_set: &'s IndexSet,
    nodes: Vec<Node>,
    root: usize,
    ranges: Vec<RangeSpec<'s>>,
    sparse: Vec<&'s IndexSet>,
    /// Common period of the periodic atoms; `None` if above [`PATTERN_CAP`].
    period: Option<u64>,
}

/// Prefix sums of the residue patterns for one assignment of range flags.
struct Patterns {
    modulus: u64,
    /// non-squares: `P0(r)` for residues
    pre0: Vec<u32>,
    tot0: u64,
    /// `P0(s² mod L)` by `s mod L`
    pre_sq0: Vec<u32>,
    tot_sq0: u64,
    /// `P1(s² mod L)` by `s mod L`
    pre_sq1: Vec<u32>,
    tot_sq1: u64,
}

impl Patterns {
    fn count(pre: &[u32], tot: u64, modulus: u64, x: &BigUint) -> BigUint {
        let m = BigUint::from(modulus);
        let (quo, rem) = x.div_rem(&m);
        let rem = rem.to_u64().expect("remainder below modulus") as usize;
        quo * BigUint::from(tot) + BigUint::from(pre[rem])
    }

    /// Pattern part of the count over `[1, x]`.
    fn count_to(&self, x: &BigUint) -> BigInt {
        let j = isqrt_big(x);
        let all0 = Self::count(&self.pre0, self.tot0, self.modulus, x);
        let sq0 = Self::count(&self.pre_sq0, self.tot_sq0, self.modulus, &j);
        let sq1 = Self::count(&self.pre_sq1, self.tot_sq1, self.modulus, &j);
        BigInt::from(all0) - BigInt::from(sq0) + BigInt::from(sq1)
    }
}

fn prefix_sums(modulus: u64, pred: impl Fn(u64) -> bool) -> (Vec<u32>, u64) {
    let mut pre = Vec::with_capacity(modulus as usize);
    pre.push(0u32);
    let mut run = 0u32;
    for r in 1..modulus {
        if pred(r) {
            run += 1;
        }
        pre.push(run);
    }
    let tot = u64::from(run) + u64::from(pred(0));
    (pre, tot)
}

impl<'s> Plan<'s> {
    fn compile(set: &'s IndexSet) -> Plan<'s> {
        let mut plan = Plan {
            root_set: set,
            nodes: Vec::new(),
            root: 0,
            ranges: Vec::new(),
            sparse: Vec::new(),
            period: Some(1),
        };
        plan.root = plan.add(set);
        plan
    }

    fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn periodic(&mut self, modulus: Option<u64>, class: u64) -> usize {
        match (modulus, self.period) {
            (Some(m), Some(p)) => {
                let l = p.lcm(&m);
                self.period = (l <= PATTERN_CAP).then_some(l);
            }
            _ => self.period = None,
        }
        self.push(Node::Periodic { modulus: modulus.unwrap_or(1), class })
    }

    fn add(&mut self, set: &'s IndexSet) -> usize {
        match set {
            IndexSet::Empty => self.push(Node::Const(false)),
            IndexSet::All => self.push(Node::Const(true)),
            IndexSet::Finite(_) | IndexSet::Powers(_) => {
                self.sparse.push(set);
                self.push(Node::Sparse)
            }
            IndexSet::Squares => self.push(Node::Square),
            IndexSet::Ap { residue, modulus } => self.periodic(Some(*modulus), *residue),
            IndexSet::ScaledOdd(k) => {
                let m = 1u64.checked_shl(k + 1).filter(|_| *k < 63);
                self.periodic(m, 1u64 << (*k).min(62))
            }
            IndexSet::PowerMultiples { base, exponent } => self.periodic(base.checked_pow(*exponent), 0),
            IndexSet::Window { inner, lo, hi } => {
                let i = self.add(inner);
                self.ranges.push(RangeSpec::Window { lo, hi });
                let id = self.ranges.len() - 1;
                self.push(Node::Range { id, inner: i })
            }
            IndexSet::Tail { inner, cutoff } => {
                let i = self.add(inner);
                self.ranges.push(RangeSpec::Tail { cutoff });
                let id = self.ranges.len() - 1;
                self.push(Node::Range { id, inner: i })
            }
            IndexSet::FactorialFilter { inner, selector } => {
                let i = self.add(inner);
                self.ranges.push(RangeSpec::Factorial { selector });
                let id = self.ranges.len() - 1;
                self.push(Node::Range { id, inner: i })
            }
            IndexSet::Union(cs) => {
                let ids = cs.iter().map(|c| self.add(c)).collect();
                self.push(Node::Union(ids))
            }
            IndexSet::Intersect(cs) => {
                let ids = cs.iter().map(|c| self.add(c)).collect();
                self.push(Node::Intersect(ids))
            }
            IndexSet::Diff(a, b) => {
                let a = self.add(a);
                let b = self.add(b);
                self.push(Node::Diff(a, b))
            }
        }
    }

    /// Abstract evaluation: sparse atoms read as false.
    fn eval(&self, node: usize, residue: u64, square: bool, env: &[bool]) -> bool {
        match &self.nodes[node] {
            Node::Const(b) => *b,
            Node::Periodic { modulus, class } => residue % modulus == *class,
            Node::Square => square,
            Node::Sparse => false,
            Node::Range { id, inner } => env[*id] && self.eval(*inner, residue, square, env),
            Node::Union(cs) => cs.iter().any(|&c| self.eval(c, residue, square, env)),
            Node::Intersect(cs) => cs.iter().all(|&c| self.eval(c, residue, square, env)),
            Node::Diff(a, b) => self.eval(*a, residue, square, env) && !self.eval(*b, residue, square, env),
        }
    }

    fn patterns(&self, env: &[bool]) -> Patterns {
        let l = self.period.expect("patterns need a period");
        let root = self.root;
        let (pre0, tot0) = prefix_sums(l, |r| self.eval(root, r, false, env));
        let sq = |s: u64| ((u128::from(s) * u128::from(s)) % u128::from(l)) as u64;
        let (pre_sq0, tot_sq0) = prefix_sums(l, |s| self.eval(root, sq(s), false, env));
        let (pre_sq1, tot_sq1) = prefix_sums(l, |s| self.eval(root, sq(s), true, env));
        Patterns { modulus: l, pre0, tot0, pre_sq0, tot_sq0, pre_sq1, tot_sq1 }
    }

    fn breakpoints(&self, n: &BigUint) -> BTreeSet<BigUint> {
        let mut bps = BTreeSet::new();
        for r in &self.ranges {
            match r {
                RangeSpec::Window { lo, hi } => {
                    bps.insert((*lo).clone());
                    bps.insert((*hi).clone());
                }
                RangeSpec::Tail { cutoff } => {
                    bps.insert((*cutoff).clone());
                }
                RangeSpec::Factorial { .. } => {
                    let mut j = 2u32;
                    loop {
                        let b = factorial(j) - 1u32;
                        if &b >= n {
                            break;
                        }
                        bps.insert(b);
                        j += 1;
                    }
                }
            }
        }
        bps.retain(|b| !b.is_zero() && b < n);
        bps
    }

    fn explicit_elements(&self, n: &BigUint) -> BTreeSet<BigUint> {
        let mut out = BTreeSet::new();
        for s in &self.sparse {
            match s {
                IndexSet::Finite(v) => {
                    for &e in v {
                        let e = BigUint::from(e);
                        if &e <= n {
                            out.insert(e);
                        }
                    }
                }
                IndexSet::Powers(b) => {
                    let b = BigUint::from(*b);
                    let mut p = BigUint::one();
                    while &p <= n {
                        out.insert(p.clone());
                        p *= &b;
                    }
                }
                _ => unreachable!("only finite lists and powers are sparse"),
            }
        }
        out
    }

    fn count(&self, n: &BigUint) -> Option<BigUint> {
        let l = self.period?;
        let explicit = self.explicit_elements(n);
        let mut cache: BTreeMap<Vec<bool>, Patterns> = BTreeMap::new();
        let mut total = BigInt::zero();
        let mut lo = BigUint::zero();
        let mut ends: Vec<BigUint> = self.breakpoints(n).into_iter().collect();
        ends.push(n.clone());
        for hi in ends {
            let rep = &lo + 1u32;
            let env: Vec<bool> = self.ranges.iter().map(|r| r.flag_at(&rep)).collect();
            let pats = cache.entry(env.clone()).or_insert_with(|| self.patterns(&env));
            total += pats.count_to(&hi) - pats.count_to(&lo);
            for e in explicit.range((core::ops::Bound::Excluded(&lo), core::ops::Bound::Included(&hi))) {
                let residue = (e % l).to_u64().expect("below period");
                let sq = {
                    let r = isqrt_big(e);
                    &(&r * &r) == e
                };
                let abstract_member = self.eval(self.root, residue, sq, &env);
                let member = self.root_set.contains_big(e);
                match (member, abstract_member) {
                    (true, false) => total += 1,
                    (false, true) => total -= 1,
                    _ => {}
                }
            }
            lo = hi;
        }
        total.to_biguint()
    }

    fn factorial_ids(&self) -> Vec<usize> {
        self.ranges
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, RangeSpec::Factorial { .. }))
            .map(|(i, _)| i)
            .collect()
    }

    /// For every assignment of factorial flags: the eventual environment and
    /// whether infinitely many blocks realise it (`None` if undecided).
    fn eventual_envs(&self) -> Option<Vec<(Vec<bool>, Option<bool>)>> {
        let fids = self.factorial_ids();
        if fids.len() > MAX_FACTORIAL_FILTERS {
            return None;
        }
        let mut out = Vec::new();
        for mask in 0u32..(1u32 << fids.len()) {
            let mut env: Vec<bool> = self.ranges.iter().map(|r| r.eventual().unwrap_or(false)).collect();
            let mut parts = Vec::new();
            for (bit, &id) in fids.iter().enumerate() {
                let on = mask >> bit & 1 == 1;
                env[id] = on;
                let RangeSpec::Factorial { selector } = &self.ranges[id] else { unreachable!() };
                let sel = (*selector).clone();
                parts.push(if on { sel } else { sel.complement() });
            }
            let infinitely_often = if parts.is_empty() {
                Some(true)
            } else {
                IndexSet::Intersect(parts).is_finite().map(|f| !f)
            };
            out.push((env, infinitely_often));
        }
        Some(out)
    }

    fn is_finite(&self) -> Option<bool> {
        self.period?;
        let envs = self.eventual_envs()?;
        let mut undecided = false;
        let mut any_sparse_unresolved = false;
        for (env, often) in &envs {
            if *often == Some(false) {
                continue;
            }
            let pats = self.patterns(env);
            if pats.tot0 > 0 || pats.tot_sq1 > 0 {
                match often {
                    Some(true) => return Some(false),
                    _ => undecided = true,
                }
            } else if self.sparse.iter().any(|s| matches!(s, IndexSet::Powers(_))) {
                any_sparse_unresolved = true;
            }
        }
        if undecided {
            return None;
        }
        if any_sparse_unresolved {
            return self.powers_tail_finite();
        }
        Some(true)
    }

    /// Residue patterns are empty eventually; decide whether infinitely many
    /// powers remain by scanning a window of exponents past every breakpoint.
    fn powers_tail_finite(&self) -> Option<bool> {
        if !self.factorial_ids().is_empty() {
            return None;
        }
        let l = self.period?;
        if l > 64 {
            return None;
        }
        let mut horizon = BigUint::one();
        for r in &self.ranges {
            let b = match r {
                RangeSpec::Window { hi, .. } => (*hi).clone(),
                RangeSpec::Tail { cutoff } => (*cutoff).clone(),
                RangeSpec::Factorial { .. } => unreachable!(),
            };
            if b > horizon {
                horizon = b;
            }
        }
        for s in &self.sparse {
            if let IndexSet::Finite(v) = s {
                let top = BigUint::from(v.last().copied().unwrap_or(0));
                if top > horizon {
                    horizon = top;
                }
            }
        }
        // exponents j with b^j beyond the horizon; membership of b^j in the
        // residue pattern and among squares/other powers is eventually
        // periodic in j with period dividing 2·L·(small); 512 exponents cover it
        for s in &self.sparse {
            let IndexSet::Powers(b) = s else { continue };
            let b = BigUint::from(*b);
            let mut p = BigUint::one();
            while p <= horizon {
                p *= &b;
            }
            for _ in 0..512 {
                if self.root_set.contains_big(&p) {
                    return Some(false);
                }
                p *= &b;
            }
        }
        Some(true)
    }

    /// `(upper density, asymptotic density if it exists)`.
    fn densities(&self) -> Option<(Q, Option<Q>)> {
        let l = self.period?;
        let envs = self.eventual_envs()?;
        let mut vals: Vec<u64> = Vec::new();
        for (env, often) in &envs {
            match often {
                Some(true) => vals.push(self.patterns(env).tot0),
                Some(false) => {}
                None => return None,
            }
        }
        let max = vals.iter().copied().max().unwrap_or(0);
        let min = vals.iter().copied().min().unwrap_or(0);
        let to_q = |v: u64| Q::new(BigInt::from(v), BigInt::from(l));
        let d = (max == min).then(|| to_q(max));
        Some((to_q(max), d))
    }

    fn positive_pattern_infinitely_often(&self) -> Option<bool> {
        let envs = self.eventual_envs()?;
        self.period?;
        let mut undecided = false;
        for (env, often) in &envs {
            if *often == Some(false) {
                continue;
            }
            if self.patterns(env).tot0 > 0 {
                match often {
                    Some(true) => return Some(true),
                    _ => undecided = true,
                }
            }
        }
        if undecided {
            None
        } else {
            Some(false)
        }
    }

    fn dyadic_columns(&self) -> Option<bool> {
        let l = self.period?;
        if !self.factorial_ids().is_empty() {
            return None;
        }
        let env: Vec<bool> = self.ranges.iter().map(|r| r.eventual().unwrap_or(false)).collect();
        let a = l.trailing_zeros();
        let odd = l >> a;
        let mut ord = 1u64;
        let mut acc = 2 % odd.max(1);
        if odd > 1 {
            while acc != 1 {
                acc = acc * 2 % odd;
                ord += 1;
            }
        }
        let lm = u128::from(l);
        for t in u64::from(a)..u64::from(a) + 2 * ord {
            let c = pow_mod(2, t, l);
            for o in (1..2 * l.max(1)).step_by(2) {
                let r = ((u128::from(c) * u128::from(o)) % lm) as u64;
                if self.eval(self.root, r, false, &env) {
                    return Some(true);
                }
                if t % 2 == 0 {
                    let r2 = ((u128::from(c) * u128::from(o) % lm * u128::from(o)) % lm) as u64;
                    if self.eval(self.root, r2, true, &env) {
                        return Some(true);
                    }
                }
            }
        }
        Some(false)
    }
}

fn pow_mod(base: u64, exp: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let m = u128::from(modulus);
    let mut result: u128 = 1;
    let mut b = u128::from(base) % m;
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            result = result * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    result as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;

    fn a_k(k: u32) -> IndexSet {
        IndexSet::diff(IndexSet::ScaledOdd(k), IndexSet::Squares)
    }

    fn b_set() -> IndexSet {
        IndexSet::diff(IndexSet::diff(IndexSet::All, IndexSet::evens()), IndexSet::Squares)
    }

    #[test]
    fn membership_examples() {
        assert!(IndexSet::Squares.contains(49));
        assert!(!IndexSet::ScaledOdd(1).contains(4));
        assert!(!a_k(2).contains(36));
        assert!(a_k(2).contains(12));
        assert!(IndexSet::powers(2).unwrap().contains(1));
        assert!(IndexSet::powers(3).unwrap().contains(81));
        assert!(!IndexSet::powers(3).unwrap().contains(6));
    }

    #[test]
    fn count_examples() {
        assert_eq!(IndexSet::Squares.count_to(100), 10);
        assert_eq!(IndexSet::ScaledOdd(2).count_to(40), 5);
        assert_eq!(a_k(2).count_to(40), 3);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(IndexSet::Squares.nth(3).unwrap(), 9);
        assert_eq!(b_set().nth(1).unwrap(), 3);
        assert_eq!(b_set().nth(2).unwrap(), 5);
        assert_eq!(IndexSet::ap(0, 3).unwrap().nth(4).unwrap(), 12);
        let f = IndexSet::finite(alloc::vec![3, 9, 4]).unwrap();
        assert_eq!(f.nth(2).unwrap(), 4);
        assert_eq!(f.nth(4), Err(NSetError::RankOutOfRange { rank: 4 }));
        assert_eq!(IndexSet::Empty.nth(1), Err(NSetError::RankOutOfRange { rank: 1 }));
    }

    #[test]
    fn density_examples() {
        assert_eq!(IndexSet::evens().upper_density_exact(), Some(q(1, 2)));
        for k in 1..8 {
            assert_eq!(a_k(k).upper_density_exact(), Some(q(1, 1i64 << (k + 1))));
        }
        assert_eq!(IndexSet::Squares.upper_density_exact(), Some(q(0, 1)));
        assert_eq!(b_set().density(), Some(q(1, 2)));
    }

    #[test]
    fn factorial_filter_has_upper_density_but_no_density() {
        let s = IndexSet::factorial_filter(a_k(2), a_k(3));
        assert_eq!(s.upper_density_exact(), Some(q(1, 8)));
        assert_eq!(s.density(), None);
        let full = IndexSet::factorial_filter(a_k(2), IndexSet::All);
        assert_eq!(full.density(), Some(q(1, 8)));
    }

    #[test]
    fn finiteness() {
        assert_eq!(IndexSet::window(IndexSet::All, 3, 9).is_finite(), Some(true));
        assert_eq!(IndexSet::Squares.is_finite(), Some(false));
        assert_eq!(IndexSet::powers(2).unwrap().is_finite(), Some(false));
        let none = IndexSet::Intersect(alloc::vec![IndexSet::odds(), IndexSet::ScaledOdd(1)]);
        assert_eq!(none.is_finite(), Some(true));
        let pow_evens = IndexSet::Intersect(alloc::vec![IndexSet::powers(2).unwrap(), IndexSet::evens()]);
        assert_eq!(pow_evens.is_finite(), Some(false));
        let pow_odd = IndexSet::Intersect(alloc::vec![IndexSet::powers(2).unwrap(), IndexSet::odds()]);
        assert_eq!(pow_odd.is_finite(), Some(true));
        assert_eq!(IndexSet::factorial_filter(a_k(1), a_k(4)).is_finite(), Some(false));
    }

    #[test]
    fn squares_by_valuation() {
        for k in 0..8 {
            for n in [1u64, 10, 100, 1000, 4097] {
                let brute = (1..=crate::arith::isqrt(n)).filter(|j| (j * j).trailing_zeros() == k).count() as u64;
                assert_eq!(squares_with_valuation(k, n), brute, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn factorial_scale_counts() {
        let s = IndexSet::factorial_filter(a_k(1), a_k(2));
        let n20 = factorial(20);
        let c = s.count(&n20).unwrap();
        assert!(c > BigUint::zero());
        let n25 = factorial(25);
        assert!(a_k(1).count(&n25).is_ok());
    }

    #[test]
    fn big_counts_agree_with_closed_forms() {
        let n = BigUint::from(10u32).pow(30);
        let sq = IndexSet::Squares.count(&n).unwrap();
        assert_eq!(sq, BigUint::from(10u32).pow(15));
        let ev = IndexSet::evens().count(&n).unwrap();
        assert_eq!(ev, &n / 2u32);
    }

    #[test]
    fn dyadic_columns() {
        let p5 = IndexSet::ScaledOdd(4);
        assert_eq!(p5.infinitely_many_infinite_dyadic_columns(), Some(false));
        assert_eq!(IndexSet::evens().infinitely_many_infinite_dyadic_columns(), Some(true));
        assert_eq!(IndexSet::Squares.infinitely_many_infinite_dyadic_columns(), Some(true));
        assert_eq!(IndexSet::powers(2).unwrap().infinitely_many_infinite_dyadic_columns(), Some(false));
    }
}
