//! Lower semicontinuous submeasures on ℕ and their star norms
//! `‖A‖_φ = lim_n φ(A ∖ [1, n])`.

use alloc::vec::Vec;
use core::fmt;

use num_traits::Zero;

use crate::arith::{ceil_sqrt, q_from_f64, q_u64, ExtQ, Q};
use crate::nset::IndexSet;

/// Default prefix for star-norm estimates of symbolic sets.
pub const DEFAULT_SYMBOLIC_PREFIX: u64 = 1_000_000;
/// Default prefix for star-norm estimates of enumerated sequences.
pub const DEFAULT_SEQUENCE_PREFIX: u64 = 100_000;

/// Scale of the fixed-point mass bounds.
const FIXED_ONE: u128 = 1 << 64;

/// Positive weights with divergent total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weights {
    /// `w(n) = 1/n`.
    Harmonic,
}

impl Weights {
    pub fn weight(self, n: u64) -> Q {
        match self {
            Weights::Harmonic => q_u64(1, n),
        }
    }

    /// `⌊2^64 · w(n)⌋`.
    pub fn weight_fixed_floor(self, n: u64) -> u128 {
        match self {
            Weights::Harmonic => FIXED_ONE / u128::from(n),
        }
    }

    pub fn weight_f64(self, n: u64) -> f64 {
        match self {
            Weights::Harmonic => 1.0 / n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Submeasure {
    /// `φ(A) = sup_n |A ∩ [1, n]| / n`.
    Density,
    /// `φ(A) = Σ_{n ∈ A} w(n)`.
    Summable(Weights),
    /// `φ(A) = |A|`.
    Counting,
}

impl Submeasure {
    pub const HARMONIC: Submeasure = Submeasure::Summable(Weights::Harmonic);

    /// `φ(ℕ)`.
    pub fn bounded_total(&self) -> ExtQ {
        match self {
            Submeasure::Density => ExtQ::Finite(q_u64(1, 1)),
            Submeasure::Summable(_) | Submeasure::Counting => ExtQ::Infinite,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !self.bounded_total().is_infinite()
    }

    /// `φ` of a sorted finite set of positive integers.
    pub fn of_sorted(&self, members: &[u64]) -> Q {
        match self {
            Submeasure::Density => members
                .iter()
                .enumerate()
                .map(|(i, &n)| q_u64(i as u64 + 1, n))
                .max()
                .unwrap_or_else(Q::zero),
            Submeasure::Summable(w) => members.iter().map(|&n| w.weight(n)).sum(),
            Submeasure::Counting => q_u64(members.len() as u64, 1),
        }
    }

    /// A rational lower bound for `φ` on a sorted finite set, exact except
    /// for summable weights, which are floored to multiples of `2^{-64}`.
    pub fn lower_bound_sorted(&self, members: &[u64]) -> Q {
        match self {
            Submeasure::Summable(w) => fixed_to_q(members.iter().map(|&n| w.weight_fixed_floor(n)).sum()),
            _ => self.of_sorted(members),
        }
    }

    /// Fast floating-point evaluation of `φ` on a sorted finite set.
    pub fn of_sorted_f64(&self, members: &[u64]) -> f64 {
        match self {
            Submeasure::Density => members
                .iter()
                .enumerate()
                .map(|(i, &n)| (i as f64 + 1.0) / n as f64)
                .fold(0.0, f64::max),
            Submeasure::Summable(w) => members.iter().map(|&n| w.weight_f64(n)).sum(),
            Submeasure::Counting => members.len() as f64,
        }
    }
}

impl fmt::Display for Submeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Submeasure::Density => f.write_str("density"),
            Submeasure::Summable(Weights::Harmonic) => f.write_str("summable-harmonic"),
            Submeasure::Counting => f.write_str("counting"),
        }
    }
}

/// `v / 2^64` as a rational.
pub fn fixed_to_q(v: u128) -> Q {
    Q::new(v.into(), FIXED_ONE.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMode {
    Exact,
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarNormEstimate {
    pub value: ExtQ,
    /// Prefix length used; 0 for exact values.
    pub at_prefix: u64,
    pub mode: EstimateMode,
}

impl StarNormEstimate {
    fn exact(value: ExtQ) -> Self {
        StarNormEstimate { value, at_prefix: 0, mode: EstimateMode::Exact }
    }

    pub fn is_exact(&self) -> bool {
        self.mode == EstimateMode::Exact
    }
}

/// `φ(s ∩ [1, n])` exactly.
pub fn phi_prefix(phi: &Submeasure, s: &IndexSet, n: u64) -> Q {
    match phi {
        Submeasure::Counting => q_u64(s.count_to(n), 1),
        _ => phi.of_sorted(&s.members_to(n)),
    }
}

/// `‖s‖_φ`, exact when decidable and otherwise estimated at
/// [`DEFAULT_SYMBOLIC_PREFIX`].
pub fn star_norm(phi: &Submeasure, s: &IndexSet) -> StarNormEstimate {
    star_norm_at(phi, s, DEFAULT_SYMBOLIC_PREFIX)
}

/// As [`star_norm`], with the estimation prefix given explicitly.
pub fn star_norm_at(phi: &Submeasure, s: &IndexSet, prefix: u64) -> StarNormEstimate {
    let exact = match phi {
        Submeasure::Density => s.upper_density_exact().map(ExtQ::Finite),
        Submeasure::Summable(Weights::Harmonic) => s
            .harmonic_converges()
            .map(|c| if c { ExtQ::zero() } else { ExtQ::Infinite }),
        Submeasure::Counting => s.is_finite().map(|f| if f { ExtQ::zero() } else { ExtQ::Infinite }),
    };
    if let Some(value) = exact {
        return StarNormEstimate::exact(value);
    }
    let members = s.members_to(prefix);
    StarNormEstimate {
        value: ExtQ::Finite(tail_estimate(phi, &members, prefix)),
        at_prefix: prefix,
        mode: EstimateMode::Estimated,
    }
}

/// Finite-prefix proxy for `‖·‖_φ` from the sorted members in `[1, n]`.
///
/// * Density: `max_{⌈√n⌉ ≤ m ≤ n} (count(m) − count(⌈√n⌉)) / m`.
/// * Summable: `Σ w(k)` over members in `(⌈√n⌉, n]`.
/// * Counting: number of members in `(⌈√n⌉, n]`.
pub fn tail_estimate(phi: &Submeasure, sorted: &[u64], n: u64) -> Q {
    let r = ceil_sqrt(n);
    let start = sorted.partition_point(|&x| x <= r);
    let tail: Vec<u64> = sorted[start..].iter().copied().take_while(|&x| x <= n).collect();
    match phi {
        Submeasure::Density => tail
            .iter()
            .enumerate()
            .map(|(i, &m)| q_u64(i as u64 + 1, m))
            .max()
            .unwrap_or_else(Q::zero),
        Submeasure::Summable(w) => q_from_f64(tail.iter().map(|&m| w.weight_f64(m)).sum()),
        Submeasure::Counting => q_u64(tail.len() as u64, 1),
    }
}

/// Whether `s` and `s ∖ [1, n]` have the same star norm: exactly when both
/// are exact, within `2/√prefix` when estimated at `prefix`.
pub fn finite_invariance_check(phi: &Submeasure, s: &IndexSet, n: u64, prefix: u64) -> bool {
    let a = star_norm_at(phi, s, prefix);
    let b = star_norm_at(phi, &IndexSet::tail(s.clone(), n), prefix);
    if a.is_exact() && b.is_exact() {
        return a.value == b.value;
    }
    match (&a.value, &b.value) {
        (ExtQ::Finite(x), ExtQ::Finite(y)) => {
            let slack = Q::new(2.into(), crate::arith::isqrt(prefix).max(1).into());
            crate::arith::abs_diff(x, y) <= slack
        }
        (x, y) => x == y,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{q, qi};

    fn a_k(k: u32) -> IndexSet {
        IndexSet::diff(IndexSet::ScaledOdd(k), IndexSet::Squares)
    }

    #[test]
    fn prefix_examples() {
        assert_eq!(phi_prefix(&Submeasure::Density, &IndexSet::evens(), 10), q(1, 2));
        assert_eq!(phi_prefix(&Submeasure::Counting, &IndexSet::Squares, 100), qi(10));
        assert_eq!(phi_prefix(&Submeasure::HARMONIC, &IndexSet::evens(), 8), q(25, 24));
    }

    #[test]
    fn exact_star_norms() {
        for k in 1..6 {
            let v = star_norm(&Submeasure::Density, &a_k(k));
            assert!(v.is_exact());
            assert_eq!(v.value, ExtQ::Finite(q(1, 1 << (k + 1))));
            let t = star_norm(&Submeasure::Density, &IndexSet::tail(a_k(k), 1000));
            assert_eq!(t.value, v.value);
        }
        let f = IndexSet::finite(alloc::vec![1, 5, 99]).unwrap();
        assert_eq!(star_norm(&Submeasure::Density, &f).value, ExtQ::zero());
        assert_eq!(star_norm(&Submeasure::HARMONIC, &IndexSet::evens()).value, ExtQ::Infinite);
        assert_eq!(star_norm(&Submeasure::HARMONIC, &IndexSet::Squares).value, ExtQ::zero());
        assert_eq!(star_norm(&Submeasure::Counting, &IndexSet::Squares).value, ExtQ::Infinite);
    }

    #[test]
    fn invariance_examples() {
        assert!(finite_invariance_check(&Submeasure::Density, &IndexSet::evens(), 100, 10_000));
        assert!(finite_invariance_check(&Submeasure::Density, &a_k(2), 10_000, 10_000));
        assert!(finite_invariance_check(&Submeasure::Counting, &IndexSet::Squares, 5, 10_000));
    }

    #[test]
    fn density_tail_estimate_of_evens() {
        let ev: Vec<u64> = (1..=10_000).filter(|n| n % 2 == 0).collect();
        let est = tail_estimate(&Submeasure::Density, &ev, 10_000);
        assert!(est <= q(1, 2) && est > q(49, 100));
    }
}
