//! Closed subsets of ℝ as finite unions of closed rational intervals.
//!
//! [`RClosedSet`] is always kept in normal form: parts sorted, pairwise
//! disjoint and non-adjacent, so two sets are equal iff their part lists are.
//! Degenerate parts `[p, p]` are single points.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::arith::{Q, qi};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RSetError {
    #[error("interval [{}, {}] has lo > hi", .0.0, .0.1)]
    Inverted(Box<(Q, Q)>),
    #[error("dense enumeration of the empty set")]
    EmptyEnumeration,
    #[error("dense enumeration index must be positive")]
    ZeroIndex,
    #[error("reference set is not a non-empty regular closed set")]
    NotRegularClosed,
}

/// A closed interval `[lo, hi]` with `lo ≤ hi`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Interval {
    lo: Q,
    hi: Q,
}

impl Interval {
    pub fn new(lo: Q, hi: Q) -> Result<Self, RSetError> {
        if lo > hi {
            return Err(RSetError::Inverted(Box::new((lo, hi))));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(p: Q) -> Self {
        Interval { lo: p.clone(), hi: p }
    }

    pub fn lo(&self) -> &Q {
        &self.lo
    }

    pub fn hi(&self) -> &Q {
        &self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn length(&self) -> Q {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Q) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = if self.lo >= other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi <= other.hi { &self.hi } else { &other.hi };
        (lo <= hi).then(|| Interval { lo: lo.clone(), hi: hi.clone() })
    }

    /// `self ∖ (lo, hi)`: the open interval is removed, its endpoints kept.
    fn minus_open(&self, lo: &Q, hi: &Q) -> Vec<Interval> {
        if lo >= hi {
            return alloc::vec![self.clone()];
        }
        let mut out = Vec::with_capacity(2);
        if self.lo <= *lo {
            let right = if self.hi <= *lo { &self.hi } else { lo };
            out.push(Interval { lo: self.lo.clone(), hi: right.clone() });
        }
        if *hi <= self.hi {
            let left = if self.lo >= *hi { &self.lo } else { hi };
            out.push(Interval { lo: left.clone(), hi: self.hi.clone() });
        }
        out
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            write!(f, "{{{}}}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

/// A closed set given as a normalized finite union of closed intervals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RClosedSet {
    parts: Vec<Interval>,
}

/// Binary set operations understood by [`set_algebra`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetOp {
    Union,
    Intersect,
    /// `a ∖ b°` computed inside the given bounds; `b` is treated as open.
    DiffWithin(Interval),
}

impl RClosedSet {
    pub fn empty() -> Self {
        RClosedSet { parts: Vec::new() }
    }

    /// Normalizes an arbitrary list of intervals into the unique normal form.
    pub fn normalize(mut parts: Vec<Interval>) -> Self {
        parts.sort();
        let mut out: Vec<Interval> = Vec::with_capacity(parts.len());
        for p in parts {
            match out.last_mut() {
                Some(last) if p.lo <= last.hi => {
                    if p.hi > last.hi {
                        last.hi = p.hi;
                    }
                }
                _ => out.push(p),
            }
        }
        RClosedSet { parts: out }
    }

    pub fn interval(lo: Q, hi: Q) -> Result<Self, RSetError> {
        Ok(RClosedSet { parts: alloc::vec![Interval::new(lo, hi)?] })
    }

    pub fn point(p: Q) -> Self {
        RClosedSet { parts: alloc::vec![Interval::point(p)] }
    }

    /// Builds from `(lo, hi)` pairs, validating each interval.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Q, Q)>) -> Result<Self, RSetError> {
        let parts = pairs
            .into_iter()
            .map(|(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::normalize(parts))
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, x: &Q) -> bool {
        // parts are sorted: binary search on the first part with hi >= x
        let idx = self.parts.partition_point(|p| p.hi < *x);
        self.parts.get(idx).is_some_and(|p| p.contains(x))
    }

    pub fn union(&self, other: &RClosedSet) -> RClosedSet {
        let mut parts = self.parts.clone();
        parts.extend(other.parts.iter().cloned());
        Self::normalize(parts)
    }

    pub fn intersect(&self, other: &RClosedSet) -> RClosedSet {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.parts.len() && j < other.parts.len() {
            let (a, b) = (&self.parts[i], &other.parts[j]);
            if let Some(c) = a.intersect(b) {
                out.push(c);
            }
            if a.hi <= b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::normalize(out)
    }

    /// `self ∖ interior(other)`, intersected with `bounds`.
    pub fn diff_within(&self, other: &RClosedSet, bounds: &Interval) -> RClosedSet {
        let mut pieces: Vec<Interval> = self.parts.iter().filter_map(|p| p.intersect(bounds)).collect();
        for hole in &other.parts {
            pieces = pieces.iter().flat_map(|p| p.minus_open(&hole.lo, &hole.hi)).collect();
        }
        Self::normalize(pieces)
    }

    /// Removes the open interval `(lo, hi)`.
    pub fn remove_open(&self, lo: &Q, hi: &Q) -> RClosedSet {
        Self::normalize(self.parts.iter().flat_map(|p| p.minus_open(lo, hi)).collect())
    }

    /// The isolated points: exactly the degenerate parts of the normal form.
    pub fn isolated_points(&self) -> RClosedSet {
        RClosedSet { parts: self.parts.iter().filter(|p| p.is_point()).cloned().collect() }
    }

    /// The union of the non-degenerate parts.
    pub fn without_isolated(&self) -> RClosedSet {
        RClosedSet { parts: self.parts.iter().filter(|p| !p.is_point()).cloned().collect() }
    }

    /// Regular closed means equal to the closure of its interior. The empty
    /// set is rejected here since every caller needs a set of positive length.
    pub fn is_regular_closed(&self) -> bool {
        !self.parts.is_empty() && self.parts.iter().all(|p| !p.is_point())
    }

    /// Total length.
    pub fn length(&self) -> Q {
        self.parts.iter().fold(Q::zero(), |acc, p| acc + p.length())
    }

    pub fn is_subset_of(&self, other: &RClosedSet) -> bool {
        self.parts
            .iter()
            .all(|p| other.parts.iter().any(|o| o.lo <= p.lo && p.hi <= o.hi))
    }

    pub fn min(&self) -> Option<&Q> {
        self.parts.first().map(|p| &p.lo)
    }

    pub fn max(&self) -> Option<&Q> {
        self.parts.last().map(|p| &p.hi)
    }

    /// Distance from `x` to the set (`None` for the empty set).
    pub fn distance(&self, x: &Q) -> Option<Q> {
        self.parts
            .iter()
            .map(|p| {
                if x < &p.lo {
                    &p.lo - x
                } else if x > &p.hi {
                    x - &p.hi
                } else {
                    Q::zero()
                }
            })
            .min()
    }

    fn endpoints(&self) -> Vec<&Q> {
        let mut out = Vec::with_capacity(2 * self.parts.len());
        for p in &self.parts {
            out.push(&p.lo);
            if !p.is_point() {
                out.push(&p.hi);
            }
        }
        out
    }

    /// The `i`-th term (`i ≥ 1`) of a fixed enumeration of a dense subset.
    ///
    /// First every endpoint in increasing order, then dyadic subdivision
    /// points level by level: at level `d` each non-degenerate part `[p, q]`
    /// contributes `p + (2j−1)(q−p)/2^d` for `j = 1..2^{d−1}`. A set made of
    /// points only cycles through its points.
    pub fn dense_enum(&self, i: u64) -> Result<Q, RSetError> {
        if self.parts.is_empty() {
            return Err(RSetError::EmptyEnumeration);
        }
        if i == 0 {
            return Err(RSetError::ZeroIndex);
        }
        let ends = self.endpoints();
        let e = ends.len() as u64;
        if i <= e {
            return Ok(ends[(i - 1) as usize].clone());
        }
        let proper: Vec<&Interval> = self.parts.iter().filter(|p| !p.is_point()).collect();
        if proper.is_empty() {
            return Ok(ends[((i - 1) % e) as usize].clone());
        }
        let per_level = proper.len() as u128;
        let mut j = u128::from(i - e - 1);
        let mut d: u32 = 1;
        loop {
            let level_size = per_level << (d - 1);
            if j < level_size {
                break;
            }
            j -= level_size;
            d += 1;
        }
        let width = 1u128 << (d - 1);
        let part = proper[(j / width) as usize];
        let idx = j % width;
        let num = BigInt::from(2 * idx + 1);
        let frac = Q::new(num, BigInt::one() << d as usize);
        Ok(&part.lo + part.length() * frac)
    }
}

impl fmt::Display for RClosedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("∅");
        }
        for (k, p) in self.parts.iter().enumerate() {
            if k > 0 {
                f.write_str(" ∪ ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Free-function form of the three binary operations.
pub fn set_algebra(a: &RClosedSet, b: &RClosedSet, op: &SetOp) -> RClosedSet {
    match op {
        SetOp::Union => a.union(b),
        SetOp::Intersect => a.intersect(b),
        SetOp::DiffWithin(bounds) => a.diff_within(b, bounds),
    }
}

/// Normalized length of `V ∩ F` relative to `F`.
pub fn lebesgue_on(f: &RClosedSet, v: &RClosedSet) -> Result<Q, RSetError> {
    if !f.is_regular_closed() {
        return Err(RSetError::NotRegularClosed);
    }
    Ok(v.intersect(f).length() / f.length())
}

/// An F_σ set as a countable (here: finite) union of closed layers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RFSigma {
    layers: Vec<RClosedSet>,
}

impl RFSigma {
    /// Empty layers are dropped; the represented set is unchanged.
    pub fn new(layers: Vec<RClosedSet>) -> Self {
        RFSigma { layers: layers.into_iter().filter(|l| !l.is_empty()).collect() }
    }

    pub fn empty() -> Self {
        RFSigma { layers: Vec::new() }
    }

    pub fn layers(&self) -> &[RClosedSet] {
        &self.layers
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn contains(&self, x: &Q) -> bool {
        self.layers.iter().any(|l| l.contains(x))
    }

    /// Union of all layers (a closed set, since there are finitely many).
    pub fn union_all(&self) -> RClosedSet {
        self.layers.iter().fold(RClosedSet::empty(), |acc, l| acc.union(l))
    }

    /// Layer used for the `k`-th family (`k ≥ 1`): layers repeat cyclically.
    pub fn cyclic_layer(&self, k: u32) -> Option<&RClosedSet> {
        if self.layers.is_empty() {
            return None;
        }
        Some(&self.layers[(k as usize - 1) % self.layers.len()])
    }
}

/// `[0, 1]`.
pub fn unit_interval() -> Interval {
    Interval { lo: Q::zero(), hi: qi(1) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;

    fn iv(a: Q, b: Q) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn set(pairs: &[(Q, Q)]) -> RClosedSet {
        RClosedSet::from_pairs(pairs.iter().cloned()).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let s = RClosedSet::normalize(alloc::vec![iv(qi(0), qi(1)), iv(qi(1), qi(2))]);
        assert_eq!(s, set(&[(qi(0), qi(2))]));
        let s = RClosedSet::normalize(alloc::vec![iv(qi(2), qi(2)), iv(qi(0), qi(1))]);
        assert_eq!(s.parts().len(), 2);
        assert!(s.parts()[1].is_point());
        assert!(RClosedSet::normalize(alloc::vec![]).is_empty());
    }

    #[test]
    fn inverted_interval_rejected() {
        assert!(Interval::new(qi(1), qi(0)).is_err());
    }

    #[test]
    fn algebra_examples() {
        let unit = set(&[(qi(0), qi(1))]);
        let ball = set(&[(q(-1, 2), q(1, 2))]);
        let d = set_algebra(&unit, &ball, &SetOp::DiffWithin(unit_interval()));
        assert_eq!(d, set(&[(q(1, 2), qi(1))]));
        let i = set_algebra(&unit, &set(&[(q(1, 2), qi(2))]), &SetOp::Intersect);
        assert_eq!(i, set(&[(q(1, 2), qi(1))]));
        assert_eq!(set_algebra(&unit, &RClosedSet::empty(), &SetOp::Union), unit);
    }

    #[test]
    fn removing_a_point_interior_keeps_everything() {
        let unit = set(&[(qi(0), qi(1))]);
        assert_eq!(unit.remove_open(&q(1, 2), &q(1, 2)), unit);
    }

    #[test]
    fn isolated_and_regular() {
        let s = set(&[(qi(0), qi(1)), (qi(2), qi(2))]);
        assert_eq!(s.isolated_points(), RClosedSet::point(qi(2)));
        assert!(set(&[(qi(0), qi(1))]).isolated_points().is_empty());
        let pts = set(&[(qi(0), qi(0)), (qi(1), qi(1))]);
        assert_eq!(pts.isolated_points(), pts);
        assert!(set(&[(qi(0), qi(1)), (qi(2), qi(3))]).is_regular_closed());
        assert!(!s.is_regular_closed());
        assert!(!RClosedSet::empty().is_regular_closed());
    }

    #[test]
    fn dense_enum_examples() {
        let unit = set(&[(qi(0), qi(1))]);
        assert_eq!(unit.dense_enum(1).unwrap(), qi(0));
        assert_eq!(unit.dense_enum(2).unwrap(), qi(1));
        assert_eq!(unit.dense_enum(3).unwrap(), q(1, 2));
        assert_eq!(unit.dense_enum(4).unwrap(), q(1, 4));
        assert_eq!(unit.dense_enum(5).unwrap(), q(3, 4));
        assert_eq!(unit.dense_enum(6).unwrap(), q(1, 8));
        let five = RClosedSet::point(qi(5));
        for k in 1..20 {
            assert_eq!(five.dense_enum(k).unwrap(), qi(5));
        }
        assert_eq!(RClosedSet::empty().dense_enum(1), Err(RSetError::EmptyEnumeration));
    }

    #[test]
    fn dense_enum_breadth_first_across_parts() {
        // endpoints 0, 1, 2, 3, 5 then midpoints 1/2, 5/2, then 1/4, 3/4, 9/4, 11/4
        let s = set(&[(qi(0), qi(1)), (qi(2), qi(3)), (qi(5), qi(5))]);
        let got: Vec<Q> = (1..=11).map(|i| s.dense_enum(i).unwrap()).collect();
        let want = [qi(0), qi(1), qi(2), qi(3), qi(5), q(1, 2), q(5, 2), q(1, 4), q(3, 4), q(9, 4), q(11, 4)];
        assert_eq!(got, want);
    }

    #[test]
    fn lebesgue_examples() {
        let unit = set(&[(qi(0), qi(1))]);
        assert_eq!(lebesgue_on(&unit, &set(&[(qi(0), q(1, 2))])).unwrap(), q(1, 2));
        let f = set(&[(qi(0), q(1, 2)), (q(3, 4), qi(1))]);
        assert_eq!(lebesgue_on(&f, &set(&[(qi(0), q(1, 2))])).unwrap(), q(2, 3));
        assert_eq!(lebesgue_on(&unit, &RClosedSet::empty()).unwrap(), qi(0));
        assert!(lebesgue_on(&RClosedSet::point(qi(0)), &unit).is_err());
    }

    #[test]
    fn contains_and_distance() {
        let s = set(&[(qi(0), q(1, 4)), (q(3, 4), q(3, 4))]);
        assert!(s.contains(&q(1, 8)) && s.contains(&q(3, 4)) && !s.contains(&q(1, 2)));
        assert_eq!(s.distance(&q(1, 2)).unwrap(), q(1, 4));
    }
}
