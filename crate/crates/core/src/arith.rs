//! Shared numeric helpers: the rational type, integer roots, 2-adic
//! valuations and factorial blocks.

use core::cmp::Ordering;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Exact rational used everywhere in the crate.
pub type Q = BigRational;

/// `n/d` as an exact rational. Panics if `d == 0`.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// The integer `n` as a rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// `n/d` for unsigned counts.
pub fn q_u64(n: u64, d: u64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// `2^-k`.
pub fn pow2_inv(k: u32) -> Q {
    Q::new(BigInt::one(), BigInt::one() << k as usize)
}

/// Rational from a finite float (exact binary value). `NaN` and infinities map to zero.
pub fn q_from_f64(x: f64) -> Q {
    Q::from_float(x).unwrap_or_else(Q::zero)
}

/// Lossy conversion for reporting.
pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn abs_diff(a: &Q, b: &Q) -> Q {
    if a >= b {
        a - b
    } else {
        b - a
    }
}

/// `⌊√n⌋`.
pub fn isqrt(n: u64) -> u64 {
    n.sqrt()
}

pub fn isqrt_big(n: &BigUint) -> BigUint {
    n.sqrt()
}

/// `⌈√n⌉`.
pub fn ceil_sqrt(n: u64) -> u64 {
    let r = isqrt(n);
    if r * r == n {
        r
    } else {
        r + 1
    }
}

pub fn is_square(n: u64) -> bool {
    let r = isqrt(n);
    r * r == n
}

/// 2-adic valuation; `v2(0)` is reported as 64.
pub fn v2(n: u64) -> u32 {
    n.trailing_zeros()
}

/// `⌊log₂ n⌋` for `n ≥ 1`.
pub fn floor_log2(n: u64) -> u32 {
    63 - n.max(1).leading_zeros()
}

pub fn factorial(j: u32) -> BigUint {
    (1..=j).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// The factorial block index `j ≥ 1` with `j! ≤ n < (j+1)!`, for `n ≥ 1`.
///
/// Note `1! = 1` and `2! = 2`, so `n = 1` lies in block 1 and `n ∈ [2, 6)` in block 2.
pub fn factorial_block(n: u64) -> u32 {
    let mut j: u32 = 1;
    let mut next: u64 = 2; // (j+1)!
    while next <= n {
        j += 1;
        match next.checked_mul(u64::from(j) + 1) {
            Some(v) => next = v,
            None => return j,
        }
    }
    j
}

/// A value in `[0, ∞]`: finite rational or infinity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtQ {
    Finite(Q),
    Infinite,
}

impl ExtQ {
    pub fn zero() -> Self {
        ExtQ::Finite(Q::zero())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtQ::Finite(v) if v.is_zero())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtQ::Infinite)
    }

    pub fn finite(&self) -> Option<&Q> {
        match self {
            ExtQ::Finite(v) => Some(v),
            ExtQ::Infinite => None,
        }
    }
}

impl PartialOrd for ExtQ {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtQ {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtQ::Infinite, ExtQ::Infinite) => Ordering::Equal,
            (ExtQ::Infinite, _) => Ordering::Greater,
            (_, ExtQ::Infinite) => Ordering::Less,
            (ExtQ::Finite(a), ExtQ::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ExtQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtQ::Finite(v) => write!(f, "{v}"),
            ExtQ::Infinite => f.write_str("inf"),
        }
    }
}
