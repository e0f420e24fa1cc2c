//! Ideals on ℕ and decidable membership of symbolic sets.

use core::fmt;

use num_traits::Zero;

use crate::measure::Submeasure;
use crate::nset::IndexSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdealError {
    #[error("analytic P-ideals need a bounded submeasure, got {0}")]
    UnboundedSubmeasure(Submeasure),
    #[error("F-sigma ideals need an unbounded submeasure, got {0}")]
    BoundedSubmeasure(Submeasure),
}

/// Column partition for the Fubini product `Fin × Fin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Columns {
    /// `P_m = {2^{m−1}(2j − 1) : j ≥ 1}`.
    Dyadic,
}

impl Columns {
    pub fn column(self, m: u32) -> IndexSet {
        match self {
            Columns::Dyadic => IndexSet::ScaledOdd(m.saturating_sub(1)),
        }
    }

    /// Index `m` of the column holding `n ≥ 1`.
    pub fn column_of(self, n: u64) -> u32 {
        match self {
            Columns::Dyadic => n.trailing_zeros() + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdealSpec {
    Fin,
    /// `{A : ‖A‖_φ = 0}` for bounded `φ`.
    AnalyticP(Submeasure),
    /// `{A : φ(A) < ∞}` for unbounded `φ`.
    FSigma(Submeasure),
    FinTimesFin(Columns),
}

/// Membership outcome; undecided instances are reported, never guessed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Member,
    NotMember,
    Undecided,
}

impl From<Option<bool>> for Membership {
    fn from(v: Option<bool>) -> Self {
        match v {
            Some(true) => Membership::Member,
            Some(false) => Membership::NotMember,
            None => Membership::Undecided,
        }
    }
}

impl IdealSpec {
    /// The density-zero ideal.
    pub const DENSITY_ZERO: IdealSpec = IdealSpec::AnalyticP(Submeasure::Density);

    pub fn analytic_p(phi: Submeasure) -> Result<Self, IdealError> {
        if phi.is_bounded() {
            Ok(IdealSpec::AnalyticP(phi))
        } else {
            Err(IdealError::UnboundedSubmeasure(phi))
        }
    }

    pub fn fsigma(phi: Submeasure) -> Result<Self, IdealError> {
        if phi.is_bounded() {
            Err(IdealError::BoundedSubmeasure(phi))
        } else {
            Ok(IdealSpec::FSigma(phi))
        }
    }

    /// The submeasure behind the ideal, if any.
    pub fn submeasure(&self) -> Option<Submeasure> {
        match self {
            IdealSpec::AnalyticP(p) | IdealSpec::FSigma(p) => Some(*p),
            IdealSpec::Fin => Some(Submeasure::Counting),
            IdealSpec::FinTimesFin(_) => None,
        }
    }

    pub fn is_member(&self, s: &IndexSet) -> Membership {
        let decision = match self {
            IdealSpec::Fin => s.is_finite(),
            IdealSpec::AnalyticP(Submeasure::Density) => s.upper_density_exact().map(|d| d.is_zero()),
            IdealSpec::AnalyticP(_) => None,
            IdealSpec::FSigma(Submeasure::Summable(_)) => s.harmonic_converges(),
            IdealSpec::FSigma(Submeasure::Counting) => s.is_finite(),
            IdealSpec::FSigma(Submeasure::Density) => None,
            IdealSpec::FinTimesFin(Columns::Dyadic) => {
                s.infinitely_many_infinite_dyadic_columns().map(|inf| !inf)
            }
        };
        decision.into()
    }
}

/// The dyadic column partition.
pub fn default_columns() -> Columns {
    Columns::Dyadic
}

impl fmt::Display for IdealSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdealSpec::Fin => f.write_str("Fin"),
            IdealSpec::AnalyticP(p) => write!(f, "analyticP({p})"),
            IdealSpec::FSigma(p) => write!(f, "fsigma({p})"),
            IdealSpec::FinTimesFin(Columns::Dyadic) => f.write_str("Fin x Fin (dyadic columns)"),
        }
    }
}
