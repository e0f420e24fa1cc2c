//! Exact machinery for ideal limit points and ideal cluster points of
//! rational sequences.
//!
//! The crate is `no_std` (it needs `alloc`). Everything is deterministic and
//! works on exact rationals; the only floating point lives in the summable
//! tail estimators of [`measure`] and [`probe`].
//!
//! * [`rset`]: closed subsets of the real line as finite unions of rational
//!   intervals.
//! * [`nset`]: symbolic subsets of the positive integers with exact counting.
//! * [`measure`]: lower semicontinuous submeasures and star norms.
//! * [`ideals`]: ideal descriptors and membership decisions.
//! * [`forge`]: sequence constructions with prescribed limit and cluster sets.
//! * [`probe`]: finite-prefix estimation of limit, cluster and ordinary spectra.
#![no_std]

extern crate alloc;

pub mod arith;
pub mod forge;
pub mod ideals;
pub mod measure;
pub mod nset;
pub mod probe;
pub mod rset;

pub use arith::{ExtQ, Q};
pub use forge::SeqGen;
pub use ideals::IdealSpec;
pub use measure::{StarNormEstimate, Submeasure};
pub use nset::IndexSet;
pub use rset::{Interval, RClosedSet, RFSigma};
