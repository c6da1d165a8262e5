//! Four-corner tail dependence between pairs of series.
//!
//! A mixture of four rotated single-corner Archimedean copulas gives
//! independent control over the joint upper, joint lower and both
//! opposite-tail dependence coefficients. The crate covers the base copulas,
//! rotations and the mixture, rank-based pseudo-observations, maximum
//! likelihood fitting, empirical tail estimators and compositing, gridbox
//! aggregation of gridded daily data, and a year-block bootstrap.

pub mod bootstrap;
pub mod copula;
pub mod dual;
pub mod empirical;
pub mod error;
pub mod fit;
pub mod io;
pub mod marginal;
pub mod optimize;
pub mod rng;
pub mod rotation;
pub mod spatial;
pub mod special;

pub use bootstrap::{BootstrapSpec, IntervalMap, TailInterval};
pub use copula::{CopulaSpec, Corner, Family, TailMatrix, UnitPair};
pub use empirical::{CompositeResult, TailEstimate};
pub use error::{Error, Result};
pub use fit::{FitConfig, FitResult};
pub use marginal::{DailySeries, PseudoObservations, QuantileTable, TimeLabel};
pub use rotation::{RotatedComponent, RotatedMixture, Rotation, CORNER_ORDER};
pub use spatial::{DependenceMap, GridBoxSet, GriddedData, LandMask};
