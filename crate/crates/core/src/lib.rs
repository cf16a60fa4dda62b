//! Power and detection-probability calculations for combining genome-wide
//! association scans across several case-control studies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combine;
pub mod dp;
pub mod error;
pub mod genmodel;
pub mod power;
pub mod scalar;
pub mod statdist;

pub use error::{Error, Result};
pub use scalar::Real;

pub type StudyStat = combine::StudyStat<f64>;
pub type CombinedStat = combine::CombinedStat<f64>;
pub type DLResult = combine::DLResult<f64>;
pub type EffectModel = genmodel::EffectModel<f64>;
pub type GenotypeDist = genmodel::GenotypeDist<f64>;
pub type ChiSquareNoncentral = statdist::ChiSquareNoncentral<f64>;
pub type FNoncentral = statdist::FNoncentral<f64>;
pub type GaussHermiteRule = statdist::GaussHermiteRule<f64>;

pub use combine::Method;
pub use genmodel::{AlleleFrequencySource, StudyDesign};
pub use power::{PowerMethod, PowerReport, PowerScenario};
