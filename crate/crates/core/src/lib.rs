//! Logistic regression whose log-odds carry a vine-copula correction.
//!
//! The model starts from the generative view of logistic regression:
//! class-conditional margins from natural exponential families give a linear
//! log-odds. Adding class-specific vine copulas over the continuous
//! covariates contributes the difference of the two log copula densities,
//! which introduces non-linear main effects and interactions. Parameters are
//! fitted by maximizing the conditional likelihood of the response, and the
//! copula terms are chosen by greedy forward selection.

pub mod copula;
pub mod data;
pub mod error;
pub mod estimation;
pub mod exec;
pub mod margins;
pub mod normal;
pub mod optim;
pub mod quadrature;
pub mod selection;
pub mod simbench;
pub mod vine;

pub use copula::{CopulaFamily, PairCopula};
pub use data::Dataset;
pub use error::{Error, Result};
pub use estimation::{FitReport, ModelParams};
pub use margins::{Margin, MarginKind, MarginSet};
pub use selection::{select_model, SelectConfig};
pub use vine::{Edge, EdgeKey, VineStructure};
