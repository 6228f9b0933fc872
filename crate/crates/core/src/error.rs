use thiserror::Error;

use crate::copula::CopulaFamily;
use crate::margins::MarginKind;
use crate::vine::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{family} copula parameter {theta} is outside its domain")]
    ParameterDomain { family: CopulaFamily, theta: f64 },

    #[error("cannot invert Kendall tau {tau} for the {family} family")]
    TauInversion { family: CopulaFamily, tau: f64 },

    #[error("column {column} is {kind:?}; only continuous columns have a copula margin")]
    ColumnKind { column: usize, kind: MarginKind },

    #[error("invalid margin: {0}")]
    InvalidMargin(String),

    #[error("coefficient to margin conversion failed: {0}")]
    Conversion(String),

    #[error("invalid vine structure: {0}")]
    Structure(Violation),

    #[error("no parent copula yields the pseudo-observation of {var} given {given:?}")]
    Hierarchy { var: usize, given: Vec<usize> },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("model selection stopped after {} trace steps: {source}", trace.len())]
    Selection {
        #[source]
        source: Box<Error>,
        trace: Vec<crate::estimation::TraceStep>,
    },

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("invalid simulation spec: {0}")]
    Spec(String),

    #[error("invalid data: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;
