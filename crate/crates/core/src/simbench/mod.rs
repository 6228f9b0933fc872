//! Simulation models, baseline classifiers, metrics and the benchmark driver.

pub mod baselines;
pub mod bench;
pub mod metrics;
pub mod models;

pub use baselines::{fit_method, Classifier, LinearLr, Method, NaiveBayes};
pub use bench::{run_benchmark, AggregateRow, BenchReport, EvalResult, Scenario};
pub use metrics::{auc, oos_loglik};
pub use models::{simulate, simulate_stream, BayesOracle, Dependence, SimModelSpec, Strength};
