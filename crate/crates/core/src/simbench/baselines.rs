use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimation::{fit_irls, ModelParams};
use crate::margins::MarginKind;
use crate::selection::{select_model, SelectConfig};

const VAR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "cop_lr")]
    CopLr,
    #[serde(rename = "lin_lr")]
    LinLr,
    #[serde(rename = "nb")]
    NaiveBayes,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::CopLr, Method::LinLr, Method::NaiveBayes];

    pub fn name(self) -> &'static str {
        match self {
            Method::CopLr => "cop_lr",
            Method::LinLr => "lin_lr",
            Method::NaiveBayes => "nb",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let norm: String = s.trim().to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        match norm.as_str() {
            "coplr" | "copula" => Ok(Method::CopLr),
            "linlr" | "linear" | "lr" => Ok(Method::LinLr),
            "nb" | "naivebayes" => Ok(Method::NaiveBayes),
            _ => Err(format!("unknown method `{s}`")),
        }
    }
}

/// Anything producing class-1 log-odds.
pub trait Classifier: Send + Sync {
    fn log_odds(&self, x: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NbColumn {
    Gaussian { mean: [f64; 2], var: [f64; 2] },
    Bernoulli { rate: [f64; 2] },
    Poisson { rate: [f64; 2] },
}

/// Naive Bayes with per-class maximum-likelihood margins; continuous
/// columns get a separate variance in each class.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayes {
    prior_log_odds: f64,
    columns: Vec<NbColumn>,
}

impl NaiveBayes {
    pub fn fit(data: &Dataset) -> Result<Self> {
        let y = data.y();
        let counts = [y.iter().filter(|&&v| v == 0.0).count(), y.iter().filter(|&&v| v == 1.0).count()];
        if counts[0] == 0 || counts[1] == 0 {
            return Err(Error::Fit("naive Bayes needs both classes in the training data".into()));
        }
        let mut columns = Vec::with_capacity(data.p());
        for (j, kind) in data.kinds().iter().enumerate() {
            let col = data.column(j);
            let mut mean = [0.0; 2];
            for (v, &c) in col.iter().zip(y) {
                mean[c as usize] += v;
            }
            for c in 0..2 {
                mean[c] /= counts[c] as f64;
            }
            let clamp_rate = |r: f64| r.clamp(VAR_FLOOR, 1.0 - VAR_FLOOR);
            columns.push(match kind {
                MarginKind::Continuous => {
                    let mut var = [0.0; 2];
                    for (v, &c) in col.iter().zip(y) {
                        let d = v - mean[c as usize];
                        var[c as usize] += d * d;
                    }
                    for c in 0..2 {
                        var[c] = (var[c] / counts[c] as f64).max(VAR_FLOOR);
                    }
                    NbColumn::Gaussian { mean, var }
                }
                MarginKind::Binary => NbColumn::Bernoulli { rate: mean.map(clamp_rate) },
                MarginKind::Count => NbColumn::Poisson { rate: mean.map(|r| r.max(VAR_FLOOR)) },
            });
        }
        let prior_log_odds = (counts[1] as f64 / counts[0] as f64).ln();
        Ok(Self { prior_log_odds, columns })
    }
}

impl Classifier for NaiveBayes {
    fn log_odds(&self, x: &[f64]) -> f64 {
        let mut total = self.prior_log_odds;
        for (col, &v) in self.columns.iter().zip(x) {
            total += match *col {
                NbColumn::Gaussian { mean, var } => {
                    let ll = |c: usize| -0.5 * var[c].ln() - 0.5 * (v - mean[c]).powi(2) / var[c];
                    ll(1) - ll(0)
                }
                NbColumn::Bernoulli { rate } => {
                    let ll = |c: usize| if v == 1.0 { rate[c].ln() } else { (1.0 - rate[c]).ln() };
                    ll(1) - ll(0)
                }
                NbColumn::Poisson { rate } => v * (rate[1] / rate[0]).ln() - (rate[1] - rate[0]),
            };
        }
        total
    }
}

/// Plain logistic regression fitted by IRLS.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLr {
    pub beta: Vec<f64>,
}

impl LinearLr {
    pub fn fit(data: &Dataset) -> Result<Self> {
        Ok(Self { beta: fit_irls(data)?.beta })
    }
}

impl Classifier for LinearLr {
    fn log_odds(&self, x: &[f64]) -> f64 {
        self.beta[0] + self.beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

impl Classifier for ModelParams {
    fn log_odds(&self, x: &[f64]) -> f64 {
        ModelParams::log_odds(self, x)
    }
}

/// Fits `method` to `train`; `config` applies to the copula model only.
pub fn fit_method(method: Method, train: &Dataset, config: &SelectConfig) -> Result<Box<dyn Classifier>> {
    Ok(match method {
        Method::CopLr => Box::new(select_model(train, config)?.params),
        Method::LinLr => Box::new(LinearLr::fit(train)?),
        Method::NaiveBayes => Box::new(NaiveBayes::fit(train)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirrored_classes_give_even_odds_at_midpoint() {
        let x = vec![-1.0, -2.0, -1.5, 1.0, 2.0, 1.5];
        let y = vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let d = Dataset::continuous(x, y, 1).unwrap();
        let nb = NaiveBayes::fit(&d).unwrap();
        assert!(nb.log_odds(&[0.0]).abs() < 1e-12);
        assert!(nb.log_odds(&[1.0]) > 0.0);
    }

    #[test]
    fn method_names_parse() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("LinLR".parse::<Method>().unwrap(), Method::LinLr);
        assert!("glmnet".parse::<Method>().is_err());
    }
}
