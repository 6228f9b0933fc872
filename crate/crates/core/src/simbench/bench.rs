use serde::{Deserialize, Serialize};

use crate::copula::CopulaFamily;
use crate::error::{Error, Result};
use crate::exec;
use crate::selection::SelectConfig;

use super::baselines::{fit_method, Method};
use super::metrics::{auc, oos_loglik};
use super::models::{simulate_stream, SimModelSpec, Strength};

/// A benchmark scenario. Replicate `r` draws its training set from
/// generator stream `2r` and its test set from stream `2r + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub model_id: u8,
    pub p: usize,
    pub strength: Strength,
    pub n: usize,
    pub test_size: usize,
    pub replicates: usize,
    pub methods: Vec<Method>,
    pub tau: f64,
    pub max_trees: usize,
    pub families: Vec<CopulaFamily>,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            model_id: 2,
            p: 8,
            strength: Strength::Strong,
            n: 1000,
            test_size: 4000,
            replicates: 10,
            methods: Method::ALL.to_vec(),
            tau: 2.0,
            max_trees: 4,
            families: CopulaFamily::PARAMETRIC.to_vec(),
            seed: 1,
        }
    }
}

impl Scenario {
    pub fn spec(&self) -> Result<SimModelSpec> {
        SimModelSpec::preset(self.model_id, self.p, self.strength)
    }

    pub fn select_config(&self) -> SelectConfig {
        SelectConfig { tau: self.tau, max_trees: self.max_trees, families: self.families.clone(), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec()?;
        if self.n < 2 || self.test_size < 2 || self.replicates == 0 || self.methods.is_empty() {
            return Err(Error::Spec("n, test_size and replicates must be positive and methods nonempty".into()));
        }
        self.select_config().validate().map_err(|e| Error::Spec(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub method: Method,
    pub replicate: usize,
    pub n: usize,
    pub p: usize,
    pub auc: f64,
    pub oos_loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub model_id: u8,
    pub method: Method,
    pub n: usize,
    pub p: usize,
    pub mean_auc: f64,
    pub mean_oos_loglik: f64,
    pub replicates: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub results: Vec<EvalResult>,
    pub rows: Vec<AggregateRow>,
}

impl BenchReport {
    pub fn row(&self, method: Method) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

fn run_replicate(scenario: &Scenario, spec: &SimModelSpec, r: usize) -> Vec<(Method, Result<EvalResult>)> {
    let stream = 2 * r as u64;
    let data = simulate_stream(spec, scenario.n, scenario.seed, stream)
        .and_then(|train| Ok((train, simulate_stream(spec, scenario.test_size, scenario.seed, stream + 1)?)));
    let config = scenario.select_config();
    scenario
        .methods
        .iter()
        .map(|&method| {
            let result = data.as_ref().map_err(|e| Error::Spec(e.to_string())).and_then(|(train, test)| {
                let model = fit_method(method, train, &config)?;
                let scores: Vec<f64> = (0..test.n()).map(|i| model.log_odds(test.row(i))).collect();
                Ok(EvalResult {
                    method,
                    replicate: r,
                    n: scenario.n,
                    p: scenario.p,
                    auc: auc(&scores, test.y())?,
                    oos_loglik: oos_loglik(&scores, test.y()),
                })
            });
            (method, result)
        })
        .collect()
}

/// Runs every replicate and method and averages per method. Failed fits
/// are logged, counted, and left out of the means.
pub fn run_benchmark(scenario: &Scenario) -> Result<BenchReport> {
    scenario.validate()?;
    let spec = scenario.spec()?;
    let per_rep = exec::map_range(scenario.replicates, |r| run_replicate(scenario, &spec, r));

    let mut results = Vec::new();
    let mut rows = Vec::new();
    for &method in &scenario.methods {
        let mut ok = Vec::new();
        let mut failures = 0;
        for (r, rep) in per_rep.iter().enumerate() {
            for (m, res) in rep {
                if *m != method {
                    continue;
                }
                match res {
                    Ok(e) => ok.push(e.clone()),
                    Err(e) => {
                        log::warn!("replicate {r}, method {method}: {e}");
                        failures += 1;
                    }
                }
            }
        }
        let k = ok.len() as f64;
        let mean = |f: fn(&EvalResult) -> f64| if ok.is_empty() { f64::NAN } else { ok.iter().map(f).sum::<f64>() / k };
        rows.push(AggregateRow {
            model_id: scenario.model_id,
            method,
            n: scenario.n,
            p: scenario.p,
            mean_auc: mean(|e| e.auc),
            mean_oos_loglik: mean(|e| e.oos_loglik),
            replicates: ok.len(),
            failures,
        });
        results.extend(ok);
    }
    results.sort_by_key(|e| (e.replicate, e.method));
    Ok(BenchReport { results, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoke_linear_on_independence_model() {
        let s = Scenario {
            model_id: 5,
            n: 300,
            test_size: 500,
            replicates: 1,
            methods: vec![Method::LinLr],
            ..Default::default()
        };
        let report = run_benchmark(&s).unwrap();
        assert_eq!(report.rows.len(), 1);
        let row = &report.rows[0];
        assert!(row.mean_auc >= 0.0 && row.mean_auc <= 1.0);
        assert_eq!((row.replicates, row.failures), (1, 0));
    }

    #[test]
    fn bad_model_id_is_rejected() {
        let s = Scenario { model_id: 9, ..Default::default() };
        assert!(matches!(run_benchmark(&s), Err(Error::Spec(_))));
    }
}
