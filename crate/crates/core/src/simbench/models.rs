//! Generative simulation models with balanced classes.
//!
//! Given the class, covariates are either multivariate Gaussian with
//! class-specific means, scales and correlation matrices, or have Gaussian
//! margins joined by a truncated D-vine of Gumbel and Clayton copulas whose
//! parameters differ between the classes.
//!
//! Defaults for `p` covariates (strong setting):
//!
//! | model | dependence                                   | scales             | means           |
//! |-------|----------------------------------------------|--------------------|-----------------|
//! | 1     | class 1 Gaussian chain on `x0..x4`, rho 0.9  | 1 vs 1.5           | 0               |
//! | 2     | as model 1                                   | equal              | 0               |
//! | 3     | D-vine, trees 1 to 3, differing on `x0..x4`  | 1 vs 1.5           | 0               |
//! | 4     | as model 3                                   | equal              | 0               |
//! | 5     | independence in both classes                 | equal              | 0 vs 0.9        |
//!
//! In the chain, the correlation of `x_i` and `x_j` is `0.9^|i-j|`, so its
//! partial correlations beyond neighbours vanish. In the D-vine, edges
//! alternate Gumbel and Clayton and only those joining variables within
//! `x0..x4` change between classes. The weak setting halves
//! every class gap on the log or Fisher-z scale.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::copula::{CopulaFamily, PairCopula};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::normal;
use crate::vine::{Edge, EvalPlan, VineStructure};

/// Correlation between neighbours of the class-1 Gaussian chain.
pub const CHAIN_RHO: f64 = 0.9;
/// Number of leading covariates linked by the chain.
pub const CHAIN_LEN: usize = 5;
/// Class-1 scale in models 1 and 3.
pub const SCALE_GAP: f64 = 1.5;
/// Class-1 mean shift in model 5.
pub const MEAN_SHIFT: f64 = 0.9;
/// Deepest tree carrying copulas in models 3 and 4.
pub const VINE_DEPTH: usize = 3;
/// Gumbel parameters for class 0 and class 1.
pub const GUMBEL_THETA: [f64; 2] = [1.2, 2.5];
/// Clayton parameters for class 0 and class 1.
pub const CLAYTON_THETA: [f64; 2] = [0.3, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    #[default]
    Strong,
    Weak,
}

impl FromStr for Strength {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "strong" => Ok(Strength::Strong),
            "weak" => Ok(Strength::Weak),
            other => Err(format!("unknown strength `{other}`")),
        }
    }
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strength::Strong => "strong",
            Strength::Weak => "weak",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dependence {
    /// Row-major `p x p` correlation matrices for class 0 and class 1.
    Correlation([Vec<f64>; 2]),
    /// `trees[t][a]` couples `x_a` and `x_{a+t+1}` given the variables between them.
    DVine(Vec<Vec<[PairCopula; 2]>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimModelSpec {
    /// 1 to 5 for the presets, 0 for custom specifications.
    pub model_id: u8,
    pub p: usize,
    pub strength: Strength,
    pub mu: [Vec<f64>; 2],
    pub sigma: [Vec<f64>; 2],
    pub dependence: Dependence,
}

fn identity(p: usize) -> Vec<f64> {
    (0..p * p).map(|i| if i / p == i % p { 1.0 } else { 0.0 }).collect()
}

fn chain(p: usize, rho: f64) -> Vec<f64> {
    let mut r = identity(p);
    let len = CHAIN_LEN.min(p);
    for i in 0..len {
        for j in 0..len {
            r[i * p + j] = rho.powi((i as i32 - j as i32).abs());
        }
    }
    r
}

/// Halves the gap between `a` and `b` on the unconstrained scale of `family`.
fn halve_copula_gap(c0: PairCopula, c1: PairCopula) -> PairCopula {
    let mid = 0.5 * (c0.to_unconstrained() + c1.to_unconstrained());
    PairCopula::from_unconstrained(c1.family(), mid)
}

fn dvine(p: usize, strength: Strength) -> Result<Vec<Vec<[PairCopula; 2]>>> {
    let mut trees = Vec::new();
    for t in 0..VINE_DEPTH.min(p.saturating_sub(1)) {
        let mut tree = Vec::new();
        for a in 0..p - t - 1 {
            let (fam, th) = if a % 2 == 0 {
                (CopulaFamily::Gumbel, GUMBEL_THETA)
            } else {
                (CopulaFamily::Clayton, CLAYTON_THETA)
            };
            let c0 = PairCopula::new(fam, th[0])?;
            // Only edges inside the leading block differ between classes.
            let differs = a + t + 1 < CHAIN_LEN;
            let mut c1 = if differs { PairCopula::new(fam, th[1])? } else { c0 };
            if strength == Strength::Weak && differs {
                c1 = halve_copula_gap(c0, c1);
            }
            tree.push([c0, c1]);
        }
        trees.push(tree);
    }
    Ok(trees)
}

impl SimModelSpec {
    /// One of the five preset models.
    pub fn preset(model_id: u8, p: usize, strength: Strength) -> Result<Self> {
        if p < 2 {
            return Err(Error::Spec(format!("simulation models need p >= 2, got {p}")));
        }
        let weak = strength == Strength::Weak;
        let scale = if weak { SCALE_GAP.sqrt() } else { SCALE_GAP };
        let rho = if weak { (CHAIN_RHO.atanh() / 2.0).tanh() } else { CHAIN_RHO };
        let ones = vec![1.0; p];
        let zeros = vec![0.0; p];
        let (sigma1, dependence, mu1) = match model_id {
            1 => (vec![scale; p], Dependence::Correlation([identity(p), chain(p, rho)]), zeros.clone()),
            2 => (ones.clone(), Dependence::Correlation([identity(p), chain(p, rho)]), zeros.clone()),
            3 => (vec![scale; p], Dependence::DVine(dvine(p, strength)?), zeros.clone()),
            4 => (ones.clone(), Dependence::DVine(dvine(p, strength)?), zeros.clone()),
            5 => {
                let shift = if weak { MEAN_SHIFT / 2.0 } else { MEAN_SHIFT };
                (ones.clone(), Dependence::Correlation([identity(p), identity(p)]), vec![shift; p])
            }
            other => return Err(Error::Spec(format!("unknown model id {other}; expected 1 to 5"))),
        };
        let spec = Self { model_id, p, strength, mu: [zeros, mu1], sigma: [ones, sigma1], dependence };
        spec.validate()?;
        Ok(spec)
    }

    /// Standard Gaussian covariates where only `x0` and `x1` are correlated,
    /// with correlation `-rho` in class 0 and `rho` in class 1.
    pub fn planted_pair(p: usize, rho: f64) -> Result<Self> {
        let mut r0 = identity(p);
        let mut r1 = identity(p);
        r0[1] = -rho;
        r0[p] = -rho;
        r1[1] = rho;
        r1[p] = rho;
        let spec = Self {
            model_id: 0,
            p,
            strength: Strength::Strong,
            mu: [vec![0.0; p], vec![0.0; p]],
            sigma: [vec![1.0; p], vec![1.0; p]],
            dependence: Dependence::Correlation([r0, r1]),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p;
        for y in 0..2 {
            if self.mu[y].len() != p || self.sigma[y].len() != p {
                return Err(Error::Spec(format!("class {y} means or scales do not have length {p}")));
            }
            if self.sigma[y].iter().any(|s| !(*s > 0.0 && s.is_finite())) || self.mu[y].iter().any(|m| !m.is_finite()) {
                return Err(Error::Spec(format!("class {y} has a non-finite mean or non-positive scale")));
            }
        }
        match &self.dependence {
            Dependence::Correlation(r) => {
                for (y, ry) in r.iter().enumerate() {
                    correlation_factor(ry, p).map_err(|e| Error::Spec(format!("class {y}: {e}")))?;
                }
            }
            Dependence::DVine(trees) => {
                for (t, tree) in trees.iter().enumerate() {
                    if tree.len() + t + 1 != p {
                        return Err(Error::Spec(format!("D-vine tree {} has {} edges, expected {}", t + 1, tree.len(), p - t - 1)));
                    }
                }
            }
        }
        Ok(())
    }

    fn vine_structure(trees: &[Vec<[PairCopula; 2]>], p: usize) -> Result<VineStructure> {
        let mut edges = Vec::new();
        for (t, tree) in trees.iter().enumerate() {
            for (a, c) in tree.iter().enumerate() {
                edges.push(Edge::new(a, a + t + 1, (a + 1..a + t + 1).collect(), c[0], c[1]));
            }
        }
        VineStructure::from_edges(trees.len().max(1), 0..p, edges)
    }

    /// The true log-odds `log f1(x) - log f0(x)` under equal class priors.
    pub fn bayes_oracle(&self) -> Result<BayesOracle> {
        let kind = match &self.dependence {
            Dependence::Correlation(r) => {
                let f0 = correlation_factor(&r[0], self.p)?;
                let f1 = correlation_factor(&r[1], self.p)?;
                OracleKind::Gaussian([f0, f1])
            }
            Dependence::DVine(trees) => {
                let structure = Self::vine_structure(trees, self.p)?;
                let plan = EvalPlan::compile(&structure)?;
                OracleKind::Vine(structure, plan)
            }
        };
        Ok(BayesOracle { spec: self.clone(), kind })
    }
}

fn correlation_factor(r: &[f64], p: usize) -> Result<Cholesky<f64, Dyn>> {
    if r.len() != p * p {
        return Err(Error::Spec(format!("correlation matrix has {} entries, expected {}", r.len(), p * p)));
    }
    let m = DMatrix::from_row_slice(p, p, r);
    for i in 0..p {
        if (m[(i, i)] - 1.0).abs() > 1e-12 {
            return Err(Error::Spec(format!("correlation diagonal entry {i} is {}", m[(i, i)])));
        }
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 {
                return Err(Error::Spec(format!("correlation matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    m.cholesky().ok_or_else(|| Error::Spec("correlation matrix is not positive definite".into()))
}

enum OracleKind {
    Gaussian([Cholesky<f64, Dyn>; 2]),
    Vine(VineStructure, EvalPlan),
}

/// Log-odds under the generating distribution.
pub struct BayesOracle {
    spec: SimModelSpec,
    kind: OracleKind,
}

impl BayesOracle {
    fn class_log_density(&self, y: usize, x: &[f64]) -> f64 {
        let s = &self.spec;
        let z: Vec<f64> = (0..s.p).map(|j| (x[j] - s.mu[y][j]) / s.sigma[y][j]).collect();
        let log_scale: f64 = s.sigma[y].iter().map(|v| v.ln()).sum();
        match &self.kind {
            OracleKind::Gaussian(f) => {
                let l = f[y].l();
                let sol = l.solve_lower_triangular(&DVector::from_column_slice(&z)).expect("factor is nonsingular");
                let log_det: f64 = (0..s.p).map(|i| l[(i, i)].ln()).sum();
                -0.5 * sol.norm_squared() - log_det - log_scale
                    - 0.5 * s.p as f64 * (2.0 * std::f64::consts::PI).ln()
            }
            OracleKind::Vine(structure, plan) => {
                let margins: f64 = z.iter().map(|&v| normal::ln_pdf(v)).sum::<f64>() - log_scale;
                margins + plan.class_log_copula(structure.edges(), y, |j| z[j])
            }
        }
    }

    pub fn log_odds(&self, x: &[f64]) -> f64 {
        self.class_log_density(1, x) - self.class_log_density(0, x)
    }
}

fn sample_dvine(trees: &[Vec<[PairCopula; 2]>], y: usize, w: &[f64]) -> Vec<f64> {
    let p = w.len();
    let depth = trees.len();
    // fwd[i][k] = u_{i | i-1..i-k}, bwd[i][k] = u_{i | i+1..i+k}
    let mut fwd = vec![vec![0.0; depth + 1]; p];
    let mut bwd = vec![vec![0.0; depth + 1]; p];
    for i in 0..p {
        let m = i.min(depth);
        let mut cur = w[i];
        for k in (1..=m).rev() {
            cur = trees[k - 1][i - k][y].h_inverse(cur, bwd[i - k][k - 1]);
            fwd[i][k - 1] = cur;
        }
        if m == 0 {
            fwd[i][0] = cur;
        }
        bwd[i][0] = fwd[i][0];
        for k in 1..=m {
            bwd[i - k][k] = trees[k - 1][i - k][y].h(bwd[i - k][k - 1], fwd[i][k - 1]);
        }
    }
    fwd.iter().map(|r| r[0]).collect()
}

/// Draws `n` observations from `spec` using generator stream 0 of `seed`.
pub fn simulate(spec: &SimModelSpec, n: usize, seed: u64) -> Result<Dataset> {
    simulate_stream(spec, n, seed, 0)
}

/// Draws `n` observations from an independent stream of the generator
/// seeded by `seed`. Streams let replicates run in any order.
pub fn simulate_stream(spec: &SimModelSpec, n: usize, seed: u64, stream: u64) -> Result<Dataset> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Spec("sample size must be at least 1".into()));
    }
    let p = spec.p;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let factors = match &spec.dependence {
        Dependence::Correlation(r) => Some([correlation_factor(&r[0], p)?, correlation_factor(&r[1], p)?]),
        Dependence::DVine(_) => None,
    };
    let mut x = Vec::with_capacity(n * p);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let y = usize::from(rng.random::<f64>() < 0.5);
        let z: Vec<f64> = match (&spec.dependence, &factors) {
            (Dependence::Correlation(_), Some(f)) => {
                let e: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
                let v = f[y].l() * DVector::from_vec(e);
                v.iter().copied().collect()
            }
            (Dependence::DVine(trees), _) => {
                let w: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
                sample_dvine(trees, y, &w).into_iter().map(normal::quantile).collect()
            }
            _ => unreachable!("factors exist for correlation models"),
        };
        for j in 0..p {
            x.push(spec.mu[y][j] + spec.sigma[y][j] * z[j]);
        }
        ys.push(y as f64);
    }
    Dataset::continuous(x, ys, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::kendall_tau;

    fn class_columns(d: &Dataset, y: f64, a: usize, b: usize) -> (Vec<f64>, Vec<f64>) {
        let rows: Vec<usize> = (0..d.n()).filter(|&i| d.y()[i] == y).collect();
        (rows.iter().map(|&i| d.row(i)[a]).collect(), rows.iter().map(|&i| d.row(i)[b]).collect())
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn simulation_is_reproducible() {
        let spec = SimModelSpec::preset(3, 6, Strength::Strong).unwrap();
        let a = simulate(&spec, 200, 11).unwrap();
        let b = simulate(&spec, 200, 11).unwrap();
        assert_eq!(a, b);
        let c = simulate_stream(&spec, 200, 11, 1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn chain_correlation_is_recovered() {
        let spec = SimModelSpec::preset(2, 8, Strength::Strong).unwrap();
        let d = simulate(&spec, 100_000, 5).unwrap();
        let (a, b) = class_columns(&d, 1.0, 0, 1);
        assert!((corr(&a, &b) - CHAIN_RHO).abs() < 0.03);
        let (a, b) = class_columns(&d, 0.0, 0, 1);
        assert!(corr(&a, &b).abs() < 0.03);
    }

    #[test]
    fn vine_pair_tau_is_recovered() {
        let spec = SimModelSpec::preset(4, 8, Strength::Strong).unwrap();
        let d = simulate(&spec, 100_000, 9).unwrap();
        // Edge (1,2) of the first tree is a Clayton copula.
        let (a, b) = class_columns(&d, 1.0, 1, 2);
        let want = CLAYTON_THETA[1] / (CLAYTON_THETA[1] + 2.0);
        assert!((kendall_tau(&a, &b) - want).abs() < 0.03);
        let (a, b) = class_columns(&d, 0.0, 0, 1);
        let want = 1.0 - 1.0 / GUMBEL_THETA[0];
        assert!((kendall_tau(&a, &b) - want).abs() < 0.03);
    }

    #[test]
    fn independence_model_has_no_correlation() {
        let spec = SimModelSpec::preset(5, 4, Strength::Strong).unwrap();
        let d = simulate(&spec, 100_000, 1).unwrap();
        for y in [0.0, 1.0] {
            let (a, b) = class_columns(&d, y, 0, 3);
            assert!(corr(&a, &b).abs() < 0.05);
        }
        let ones = d.y().iter().sum::<f64>() / d.n() as f64;
        assert!((ones - 0.5).abs() < 4.0 * (0.25f64 / 1e5).sqrt());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(SimModelSpec::preset(7, 8, Strength::Strong).is_err());
        assert!(SimModelSpec::planted_pair(4, 1.2).is_err());
        let mut spec = SimModelSpec::preset(2, 4, Strength::Strong).unwrap();
        spec.sigma[0][1] = 0.0;
        assert!(spec.validate().is_err());
    }
}
