//! Discriminative estimation of the extended logistic model.
//!
//! The log-odds is `beta_0 + x' beta + g(x)`, where the copula correction `g`
//! is evaluated with margins recovered from `beta` and the fixed sample
//! moments. The parameter vector on the natural scale is
//! `eta = (beta, theta_0, theta_1)`: coefficients first, then the class-0
//! copula parameters of every non-independence edge in edge order, then the
//! class-1 parameters.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::copula::{CopulaFamily, PairCopula};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::margins::{margins_from_coeffs, MarginKind, MarginSet, SampleMoments};
use crate::normal;
use crate::optim::{self, Tolerances};
use crate::vine::{Edge, EdgeKey, EvalPlan, VineStructure};

/// Overflow-safe `ln(1 + e^x)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli log-likelihood of `y` under log-odds `eta`.
#[inline]
pub fn bernoulli_loglik(y: f64, eta: f64) -> f64 {
    y * eta - softplus(eta)
}

#[derive(Debug, Clone)]
pub struct ModelParams {
    beta: Vec<f64>,
    structure: VineStructure,
    moments: SampleMoments,
    kinds: Vec<MarginKind>,
    margins: MarginSet,
    plan: Arc<EvalPlan>,
}

impl ModelParams {
    pub fn new(
        beta: Vec<f64>,
        structure: VineStructure,
        moments: SampleMoments,
        kinds: Vec<MarginKind>,
    ) -> Result<Self> {
        for &j in structure.eligible() {
            match kinds.get(j) {
                Some(MarginKind::Continuous) => {}
                Some(&kind) => return Err(Error::ColumnKind { column: j, kind }),
                None => return Err(Error::Data(format!("copula column {j} does not exist"))),
            }
        }
        structure.validate().map_err(Error::Structure)?;
        let plan = Arc::new(EvalPlan::compile(&structure)?);
        let margins = margins_from_coeffs(&beta, &moments, &kinds)?;
        Ok(Self { beta, structure, moments, kinds, margins, plan })
    }

    /// A model with coefficients `beta`, no copula terms, and the moments of `data`.
    pub fn linear(beta: Vec<f64>, data: &Dataset, max_trees: usize) -> Result<Self> {
        let structure = VineStructure::new(max_trees, data.continuous_columns());
        Self::new(beta, structure, data.moments(), data.kinds().to_vec())
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn structure(&self) -> &VineStructure {
        &self.structure
    }

    pub fn margins(&self) -> &MarginSet {
        &self.margins
    }

    pub fn moments(&self) -> &SampleMoments {
        &self.moments
    }

    pub fn kinds(&self) -> &[MarginKind] {
        &self.kinds
    }

    pub fn plan(&self) -> &EvalPlan {
        &self.plan
    }

    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.beta[0] + self.beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    /// Copula correction `g(x)` under the current margins.
    pub fn correction(&self, x: &[f64]) -> f64 {
        self.plan.g(self.structure.edges(), &self.margins, x)
    }

    pub fn log_odds(&self, x: &[f64]) -> f64 {
        self.linear_predictor(x) + self.correction(x)
    }

    /// Adds an edge and recompiles the evaluation plan.
    pub fn with_edge(&self, edge: Edge) -> Result<Self> {
        let mut structure = self.structure.clone();
        structure.push(edge)?;
        let plan = Arc::new(EvalPlan::compile(&structure)?);
        Ok(Self { structure, plan, ..self.clone() })
    }

    /// Replaces the copulas of edge `idx`.
    pub fn with_copulas(&self, idx: usize, copulas: [PairCopula; 2]) -> Self {
        let mut out = self.clone();
        out.structure.set_copulas(idx, copulas);
        out
    }

    /// `(edge, class)` of every free copula parameter, in vector order.
    pub fn theta_slots(&self) -> Vec<(usize, usize)> {
        let edges = self.structure.edges();
        (0..2)
            .flat_map(|y| {
                edges
                    .iter()
                    .enumerate()
                    .filter(move |(_, e)| e.copulas[y].family().has_parameter())
                    .map(move |(i, _)| (i, y))
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.beta.len() + self.theta_slots().len()
    }

    /// Human-readable names of the natural parameters.
    pub fn labels(&self, names: &[String]) -> Vec<String> {
        let mut out = vec!["(intercept)".to_string()];
        out.extend(names.iter().cloned());
        for (i, y) in self.theta_slots() {
            out.push(format!("theta{y}{}", self.structure.edges()[i].key));
        }
        out
    }

    pub fn natural_vector(&self) -> Vec<f64> {
        let mut v = self.beta.clone();
        for (i, y) in self.theta_slots() {
            v.push(self.structure.edges()[i].copulas[y].theta().unwrap_or(0.0));
        }
        v
    }

    pub fn unconstrained_vector(&self) -> Vec<f64> {
        let mut v = self.beta.clone();
        for (i, y) in self.theta_slots() {
            v.push(self.structure.edges()[i].copulas[y].to_unconstrained());
        }
        v
    }

    fn rebuild(&self, beta: &[f64], copulas: impl Fn(usize, CopulaFamily, f64) -> Result<PairCopula>, rest: &[f64]) -> Result<Self> {
        let mut structure = self.structure.clone();
        for ((i, y), &value) in self.theta_slots().into_iter().zip(rest) {
            let mut pair = structure.edges()[i].copulas;
            pair[y] = copulas(i, pair[y].family(), value)?;
            structure.set_copulas(i, pair);
        }
        let margins = if beta == self.beta.as_slice() {
            self.margins.clone()
        } else {
            margins_from_coeffs(beta, &self.moments, &self.kinds)?
        };
        Ok(Self { beta: beta.to_vec(), structure, margins, ..self.clone() })
    }

    /// Parameters with `eta` on the natural scale.
    pub fn with_natural(&self, eta: &[f64]) -> Result<Self> {
        let p1 = self.beta.len();
        self.rebuild(&eta[..p1], |_, fam, t| PairCopula::new(fam, t), &eta[p1..])
    }

    /// Parameters with copula parameters given on the unconstrained scale.
    pub fn with_unconstrained(&self, psi: &[f64]) -> Result<Self> {
        let p1 = self.beta.len();
        self.rebuild(&psi[..p1], |_, fam, v| Ok(PairCopula::from_unconstrained(fam, v)), &psi[p1..])
    }
}

/// Sum of Bernoulli log-likelihoods of the responses under `params`.
pub fn log_likelihood(params: &ModelParams, data: &Dataset) -> f64 {
    let y = data.y();
    exec::chunked_sum(data.n(), |range| {
        range.map(|i| bernoulli_loglik(y[i], params.log_odds(data.row(i)))).sum()
    })
}

/// Log-likelihood with per-observation offsets added to the log-odds.
pub fn offset_log_likelihood<F>(data: &Dataset, base: &[f64], delta: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let y = data.y();
    exec::chunked_sum(data.n(), |range| {
        range.map(|i| bernoulli_loglik(y[i], base[i] + delta(i))).sum()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrlsFit {
    pub beta: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn design(data: &Dataset) -> DMatrix<f64> {
    let (n, p) = (data.n(), data.p());
    DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { data.x()[i * p + j - 1] })
}

fn linear_loglik(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter().zip(y.iter()).map(|(&e, &v)| bernoulli_loglik(v, e)).sum()
}

/// Maximum-likelihood logistic regression by Newton steps (IRLS).
pub fn fit_irls(data: &Dataset) -> Result<IrlsFit> {
    const MAX_ITER: usize = 100;
    const GRAD_TOL: f64 = 1e-8;
    let x = design(data);
    let y = DVector::from_column_slice(data.y());
    let d = x.ncols();
    if data.n() < d {
        return Err(Error::Fit(format!("{} observations cannot determine {d} coefficients", data.n())));
    }
    let gram = x.transpose() * &x;
    let eig = gram.clone().symmetric_eigen();
    let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    if !(lo > hi * 1e-12) {
        return Err(Error::Fit("design matrix with intercept is rank deficient".into()));
    }

    let mut beta = DVector::zeros(d);
    let mut ll = linear_loglik(&x, &y, &beta);
    let mut converged = false;
    let mut warned = false;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        let eta = &x * &beta;
        let prob = eta.map(sigmoid);
        let grad = x.transpose() * (&y - &prob);
        if grad.amax() < GRAD_TOL {
            converged = true;
            break;
        }
        if !warned && eta.amax() > 30.0 {
            log::warn!("linear predictor exceeds 30 in magnitude; the classes may be separated");
            warned = true;
        }
        iterations += 1;
        let w = prob.map(|p| p * (1.0 - p));
        let mut xw = x.clone();
        for (mut row, wi) in xw.row_iter_mut().zip(w.iter()) {
            row *= *wi;
        }
        let hess = x.transpose() * xw;
        let Some(chol) = hess.cholesky() else {
            log::warn!("information matrix became singular after {iterations} iterations");
            break;
        };
        let delta = chol.solve(&grad);
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let cand = &beta + &delta * step;
            let cll = linear_loglik(&x, &y, &cand);
            if cll.is_finite() && cll >= ll {
                beta = cand;
                ll = cll;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if !converged {
        log::warn!("logistic regression did not reach gradient tolerance in {iterations} iterations");
    }
    Ok(IrlsFit { beta: beta.iter().copied().collect(), loglik: ll, iterations, converged })
}

/// One step of the model-building trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub description: String,
    pub loglik: f64,
    pub acceptance: Option<Acceptance>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Acceptance {
    pub edge: EdgeKey,
    pub tree: usize,
    pub families: [CopulaFamily; 2],
    /// Gain of the Gaussian screening fit with the rest of the model frozen.
    pub gain: f64,
    pub loglik_before: f64,
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub params: ModelParams,
    pub loglik: f64,
    pub trace: Vec<TraceStep>,
    /// Standard errors on the natural scale, present when the observed
    /// information is positive definite.
    pub std_errors: Option<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
}

/// Joint quasi-Newton refinement of coefficients and copula parameters,
/// started from `params`.
pub fn optimize(params: &ModelParams, data: &Dataset, tol: &Tolerances) -> Result<FitReport> {
    let start = log_likelihood(params, data);
    if !start.is_finite() {
        return Err(Error::Fit(format!("log-likelihood at the starting point is {start}")));
    }
    let objective = |psi: &[f64]| match params.with_unconstrained(psi) {
        Ok(p) => -log_likelihood(&p, data),
        Err(_) => f64::NAN,
    };
    let min = optim::minimize(objective, &params.unconstrained_vector(), tol);
    let fitted = params.with_unconstrained(&min.x)?;
    let loglik = log_likelihood(&fitted, data);
    if !min.converged {
        log::warn!("optimizer stopped after {} iterations with gradient norm {:e}", min.iterations, min.grad_norm);
    }
    Ok(FitReport {
        params: fitted,
        loglik,
        trace: Vec::new(),
        std_errors: None,
        converged: min.converged,
        iterations: min.iterations,
    })
}

/// Finite-difference step for natural parameter `i`, kept inside the
/// parameter domain.
fn hessian_steps(params: &ModelParams, eta: &[f64]) -> Vec<f64> {
    const REL: f64 = 1e-4;
    let p1 = params.beta().len();
    let slots = params.theta_slots();
    eta.iter()
        .enumerate()
        .map(|(i, &v)| {
            let h = REL * v.abs().max(1.0);
            if i < p1 {
                return h;
            }
            let (e, y) = slots[i - p1];
            let room = match params.structure().edges()[e].copulas[y].family() {
                CopulaFamily::Gaussian => 1.0 - v.abs(),
                CopulaFamily::Clayton => v,
                CopulaFamily::Gumbel => v - 1.0,
                CopulaFamily::Independence => f64::INFINITY,
            };
            h.min(0.25 * room)
        })
        .collect()
}

/// Observed information: minus the central-difference Hessian of the
/// log-likelihood on the natural scale.
pub fn fisher_info(params: &ModelParams, data: &Dataset) -> DMatrix<f64> {
    let eta = params.natural_vector();
    let d = eta.len();
    let h = hessian_steps(params, &eta);
    let f = |shift: &[(usize, f64)]| {
        let mut e = eta.clone();
        for &(i, s) in shift {
            e[i] += s;
        }
        match params.with_natural(&e) {
            Ok(p) => log_likelihood(&p, data),
            Err(_) => f64::NAN,
        }
    };
    let f0 = f(&[]);
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let values = exec::map_slice(&pairs, |&(i, j)| {
        if i == j {
            (f(&[(i, h[i])]) - 2.0 * f0 + f(&[(i, -h[i])])) / (h[i] * h[i])
        } else {
            let pp = f(&[(i, h[i]), (j, h[j])]);
            let pm = f(&[(i, h[i]), (j, -h[j])]);
            let mp = f(&[(i, -h[i]), (j, h[j])]);
            let mm = f(&[(i, -h[i]), (j, -h[j])]);
            (pp - pm - mp + mm) / (4.0 * h[i] * h[j])
        }
    });
    let mut info = DMatrix::zeros(d, d);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        info[(i, j)] = -v;
        info[(j, i)] = -v;
    }
    info
}

/// Square roots of the diagonal of the inverse information, if it is
/// positive definite.
pub fn standard_errors(info: &DMatrix<f64>) -> Option<Vec<f64>> {
    if info.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let inv = info.clone().cholesky()?.inverse();
    Some((0..inv.nrows()).map(|i| inv[(i, i)].max(0.0).sqrt()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub estimate: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Delta-method interval for a smooth functional `psi` of the natural
/// parameters, using the inverse observed information as covariance.
pub fn delta_ci<F>(eta: &[f64], info: &DMatrix<f64>, psi: F, level: f64) -> Result<Interval>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Fit(format!("confidence level {level} is not in (0, 1)")));
    }
    let chol = info
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Fit("information matrix is not positive definite".into()))?;
    let estimate = psi(eta)?;
    let mut grad = DVector::zeros(eta.len());
    for i in 0..eta.len() {
        let h = 1e-6 * eta[i].abs().max(1.0);
        let mut e = eta.to_vec();
        e[i] = eta[i] + h;
        let fp = psi(&e)?;
        e[i] = eta[i] - h;
        let fm = psi(&e)?;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    let var = grad.dot(&chol.solve(&grad)).max(0.0);
    let se = var.sqrt();
    let z = normal::quantile(0.5 + 0.5 * level);
    Ok(Interval { estimate, std_error: se, lower: estimate - z * se, upper: estimate + z * se })
}

/// Delta-method interval for the log-odds at `x`.
pub fn log_odds_ci(params: &ModelParams, info: &DMatrix<f64>, x: &[f64], level: f64) -> Result<Interval> {
    delta_ci(&params.natural_vector(), info, |eta| Ok(params.with_natural(eta)?.log_odds(x)), level)
}
