//! Greedy forward selection of the shared vine.
//!
//! Trees are filled in order. Within a tree, every legal candidate edge is
//! screened with Gaussian copulas in both classes, fitting only the two new
//! parameters while the rest of the model stays frozen. The best candidate is
//! accepted when its log-likelihood gain reaches the threshold `tau`; its
//! copula families are then chosen per class and all parameters are refitted.
//! A tree closes the first time its best gain falls short of `tau`.

use std::collections::BTreeSet;

use crate::copula::{gaussian_log_density_scores, kendall_tau, CopulaFamily, PairCopula};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimation::{
    bernoulli_loglik, fisher_info, fit_irls, log_likelihood, optimize, standard_errors, Acceptance,
    FitReport, ModelParams, TraceStep,
};
use crate::exec;
use crate::optim::{self, Tolerances};
use crate::vine::{class_score, Edge, EdgeKey, VineStructure};

#[derive(Debug, Clone, PartialEq)]
pub struct SelectConfig {
    /// Minimum log-likelihood gain for accepting an edge.
    pub tau: f64,
    /// Truncation level: the deepest tree that may hold an edge.
    pub max_trees: usize,
    pub families: Vec<CopulaFamily>,
    pub tolerances: Tolerances,
    /// Stop after this many accepted edges.
    pub max_edges: Option<usize>,
    /// Compute standard errors from the observed information at the end.
    pub standard_errors: bool,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            tau: 2.0,
            max_trees: 4,
            families: CopulaFamily::PARAMETRIC.to_vec(),
            tolerances: Tolerances::default(),
            max_edges: None,
            standard_errors: false,
        }
    }
}

impl SelectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0) {
            return Err(Error::Fit(format!("threshold tau must be nonnegative, got {}", self.tau)));
        }
        if self.max_trees == 0 {
            return Err(Error::Fit("at least one tree is required".into()));
        }
        if !self.families.contains(&CopulaFamily::Gaussian) {
            return Err(Error::Fit("the Gaussian family is required for screening".into()));
        }
        if self.families.contains(&CopulaFamily::Independence) {
            return Err(Error::Fit("independence is not a selectable family".into()));
        }
        Ok(())
    }
}

/// Legal new edges for tree `tree`, in lexicographic order.
///
/// Tree 1 admits every pair while it is empty, afterwards only pairs that
/// touch an included variable without closing a cycle. Deeper trees admit
/// pairs of adjacent edges of the previous tree whose h-function parents
/// are both present.
pub fn allowed_candidates(structure: &VineStructure, tree: usize) -> Vec<EdgeKey> {
    if tree == 0 || tree > structure.max_trees() {
        return Vec::new();
    }
    let mut keys = BTreeSet::new();
    if tree == 1 {
        let included: BTreeSet<usize> = structure.tree_edges(1).flat_map(|e| [e.key.pair.0, e.key.pair.1]).collect();
        let vars = structure.eligible();
        for (a, &j) in vars.iter().enumerate() {
            for &k in &vars[a + 1..] {
                if included.is_empty() || included.contains(&j) || included.contains(&k) {
                    keys.insert(EdgeKey::new(j, k, Vec::new()));
                }
            }
        }
    } else {
        let prev: Vec<&Edge> = structure.tree_edges(tree - 1).collect();
        for (i, a) in prev.iter().enumerate() {
            let na = a.key.nodes();
            for b in &prev[i + 1..] {
                let nb = b.key.nodes();
                let given: Vec<usize> = na.iter().copied().filter(|v| nb.contains(v)).collect();
                if given.len() != tree - 1 {
                    continue;
                }
                let j = na.iter().copied().find(|v| !given.contains(v));
                let k = nb.iter().copied().find(|v| !given.contains(v));
                if let (Some(j), Some(k)) = (j, k) {
                    if a.key.conditions(j) && b.key.conditions(k) {
                        keys.insert(EdgeKey::new(j.min(k), j.max(k), given));
                    }
                }
            }
        }
    }
    keys.into_iter()
        .filter(|key| {
            if structure.contains(key) {
                return false;
            }
            let mut trial = structure.clone();
            trial.push(Edge::independent(key.pair.0, key.pair.1, key.given.clone())).is_ok()
        })
        .collect()
}

/// Pseudo-observations of one candidate edge with the rest of the model frozen.
struct PairData<'a> {
    y: &'a [f64],
    base: &'a [f64],
    /// `u[class][side][obs]` and matching normal scores.
    u: [[Vec<f64>; 2]; 2],
    z: [[Vec<f64>; 2]; 2],
}

impl<'a> PairData<'a> {
    fn new(current: &ModelParams, key: &EdgeKey, data: &'a Dataset, base: &'a [f64]) -> Result<Self> {
        let trial = current.with_edge(Edge::independent(key.pair.0, key.pair.1, key.given.clone()))?;
        let idx = trial.structure().len() - 1;
        let edges = trial.structure().edges();
        let margins = trial.margins();
        let rows = exec::map_range(data.n(), |i| {
            let x = data.row(i);
            [0, 1].map(|y| trial.plan().edge_arguments(edges, y, class_score(margins, y, x), idx))
        });
        let pick = |y: usize, side: usize, score: bool| -> Vec<f64> {
            rows.iter().map(|r| if score { r[y][side].1 } else { r[y][side].0 }).collect()
        };
        Ok(Self {
            y: data.y(),
            base,
            u: [[pick(0, 0, false), pick(0, 1, false)], [pick(1, 0, false), pick(1, 1, false)]],
            z: [[pick(0, 0, true), pick(0, 1, true)], [pick(1, 0, true), pick(1, 1, true)]],
        })
    }

    fn log_density(&self, cop: &PairCopula, y: usize, i: usize) -> f64 {
        match (cop.family(), cop.theta()) {
            (CopulaFamily::Independence, _) => 0.0,
            (CopulaFamily::Gaussian, Some(rho)) => gaussian_log_density_scores(rho, self.z[y][0][i], self.z[y][1][i]),
            _ => cop.log_density(self.u[y][0][i], self.u[y][1][i]),
        }
    }

    fn loglik(&self, cops: &[PairCopula; 2]) -> f64 {
        exec::chunked_sum(self.y.len(), |range| {
            range
                .map(|i| {
                    let delta = self.log_density(&cops[1], 1, i) - self.log_density(&cops[0], 0, i);
                    bernoulli_loglik(self.y[i], self.base[i] + delta)
                })
                .sum()
        })
    }

    /// Empirical Kendall tau of the class-`y` pseudo-observations over the
    /// observations labelled `y`.
    fn class_tau(&self, y: usize) -> f64 {
        let label = y as f64;
        let sel: Vec<usize> = (0..self.y.len()).filter(|&i| self.y[i] == label).collect();
        let a: Vec<f64> = sel.iter().map(|&i| self.u[y][0][i]).collect();
        let b: Vec<f64> = sel.iter().map(|&i| self.u[y][1][i]).collect();
        kendall_tau(&a, &b)
    }

    /// Maximizes over the parameters of the classes flagged in `free`,
    /// starting from `start`. Never returns a worse pair than `start`.
    fn fit(&self, start: [PairCopula; 2], free: [bool; 2], tol: &Tolerances) -> ([PairCopula; 2], f64) {
        let start_ll = self.loglik(&start);
        let idx: Vec<usize> = (0..2).filter(|&y| free[y] && start[y].family().has_parameter()).collect();
        if idx.is_empty() {
            return (start, start_ll);
        }
        let build = |psi: &[f64]| {
            let mut cops = start;
            for (&y, &v) in idx.iter().zip(psi) {
                cops[y] = PairCopula::from_unconstrained(start[y].family(), v);
            }
            cops
        };
        let x0: Vec<f64> = idx.iter().map(|&y| start[y].to_unconstrained()).collect();
        let min = optim::minimize(|psi| -self.loglik(&build(psi)), &x0, tol);
        let cops = build(&min.x);
        let ll = self.loglik(&cops);
        if ll >= start_ll {
            (cops, ll)
        } else {
            (start, start_ll)
        }
    }
}

/// Result of screening one candidate with Gaussian copulas.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFit {
    pub key: EdgeKey,
    pub gain: f64,
    /// Fitted Gaussian correlations for class 0 and class 1.
    pub thetas: [f64; 2],
}

fn gaussian(rho: f64) -> PairCopula {
    PairCopula::new(CopulaFamily::Gaussian, rho).unwrap_or(PairCopula::from_unconstrained(CopulaFamily::Gaussian, rho.atanh()))
}

fn screen_with(pair: &PairData<'_>, key: &EdgeKey, base_ll: f64, tol: &Tolerances) -> CandidateFit {
    let zero = [gaussian(0.0), gaussian(0.0)];
    let init = [0, 1].map(|y| {
        let tau = pair.class_tau(y);
        let rho = CopulaFamily::Gaussian.theta_from_tau(tau).unwrap_or(0.0).clamp(-0.95, 0.95);
        gaussian(rho)
    });
    let start = if pair.loglik(&init) > pair.loglik(&zero) { init } else { zero };
    let (cops, ll) = pair.fit(start, [true, true], tol);
    let gain = ll - base_ll;
    if gain > 0.0 {
        CandidateFit { key: key.clone(), gain, thetas: [0, 1].map(|y| cops[y].theta().unwrap_or(0.0)) }
    } else {
        CandidateFit { key: key.clone(), gain: 0.0, thetas: [0.0, 0.0] }
    }
}

fn frozen_log_odds(current: &ModelParams, data: &Dataset) -> Vec<f64> {
    exec::map_range(data.n(), |i| current.log_odds(data.row(i)))
}

fn frozen_loglik(data: &Dataset, base: &[f64]) -> f64 {
    let y = data.y();
    exec::chunked_sum(data.n(), |r| r.map(|i| bernoulli_loglik(y[i], base[i])).sum())
}

fn screen(current: &ModelParams, key: &EdgeKey, data: &Dataset, base: &[f64], base_ll: f64, tol: &Tolerances) -> CandidateFit {
    match PairData::new(current, key, data, base) {
        Ok(pair) => screen_with(&pair, key, base_ll, tol),
        Err(e) => {
            log::warn!("candidate {key} could not be evaluated: {e}");
            CandidateFit { key: key.clone(), gain: 0.0, thetas: [0.0, 0.0] }
        }
    }
}

/// Log-likelihood gain from adding `key` with Gaussian copulas in both
/// classes, fitting only their two parameters.
pub fn candidate_gain(current: &ModelParams, key: &EdgeKey, data: &Dataset, tol: &Tolerances) -> CandidateFit {
    let base = frozen_log_odds(current, data);
    let base_ll = frozen_loglik(data, &base);
    screen(current, key, data, &base, base_ll, tol)
}

/// Copulas chosen for an accepted edge.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyChoice {
    pub copulas: [PairCopula; 2],
    pub loglik: f64,
}

fn family_select_with(pair: &PairData<'_>, thetas: [f64; 2], families: &[CopulaFamily], tol: &Tolerances) -> FamilyChoice {
    let incumbent = [gaussian(thetas[0]), gaussian(thetas[1])];
    let incumbent_ll = pair.loglik(&incumbent);

    let mut per_class = incumbent;
    for y in 0..2 {
        let mut best = (incumbent[y], incumbent_ll);
        for &fam in families {
            if fam == CopulaFamily::Gaussian || !fam.has_parameter() {
                continue;
            }
            // Clayton and Gumbel only carry positive dependence.
            if thetas[y] <= 0.0 {
                continue;
            }
            let tau = CopulaFamily::Gaussian.tau_from_theta(thetas[y]);
            let theta = fam.theta_from_tau(tau).unwrap_or_else(|_| fam.fallback_theta());
            let Ok(cop) = PairCopula::new(fam, theta) else { continue };
            let mut start = incumbent;
            start[y] = cop;
            let mut free = [false; 2];
            free[y] = true;
            let (fitted, ll) = pair.fit(start, free, tol);
            if ll > best.1 {
                best = (fitted[y], ll);
            }
        }
        per_class[y] = best.0;
    }

    let mut options = vec![(incumbent, incumbent_ll)];
    if per_class[0].family() != CopulaFamily::Gaussian || per_class[1].family() != CopulaFamily::Gaussian {
        options.push(pair.fit(per_class, [true, true], tol));
        for y in 0..2 {
            if per_class[y].family() != CopulaFamily::Gaussian {
                let mut mixed = incumbent;
                mixed[y] = per_class[y];
                options.push(pair.fit(mixed, [true, true], tol));
            }
        }
    }
    let (copulas, loglik) = options
        .into_iter()
        .fold(None, |acc: Option<([PairCopula; 2], f64)>, o| match acc {
            Some(a) if a.1 >= o.1 => Some(a),
            _ => Some(o),
        })
        .expect("at least the incumbent");
    FamilyChoice { copulas, loglik }
}

/// Chooses the copula family of each class for an accepted edge, starting
/// from its Gaussian screening fit.
pub fn family_select(
    current: &ModelParams,
    fit: &CandidateFit,
    data: &Dataset,
    families: &[CopulaFamily],
    tol: &Tolerances,
) -> Result<FamilyChoice> {
    let base = frozen_log_odds(current, data);
    let pair = PairData::new(current, &fit.key, data, &base)?;
    Ok(family_select_with(&pair, fit.thetas, families, tol))
}

fn wrap(trace: &[TraceStep]) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Selection { source: Box::new(e), trace: trace.to_vec() }
}

/// Builds the model: logistic regression start, then greedy tree-by-tree
/// edge acceptance with joint refits.
pub fn select_model(data: &Dataset, config: &SelectConfig) -> Result<FitReport> {
    config.validate()?;
    let mut trace: Vec<TraceStep> = Vec::new();
    let irls = fit_irls(data).map_err(wrap(&trace))?;
    let mut params = ModelParams::linear(irls.beta, data, config.max_trees).map_err(wrap(&trace))?;
    let mut loglik = log_likelihood(&params, data);
    let mut converged = irls.converged;
    let mut iterations = irls.iterations;
    trace.push(TraceStep { description: "logistic regression start".into(), loglik, acceptance: None });

    let tol = &config.tolerances;
    let mut accepted_total = 0;
    'trees: for tree in 1..=config.max_trees {
        let mut accepted = 0;
        loop {
            if config.max_edges.is_some_and(|m| accepted_total >= m) {
                break 'trees;
            }
            let candidates = allowed_candidates(params.structure(), tree);
            if candidates.is_empty() {
                break;
            }
            let base = frozen_log_odds(&params, data);
            let base_ll = frozen_loglik(data, &base);
            let fits = exec::map_slice(&candidates, |key| screen(&params, key, data, &base, base_ll, tol));
            let best = fits
                .iter()
                .fold(None, |acc: Option<&CandidateFit>, f| match acc {
                    Some(a) if a.gain >= f.gain => Some(a),
                    _ => Some(f),
                })
                .expect("candidates are nonempty");
            if !(best.gain >= config.tau) {
                break;
            }
            let pair = PairData::new(&params, &best.key, data, &base).map_err(wrap(&trace))?;
            let choice = family_select_with(&pair, best.thetas, &config.families, tol);
            let (j, k) = best.key.pair;
            let edge = Edge::new(j, k, best.key.given.clone(), choice.copulas[0], choice.copulas[1]);
            let grown = params.with_edge(edge).map_err(wrap(&trace))?;
            let report = optimize(&grown, data, tol).map_err(wrap(&trace))?;
            let families = [0, 1].map(|y| {
                let last = report.params.structure().edges().last().expect("edge was added");
                last.copulas[y].family()
            });
            trace.push(TraceStep {
                description: format!("accept {} in tree {tree} ({}/{})", best.key, families[0], families[1]),
                loglik: report.loglik,
                acceptance: Some(Acceptance {
                    edge: best.key.clone(),
                    tree,
                    families,
                    gain: best.gain,
                    loglik_before: loglik,
                }),
            });
            log::info!("accepted {} in tree {tree}: loglik {loglik:.4} -> {:.4}", best.key, report.loglik);
            params = report.params;
            loglik = report.loglik;
            converged = report.converged;
            iterations += report.iterations;
            accepted += 1;
            accepted_total += 1;
        }
        if accepted == 0 {
            break;
        }
    }

    let std_errors = if config.standard_errors { standard_errors(&fisher_info(&params, data)) } else { None };
    Ok(FitReport { params, loglik, trace, std_errors, converged, iterations })
}
