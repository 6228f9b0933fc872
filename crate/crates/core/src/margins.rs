//! Class-conditional margins and their link to logistic coefficients.
//!
//! Each covariate has a natural exponential family margin given the class:
//! Gaussian with a shared variance, Bernoulli, or Poisson. The class log
//! density ratio of such a margin is affine in `x`, so a set of margins maps
//! to a linear predictor. The reverse map fixes the sample moments of each
//! column and solves the intercept equation for the class prior.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::copula::clamp_unit;
use crate::error::{Error, Result};
use crate::normal;

/// Below this |beta_j| the continuous variance uses its Taylor expansion.
pub const SMALL_BETA: f64 = 1e-6;

const PI_MIN: f64 = 1e-8;
const SCAN_POINTS: usize = 512;
const ROOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginKind {
    Continuous,
    Binary,
    Count,
}

impl MarginKind {
    pub fn name(self) -> &'static str {
        match self {
            MarginKind::Continuous => "continuous",
            MarginKind::Binary => "binary",
            MarginKind::Count => "count",
        }
    }
}

impl fmt::Display for MarginKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MarginKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "continuous" | "gaussian" => Ok(MarginKind::Continuous),
            "binary" | "bernoulli" => Ok(MarginKind::Binary),
            "count" | "poisson" => Ok(MarginKind::Count),
            other => Err(format!("unknown margin kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Margin {
    Continuous { mu0: f64, mu1: f64, sigma: f64 },
    Binary { rho0: f64, rho1: f64 },
    Count { lambda0: f64, lambda1: f64 },
}

impl Margin {
    pub fn kind(&self) -> MarginKind {
        match self {
            Margin::Continuous { .. } => MarginKind::Continuous,
            Margin::Binary { .. } => MarginKind::Binary,
            Margin::Count { .. } => MarginKind::Count,
        }
    }

    fn check(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        let ok = match *self {
            Margin::Continuous { mu0, mu1, sigma } => {
                mu0.is_finite() && mu1.is_finite() && sigma.is_finite() && sigma > 0.0
            }
            Margin::Binary { rho0, rho1 } => open_unit(rho0) && open_unit(rho1),
            Margin::Count { lambda0, lambda1 } => {
                lambda0.is_finite() && lambda1.is_finite() && lambda0 > 0.0 && lambda1 > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidMargin(format!("{self:?}")))
        }
    }

    /// Slope of the class log density ratio in `x`.
    pub fn slope(&self) -> f64 {
        match *self {
            Margin::Continuous { mu0, mu1, sigma } => (mu1 - mu0) / (sigma * sigma),
            Margin::Binary { rho0, rho1 } => {
                (rho1 / (1.0 - rho1)).ln() - (rho0 / (1.0 - rho0)).ln()
            }
            Margin::Count { lambda0, lambda1 } => (lambda1 / lambda0).ln(),
        }
    }

    /// Value of the class log density ratio at `x = 0`.
    pub fn offset(&self) -> f64 {
        match *self {
            Margin::Continuous { mu0, mu1, sigma } => {
                0.5 * (mu0 * mu0 - mu1 * mu1) / (sigma * sigma)
            }
            Margin::Binary { rho0, rho1 } => (-rho1).ln_1p() - (-rho0).ln_1p(),
            Margin::Count { lambda0, lambda1 } => lambda0 - lambda1,
        }
    }

    /// Mean of the covariate when the class is 1 with probability `pi`.
    pub fn mixture_mean(&self, pi: f64) -> f64 {
        let (m0, m1) = match *self {
            Margin::Continuous { mu0, mu1, .. } => (mu0, mu1),
            Margin::Binary { rho0, rho1 } => (rho0, rho1),
            Margin::Count { lambda0, lambda1 } => (lambda0, lambda1),
        };
        (1.0 - pi) * m0 + pi * m1
    }

    /// Variance of the covariate under the class mixture with weight `pi`.
    pub fn mixture_var(&self, pi: f64) -> f64 {
        let within = |v0: f64, v1: f64| (1.0 - pi) * v0 + pi * v1;
        let (m0, m1, w) = match *self {
            Margin::Continuous { mu0, mu1, sigma } => (mu0, mu1, sigma * sigma),
            Margin::Binary { rho0, rho1 } => (rho0, rho1, within(rho0 * (1.0 - rho0), rho1 * (1.0 - rho1))),
            Margin::Count { lambda0, lambda1 } => (lambda0, lambda1, within(lambda0, lambda1)),
        };
        w + pi * (1.0 - pi) * (m1 - m0) * (m1 - m0)
    }
}

/// Per-column margins plus the class-1 prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginSet {
    pi_y: f64,
    columns: Vec<Margin>,
}

impl MarginSet {
    pub fn new(pi_y: f64, columns: Vec<Margin>) -> Result<Self> {
        if !(pi_y > 0.0 && pi_y < 1.0) {
            return Err(Error::InvalidMargin(format!("class prior {pi_y} is not in (0, 1)")));
        }
        for m in &columns {
            m.check()?;
        }
        Ok(Self { pi_y, columns })
    }

    pub fn pi_y(&self) -> f64 {
        self.pi_y
    }

    pub fn columns(&self) -> &[Margin] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn kinds(&self) -> Vec<MarginKind> {
        self.columns.iter().map(Margin::kind).collect()
    }

    /// Coefficient vector `(beta_0, beta_1, ..., beta_p)` implied by the margins.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut beta = Vec::with_capacity(self.columns.len() + 1);
        let logit = (self.pi_y / (1.0 - self.pi_y)).ln();
        beta.push(logit + self.columns.iter().map(Margin::offset).sum::<f64>());
        beta.extend(self.columns.iter().map(Margin::slope));
        beta
    }

    /// Gaussian location and scale of continuous column `j` in class `y`.
    pub fn location_scale(&self, j: usize, y: usize) -> Result<(f64, f64)> {
        match self.columns.get(j) {
            Some(&Margin::Continuous { mu0, mu1, sigma }) => {
                Ok((if y == 1 { mu1 } else { mu0 }, sigma))
            }
            Some(m) => Err(Error::ColumnKind { column: j, kind: m.kind() }),
            None => Err(Error::InvalidMargin(format!("no column {j}"))),
        }
    }

    /// Class-`y` distribution function of continuous column `j` at `x`.
    pub fn cdf(&self, j: usize, y: usize, x: f64) -> Result<f64> {
        let (mu, sigma) = self.location_scale(j, y)?;
        Ok(clamp_unit(normal::cdf((x - mu) / sigma)))
    }

    /// log p(x | Y = 1) - log p(x | Y = 0) for column `j`.
    pub fn log_density_ratio(&self, j: usize, x: f64) -> f64 {
        let m = &self.columns[j];
        m.offset() + m.slope() * x
    }
}

/// Column means and variances held fixed while coefficients move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub means: Vec<f64>,
    pub vars: Vec<f64>,
    pub response_mean: f64,
}

impl SampleMoments {
    /// Moments of column-major data; variances use the `n - 1` divisor.
    pub fn from_columns<'a, I>(columns: I, response: &[f64]) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let (mut means, mut vars) = (Vec::new(), Vec::new());
        for col in columns {
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            means.push(mean);
            vars.push(if col.len() > 1 { ss / (n - 1.0) } else { 0.0 });
        }
        let response_mean = response.iter().sum::<f64>() / response.len().max(1) as f64;
        Self { means, vars, response_mean }
    }

    /// The moments a margin set implies, useful for round trips.
    pub fn implied_by(margins: &MarginSet) -> Self {
        let pi = margins.pi_y;
        Self {
            means: margins.columns.iter().map(|m| m.mixture_mean(pi)).collect(),
            vars: margins.columns.iter().map(|m| m.mixture_var(pi)).collect(),
            response_mean: pi,
        }
    }
}

/// Continuous margin with slope `beta` matching mean `mean` and variance `var`.
fn continuous_at(beta: f64, mean: f64, var: f64, pi: f64) -> Margin {
    let a = beta * beta * pi * (1.0 - pi);
    let sigma2 = if beta.abs() < SMALL_BETA {
        var - a * var * var + 2.0 * a * a * var * var * var
    } else {
        2.0 * var / ((1.0 + 4.0 * a * var).sqrt() + 1.0)
    };
    Margin::Continuous {
        mu0: mean - beta * pi * sigma2,
        mu1: mean + beta * (1.0 - pi) * sigma2,
        sigma: sigma2.sqrt(),
    }
}

fn binary_at(beta: f64, mean: f64, pi: f64) -> Result<Margin> {
    let eb = beta.exp();
    let c = -beta.exp_m1();
    let a = 1.0 + c * (mean - pi);
    let disc = a * a - 4.0 * c * (1.0 - pi) * mean;
    if disc < 0.0 {
        return Err(Error::Conversion(format!(
            "negative discriminant {disc:e} for binary slope {beta} at class prior {pi}"
        )));
    }
    let root = disc.sqrt();
    let mut rho0 = 2.0 * mean / (a + root);
    if !(rho0 > 0.0 && rho0 < 1.0) && c != 0.0 {
        rho0 = (a + root) / (2.0 * c * (1.0 - pi));
    }
    let rho1 = eb * rho0 / (1.0 - c * rho0);
    let m = Margin::Binary { rho0, rho1 };
    m.check().map_err(|_| {
        Error::Conversion(format!("binary probabilities ({rho0}, {rho1}) leave (0, 1)"))
    })?;
    Ok(m)
}

fn count_at(beta: f64, mean: f64, pi: f64) -> Result<Margin> {
    let lambda0 = mean / (1.0 + beta.exp_m1() * pi);
    let m = Margin::Count { lambda0, lambda1: lambda0 * beta.exp() };
    m.check().map_err(|_| Error::Conversion(format!("count rates for slope {beta} are invalid")))?;
    Ok(m)
}

fn columns_at(beta: &[f64], moments: &SampleMoments, kinds: &[MarginKind], pi: f64) -> Result<Vec<Margin>> {
    kinds
        .iter()
        .enumerate()
        .map(|(j, kind)| {
            let (b, mean) = (beta[j + 1], moments.means[j]);
            match kind {
                MarginKind::Continuous => Ok(continuous_at(b, mean, moments.vars[j], pi)),
                MarginKind::Binary => binary_at(b, mean, pi),
                MarginKind::Count => count_at(b, mean, pi),
            }
        })
        .collect()
}

/// Residual of the intercept equation at `logit(pi) = t`.
pub fn intercept_residual(
    beta: &[f64],
    moments: &SampleMoments,
    kinds: &[MarginKind],
    t: f64,
) -> Result<f64> {
    let pi = logistic(t);
    let cols = columns_at(beta, moments, kinds, pi)?;
    Ok(t - beta[0] + cols.iter().map(Margin::offset).sum::<f64>())
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn check_inputs(beta: &[f64], moments: &SampleMoments, kinds: &[MarginKind]) -> Result<()> {
    let p = kinds.len();
    if beta.len() != p + 1 || moments.means.len() != p || moments.vars.len() != p {
        return Err(Error::Conversion(format!(
            "expected {} coefficients and {p} moments, got {} and {}",
            p + 1,
            beta.len(),
            moments.means.len()
        )));
    }
    if let Some(b) = beta.iter().find(|b| !b.is_finite()) {
        return Err(Error::Conversion(format!("non-finite coefficient {b}")));
    }
    for (j, kind) in kinds.iter().enumerate() {
        let (mean, var) = (moments.means[j], moments.vars[j]);
        let ok = match kind {
            MarginKind::Continuous => mean.is_finite() && var > 0.0 && var.is_finite(),
            MarginKind::Binary => mean > 0.0 && mean < 1.0,
            MarginKind::Count => mean > 0.0 && mean.is_finite(),
        };
        if !ok {
            return Err(Error::Conversion(format!(
                "column {j} ({kind}) has unusable moments: mean {mean}, variance {var}"
            )));
        }
    }
    Ok(())
}

/// Margins whose coefficients equal `beta` and whose mixture moments equal
/// the sample moments.
///
/// The class prior solves the intercept equation. A grid scan in logit space
/// brackets every sign change; the root whose prior is closest to the sample
/// response mean is refined by bisection.
pub fn margins_from_coeffs(
    beta: &[f64],
    moments: &SampleMoments,
    kinds: &[MarginKind],
) -> Result<MarginSet> {
    check_inputs(beta, moments, kinds)?;
    let lo = (PI_MIN / (1.0 - PI_MIN)).ln();
    let hi = -lo;
    let f = |t: f64| intercept_residual(beta, moments, kinds, t).ok().filter(|v| v.is_finite());

    let grid: Vec<(f64, Option<f64>)> = (0..SCAN_POINTS)
        .map(|i| {
            let t = lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64;
            (t, f(t))
        })
        .collect();

    let mut roots: Vec<(f64, f64)> = Vec::new();
    for w in grid.windows(2) {
        if let ((t0, Some(f0)), (t1, Some(f1))) = (w[0], w[1]) {
            if f0 == 0.0 {
                roots.push((t0, t0));
            } else if f0.signum() != f1.signum() && f1 != 0.0 {
                roots.push((t0, t1));
            }
        }
    }
    if let Some(&(t, Some(v))) = grid.last() {
        if v == 0.0 {
            roots.push((t, t));
        }
    }
    let target = moments.response_mean;
    let best = roots.into_iter().min_by(|a, b| {
        let da = (logistic(0.5 * (a.0 + a.1)) - target).abs();
        let db = (logistic(0.5 * (b.0 + b.1)) - target).abs();
        da.total_cmp(&db)
    });
    let Some((mut a, mut b)) = best else {
        let vals: Vec<f64> = grid.iter().filter_map(|g| g.1).collect();
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::Conversion(format!(
            "intercept equation has no sign change for class prior in ({PI_MIN}, {}); \
             residual range [{min:e}, {max:e}] over {} finite grid points",
            1.0 - PI_MIN,
            vals.len()
        )));
    };

    let mut fa = f(a).unwrap_or(f64::NAN);
    while b - a > 2.0 * f64::EPSILON * (1.0 + a.abs().max(b.abs())) {
        let mid = 0.5 * (a + b);
        let fm = f(mid).unwrap_or(f64::NAN);
        if fm == 0.0 {
            a = mid;
            b = mid;
            fa = 0.0;
            break;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let fb = f(b).unwrap_or(f64::NAN);
    let t = if fa.abs() <= fb.abs() { a } else { b };
    let resid = fa.abs().min(fb.abs());
    let scale = 1.0 + beta[0].abs();
    if !(resid <= ROOT_TOL * scale) {
        return Err(Error::Conversion(format!(
            "intercept equation residual {resid:e} at logit prior {t} exceeds tolerance"
        )));
    }
    let pi = logistic(t);
    MarginSet::new(pi, columns_at(beta, moments, kinds, pi)?)
}
