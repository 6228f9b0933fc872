//! One-parameter bivariate copulas.
//!
//! Every family here is exchangeable, so `h(u | v)` and `h(v | u)` share one
//! formula and the argument order of [`PairCopula::log_density`] does not
//! matter. Unit-interval inputs are clamped into `[UNIT_EPS, 1 - UNIT_EPS]`
//! before evaluation.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;

pub const UNIT_EPS: f64 = 1e-10;

// Bounds applied when mapping back from the unconstrained scale. They keep
// iterates away from numerically degenerate corners of each family.
const MAX_ABS_RHO: f64 = 0.999_999;
const MIN_CLAYTON: f64 = 1e-8;
const MAX_CLAYTON: f64 = 200.0;
const MAX_GUMBEL: f64 = 100.0;

/// Small dependence used when a Kendall-tau start is unavailable.
pub const FALLBACK_DEPENDENCE: f64 = 0.05;

#[inline]
pub fn clamp_unit(u: f64) -> f64 {
    u.clamp(UNIT_EPS, 1.0 - UNIT_EPS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CopulaFamily {
    Independence,
    Gaussian,
    Clayton,
    Gumbel,
}

impl CopulaFamily {
    pub const PARAMETRIC: [CopulaFamily; 3] =
        [CopulaFamily::Gaussian, CopulaFamily::Clayton, CopulaFamily::Gumbel];

    pub fn name(self) -> &'static str {
        match self {
            CopulaFamily::Independence => "independence",
            CopulaFamily::Gaussian => "gaussian",
            CopulaFamily::Clayton => "clayton",
            CopulaFamily::Gumbel => "gumbel",
        }
    }

    pub fn has_parameter(self) -> bool {
        self != CopulaFamily::Independence
    }

    /// Whether `theta` lies in the family's parameter domain.
    pub fn admits(self, theta: f64) -> bool {
        if !theta.is_finite() {
            return false;
        }
        match self {
            CopulaFamily::Independence => true,
            CopulaFamily::Gaussian => theta > -1.0 && theta < 1.0,
            CopulaFamily::Clayton => theta > 0.0,
            CopulaFamily::Gumbel => theta >= 1.0,
        }
    }

    /// Parameter matching Kendall's tau under the standard closed-form maps.
    pub fn theta_from_tau(self, tau: f64) -> Result<f64> {
        let err = Error::TauInversion { family: self, tau };
        if !tau.is_finite() || tau <= -1.0 || tau >= 1.0 {
            return Err(err);
        }
        match self {
            CopulaFamily::Independence => Err(err),
            CopulaFamily::Gaussian => Ok((FRAC_PI_2 * tau).sin()),
            CopulaFamily::Clayton if tau > 0.0 => Ok(2.0 * tau / (1.0 - tau)),
            CopulaFamily::Gumbel if tau > 0.0 => Ok(1.0 / (1.0 - tau)),
            _ => Err(err),
        }
    }

    /// Kendall's tau implied by `theta`.
    pub fn tau_from_theta(self, theta: f64) -> f64 {
        match self {
            CopulaFamily::Independence => 0.0,
            CopulaFamily::Gaussian => 2.0 / PI * theta.asin(),
            CopulaFamily::Clayton => theta / (theta + 2.0),
            CopulaFamily::Gumbel => 1.0 - 1.0 / theta,
        }
    }

    /// A small positive-dependence parameter inside the domain.
    pub fn fallback_theta(self) -> f64 {
        match self {
            CopulaFamily::Independence => 0.0,
            CopulaFamily::Gaussian | CopulaFamily::Clayton => FALLBACK_DEPENDENCE,
            CopulaFamily::Gumbel => 1.0 + FALLBACK_DEPENDENCE,
        }
    }
}

impl fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CopulaFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "independence" | "indep" => Ok(CopulaFamily::Independence),
            "gaussian" | "normal" => Ok(CopulaFamily::Gaussian),
            "clayton" => Ok(CopulaFamily::Clayton),
            "gumbel" => Ok(CopulaFamily::Gumbel),
            other => Err(format!("unknown copula family `{other}`")),
        }
    }
}

/// A family together with a parameter from its domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCopula {
    family: CopulaFamily,
    theta: f64,
}

impl PairCopula {
    pub fn new(family: CopulaFamily, theta: f64) -> Result<Self> {
        if family == CopulaFamily::Independence {
            return Ok(Self::independence());
        }
        if !family.admits(theta) {
            return Err(Error::ParameterDomain { family, theta });
        }
        Ok(Self { family, theta })
    }

    pub const fn independence() -> Self {
        Self { family: CopulaFamily::Independence, theta: 0.0 }
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    /// The dependence parameter; `None` for independence.
    pub fn theta(&self) -> Option<f64> {
        self.family.has_parameter().then_some(self.theta)
    }

    pub fn is_independence(&self) -> bool {
        self.family == CopulaFamily::Independence
    }

    pub fn kendall_tau(&self) -> f64 {
        self.family.tau_from_theta(self.theta)
    }

    /// Log of the copula density at `(u, v)`.
    pub fn log_density(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp_unit(u), clamp_unit(v));
        match self.family {
            CopulaFamily::Independence => 0.0,
            CopulaFamily::Gaussian => {
                gaussian_log_density_scores(self.theta, normal::quantile(u), normal::quantile(v))
            }
            CopulaFamily::Clayton => clayton_log_density(self.theta, u, v),
            CopulaFamily::Gumbel => gumbel_log_density(self.theta, u, v),
        }
    }

    /// Conditional distribution function `h(u | v) = dC(u, v) / dv`.
    pub fn h(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp_unit(u), clamp_unit(v));
        let out = match self.family {
            CopulaFamily::Independence => u,
            CopulaFamily::Gaussian => {
                let rho = self.theta;
                let (zu, zv) = (normal::quantile(u), normal::quantile(v));
                normal::cdf((zu - rho * zv) / (1.0 - rho * rho).sqrt())
            }
            CopulaFamily::Clayton => clayton_ln_h(self.theta, u, v).exp(),
            CopulaFamily::Gumbel => gumbel_ln_h(self.theta, u, v).exp(),
        };
        clamp_unit(out)
    }

    /// Solves `h(u | v) = w` for `u`.
    pub fn h_inverse(&self, w: f64, v: f64) -> f64 {
        let (w, v) = (clamp_unit(w), clamp_unit(v));
        let out = match self.family {
            CopulaFamily::Independence => w,
            CopulaFamily::Gaussian => {
                let rho = self.theta;
                let z = normal::quantile(w) * (1.0 - rho * rho).sqrt() + rho * normal::quantile(v);
                normal::cdf(z)
            }
            CopulaFamily::Clayton => {
                let t = self.theta;
                let b = -t / (1.0 + t) * w.ln();
                let ln_s = -t * v.ln() + b.exp_m1().ln();
                let ln_1p_s = if ln_s > 35.0 { ln_s } else { ln_s.exp().ln_1p() };
                (-ln_1p_s / t).exp()
            }
            CopulaFamily::Gumbel => self.h_inverse_bisect(w, v),
        };
        clamp_unit(out)
    }

    fn h_inverse_bisect(&self, w: f64, v: f64) -> f64 {
        let (mut lo, mut hi) = (UNIT_EPS, 1.0 - UNIT_EPS);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if self.h(mid, v) < w {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Copula distribution function `C(u, v)`.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (clamp_unit(u), clamp_unit(v));
        match self.family {
            CopulaFamily::Independence => u * v,
            CopulaFamily::Gaussian => {
                bivariate_normal_cdf(normal::quantile(u), normal::quantile(v), self.theta)
            }
            CopulaFamily::Clayton => (-clayton_ln_sum(self.theta, u, v) / self.theta).exp(),
            CopulaFamily::Gumbel => {
                let (x, y) = (-u.ln(), -v.ln());
                (-gumbel_a(self.theta, x, y).0).exp()
            }
        }
    }

    /// Maps the parameter onto the real line.
    pub fn to_unconstrained(&self) -> f64 {
        match self.family {
            CopulaFamily::Independence => 0.0,
            CopulaFamily::Gaussian => self.theta.atanh(),
            CopulaFamily::Clayton => self.theta.ln(),
            CopulaFamily::Gumbel => (self.theta - 1.0).ln(),
        }
    }

    /// Inverse of [`to_unconstrained`](Self::to_unconstrained).
    pub fn from_unconstrained(family: CopulaFamily, psi: f64) -> Self {
        let theta = match family {
            CopulaFamily::Independence => return Self::independence(),
            CopulaFamily::Gaussian => psi.tanh().clamp(-MAX_ABS_RHO, MAX_ABS_RHO),
            CopulaFamily::Clayton => psi.exp().clamp(MIN_CLAYTON, MAX_CLAYTON),
            CopulaFamily::Gumbel => 1.0 + psi.exp().clamp(MIN_CLAYTON, MAX_GUMBEL - 1.0),
        };
        Self { family, theta }
    }
}

impl fmt::Display for PairCopula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.theta() {
            Some(t) => write!(f, "{}({:.4})", self.family, t),
            None => write!(f, "{}", self.family),
        }
    }
}

/// Gaussian copula log-density written in terms of normal scores.
#[inline]
pub fn gaussian_log_density_scores(rho: f64, z1: f64, z2: f64) -> f64 {
    let r2 = rho * rho;
    let one_m = 1.0 - r2;
    -0.5 * one_m.ln() - (r2 * (z1 * z1 + z2 * z2) - 2.0 * rho * z1 * z2) / (2.0 * one_m)
}

/// ln(u^-θ + v^-θ - 1), stable for small and large θ.
fn clayton_ln_sum(theta: f64, u: f64, v: f64) -> f64 {
    let a = -theta * u.ln();
    let b = -theta * v.ln();
    let m = a.max(b);
    if m > 30.0 {
        m + ((a - m).exp() + (b - m).exp() - (-m).exp()).ln()
    } else {
        (a.exp_m1() + b.exp_m1()).ln_1p()
    }
}

fn clayton_log_density(theta: f64, u: f64, v: f64) -> f64 {
    theta.ln_1p() - (1.0 + theta) * (u.ln() + v.ln())
        - (2.0 + 1.0 / theta) * clayton_ln_sum(theta, u, v)
}

fn clayton_ln_h(theta: f64, u: f64, v: f64) -> f64 {
    -(1.0 + theta) * v.ln() - (1.0 + 1.0 / theta) * clayton_ln_sum(theta, u, v)
}

/// Returns `(A, ln A)` with `A = (x^θ + y^θ)^(1/θ)`.
fn gumbel_a(theta: f64, x: f64, y: f64) -> (f64, f64) {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    let ln_a = hi.ln() + ((lo / hi).powf(theta)).ln_1p() / theta;
    (ln_a.exp(), ln_a)
}

fn gumbel_log_density(theta: f64, u: f64, v: f64) -> f64 {
    let (x, y) = (-u.ln(), -v.ln());
    let (a, ln_a) = gumbel_a(theta, x, y);
    -a + x + y + (theta - 1.0) * (x.ln() + y.ln()) + (1.0 - 2.0 * theta) * ln_a
        + (a + theta - 1.0).ln()
}

fn gumbel_ln_h(theta: f64, u: f64, v: f64) -> f64 {
    let (x, y) = (-u.ln(), -v.ln());
    let (a, ln_a) = gumbel_a(theta, x, y);
    -a + y + (theta - 1.0) * y.ln() + (1.0 - theta) * ln_a
}

/// Bivariate standard normal CDF P(X <= a, Y <= b) with correlation `rho`,
/// by Gauss-Legendre quadrature of Plackett's identity.
pub fn bivariate_normal_cdf(a: f64, b: f64, rho: f64) -> f64 {
    let base = normal::cdf(a) * normal::cdf(b);
    if rho == 0.0 {
        return base;
    }
    let upper = rho.asin();
    let integrand = |t: f64| {
        let (s, c) = t.sin_cos();
        (-(a * a + b * b - 2.0 * a * b * s) / (2.0 * c * c)).exp()
    };
    base + crate::quadrature::integrate(integrand, 0.0, upper, 48) / (2.0 * PI)
}

/// Kendall's tau-b in O(n log n) (Knight's algorithm).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    assert_eq!(n, y.len(), "kendall_tau needs paired samples");
    if n < 2 {
        return 0.0;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(y[i].total_cmp(&y[j])));

    let n0 = (n * (n - 1) / 2) as f64;
    let (mut ties_x, mut ties_xy) = (0.0, 0.0);
    let (mut run_x, mut run_xy) = (1usize, 1usize);
    for w in 1..n {
        let (a, b) = (idx[w - 1], idx[w]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                ties_xy += pairs(run_xy);
                run_xy = 1;
            }
        } else {
            ties_x += pairs(run_x);
            ties_xy += pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    ties_x += pairs(run_x);
    ties_xy += pairs(run_xy);

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let swaps = merge_count(&mut ys) as f64;

    let mut ties_y = 0.0;
    let mut run_y = 1usize;
    for w in 1..n {
        if ys[w] == ys[w - 1] {
            run_y += 1;
        } else {
            ties_y += pairs(run_y);
            run_y = 1;
        }
    }
    ties_y += pairs(run_y);

    let concordant_minus_discordant = n0 - ties_x - ties_y + ties_xy - 2.0 * swaps;
    let denom = ((n0 - ties_x) * (n0 - ties_y)).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        concordant_minus_discordant / denom
    }
}

fn pairs(run: usize) -> f64 {
    (run * (run - 1) / 2) as f64
}

/// Sorts in place and returns the number of inversions.
fn merge_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            merged.push(v[j]);
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    swaps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    fn all_test_copulas() -> Vec<PairCopula> {
        let mut out = Vec::new();
        for &t in &[-0.7, 0.2, 0.7] {
            out.push(PairCopula::new(CopulaFamily::Gaussian, t).unwrap());
        }
        for &t in &[0.3, 1.0, 3.0] {
            out.push(PairCopula::new(CopulaFamily::Clayton, t).unwrap());
        }
        for &t in &[1.2, 2.0, 3.5] {
            out.push(PairCopula::new(CopulaFamily::Gumbel, t).unwrap());
        }
        out
    }

    #[test]
    fn independence_and_zero_correlation_are_flat() {
        let ind = PairCopula::independence();
        assert_eq!(ind.log_density(0.13, 0.91), 0.0);
        assert_eq!(ind.h(0.42, 0.77), 0.42);
        let g0 = PairCopula::new(CopulaFamily::Gaussian, 0.0).unwrap();
        assert!(g0.log_density(0.3, 0.8).abs() < 1e-15);
        assert!((g0.h(0.42, 0.1) - 0.42).abs() < 1e-14);
        assert!((g0.h(0.42, 0.9) - 0.42).abs() < 1e-14);
    }

    #[test]
    fn closed_form_density_values() {
        let g = PairCopula::new(CopulaFamily::Gaussian, 0.5).unwrap();
        let expected = (1.0 / 0.75f64.sqrt()).ln();
        assert!((g.log_density(0.5, 0.5) - expected).abs() < 1e-12);
        assert!((expected - 0.143841).abs() < 1e-6);

        let c = PairCopula::new(CopulaFamily::Clayton, 2.0).unwrap();
        let expected = (3.0 * 0.25f64.powf(-3.0) * 7f64.powf(-2.5)).ln();
        assert!((c.log_density(0.5, 0.5) - expected).abs() < 1e-12);
        assert!((expected - 0.39271).abs() < 1e-5);
    }

    #[test]
    fn gaussian_h_matches_finite_difference_of_cdf() {
        let g = PairCopula::new(CopulaFamily::Gaussian, 0.7).unwrap();
        let d = 1e-5;
        let fd = (g.cdf(0.3, 0.6 + d) - g.cdf(0.3, 0.6 - d)) / (2.0 * d);
        assert!((g.h(0.3, 0.6) - fd).abs() < 1e-6);
    }

    #[test]
    fn h_matches_numerical_partial_on_grid() {
        let d = 1e-5;
        for cop in all_test_copulas() {
            for i in 1..=10 {
                for j in 1..=10 {
                    let u = i as f64 / 11.0;
                    let v = j as f64 / 11.0;
                    let fd = (cop.cdf(u, v + d) - cop.cdf(u, v - d)) / (2.0 * d);
                    let h = cop.h(u, v);
                    assert!((h - fd).abs() < 1e-6, "{cop} u={u} v={v} h={h} fd={fd}");
                }
            }
        }
    }

    #[test]
    fn density_integrates_to_one() {
        // Gauss-Legendre on the normal-score scale handles the corner
        // singularities of Clayton and Gumbel far better than a uniform grid.
        let (x, w) = gauss_legendre(200);
        let half = 8.5;
        for cop in all_test_copulas() {
            let mut total = 0.0;
            for (xa, wa) in x.iter().zip(&w) {
                let za = half * xa;
                let ua = normal::cdf(za);
                for (xb, wb) in x.iter().zip(&w) {
                    let zb = half * xb;
                    let ub = normal::cdf(zb);
                    let jac = normal::pdf(za) * normal::pdf(zb) * half * half;
                    total += wa * wb * jac * cop.log_density(ua, ub).exp();
                }
            }
            assert!((total - 1.0).abs() < 1e-3, "{cop}: {total}");
        }
    }

    #[test]
    fn h_is_monotone_in_u() {
        for cop in all_test_copulas() {
            for &v in &[0.01, 0.3, 0.5, 0.9, 0.999] {
                let mut prev = 0.0;
                for i in 1..200 {
                    let h = cop.h(i as f64 / 200.0, v);
                    assert!(h >= prev, "{cop} v={v}");
                    prev = h;
                }
            }
        }
    }

    #[test]
    fn density_is_symmetric() {
        for cop in all_test_copulas() {
            for &(u, v) in &[(0.1, 0.7), (0.35, 0.95), (0.02, 0.6)] {
                let a = cop.log_density(u, v);
                let b = cop.log_density(v, u);
                assert!((a - b).abs() < 1e-12, "{cop}");
            }
        }
    }

    #[test]
    fn near_independence_limits() {
        let c = PairCopula::new(CopulaFamily::Clayton, 1e-4).unwrap();
        let g = PairCopula::new(CopulaFamily::Gumbel, 1.0 + 1e-4).unwrap();
        for i in 1..10 {
            for j in 1..10 {
                let (u, v) = (i as f64 / 10.0, j as f64 / 10.0);
                assert!(c.log_density(u, v).abs() < 1e-3);
                assert!(g.log_density(u, v).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn h_inverse_round_trips() {
        for cop in all_test_copulas() {
            for &v in &[0.05, 0.5, 0.93] {
                for &u in &[0.01, 0.2, 0.5, 0.8, 0.99] {
                    let w = cop.h(u, v);
                    let back = cop.h_inverse(w, v);
                    assert!((back - u).abs() < 1e-8, "{cop} u={u} v={v} back={back}");
                }
            }
        }
    }

    #[test]
    fn tau_inversion() {
        assert_eq!(CopulaFamily::Gaussian.theta_from_tau(0.0).unwrap(), 0.0);
        assert!((CopulaFamily::Clayton.theta_from_tau(0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!((CopulaFamily::Gumbel.theta_from_tau(0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!(CopulaFamily::Clayton.theta_from_tau(-0.2).is_err());
        assert!(CopulaFamily::Gumbel.theta_from_tau(0.0).is_err());
        assert!(CopulaFamily::Gaussian.theta_from_tau(1.0).is_err());
        for fam in CopulaFamily::PARAMETRIC {
            let th = fam.theta_from_tau(0.4).unwrap();
            assert!((fam.tau_from_theta(th) - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn unconstrained_round_trip() {
        assert_eq!(PairCopula::from_unconstrained(CopulaFamily::Gaussian, 0.0).theta(), Some(0.0));
        assert_eq!(PairCopula::from_unconstrained(CopulaFamily::Clayton, 0.0).theta(), Some(1.0));
        let g = PairCopula::new(CopulaFamily::Gumbel, 2.5).unwrap();
        assert!((g.to_unconstrained() - 1.5f64.ln()).abs() < 1e-15);
        for cop in all_test_copulas() {
            let back = PairCopula::from_unconstrained(cop.family(), cop.to_unconstrained());
            assert!((back.theta().unwrap() - cop.theta().unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn domain_violations_are_rejected() {
        assert!(PairCopula::new(CopulaFamily::Gaussian, 1.0).is_err());
        assert!(PairCopula::new(CopulaFamily::Clayton, 0.0).is_err());
        assert!(PairCopula::new(CopulaFamily::Gumbel, 0.99).is_err());
        assert!(PairCopula::new(CopulaFamily::Gaussian, f64::NAN).is_err());
        assert!(PairCopula::new(CopulaFamily::Independence, 123.0).unwrap().theta().is_none());
    }

    fn brute_tau(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let (mut s, mut tx, mut ty) = (0.0, 0.0, 0.0);
        let mut n0: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let a = (x[i] - x[j]).signum() * if x[i] == x[j] { 0.0 } else { 1.0 };
                let b = (y[i] - y[j]).signum() * if y[i] == y[j] { 0.0 } else { 1.0 };
                s += a * b;
                n0 += 1.0;
                if a == 0.0 {
                    tx += 1.0;
                }
                if b == 0.0 {
                    ty += 1.0;
                }
            }
        }
        s / ((n0 - tx) * (n0 - ty)).sqrt()
    }

    #[test]
    fn kendall_matches_brute_force_with_ties() {
        let x = [1.0, 2.0, 2.0, 3.0, 5.0, 4.0, 4.0, 0.5, 7.0, 2.0];
        let y = [3.0, 1.0, 1.0, 2.0, 6.0, 6.0, 5.0, 0.0, 2.0, 9.0];
        assert!((kendall_tau(&x, &y) - brute_tau(&x, &y)).abs() < 1e-12);
        let z: Vec<f64> = (0..40).map(|i| ((i * 37) % 17) as f64).collect();
        let w: Vec<f64> = (0..40).map(|i| ((i * 11) % 13) as f64 + 0.5 * i as f64).collect();
        assert!((kendall_tau(&z, &w) - brute_tau(&z, &w)).abs() < 1e-12);
    }
}
