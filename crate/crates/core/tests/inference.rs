use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vinelogit::estimation::{
    fisher_info, fit_irls, log_likelihood, log_odds_ci, optimize, sigmoid, standard_errors, ModelParams,
};
use vinelogit::normal;
use vinelogit::optim::{fd_gradient, Tolerances};
use vinelogit::simbench::{simulate, SimModelSpec, Strength};
use vinelogit::{CopulaFamily, Dataset, Edge, PairCopula, VineStructure};

fn data(model: u8, p: usize, n: usize, seed: u64) -> Dataset {
    simulate(&SimModelSpec::preset(model, p, Strength::Strong).unwrap(), n, seed).unwrap()
}

fn random_copula(rng: &mut ChaCha8Rng) -> PairCopula {
    match rng.random_range(0..3) {
        0 => PairCopula::new(CopulaFamily::Gaussian, rng.random_range(-0.7..0.7)).unwrap(),
        1 => PairCopula::new(CopulaFamily::Clayton, rng.random_range(0.2..3.0)).unwrap(),
        _ => PairCopula::new(CopulaFamily::Gumbel, rng.random_range(1.1..2.5)).unwrap(),
    }
}

/// Four variables with a full first tree and one second-tree edge.
fn random_model(rng: &mut ChaCha8Rng, d: &Dataset) -> ModelParams {
    let mut edges = Vec::new();
    for (j, k, given) in [(0, 1, vec![]), (1, 2, vec![]), (2, 3, vec![]), (0, 2, vec![1])] {
        edges.push(Edge::new(j, k, given, random_copula(rng), random_copula(rng)));
    }
    let s = VineStructure::from_edges(2, 0..4, edges).unwrap();
    let beta: Vec<f64> = (0..5).map(|_| rng.random_range(-0.5..0.5)).collect();
    ModelParams::new(beta, s, d.moments(), d.kinds().to_vec()).unwrap()
}

#[test]
fn gradient_agrees_with_directional_secants() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = data(4, 4, 400, 8);
    for _ in 0..5 {
        let params = random_model(&mut rng, &d);
        let f = |psi: &[f64]| match params.with_unconstrained(psi) {
            Ok(p) => log_likelihood(&p, &d),
            Err(_) => f64::NAN,
        };
        let x = params.unconstrained_vector();
        let g = fd_gradient(&f, &x, 1e-6);
        let dir: Vec<f64> = (0..x.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dir: Vec<f64> = dir.iter().map(|v| v / norm).collect();
        let h = 1e-4;
        let shifted = |s: f64| -> Vec<f64> { x.iter().zip(&dir).map(|(a, b)| a + s * b).collect() };
        let secant = (f(&shifted(h)) - f(&shifted(-h))) / (2.0 * h);
        let analytic: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let scale = analytic.abs().max(g.iter().map(|v| v.abs()).fold(0.0, f64::max));
        assert!((secant - analytic).abs() <= 1e-4 * scale, "secant {secant} vs gradient {analytic}");
    }
}

fn logistic_information(d: &Dataset, beta: &[f64]) -> DMatrix<f64> {
    let p1 = d.p() + 1;
    let mut info = DMatrix::zeros(p1, p1);
    for i in 0..d.n() {
        let mut xi = vec![1.0];
        xi.extend_from_slice(d.row(i));
        let eta: f64 = xi.iter().zip(beta).map(|(a, b)| a * b).sum();
        let w = sigmoid(eta) * (1.0 - sigmoid(eta));
        let v = DVector::from_vec(xi);
        info += &v * v.transpose() * w;
    }
    info
}

#[test]
fn information_without_copulas_is_the_logistic_information() {
    let d = data(5, 3, 500, 2);
    let irls = fit_irls(&d).unwrap();
    let params = ModelParams::linear(irls.beta.clone(), &d, 2).unwrap();
    let info = fisher_info(&params, &d);
    let exact = logistic_information(&d, &irls.beta);
    let scale = exact.amax();
    for (a, b) in info.iter().zip(exact.iter()) {
        assert!((a - b).abs() <= 1e-4 * scale, "{a} vs {b}");
    }
}

#[test]
fn doubling_the_data_doubles_the_information() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let d = data(4, 4, 300, 4);
    let doubled = d.concat(&d).unwrap();
    let params = random_model(&mut rng, &d);
    let one = fisher_info(&params, &d);
    let two = fisher_info(&params, &doubled);
    let scale = one.amax();
    for (a, b) in one.iter().zip(two.iter()) {
        assert!((2.0 * a - b).abs() <= 1e-6 * scale, "{a} vs {b}");
    }
}

#[test]
fn quasi_newton_reaches_the_irls_solution() {
    let d = data(1, 4, 600, 6);
    let irls = fit_irls(&d).unwrap();
    let zero = ModelParams::linear(vec![0.0; 5], &d, 2).unwrap();
    let fit = optimize(&zero, &d, &Tolerances::default()).unwrap();
    for (a, b) in fit.params.beta().iter().zip(&irls.beta) {
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
    assert!(fit.loglik >= log_likelihood(&zero, &d));

    let at_optimum = ModelParams::linear(irls.beta.clone(), &d, 2).unwrap();
    let again = optimize(&at_optimum, &d, &Tolerances::default()).unwrap();
    for (a, b) in again.params.beta().iter().zip(&irls.beta) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn log_odds_interval_matches_textbook_formula() {
    let d = data(5, 3, 800, 9);
    let irls = fit_irls(&d).unwrap();
    let params = ModelParams::linear(irls.beta.clone(), &d, 1).unwrap();
    let info = fisher_info(&params, &d);
    let exact = logistic_information(&d, &irls.beta);
    let cov = exact.try_inverse().unwrap();
    let z = normal::quantile(0.975);
    for x in [[0.0, 0.0, 0.0], [1.0, -0.5, 2.0], [-1.2, 0.3, 0.4]] {
        let ci = log_odds_ci(&params, &info, &x, 0.95).unwrap();
        let v = DVector::from_vec(vec![1.0, x[0], x[1], x[2]]);
        let se = (v.transpose() * &cov * &v)[(0, 0)].sqrt();
        let est = params.log_odds(&x);
        assert!((ci.estimate - est).abs() < 1e-12);
        assert!((ci.std_error - se).abs() < 1e-3 * se, "{} vs {se}", ci.std_error);
        assert!((ci.upper - (est + z * se)).abs() < 1e-3 * se);
        assert!((ci.lower - (est - z * se)).abs() < 1e-3 * se);
    }
    let ses = standard_errors(&info).unwrap();
    assert_eq!(ses.len(), 4);
    assert!(ses.iter().all(|s| *s > 0.0));
}
