use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vinelogit::vine::{g_eval, gaussian_pair_closed_form};
use vinelogit::{CopulaFamily, Edge, Margin, MarginSet, PairCopula, VineStructure};

struct Draw {
    mu0: [f64; 2],
    mu1: [f64; 2],
    sigma: [f64; 2],
    theta: [f64; 2],
}

fn draw(rng: &mut ChaCha8Rng) -> Draw {
    let mut u = |a: f64, b: f64| rng.random_range(a..b);
    Draw {
        mu0: [u(-1.0, 1.0), u(-1.0, 1.0)],
        mu1: [u(-1.0, 1.0), u(-1.0, 1.0)],
        sigma: [u(0.5, 2.0), u(0.5, 2.0)],
        theta: [u(-0.9, 0.9), u(-0.9, 0.9)],
    }
}

fn correction(d: &Draw, x: [f64; 2]) -> f64 {
    let gauss = |t| PairCopula::new(CopulaFamily::Gaussian, t).unwrap();
    let s = VineStructure::from_edges(1, 0..2, vec![Edge::new(0, 1, vec![], gauss(d.theta[0]), gauss(d.theta[1]))]).unwrap();
    let cols = (0..2).map(|j| Margin::Continuous { mu0: d.mu0[j], mu1: d.mu1[j], sigma: d.sigma[j] }).collect();
    let m = MarginSet::new(0.5, cols).unwrap();
    g_eval(&s, &m, &x).unwrap()
}

/// Least-squares fit of `1, x1, x2, x1^2, x2^2, x1 x2` to the correction on
/// a grid recovers the coefficients of the expansion.
#[test]
fn grid_least_squares_recovers_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid: Vec<f64> = (0..7).map(|i| -1.5 + 0.5 * i as f64).collect();
    for _ in 0..20 {
        let d = draw(&mut rng);
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for &a in &grid {
            for &b in &grid {
                rows.extend_from_slice(&[1.0, a, b, a * a, b * b, a * b]);
                rhs.push(correction(&d, [a, b]));
            }
        }
        let x = DMatrix::from_row_slice(rhs.len(), 6, &rows);
        let y = DVector::from_vec(rhs);
        let coef = (x.transpose() * &x).cholesky().unwrap().solve(&(x.transpose() * y));

        let t = gaussian_pair_closed_form(d.mu0, d.mu1, d.sigma, d.theta[0], d.theta[1]);
        let expected = [t.a0, t.linear[0], t.linear[1], t.square[0], t.square[1], t.cross];
        for (i, (c, e)) in coef.iter().zip(expected).enumerate() {
            assert!((c - e).abs() < 1e-7 * (1.0 + e.abs()), "coefficient {i}: fitted {c}, closed form {e}");
        }
    }
}

#[test]
fn expansion_matches_correction_pointwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let d = draw(&mut rng);
        let t = gaussian_pair_closed_form(d.mu0, d.mu1, d.sigma, d.theta[0], d.theta[1]);
        for i in 0..5 {
            for j in 0..5 {
                let x = [-2.0 + i as f64, -2.0 + j as f64];
                let g = correction(&d, x);
                assert!((g - t.evaluate(x[0], x[1])).abs() < 1e-8, "at {x:?}");
            }
        }
    }
}
