use proptest::prelude::*;

use vinelogit::simbench::{
    auc, fit_method, oos_loglik, run_benchmark, simulate, simulate_stream, Method, Scenario, SimModelSpec, Strength,
};
use vinelogit::SelectConfig;

fn brute_auc(s: &[f64], y: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..s.len() {
        for j in 0..s.len() {
            if y[i] == 1.0 && y[j] == 0.0 {
                pairs += 1.0;
                wins += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
            }
        }
    }
    wins / pairs
}

fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..60).prop_flat_map(|n| {
        (
            proptest::collection::vec(-5.0f64..5.0, n),
            proptest::collection::vec(prop::bool::ANY, n).prop_map(|v| {
                let mut y: Vec<f64> = v.into_iter().map(|b| b as u8 as f64).collect();
                y[0] = 1.0;
                y[1] = 0.0;
                y
            }),
        )
    })
}

proptest! {
    #[test]
    fn auc_matches_pair_counting((s, y) in scored()) {
        let rounded: Vec<f64> = s.iter().map(|v| (v * 2.0).round() / 2.0).collect();
        prop_assert!((auc(&rounded, &y).unwrap() - brute_auc(&rounded, &y)).abs() < 1e-12);
    }

    #[test]
    fn auc_ignores_increasing_transforms((s, y) in scored()) {
        let t: Vec<f64> = s.iter().map(|v| v * v * v + 2.0 * v).collect();
        prop_assert_eq!(auc(&s, &y).unwrap(), auc(&t, &y).unwrap());
    }

    #[test]
    fn reversed_scores_complement((s, y) in scored()) {
        let mut sorted = s.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assume!(sorted.windows(2).all(|w| w[0] < w[1]));
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        prop_assert!((auc(&s, &y).unwrap() + auc(&neg, &y).unwrap() - 1.0).abs() < 1e-12);
    }
}

fn method_auc(method: Method, spec: &SimModelSpec, n: usize, seed: u64) -> f64 {
    let train = simulate_stream(spec, n, seed, 0).unwrap();
    let test = simulate_stream(spec, 4000, seed, 1).unwrap();
    let model = fit_method(method, &train, &SelectConfig::default()).unwrap();
    let scores: Vec<f64> = (0..test.n()).map(|i| model.log_odds(test.row(i))).collect();
    auc(&scores, test.y()).unwrap()
}

#[test]
fn equal_classes_give_chance_level_auc() {
    let mut spec = SimModelSpec::preset(5, 4, Strength::Strong).unwrap();
    spec.mu[1] = spec.mu[0].clone();
    let a = method_auc(Method::LinLr, &spec, 1000, 2);
    assert!((a - 0.5).abs() < 0.05, "auc {a}");
}

#[test]
fn scale_differences_favour_naive_bayes_over_linear() {
    let spec = SimModelSpec::preset(1, 8, Strength::Strong).unwrap();
    let nb = method_auc(Method::NaiveBayes, &spec, 500, 3);
    let lin = method_auc(Method::LinLr, &spec, 500, 3);
    assert!(nb > 0.6, "naive Bayes {nb}");
    assert!((lin - 0.5).abs() < 0.05, "linear {lin}");
}

#[test]
fn mean_shifts_are_handled_by_both_baselines() {
    let spec = SimModelSpec::preset(5, 8, Strength::Strong).unwrap();
    let nb = method_auc(Method::NaiveBayes, &spec, 1000, 4);
    let lin = method_auc(Method::LinLr, &spec, 1000, 4);
    assert!(lin > 0.9 && (nb - lin).abs() < 0.02, "nb {nb}, linear {lin}");
}

#[test]
fn separated_classes_reach_full_auc() {
    let mut spec = SimModelSpec::preset(5, 2, Strength::Strong).unwrap();
    spec.mu[1] = vec![12.0, 12.0];
    let a = method_auc(Method::NaiveBayes, &spec, 200, 5);
    assert!(a > 0.9999, "auc {a}");
}

#[test]
fn oracle_log_likelihood_beats_even_odds() {
    let spec = SimModelSpec::preset(2, 8, Strength::Strong).unwrap();
    let d = simulate(&spec, 2000, 6).unwrap();
    let oracle = spec.bayes_oracle().unwrap();
    let scores: Vec<f64> = (0..d.n()).map(|i| oracle.log_odds(d.row(i))).collect();
    let even = vec![0.0; d.n()];
    assert!(oos_loglik(&scores, d.y()) > oos_loglik(&even, d.y()));
}

#[test]
fn benchmark_is_reproducible() {
    let s = Scenario {
        model_id: 5,
        n: 300,
        test_size: 600,
        replicates: 3,
        methods: vec![Method::LinLr, Method::NaiveBayes],
        ..Default::default()
    };
    let a = run_benchmark(&s).unwrap();
    let b = run_benchmark(&s).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 2);
    assert_eq!(a.results.len(), 6);
    let row = a.row(Method::LinLr).unwrap();
    assert_eq!((row.replicates, row.failures), (3, 0));
    assert!(row.mean_auc >= 0.5 && row.mean_auc <= 1.0);
}
