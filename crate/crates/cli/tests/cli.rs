use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use vinelogit_cli::document::ModelDocument;

fn vinelogit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vinelogit"))
        .args(args)
        .env("VINELOGIT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulated(dir: &TempDir, scenario: &str, seed: u64) -> PathBuf {
    let s = dir.path().join("scenario.toml");
    std::fs::write(&s, scenario).unwrap();
    let data = dir.path().join(format!("data{seed}.csv"));
    let out = vinelogit(&["simulate", p(&s), "--seed", &seed.to_string(), "--out", p(&data)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    data
}

fn continuous_cols(p: usize) -> Vec<String> {
    let mut v: Vec<String> = (0..p).flat_map(|j| ["--col".to_string(), format!("x{j}:continuous")]).collect();
    v.extend(["--col".to_string(), "y:response".to_string()]);
    v
}

fn fit(data: &Path, model: &Path, extra: &[&str]) -> Output {
    let cols = continuous_cols(3);
    let mut args = vec!["fit", p(data), "--out", p(model)];
    args.extend(cols.iter().map(String::as_str));
    args.extend(extra);
    vinelogit(&args)
}

fn read_csv(path_or_text: &str) -> Vec<Vec<String>> {
    path_or_text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn fit_then_predict_reproduces_training_loglik() {
    let dir = TempDir::new().unwrap();
    let data = simulated(&dir, "model_id = 2\np = 3\nn = 400\n", 11);
    let model = dir.path().join("m.json");
    let out = fit(&data, &model, &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = ModelDocument::read(&model).unwrap();
    assert!(!doc.edges.is_empty(), "strong chain dependence should add copula terms");

    let pred = dir.path().join("pred.csv");
    let out = vinelogit(&["predict", p(&model), p(&data), "--out", p(&pred)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&std::fs::read_to_string(&pred).unwrap());
    let labels: Vec<f64> = read_csv(&std::fs::read_to_string(&data).unwrap()).iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(rows.len(), labels.len());
    let mut ll = 0.0;
    for (i, (row, y)) in rows.iter().zip(&labels).enumerate() {
        assert_eq!(row[0], (i + 1).to_string());
        let eta: f64 = row[1].parse().unwrap();
        let prob: f64 = row[2].parse().unwrap();
        assert!((prob - 1.0 / (1.0 + (-eta).exp())).abs() < 1e-12);
        ll += y * eta - (1.0 + eta.exp()).ln();
    }
    assert!((ll - doc.fit.loglik).abs() < 1e-8 * (1.0 + ll.abs()), "{ll} vs {}", doc.fit.loglik);
}

#[test]
fn model_file_round_trips_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    let data = simulated(&dir, "model_id = 4\np = 3\nn = 300\n", 5);
    let model = dir.path().join("m.json");
    assert_eq!(code(&fit(&data, &model, &[])), 0);
    let text = std::fs::read_to_string(&model).unwrap();
    let doc = ModelDocument::from_json(&text).unwrap();
    assert_eq!(doc.to_json(), text);
    doc.params().unwrap();
}

#[test]
fn huge_threshold_fits_plain_logistic_regression() {
    let dir = TempDir::new().unwrap();
    let data = simulated(&dir, "model_id = 2\np = 3\nn = 300\n", 2);
    let model = dir.path().join("m.json");
    let out = fit(&data, &model, &["--tau", "1e18"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("0 copula terms"), "{stdout}");
    assert!(ModelDocument::read(&model).unwrap().edges.is_empty());
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let a = simulated(&dir, "model_id = 3\np = 4\nn = 50\n", 7);
    let first = std::fs::read(&a).unwrap();
    let b = simulated(&dir, "model_id = 3\np = 4\nn = 50\n", 7);
    assert_eq!(first, std::fs::read(&b).unwrap());
    let c = simulated(&dir, "model_id = 3\np = 4\nn = 50\n", 8);
    assert_ne!(first, std::fs::read(&c).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x0,x1,x2,x3,y");
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn bench_reports_one_row_per_method_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let s = dir.path().join("b.toml");
    std::fs::write(&s, "model_id = 5\np = 3\nn = 200\ntest_size = 500\nmethods = [\"lin_lr\", \"nb\"]\n").unwrap();
    let run = || {
        let out = vinelogit(&["bench", p(&s), "--replicates", "3", "--seed", "4"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let first = run();
    assert_eq!(first, run());
    let mut lines = first.lines();
    assert_eq!(lines.next().unwrap(), "model_id,method,n,p,mean_auc,mean_oos_loglik,replicates,failures");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r[0], "5");
        assert_eq!(r[6], "3");
        assert_eq!(r[7], "0");
        let auc: f64 = r[4].parse().unwrap();
        assert!(auc > 0.6 && auc < 1.0, "{auc}");
    }
}

#[test]
fn categorical_columns_expand_to_indicators() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("cat.csv");
    let mut text = String::from("grp,x,id,y\n");
    for i in 0..120 {
        let grp = ["a", "b", "c"][i % 3];
        let x = ((i * 37) % 101) as f64 / 25.0 - 2.0;
        let y = u8::from((i * 7919) % 5 < 2 + (i % 3) / 2);
        text.push_str(&format!("{grp},{x},{i},{y}\n"));
    }
    std::fs::write(&data, &text).unwrap();
    let schema = dir.path().join("schema.toml");
    std::fs::write(&schema, "[columns]\ngrp = \"categorical\"\nx = \"continuous\"\ny = \"response\"\n").unwrap();
    let model = dir.path().join("m.json");
    let out = vinelogit(&["fit", p(&data), "--schema", p(&schema), "--col", "id:ignore", "--out", p(&model)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = ModelDocument::read(&model).unwrap();
    assert_eq!(doc.feature_names(), ["grp=b", "grp=c", "x"]);

    let fresh = dir.path().join("new.csv");
    std::fs::write(&fresh, "grp,x,id\nc,0.5,1\na,-1,2\n").unwrap();
    let out = vinelogit(&["predict", p(&model), p(&fresh)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);

    std::fs::write(&fresh, "grp,x,id\nd,0.5,1\n").unwrap();
    assert_eq!(code(&vinelogit(&["predict", p(&model), p(&fresh)])), 2);
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = TempDir::new().unwrap();
    let data = simulated(&dir, "model_id = 5\np = 3\nn = 100\n", 1);
    let model = dir.path().join("m.json");

    // Flags.
    assert_eq!(code(&fit(&data, &model, &["--tau", "-1"])), 4);
    assert_eq!(code(&fit(&data, &model, &["--families", "clayton,gumbel"])), 4);
    assert_eq!(code(&fit(&data, &model, &["--families", "frank"])), 4);
    assert_eq!(code(&fit(&data, &model, &["--max-trees", "0"])), 4);
    assert_eq!(code(&vinelogit(&["fit", p(&data), "--col", "x0:continuous"])), 4);
    assert_eq!(code(&vinelogit(&["fit", p(&data), "--col", "x0:weird"])), 4);
    assert_eq!(code(&vinelogit(&["frobnicate"])), 4);
    assert_eq!(code(&vinelogit(&["--help"])), 0);

    // Unparseable input.
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x0,x1,x2,y\n1,2,oops,0\n").unwrap();
    assert_eq!(code(&fit(&bad, &model, &[])), 2);
    std::fs::write(&bad, "x0,x1,x2,y\n1,2,3,2\n").unwrap();
    assert_eq!(code(&fit(&bad, &model, &[])), 2);
    assert_eq!(code(&fit(&dir.path().join("missing.csv"), &model, &[])), 2);
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{\"format_version\": 1}").unwrap();
    assert_eq!(code(&vinelogit(&["predict", p(&junk), p(&data)])), 2);

    // A response with one class cannot be fitted.
    std::fs::write(&bad, "x0,x1,x2,y\n1,2,3,0\n2,3,1,0\n0,1,2,0\n").unwrap();
    assert_eq!(code(&fit(&bad, &model, &[])), 3);

    // Environment.
    let out = Command::new(env!("CARGO_BIN_EXE_vinelogit"))
        .args(["simulate"])
        .env("VINELOGIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 4);
}
