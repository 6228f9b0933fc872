use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use vinelogit::estimation::sigmoid;
use vinelogit::simbench::{run_benchmark, simulate_stream, BenchReport, Scenario};
use vinelogit::{select_model, CopulaFamily, Dataset, Error, SelectConfig};

use crate::args::{BenchArgs, FitArgs, PredictArgs, SelectionArgs, SimulateArgs};
use crate::columns::{self, merge_declarations, read_schema, training_design, Table};
use crate::document::{edge_label, ModelDocument};
use crate::error::{CliError, CliResult};

pub fn parse_families(list: &str) -> CliResult<Vec<CopulaFamily>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let fam: CopulaFamily = item.parse().map_err(|e: String| CliError::Usage(format!("--families: {e}")))?;
        if !out.contains(&fam) {
            out.push(fam);
        }
    }
    Ok(out)
}

pub fn select_config(tau: f64, max_trees: usize, families: &str) -> CliResult<SelectConfig> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(CliError::Usage(format!("--tau must be a finite nonnegative number, got {tau}")));
    }
    let config = SelectConfig { tau, max_trees, families: parse_families(families)?, ..Default::default() };
    config.validate().map_err(|e| match e {
        Error::Fit(msg) => CliError::Usage(msg),
        other => CliError::Usage(other.to_string()),
    })?;
    Ok(config)
}

fn core_error(e: Error) -> CliError {
    match e {
        Error::Data(_) => CliError::Parse(e.to_string()),
        Error::Spec(_) => CliError::Usage(e.to_string()),
        other => CliError::Fit(other.to_string()),
    }
}

fn sink<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> CliResult<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(CliError::io(p))?)),
        None => Box::new(stdout),
    })
}

fn write_err(path: Option<&Path>) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("<stdout>")), source: e }
}

pub fn fit(args: &FitArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let SelectionArgs { tau, max_trees, ref families } = args.selection;
    let mut config = select_config(tau, max_trees, families)?;
    config.standard_errors = true;
    let schema = match &args.schema {
        Some(p) => read_schema(p)?,
        None => Vec::new(),
    };
    let decls = merge_declarations(schema, &args.columns)?;
    let table = Table::read(&args.data)?;
    let design = training_design(&table, &decls)?;
    let data = design.dataset()?;
    let report = select_model(&data, &config).map_err(core_error)?;
    let doc = ModelDocument::from_fit(design.columns.clone(), &design.names, data.n(), &report, &config);
    doc.write(&args.out)?;
    write_summary(&doc, &data, stdout).map_err(write_err(None))?;
    writeln!(stdout, "model written to {}", args.out.display()).map_err(write_err(None))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"))
}

fn write_summary(doc: &ModelDocument, data: &Dataset, w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "fitted {} rows, {} features", data.n(), data.p())?;
    writeln!(w, "log-likelihood: {:.6}", doc.fit.loglik)?;
    writeln!(w, "converged: {} ({} optimizer iterations)", doc.fit.converged, doc.fit.iterations)?;
    let terms = doc.edges.len();
    writeln!(w, "{terms} copula term{}", if terms == 1 { "" } else { "s" })?;
    let names = doc.feature_names();
    if let Ok(params) = doc.params() {
        for e in params.structure().edges() {
            let desc: Vec<String> = (0..2)
                .map(|y| match e.copulas[y].theta() {
                    Some(t) => format!("class {y} {} theta={t:.6}", e.copulas[y].family()),
                    None => format!("class {y} {}", e.copulas[y].family()),
                })
                .collect();
            writeln!(w, "  tree {} {}: {}", e.tree, edge_label(e, &names), desc.join(", "))?;
        }
    }
    writeln!(w, "parameters (estimate, standard error):")?;
    for p in &doc.parameters {
        writeln!(w, "  {:<28} {:>14.6} {:>12}", p.name, p.estimate, fmt_opt(p.std_error))?;
    }
    writeln!(w, "selection trace:")?;
    for s in &doc.fit.trace {
        writeln!(w, "  {:<48} loglik {:.6}", s.step, s.loglik)?;
    }
    Ok(())
}

pub fn predict(args: &PredictArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let doc = ModelDocument::read(&args.model)?;
    let params = doc.params()?;
    let table = Table::read(&args.data)?;
    let design = columns::design(&table, &doc.columns, false)?;
    if design.names != doc.feature_names() {
        return Err(CliError::Parse(format!(
            "data expands to features {:?}, the model expects {:?}",
            design.names,
            doc.feature_names()
        )));
    }
    let p = design.names.len();
    let out = args.out.as_deref();
    let mut w = sink(out, stdout)?;
    let io = write_err(out);
    writeln!(w, "row_id,log_odds,prob").map_err(&io)?;
    for i in 0..design.n {
        let lo = params.log_odds(&design.x[i * p..(i + 1) * p]);
        writeln!(w, "{},{},{}", i + 1, lo, sigmoid(lo)).map_err(&io)?;
    }
    w.flush().map_err(&io)
}

pub fn load_scenario(path: Option<&Path>) -> CliResult<Scenario> {
    match path {
        None => Ok(Scenario::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(CliError::io(p))?;
            toml::from_str(&text).map_err(|e| CliError::Parse(format!("scenario {}: {e}", p.display())))
        }
    }
}

pub fn write_dataset(data: &Dataset, w: &mut dyn Write) -> std::io::Result<()> {
    let mut header: Vec<&str> = data.names().iter().map(String::as_str).collect();
    header.push("y");
    writeln!(w, "{}", header.join(","))?;
    for i in 0..data.n() {
        let mut cells: Vec<String> = data.row(i).iter().map(|v| v.to_string()).collect();
        cells.push(data.y()[i].to_string());
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let mut scenario = load_scenario(args.scenario.as_deref())?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    scenario.validate().map_err(core_error)?;
    let spec = scenario.spec().map_err(core_error)?;
    let data = simulate_stream(&spec, scenario.n, scenario.seed, 0).map_err(core_error)?;
    let out = args.out.as_deref();
    let mut w = sink(out, stdout)?;
    write_dataset(&data, &mut w).map_err(write_err(out))?;
    w.flush().map_err(write_err(out))
}

pub fn write_report(report: &BenchReport, w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "model_id,method,n,p,mean_auc,mean_oos_loglik,replicates,failures")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.model_id, r.method.name(), r.n, r.p, r.mean_auc, r.mean_oos_loglik, r.replicates, r.failures
        )?;
    }
    Ok(())
}

pub fn bench(args: &BenchArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let mut scenario = load_scenario(args.scenario.as_deref())?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(r) = args.replicates {
        scenario.replicates = r;
    }
    if let Some(t) = args.tau {
        scenario.tau = t;
    }
    if let Some(k) = args.max_trees {
        scenario.max_trees = k;
    }
    if let Some(f) = &args.families {
        scenario.families = parse_families(f)?;
    }
    select_config(scenario.tau, scenario.max_trees, &families_list(&scenario.families))?;
    scenario.validate().map_err(core_error)?;
    let report = run_benchmark(&scenario).map_err(core_error)?;
    let out = args.out.as_deref();
    let mut w = sink(out, stdout)?;
    write_report(&report, &mut w).map_err(write_err(out))?;
    w.flush().map_err(write_err(out))
}

fn families_list(f: &[CopulaFamily]) -> String {
    f.iter().map(|x| x.name()).collect::<Vec<_>>().join(",")
}
