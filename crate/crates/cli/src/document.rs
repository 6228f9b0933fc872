//! JSON model files.
//!
//! Floats are written with 17 significant digits in exponent form, so a
//! file read back and written again is byte-identical.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use vinelogit::estimation::FitReport;
use vinelogit::margins::SampleMoments;
use vinelogit::{CopulaFamily, Edge, MarginKind, MarginSet, ModelParams, PairCopula, SelectConfig, VineStructure};

use crate::columns::ColumnSpec;
use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Feature {
    pub name: String,
    pub kind: MarginKind,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub tree: usize,
    pub pair: [String; 2],
    pub given: Vec<String>,
    /// Class 0 then class 1.
    pub families: [CopulaFamily; 2],
    pub theta: [Option<f64>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterDoc {
    pub name: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceDoc {
    pub step: String,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitDoc {
    pub n: usize,
    pub tau: f64,
    pub max_trees: usize,
    pub families: Vec<CopulaFamily>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<TraceDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub format_version: u32,
    pub columns: Vec<ColumnSpec>,
    pub features: Vec<Feature>,
    pub response_mean: f64,
    /// Intercept first, then one coefficient per feature.
    pub beta: Vec<f64>,
    pub edges: Vec<EdgeDoc>,
    pub margins: MarginSet,
    pub parameters: Vec<ParameterDoc>,
    pub fit: FitDoc,
}

impl ModelDocument {
    pub fn from_fit(columns: Vec<ColumnSpec>, names: &[String], n: usize, report: &FitReport, config: &SelectConfig) -> Self {
        let params = &report.params;
        let moments = params.moments();
        let features = names
            .iter()
            .zip(params.kinds())
            .enumerate()
            .map(|(j, (name, &kind))| Feature { name: name.clone(), kind, mean: moments.means[j], variance: moments.vars[j] })
            .collect();
        let edges = params
            .structure()
            .edges()
            .iter()
            .map(|e| EdgeDoc {
                tree: e.tree,
                pair: [names[e.key.pair.0].clone(), names[e.key.pair.1].clone()],
                given: e.key.given.iter().map(|&g| names[g].clone()).collect(),
                families: e.copulas.map(|c| c.family()),
                theta: e.copulas.map(|c| c.theta()),
            })
            .collect();
        let labels = readable_labels(params, names);
        let natural = params.natural_vector();
        let parameters = labels
            .into_iter()
            .zip(&natural)
            .enumerate()
            .map(|(i, (name, &estimate))| ParameterDoc {
                name,
                estimate,
                std_error: report.std_errors.as_ref().map(|s| s[i]),
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION,
            columns,
            features,
            response_mean: moments.response_mean,
            beta: params.beta().to_vec(),
            edges,
            margins: params.margins().clone(),
            parameters,
            fit: FitDoc {
                n,
                tau: config.tau,
                max_trees: config.max_trees,
                families: config.families.clone(),
                loglik: report.loglik,
                converged: report.converged,
                iterations: report.iterations,
                trace: report.trace.iter().map(|s| TraceDoc { step: s.description.clone(), loglik: s.loglik }).collect(),
            },
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    /// Rebuilds the fitted model; margins are re-derived from the
    /// coefficients and must agree with the stored ones.
    pub fn params(&self) -> CliResult<ModelParams> {
        if self.format_version != FORMAT_VERSION {
            return Err(CliError::Parse(format!(
                "model format version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let names = self.feature_names();
        let index = |name: &str| {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| CliError::Parse(format!("edge refers to unknown feature `{name}`")))
        };
        let mut edges = Vec::new();
        for e in &self.edges {
            let cop = |y: usize| -> CliResult<PairCopula> {
                match (e.families[y], e.theta[y]) {
                    (CopulaFamily::Independence, _) => Ok(PairCopula::independence()),
                    (fam, Some(t)) => PairCopula::new(fam, t).map_err(|err| CliError::Parse(format!("edge {:?}: {err}", e.pair))),
                    (fam, None) => Err(CliError::Parse(format!("edge {:?}: {fam} copula without a parameter", e.pair))),
                }
            };
            let given = e.given.iter().map(|g| index(g)).collect::<CliResult<Vec<_>>>()?;
            edges.push(Edge::new(index(&e.pair[0])?, index(&e.pair[1])?, given, cop(0)?, cop(1)?));
        }
        let kinds: Vec<MarginKind> = self.features.iter().map(|f| f.kind).collect();
        let eligible: Vec<usize> = (0..kinds.len()).filter(|&j| kinds[j] == MarginKind::Continuous).collect();
        let structure = VineStructure::from_edges(self.fit.max_trees.max(1), eligible, edges)
            .map_err(|e| CliError::Parse(format!("model structure: {e}")))?;
        let moments = SampleMoments {
            means: self.features.iter().map(|f| f.mean).collect(),
            vars: self.features.iter().map(|f| f.variance).collect(),
            response_mean: self.response_mean,
        };
        let params = ModelParams::new(self.beta.clone(), structure, moments, kinds)
            .map_err(|e| CliError::Parse(format!("model parameters: {e}")))?;
        let stored = self.margins.coefficients();
        let derived = params.margins().coefficients();
        let near = |a: f64, b: f64| (a - b).abs() <= 1e-8 * (1.0 + a.abs());
        if stored.len() != derived.len()
            || !near(self.margins.pi_y(), params.margins().pi_y())
            || stored.iter().zip(&derived).any(|(&a, &b)| !near(a, b))
        {
            return Err(CliError::Parse("stored margins disagree with the coefficients".into()));
        }
        Ok(params)
    }

    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFloats::default());
        self.serialize(&mut ser).expect("model documents always serialize");
        buf.push(b'\n');
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("model file: {e}")))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_json(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_json()).map_err(CliError::io(path))
    }
}

/// Parameter labels using feature names, e.g. `theta1(x0,x2|x1)`.
pub fn readable_labels(params: &ModelParams, names: &[String]) -> Vec<String> {
    let mut out = vec!["(intercept)".to_string()];
    out.extend(names.iter().cloned());
    for (i, y) in params.theta_slots() {
        out.push(format!("theta{y}{}", edge_label(&params.structure().edges()[i], names)));
    }
    out
}

pub fn edge_label(e: &Edge, names: &[String]) -> String {
    let (j, k) = e.key.pair;
    if e.key.given.is_empty() {
        format!("({},{})", names[j], names[k])
    } else {
        let given: Vec<&str> = e.key.given.iter().map(|&g| names[g].as_str()).collect();
        format!("({},{}|{})", names[j], names[k], given.join(","))
    }
}

/// Pretty printing with every float as a 17-significant-digit decimal.
#[derive(Default)]
struct CanonicalFloats {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for CanonicalFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(writer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        let doc = serde_json::json!({"a": 0.1, "b": [1.0, -2.5e-300]});
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFloats::default());
        doc.serialize(&mut ser).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("-2.5000000000000000e-300"), "{s}");
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64().unwrap(), 0.1);
        assert_eq!(back["b"][1].as_f64().unwrap(), -2.5e-300);
    }
}
