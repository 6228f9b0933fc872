//! Column declarations and CSV ingestion.
//!
//! Every CSV column must be declared as one of the margin kinds, as
//! `categorical`, as the single `response`, or as `ignore`. A categorical
//! column with `d` levels becomes `d - 1` binary columns `name=LEVEL`, levels
//! in order of first appearance with the first one as reference.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use vinelogit::{Dataset, MarginKind};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Margin(MarginKind),
    Categorical,
    Response,
    Ignore,
}

impl FromStr for ColumnKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "categorical" | "factor" => Ok(ColumnKind::Categorical),
            "response" => Ok(ColumnKind::Response),
            "ignore" => Ok(ColumnKind::Ignore),
            other => other
                .parse::<MarginKind>()
                .map(ColumnKind::Margin)
                .map_err(|_| format!("unknown column kind `{s}` (expected continuous, binary, count, categorical, response or ignore)")),
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnKind::Margin(k) => write!(f, "{k}"),
            ColumnKind::Categorical => f.write_str("categorical"),
            ColumnKind::Response => f.write_str("response"),
            ColumnKind::Ignore => f.write_str("ignore"),
        }
    }
}

/// `name:kind` as given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnDecl {
    pub name: String,
    pub kind: ColumnKind,
}

impl FromStr for ColumnDecl {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, kind) = s.rsplit_once(':').ok_or_else(|| format!("column declaration `{s}` is not name:kind"))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(format!("column declaration `{s}` has an empty name"));
        }
        Ok(Self { name: name.to_string(), kind: kind.parse()? })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    columns: BTreeMap<String, String>,
}

/// Declarations from a TOML schema with a `[columns]` table of `name = "kind"`.
pub fn read_schema(path: &Path) -> CliResult<Vec<ColumnDecl>> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let schema: SchemaFile =
        toml::from_str(&text).map_err(|e| CliError::Parse(format!("schema {}: {e}", path.display())))?;
    schema
        .columns
        .into_iter()
        .map(|(name, kind)| {
            let kind = kind.parse().map_err(|e| CliError::Usage(format!("schema column `{name}`: {e}")))?;
            Ok(ColumnDecl { name, kind })
        })
        .collect()
}

/// Schema declarations overridden by flag declarations.
pub fn merge_declarations(schema: Vec<ColumnDecl>, flags: &[ColumnDecl]) -> CliResult<HashMap<String, ColumnKind>> {
    let mut out: HashMap<String, ColumnKind> = schema.into_iter().map(|d| (d.name, d.kind)).collect();
    let mut seen = HashMap::new();
    for d in flags {
        if let Some(prev) = seen.insert(d.name.clone(), d.kind) {
            if prev != d.kind {
                return Err(CliError::Usage(format!("column `{}` declared twice ({prev} and {})", d.name, d.kind)));
            }
        }
        out.insert(d.name.clone(), d.kind);
    }
    Ok(out)
}

/// A parsed CSV file: header plus raw cells.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Self> {
        let file = std::fs::File::open(path).map_err(CliError::io(path))?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        let mut names = HashMap::new();
        for (j, h) in header.iter().enumerate() {
            if let Some(first) = names.insert(h.as_str(), j) {
                return Err(CliError::Parse(format!(
                    "{}: header repeats column `{h}` (positions {} and {})",
                    path.display(),
                    first + 1,
                    j + 1
                )));
            }
        }
        Ok(Self { header, rows })
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn cell(&self, row: usize, col: usize) -> &str {
        &self.rows[row][col]
    }
}

/// One declared input column as stored in a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

impl ColumnSpec {
    pub fn kind(&self) -> CliResult<ColumnKind> {
        self.kind.parse().map_err(|e| CliError::Parse(format!("model column `{}`: {e}", self.name)))
    }
}

/// Covariates built from a table, plus the specs that rebuild them.
#[derive(Debug, Clone)]
pub struct Design {
    pub columns: Vec<ColumnSpec>,
    pub names: Vec<String>,
    pub kinds: Vec<MarginKind>,
    /// Row-major covariates.
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    pub n: usize,
}

impl Design {
    pub fn dataset(&self) -> CliResult<Dataset> {
        let y = self.y.clone().ok_or_else(|| CliError::Usage("no response column declared".into()))?;
        Dataset::new(self.names.clone(), self.kinds.clone(), self.x.clone(), y).map_err(|e| CliError::Parse(e.to_string()))
    }
}

fn parse_number(table: &Table, row: usize, col: usize) -> CliResult<f64> {
    let cell = table.cell(row, col);
    let name = &table.header[col];
    if cell.is_empty() {
        return Err(CliError::Parse(format!("row {}, column `{name}`: empty cell", row + 1)));
    }
    let v: f64 = cell
        .parse()
        .map_err(|_| CliError::Parse(format!("row {}, column `{name}`: `{cell}` is not a number", row + 1)))?;
    if !v.is_finite() {
        return Err(CliError::Parse(format!("row {}, column `{name}`: `{cell}` is not finite", row + 1)));
    }
    Ok(v)
}

fn check_value(kind: MarginKind, v: f64, row: usize, name: &str) -> CliResult<()> {
    let ok = match kind {
        MarginKind::Continuous => true,
        MarginKind::Binary => v == 0.0 || v == 1.0,
        MarginKind::Count => v >= 0.0 && v.fract() == 0.0,
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::Parse(format!("row {}, column `{name}`: {v} is not a valid {kind} value", row + 1)))
    }
}

fn first_appearance_levels(table: &Table, col: usize) -> CliResult<Vec<String>> {
    let mut levels: Vec<String> = Vec::new();
    for r in 0..table.rows.len() {
        let cell = table.cell(r, col);
        if cell.is_empty() {
            return Err(CliError::Parse(format!("row {}, column `{}`: empty cell", r + 1, table.header[col])));
        }
        if !levels.iter().any(|l| l == cell) {
            levels.push(cell.to_string());
        }
    }
    Ok(levels)
}

/// Builds the training design: every header column must be declared and
/// exactly one must be the response.
pub fn training_design(table: &Table, decls: &HashMap<String, ColumnKind>) -> CliResult<Design> {
    for name in decls.keys() {
        if table.position(name).is_none() {
            return Err(CliError::Usage(format!("declared column `{name}` is not in the CSV header")));
        }
    }
    let mut columns = Vec::new();
    for name in &table.header {
        let kind = decls.get(name).ok_or_else(|| {
            CliError::Usage(format!("column `{name}` has no declared kind; add --col {name}:<kind> (use `ignore` to skip it)"))
        })?;
        let levels = match kind {
            ColumnKind::Categorical => {
                let col = table.position(name).expect("header column");
                let levels = first_appearance_levels(table, col)?;
                if levels.len() < 2 {
                    return Err(CliError::Parse(format!("categorical column `{name}` has fewer than two levels")));
                }
                Some(levels)
            }
            _ => None,
        };
        columns.push(ColumnSpec { name: name.clone(), kind: kind.to_string(), levels });
    }
    let responses = columns.iter().filter(|c| c.kind == "response").count();
    if responses != 1 {
        return Err(CliError::Usage(format!("exactly one response column is required, {responses} declared")));
    }
    design(table, &columns, true)
}

/// Builds covariates for the stored column specs. Columns are matched by
/// name; the response is read only when `with_response` is set.
pub fn design(table: &Table, columns: &[ColumnSpec], with_response: bool) -> CliResult<Design> {
    let n = table.rows.len();
    let mut names = Vec::new();
    let mut kinds = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut y = None;
    for spec in columns {
        let kind = spec.kind()?;
        if matches!(kind, ColumnKind::Ignore) || (matches!(kind, ColumnKind::Response) && !with_response) {
            continue;
        }
        let j = table
            .position(&spec.name)
            .ok_or_else(|| CliError::Parse(format!("column `{}` is missing from the data", spec.name)))?;
        match kind {
            ColumnKind::Margin(mk) => {
                let mut v = Vec::with_capacity(n);
                for r in 0..n {
                    let x = parse_number(table, r, j)?;
                    check_value(mk, x, r, &spec.name)?;
                    v.push(x);
                }
                names.push(spec.name.clone());
                kinds.push(mk);
                cols.push(v);
            }
            ColumnKind::Response => {
                let mut v = Vec::with_capacity(n);
                for r in 0..n {
                    let x = parse_number(table, r, j)?;
                    if x != 0.0 && x != 1.0 {
                        return Err(CliError::Parse(format!("row {}, column `{}`: response {x} is not 0 or 1", r + 1, spec.name)));
                    }
                    v.push(x);
                }
                y = Some(v);
            }
            ColumnKind::Categorical => {
                let levels = spec
                    .levels
                    .as_ref()
                    .ok_or_else(|| CliError::Parse(format!("categorical column `{}` has no stored levels", spec.name)))?;
                let mut dummies = vec![vec![0.0; n]; levels.len().saturating_sub(1)];
                for r in 0..n {
                    let cell = table.cell(r, j);
                    let l = levels.iter().position(|l| l == cell).ok_or_else(|| {
                        CliError::Parse(format!("row {}, column `{}`: unknown level `{cell}`", r + 1, spec.name))
                    })?;
                    if l > 0 {
                        dummies[l - 1][r] = 1.0;
                    }
                }
                for (level, d) in levels.iter().skip(1).zip(dummies) {
                    names.push(format!("{}={level}", spec.name));
                    kinds.push(MarginKind::Binary);
                    cols.push(d);
                }
            }
            ColumnKind::Ignore => unreachable!(),
        }
    }
    let p = cols.len();
    let mut x = Vec::with_capacity(n * p);
    for r in 0..n {
        for c in &cols {
            x.push(c[r]);
        }
    }
    Ok(Design { columns: columns.to_vec(), names, kinds, x, y, n })
}
