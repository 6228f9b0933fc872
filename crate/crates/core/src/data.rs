use crate::error::{Error, Result};
use crate::margins::{MarginKind, SampleMoments};

/// Covariates (row-major, `n x p`) with per-column kinds and a 0/1 response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    kinds: Vec<MarginKind>,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(names: Vec<String>, kinds: Vec<MarginKind>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let p = kinds.len();
        if names.len() != p {
            return Err(Error::Data(format!("{} names for {p} columns", names.len())));
        }
        if x.len() != y.len() * p {
            return Err(Error::Data(format!(
                "covariate buffer has {} values, expected {} rows x {p} columns",
                x.len(),
                y.len()
            )));
        }
        if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Data(format!("response in row {i} is {}, not 0 or 1", y[i])));
        }
        for (idx, &v) in x.iter().enumerate() {
            let (i, j) = (idx / p, idx % p);
            let ok = match kinds[j] {
                MarginKind::Continuous => v.is_finite(),
                MarginKind::Binary => v == 0.0 || v == 1.0,
                MarginKind::Count => v >= 0.0 && v.is_finite() && v.fract() == 0.0,
            };
            if !ok {
                return Err(Error::Data(format!(
                    "row {i}, column {} ({}): value {v} is not a valid {} observation",
                    j, names[j], kinds[j]
                )));
            }
        }
        Ok(Self { names, kinds, x, y })
    }

    /// Continuous columns named `x0, x1, ...`.
    pub fn continuous(x: Vec<f64>, y: Vec<f64>, p: usize) -> Result<Self> {
        let names = (0..p).map(|j| format!("x{j}")).collect();
        Self::new(names, vec![MarginKind::Continuous; p], x, y)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.kinds.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kinds(&self) -> &[MarginKind] {
        &self.kinds
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.p();
        &self.x[i * p..(i + 1) * p]
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.x[i * self.p() + j]).collect()
    }

    /// Indices of continuous columns, the only ones that enter copulas.
    pub fn continuous_columns(&self) -> Vec<usize> {
        (0..self.p()).filter(|&j| self.kinds[j] == MarginKind::Continuous).collect()
    }

    pub fn moments(&self) -> SampleMoments {
        let cols: Vec<Vec<f64>> = (0..self.p()).map(|j| self.column(j)).collect();
        SampleMoments::from_columns(cols.iter().map(Vec::as_slice), &self.y)
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut x = Vec::with_capacity(indices.len() * self.p());
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Self { names: self.names.clone(), kinds: self.kinds.clone(), x, y }
    }

    /// This dataset followed by `other`, which must share the schema.
    pub fn concat(&self, other: &Dataset) -> Result<Self> {
        if self.kinds != other.kinds || self.names != other.names {
            return Err(Error::Data("cannot stack datasets with different columns".into()));
        }
        let mut out = self.clone();
        out.x.extend_from_slice(&other.x);
        out.y.extend_from_slice(&other.y);
        Ok(out)
    }
}
