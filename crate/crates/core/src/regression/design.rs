use crate::error::{Error, Result};

fn flatten_rows(rows: Vec<Vec<f64>>, n: usize) -> Result<(Vec<f64>, usize)> {
    if rows.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rows.len() });
    }
    let ncol = rows.first().map_or(1, Vec::len);
    if ncol == 0 {
        return Err(Error::InvalidParams("covariate rows need at least the intercept".into()));
    }
    let mut flat = Vec::with_capacity(n * ncol);
    for (i, row) in rows.into_iter().enumerate() {
        if row.len() != ncol {
            return Err(Error::DimensionMismatch { expected: ncol, got: row.len() });
        }
        if row[0] != 1.0 {
            return Err(Error::InvalidParams(format!(
                "covariate row {i} must start with the intercept 1, found {}",
                row[0]
            )));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("covariate row {i} holds {v}")));
        }
        flat.extend(row);
    }
    Ok((flat, ncol))
}

/// Claim counts with one covariate row (leading intercept) per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct CountData {
    y: Vec<u64>,
    x: Vec<f64>,
    ncol: usize,
}

impl CountData {
    pub fn new(y: Vec<u64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = y.len();
        let (x, ncol) = flatten_rows(rows, n)?;
        Ok(CountData { y, x, ncol })
    }

    /// Counts without covariates: every row is the bare intercept.
    pub fn intercept_only(y: Vec<u64>) -> Self {
        let n = y.len();
        CountData { y, x: vec![1.0; n], ncol: 1 }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Number of columns including the intercept.
    pub fn ncol(&self) -> usize {
        self.ncol
    }

    pub fn y(&self) -> &[u64] {
        &self.y
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.ncol..(i + 1) * self.ncol]
    }

    /// Keeps the intercept and the listed covariate columns (1-based
    /// positions after the intercept).
    pub fn select_columns(&self, keep: &[usize]) -> Result<CountData> {
        if let Some(&c) = keep.iter().find(|&&c| c == 0 || c >= self.ncol) {
            return Err(Error::InvalidParams(format!("no covariate column {c}")));
        }
        let ncol = keep.len() + 1;
        let mut x = Vec::with_capacity(self.len() * ncol);
        for i in 0..self.len() {
            let row = self.row(i);
            x.push(1.0);
            x.extend(keep.iter().map(|&c| row[c]));
        }
        Ok(CountData { y: self.y.clone(), x, ncol })
    }

    /// Distinct (y, row) patterns with multiplicities, in first-seen order,
    /// plus the pattern index of every observation.
    pub(crate) fn compress(&self) -> (CountData, Vec<f64>, Vec<usize>) {
        use std::collections::HashMap;
        let mut index: HashMap<(u64, Vec<u64>), usize> = HashMap::new();
        let mut y = Vec::new();
        let mut x = Vec::new();
        let mut counts = Vec::new();
        let mut map = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let row = self.row(i);
            let key = (self.y[i], row.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            let next = counts.len();
            let slot = *index.entry(key).or_insert(next);
            if slot == next {
                y.push(self.y[i]);
                x.extend_from_slice(row);
                counts.push(0.0);
            }
            counts[slot] += 1.0;
            map.push(slot);
        }
        (CountData { y, x, ncol: self.ncol }, counts, map)
    }
}

/// Claim severities, one row per claim, with the covariates of the policy
/// that reported it.
#[derive(Debug, Clone, PartialEq)]
pub struct SeverityData {
    z: Vec<f64>,
    w: Vec<f64>,
    ncol: usize,
}

impl SeverityData {
    pub fn new(z: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(v) = z.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain(format!("severities must be positive, found {v}")));
        }
        let n = z.len();
        let (w, ncol) = flatten_rows(rows, n)?;
        Ok(SeverityData { z, w, ncol })
    }

    pub fn intercept_only(z: Vec<f64>) -> Result<Self> {
        let n = z.len();
        Self::new(z, vec![vec![1.0]; n])
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn ncol(&self) -> usize {
        self.ncol
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.ncol..(i + 1) * self.ncol]
    }

    pub fn select_columns(&self, keep: &[usize]) -> Result<SeverityData> {
        if let Some(&c) = keep.iter().find(|&&c| c == 0 || c >= self.ncol) {
            return Err(Error::InvalidParams(format!("no covariate column {c}")));
        }
        let ncol = keep.len() + 1;
        let mut w = Vec::with_capacity(self.len() * ncol);
        for i in 0..self.len() {
            let row = self.row(i);
            w.push(1.0);
            w.extend(keep.iter().map(|&c| row[c]));
        }
        Ok(SeverityData { z: self.z.clone(), w, ncol })
    }
}
