//! Tabular data, simulated data-generating processes and row splits.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Column-major numeric table with a regression target.
///
/// `true_set` holds the indices of the covariates the target actually
/// depends on; it is only known for simulated data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    columns: Vec<Vec<f64>>,
    y: Vec<f64>,
    true_set: Option<BTreeSet<usize>>,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        y: Vec<f64>,
        true_set: Option<BTreeSet<usize>>,
    ) -> Result<Self> {
        let p = columns.len();
        let n = y.len();
        if p == 0 {
            return Err(Error::validation("dataset needs at least one feature"));
        }
        if n < 2 {
            return Err(Error::validation(format!("dataset needs at least 2 rows, got {n}")));
        }
        if feature_names.len() != p {
            return Err(Error::validation(format!(
                "{} feature names for {p} columns",
                feature_names.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::validation(format!("duplicate feature name '{name}'")));
            }
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::validation(format!(
                    "column '{}' has {} rows, target has {n}",
                    feature_names[j],
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::validation(format!(
                    "non-finite value in column '{}' at row {i}",
                    feature_names[j]
                )));
            }
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!("non-finite target at row {i}")));
        }
        if let Some(t) = &true_set {
            if let Some(&bad) = t.iter().find(|&&j| j >= p) {
                return Err(Error::validation(format!(
                    "true set index {bad} out of range for {p} features"
                )));
            }
        }
        Ok(Dataset {
            feature_names,
            columns,
            y,
            true_set,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn true_set(&self) -> Option<&BTreeSet<usize>> {
        self.true_set.as_ref()
    }

    /// Row-major copy of the feature matrix.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| self.columns.iter().map(|c| c[i]).collect())
            .collect()
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Dataset> {
        let columns = self
            .columns
            .iter()
            .map(|c| idx.iter().map(|&i| c[i]).collect())
            .collect();
        let y = idx.iter().map(|&i| self.y[i]).collect();
        Dataset::new(self.feature_names.clone(), columns, y, self.true_set.clone())
    }

    /// Same data with one column replaced.
    pub fn with_column(&self, j: usize, values: Vec<f64>) -> Result<Dataset> {
        let mut columns = self.columns.clone();
        columns[j] = values;
        Dataset::new(self.feature_names.clone(), columns, self.y.clone(), self.true_set.clone())
    }

    /// Loads a CSV with a header row; `target` names the response column.
    /// All remaining columns become features in file order.
    pub fn load_csv(path: impl AsRef<Path>, target: &str) -> Result<Dataset> {
        let path = path.as_ref();
        let csv_err = |message: String| Error::Csv {
            path: path.to_path_buf(),
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_path(path)
            .map_err(|e| match e.kind() {
                csv::ErrorKind::Io(_) => Error::Io {
                    path: path.to_path_buf(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
                },
                _ => csv_err(e.to_string()),
            })?;
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| csv_err(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let target_idx = headers
            .iter()
            .position(|h| h == target)
            .ok_or_else(|| csv_err(format!("target column '{target}' not found in header")))?;
        let feature_idx: Vec<usize> = (0..headers.len()).filter(|&c| c != target_idx).collect();
        if feature_idx.is_empty() {
            return Err(csv_err("no feature columns besides the target".into()));
        }

        let mut columns = vec![Vec::new(); feature_idx.len()];
        let mut y = Vec::new();
        for (r, record) in reader.records().enumerate() {
            // 1-based data row, header excluded
            let row = r + 1;
            let record = record.map_err(|e| csv_err(format!("row {row}: {e}")))?;
            let cell = |c: usize| -> Result<f64> {
                let raw = record.get(c).unwrap_or("").trim();
                let column = headers[c].clone();
                if raw.is_empty() {
                    return Err(Error::CsvCell {
                        row,
                        column,
                        message: "missing value".into(),
                    });
                }
                match raw.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    Ok(_) => Err(Error::CsvCell {
                        row,
                        column,
                        message: format!("non-finite value '{raw}'"),
                    }),
                    Err(_) => Err(Error::CsvCell {
                        row,
                        column,
                        message: format!("not a number: '{raw}'"),
                    }),
                }
            };
            for (slot, &c) in feature_idx.iter().enumerate() {
                columns[slot].push(cell(c)?);
            }
            y.push(cell(target_idx)?);
        }
        let names = feature_idx.iter().map(|&c| headers[c].clone()).collect();
        Dataset::new(names, columns, y, None)
    }

    /// Writes features followed by the target column named `target`.
    /// Values use the shortest representation that parses back exactly.
    pub fn write_csv(&self, path: impl AsRef<Path>, target: &str) -> Result<()> {
        let path = path.as_ref();
        let io_err = |e: csv::Error| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(io_err)?;
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(target);
        w.write_record(&header).map_err(io_err)?;
        let mut record = Vec::with_capacity(self.p() + 1);
        for i in 0..self.n() {
            record.clear();
            record.extend(self.columns.iter().map(|c| c[i].to_string()));
            record.push(self.y[i].to_string());
            w.write_record(&record).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    /// Splits rows according to `plan`, returning (train, test) index pairs.
    pub fn split(&self, plan: &SplitPlan) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
        plan.split(self.n())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DgpId {
    DS1,
    DS2,
    DS3,
    DS4,
    DS5,
    DS6,
}

impl DgpId {
    pub const ALL: [DgpId; 6] = [
        DgpId::DS1,
        DgpId::DS2,
        DgpId::DS3,
        DgpId::DS4,
        DgpId::DS5,
        DgpId::DS6,
    ];

    pub fn p(self) -> usize {
        match self {
            DgpId::DS1 | DgpId::DS3 | DgpId::DS4 | DgpId::DS5 => 3,
            DgpId::DS2 => 5,
            DgpId::DS6 => 10,
        }
    }

    pub fn true_set(self) -> BTreeSet<usize> {
        let t: &[usize] = match self {
            DgpId::DS1 => &[0],
            DgpId::DS2 | DgpId::DS4 | DgpId::DS5 => &[0, 1],
            DgpId::DS3 => &[1],
            DgpId::DS6 => &[0, 3],
        };
        t.iter().copied().collect()
    }

    /// Whether the target is linear in the covariates (an exact OLS fit
    /// exists when the noise scale is zero).
    pub fn is_linear(self) -> bool {
        !matches!(self, DgpId::DS4)
    }

    fn key(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for DgpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for DgpId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DS1" | "1" => Ok(DgpId::DS1),
            "DS2" | "2" => Ok(DgpId::DS2),
            "DS3" | "3" => Ok(DgpId::DS3),
            "DS4" | "4" => Ok(DgpId::DS4),
            "DS5" | "5" => Ok(DgpId::DS5),
            "DS6" | "6" => Ok(DgpId::DS6),
            other => Err(Error::validation(format!("unknown dataset '{other}' (expected DS1..DS6)"))),
        }
    }
}

/// Parameters of a simulated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub id: DgpId,
    pub n: usize,
    pub seed: u64,
    /// Standard deviation of the target noise.
    pub noise_scale: f64,
    /// Standard deviation of the perturbation separating collinear copies.
    pub collinearity_noise: f64,
}

impl DgpSpec {
    pub fn new(id: DgpId, n: usize, seed: u64) -> Self {
        DgpSpec {
            id,
            n,
            seed,
            noise_scale: 1.0,
            collinearity_noise: 0.05,
        }
    }

    pub fn with_noise(mut self, noise_scale: f64) -> Self {
        self.noise_scale = noise_scale;
        self
    }

    pub fn with_collinearity_noise(mut self, collinearity_noise: f64) -> Self {
        self.collinearity_noise = collinearity_noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::validation(format!("simulated n must be >= 2, got {}", self.n)));
        }
        for (name, v) in [
            ("noise_scale", self.noise_scale),
            ("collinearity_noise", self.collinearity_noise),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::validation(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Draws the dataset. Each column's randomness comes from its own
    /// stream keyed by (seed, dataset, stream id).
    pub fn generate(&self) -> Result<Dataset> {
        self.validate()?;
        let n = self.n;
        let normal = |stream: u64, scale: f64| -> Vec<f64> {
            let mut r = rng::stream(self.seed, &[self.id.key(), stream]);
            (0..n)
                .map(|_| scale * r.sample::<f64, _>(StandardNormal))
                .collect()
        };
        let add = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
        let eps = normal(STREAM_EPS, self.noise_scale);
        let c = self.collinearity_noise;

        let (columns, y) = match self.id {
            DgpId::DS1 => {
                let x1 = normal(1, 1.0);
                let x2 = add(&x1, &normal(STREAM_GAMMA, c));
                let x3 = normal(3, 1.0);
                let y = add(&x1, &eps);
                (vec![x1, x2, x3], y)
            }
            DgpId::DS2 => {
                // equicorrelated block: X_i = sqrt(rho) Z0 + sqrt(1 - rho) Z_i
                let rho: f64 = 0.3;
                let z0 = normal(20, 1.0);
                let mut cols: Vec<Vec<f64>> = (1..=4)
                    .map(|i| {
                        normal(i, 1.0)
                            .iter()
                            .zip(&z0)
                            .map(|(zi, z)| rho.sqrt() * z + (1.0 - rho).sqrt() * zi)
                            .collect()
                    })
                    .collect();
                cols.push(normal(5, 1.0));
                let y = add(&add(&cols[0], &cols[1]), &eps);
                (cols, y)
            }
            DgpId::DS3 => {
                let x1 = normal(1, 1.0);
                let x2 = add(&x1, &normal(STREAM_GAMMA, MEDIATOR_NOISE));
                let x3 = normal(3, 1.0);
                let y = add(&x2, &eps);
                (vec![x1, x2, x3], y)
            }
            DgpId::DS4 => {
                let x1 = normal(1, 1.0);
                let x2 = normal(2, 1.0);
                let x3 = normal(3, 1.0);
                let y = (0..n).map(|i| x1[i] * x1[i] + x1[i] * x2[i] + eps[i]).collect();
                (vec![x1, x2, x3], y)
            }
            DgpId::DS5 => {
                let x1 = normal(1, 1.0);
                let x2 = normal(2, 1.0);
                let signal = add(&x1, &x2);
                // the composite gets its own noise draw, independent of the target's
                let x3 = add(&add(&signal, &normal(STREAM_EPS_COMPOSITE, self.noise_scale)), &normal(STREAM_GAMMA, c));
                let y = add(&signal, &eps);
                (vec![x1, x2, x3], y)
            }
            DgpId::DS6 => {
                let x1 = normal(1, 1.0);
                let x2 = add(&x1, &normal(STREAM_GAMMA, c));
                let x3 = add(&x1, &normal(STREAM_GAMMA + 1, c));
                let mut cols = vec![x1, x2, x3];
                cols.extend((4..=10).map(|j| normal(j, 1.0)));
                let y = add(&add(&cols[0], &cols[3]), &eps);
                (cols, y)
            }
        };
        let names = (1..=columns.len()).map(|j| format!("X{j}")).collect();
        Dataset::new(names, columns, y, Some(self.id.true_set()))
    }
}

const STREAM_EPS: u64 = 100;
const STREAM_EPS_COMPOSITE: u64 = 101;
const STREAM_GAMMA: u64 = 200;
const MEDIATOR_NOISE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitKind {
    KFold(usize),
    RandomHalves,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub kind: SplitKind,
    pub seed: u64,
}

impl SplitPlan {
    pub fn kfold(k: usize, seed: u64) -> Self {
        SplitPlan {
            kind: SplitKind::KFold(k),
            seed,
        }
    }

    pub fn halves(seed: u64) -> Self {
        SplitPlan {
            kind: SplitKind::RandomHalves,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SplitPlan { seed, ..self }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self.kind {
            SplitKind::KFold(k) if k < 2 => Err(Error::validation(format!("k-fold needs k >= 2, got {k}"))),
            SplitKind::KFold(k) if k > n => {
                Err(Error::validation(format!("k-fold with k = {k} exceeds n = {n}")))
            }
            SplitKind::RandomHalves if n < 2 => Err(Error::validation("random halves need n >= 2")),
            _ => Ok(()),
        }
    }

    /// (train, test) index pairs; indices within each set are sorted.
    pub fn split(&self, n: usize) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
        self.validate(n)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::stream(self.seed, &[SPLIT_STREAM]));
        let sorted = |mut v: Vec<usize>| {
            v.sort_unstable();
            v
        };
        match self.kind {
            SplitKind::KFold(k) => {
                let mut fold_of = vec![0usize; n];
                // fold sizes differ by at most one
                for (pos, &row) in order.iter().enumerate() {
                    fold_of[row] = pos * k / n;
                }
                Ok((0..k)
                    .map(|f| {
                        let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold_of[i] == f);
                        (train, test)
                    })
                    .collect())
            }
            SplitKind::RandomHalves => {
                let a = sorted(order[..n / 2].to_vec());
                let b = sorted(order[n / 2..].to_vec());
                Ok(vec![(a.clone(), b.clone()), (b, a)])
            }
        }
    }
}

const SPLIT_STREAM: u64 = 0x5EED_5B17;
