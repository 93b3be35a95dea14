//! Datasets of paired (covariate, score) records, CSV ingestion and the
//! funnel simulator.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Purpose, RngStream};

pub const TRUTH_COLUMN: &str = "theta";
pub const LABEL_COLUMN: &str = "id";

/// N records of covariates `x` (row-major, `p` columns) and scores `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    p: usize,
    z: Vec<f64>,
    truth: Option<Vec<f64>>,
    labels: Option<Vec<String>>,
    covariate_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from row-major covariates. Checks shape and
    /// finiteness.
    pub fn new(x: Vec<f64>, p: usize, z: Vec<f64>) -> Result<Self> {
        let names = default_names(p);
        Self::with_names(x, p, z, names)
    }

    pub fn with_names(x: Vec<f64>, p: usize, z: Vec<f64>, names: Vec<String>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInput("at least one covariate column is required".into()));
        }
        if z.len() < 2 {
            return Err(Error::InvalidInput(format!("need N >= 2 records, got {}", z.len())));
        }
        if x.len() != z.len() * p {
            return Err(Error::InvalidInput(format!(
                "covariate matrix has {} entries, expected {} rows x {} columns",
                x.len(),
                z.len(),
                p
            )));
        }
        if names.len() != p {
            return Err(Error::InvalidInput("covariate name count does not match p".into()));
        }
        if let Some(i) = z.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite score at row {i}")));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite covariate at row {}", i / p)));
        }
        Ok(Self { x, p, z, truth: None, labels: None, covariate_names: names })
    }

    /// Univariate-covariate convenience constructor.
    pub fn from_columns(x: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        Self::new(x, 1, z)
    }

    pub fn with_truth(mut self, truth: Vec<f64>) -> Result<Self> {
        if truth.len() != self.z.len() {
            return Err(Error::InvalidInput("truth length does not match N".into()));
        }
        if truth.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite truth value".into()));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.z.len() {
            return Err(Error::InvalidInput("label count does not match N".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn x_column(&self, c: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.x[i * self.p + c]).collect()
    }

    pub fn x_raw(&self) -> &[f64] {
        &self.x
    }

    pub fn truth(&self) -> Option<&[f64]> {
        self.truth.as_deref()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Same covariates and metadata with new scores (used for flattening).
    pub fn with_scores(&self, z: Vec<f64>) -> Result<Self> {
        if z.len() != self.len() {
            return Err(Error::InvalidInput("score length does not match N".into()));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite score".into()));
        }
        Ok(Self { z, ..self.clone() })
    }

    /// Rows selected by `idx`, in that order (duplicates allowed).
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut x = Vec::with_capacity(idx.len() * self.p);
        for &i in idx {
            x.extend_from_slice(self.x_row(i));
        }
        Self {
            x,
            p: self.p,
            z: idx.iter().map(|&i| self.z[i]).collect(),
            truth: self.truth.as_ref().map(|t| idx.iter().map(|&i| t[i]).collect()),
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i].clone()).collect()),
            covariate_names: self.covariate_names.clone(),
        }
    }

    /// Writes `id?, covariates..., z, theta?` with round-trip float formatting.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv_to(file).map_err(|e| match e {
            Error::Csv { message, .. } => Error::Csv { path: path.to_path_buf(), message },
            other => other,
        })
    }

    pub fn write_csv_to<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Csv { path: PathBuf::new(), message: e.to_string() };
        let mut header: Vec<String> = Vec::new();
        if self.labels.is_some() {
            header.push(LABEL_COLUMN.into());
        }
        header.extend(self.covariate_names.iter().cloned());
        header.push("z".into());
        if self.truth.is_some() {
            header.push(TRUTH_COLUMN.into());
        }
        w.write_record(&header).map_err(err)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = Vec::with_capacity(header.len());
            if let Some(l) = &self.labels {
                rec.push(l[i].clone());
            }
            rec.extend(self.x_row(i).iter().map(|v| v.to_string()));
            rec.push(self.z[i].to_string());
            if let Some(t) = &self.truth {
                rec.push(t[i].to_string());
            }
            w.write_record(&rec).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn default_names(p: usize) -> Vec<String> {
    if p == 1 {
        vec!["x".to_string()]
    } else {
        (1..=p).map(|c| format!("x{c}")).collect()
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Csv { path: path.to_path_buf(), message: e.to_string() }
}

/// Column roles for [`load_csv`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvSchema {
    pub z_column: String,
    /// Explicit covariate columns; `None` takes every other numeric column.
    pub covariates: Option<Vec<String>>,
    pub truth_column: Option<String>,
    pub label_column: Option<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            z_column: "z".into(),
            covariates: None,
            truth_column: Some(TRUTH_COLUMN.into()),
            label_column: Some(LABEL_COLUMN.into()),
        }
    }
}

impl CsvSchema {
    pub fn with_z(z_column: &str) -> Self {
        Self { z_column: z_column.into(), ..Self::default() }
    }
}

pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers: Vec<String> = reader.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::Csv { path: path.into(), message: "empty file or missing header".into() });
    }
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    let find = |name: &str| -> Result<usize> {
        index.get(name).copied().ok_or_else(|| Error::Parse {
            path: path.into(),
            row: 0,
            column: name.into(),
            message: "missing column".into(),
        })
    };
    let z_col = find(&schema.z_column)?;
    let truth_col = schema.truth_column.as_deref().and_then(|t| index.get(t).copied());
    let label_col = schema.label_column.as_deref().and_then(|l| index.get(l).copied());
    let cov_cols: Vec<usize> = match &schema.covariates {
        Some(names) => names.iter().map(|n| find(n)).collect::<Result<_>>()?,
        None => (0..headers.len()).filter(|&c| c != z_col && Some(c) != truth_col && Some(c) != label_col).collect(),
    };
    if cov_cols.is_empty() {
        return Err(Error::Parse {
            path: path.into(),
            row: 0,
            column: "<covariates>".into(),
            message: "no covariate columns".into(),
        });
    }

    let mut x = Vec::new();
    let mut z = Vec::new();
    let mut truth = Vec::new();
    let mut labels = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        // Data rows are numbered from 1; the header is row 0.
        let row = r + 1;
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != headers.len() {
            return Err(Error::Parse {
                path: path.into(),
                row,
                column: "<record>".into(),
                message: format!("ragged row: {} fields, header has {}", rec.len(), headers.len()),
            });
        }
        let num = |c: usize| -> Result<f64> {
            let cell = &rec[c];
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse {
                    path: path.into(),
                    row,
                    column: headers[c].clone(),
                    message: format!("not a finite number: {cell:?}"),
                }),
            }
        };
        for &c in &cov_cols {
            x.push(num(c)?);
        }
        z.push(num(z_col)?);
        if let Some(c) = truth_col {
            truth.push(num(c)?);
        }
        if let Some(c) = label_col {
            labels.push(rec[c].to_string());
        }
    }
    if z.is_empty() {
        return Err(Error::Csv { path: path.into(), message: "no data rows".into() });
    }
    let names = cov_cols.iter().map(|&c| headers[c].clone()).collect();
    let mut ds = Dataset::with_names(x, cov_cols.len(), z, names)
        .map_err(|e| Error::Csv { path: path.into(), message: e.to_string() })?;
    if truth_col.is_some() {
        ds = ds.with_truth(truth)?;
    }
    if label_col.is_some() {
        ds = ds.with_labels(labels)?;
    }
    Ok(ds)
}

/// Funnel generator: at every integer x in `[x_min, x_max]`, `nulls_per_x`
/// draws from N(0, sigma(x)^2) plus `signals_per_location` draws from
/// N(signal_theta, sigma(x)^2) at each signal location, with
/// `sigma(x) = x * sigma_slope + sigma_intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunnelConfig {
    pub x_min: i64,
    pub x_max: i64,
    pub nulls_per_x: usize,
    pub signal_locations: Vec<i64>,
    pub signals_per_location: usize,
    pub signal_theta: f64,
    pub sigma_slope: f64,
    pub sigma_intercept: f64,
    pub seed: u64,
}

impl Default for FunnelConfig {
    fn default() -> Self {
        Self {
            x_min: 30,
            x_max: 100,
            nulls_per_x: 50,
            signal_locations: vec![30, 31, 32],
            signals_per_location: 5,
            signal_theta: 4.49,
            sigma_slope: 1.0 / 21.0,
            sigma_intercept: -0.71,
            seed: 0,
        }
    }
}

impl FunnelConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn sigma(&self, x: f64) -> f64 {
        x * self.sigma_slope + self.sigma_intercept
    }

    pub fn total_len(&self) -> usize {
        let grid = (self.x_max - self.x_min + 1).max(0) as usize;
        grid * self.nulls_per_x + self.signal_locations.len() * self.signals_per_location
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_max < self.x_min {
            return Err(Error::Config("x_max < x_min".into()));
        }
        for x in self.x_min..=self.x_max {
            let s = self.sigma(x as f64);
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("sigma({x}) = {s} is not positive")));
            }
        }
        for &x in &self.signal_locations {
            let s = self.sigma(x as f64);
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("sigma({x}) = {s} is not positive")));
            }
        }
        if !self.signal_theta.is_finite() {
            return Err(Error::Config("signal_theta must be finite".into()));
        }
        Ok(())
    }
}

pub fn simulate_funnel(config: &FunnelConfig) -> Result<Dataset> {
    simulate_funnel_stream(config, RngStream::derive(config.seed, Purpose::Simulation, 0))
}

fn simulate_funnel_stream(config: &FunnelConfig, stream: RngStream) -> Result<Dataset> {
    config.validate()?;
    let mut rng = stream.rng();
    let n = config.total_len();
    let mut x = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    let mut draw = |xv: i64, th: f64, x: &mut Vec<f64>, z: &mut Vec<f64>, theta: &mut Vec<f64>| {
        let e: f64 = rng.sample(StandardNormal);
        x.push(xv as f64);
        z.push(th + config.sigma(xv as f64) * e);
        theta.push(th);
    };
    for xv in config.x_min..=config.x_max {
        for _ in 0..config.nulls_per_x {
            draw(xv, 0.0, &mut x, &mut z, &mut theta);
        }
    }
    for &xv in &config.signal_locations {
        for _ in 0..config.signals_per_location {
            draw(xv, config.signal_theta, &mut x, &mut z, &mut theta);
        }
    }
    Dataset::from_columns(x, z)?.with_truth(theta)
}

/// Two independent draws from the same funnel model.
pub fn replicate_pair(config: &FunnelConfig, seed1: u64, seed2: u64) -> Result<(Dataset, Dataset)> {
    if seed1 == seed2 {
        return Err(Error::Config("replications need distinct seeds".into()));
    }
    let a = simulate_funnel(&FunnelConfig { seed: seed1, ..config.clone() })?;
    let b = simulate_funnel(&FunnelConfig { seed: seed2, ..config.clone() })?;
    Ok((a, b))
}
