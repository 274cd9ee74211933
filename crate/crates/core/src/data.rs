//! Dataset ingestion, normalization, train/test splitting, and synthetic
//! low-rank dataset generation.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ObservedEntry, ObservedMatrix};

fn default_delimiter() -> char {
    ','
}

/// Sidecar header describing a delimited triple file: declared dimensions,
/// delimiter, and whether the first line is a column header.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FileHeader {
    pub m: usize,
    pub n: usize,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default)]
    pub has_header: bool,
}

impl FileHeader {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Parses a delimited triple file ("row,col,value" per line) into a
/// validated sparse matrix.
pub fn load_delimited(path: &Path, header: &FileHeader) -> Result<ObservedMatrix> {
    let text = fs::read_to_string(path)?;
    parse_delimited(&text, header)
}

pub fn parse_delimited(text: &str, header: &FileHeader) -> Result<ObservedMatrix> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if idx == 0 && header.has_header {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(header.delimiter);
        let (row, col, value) = match (fields.next(), fields.next(), fields.next()) {
            (Some(r), Some(c), Some(v)) => (r.trim(), c.trim(), v.trim()),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected 3 fields delimited by '{}'", header.delimiter),
                })
            }
        };
        let row: usize = row.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("invalid row index '{row}'"),
        })?;
        let col: usize = col.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("invalid column index '{col}'"),
        })?;
        let value: f64 = value.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("invalid value '{value}'"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("non-finite value '{value}'"),
            });
        }
        entries.push(ObservedEntry { row, col, value });
    }
    ObservedMatrix::new(header.m, header.n, entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationMode {
    None,
    MinMax,
    ZScore,
}

impl std::str::FromStr for NormalizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "minmax" => Ok(Self::MinMax),
            "zscore" => Ok(Self::ZScore),
            other => Err(Error::Usage(format!("unknown normalization mode '{other}'"))),
        }
    }
}

/// Parameters recorded at normalization time, sufficient for exact inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum NormalizationParams {
    None,
    MinMax { min: f64, max: f64 },
    ZScore { mean: f64, std: f64 },
}

impl NormalizationParams {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Self::None => x,
            Self::MinMax { min, max } => (x - min) / (max - min),
            Self::ZScore { mean, std } => (x - mean) / std,
        }
    }

    pub fn invert(&self, y: f64) -> f64 {
        match *self {
            Self::None => y,
            Self::MinMax { min, max } => y * (max - min) + min,
            Self::ZScore { mean, std } => y * std + mean,
        }
    }
}

/// Normalizes observed values in place, returning the transformed matrix and
/// the parameters needed to invert the mapping.
pub fn normalize(
    matrix: &ObservedMatrix,
    mode: NormalizationMode,
) -> Result<(ObservedMatrix, NormalizationParams)> {
    let params = match mode {
        NormalizationMode::None => NormalizationParams::None,
        NormalizationMode::MinMax => {
            let min = matrix.entries().iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
            let max = matrix
                .entries()
                .iter()
                .map(|e| e.value)
                .fold(f64::NEG_INFINITY, f64::max);
            if min == max {
                return Err(Error::Degenerate(
                    "all observed values are equal; min-max normalization undefined".into(),
                ));
            }
            NormalizationParams::MinMax { min, max }
        }
        NormalizationMode::ZScore => {
            let count = matrix.len();
            if count < 2 {
                return Err(Error::Usage("z-score normalization needs at least 2 entries".into()));
            }
            let mean = matrix.entries().iter().map(|e| e.value).sum::<f64>() / count as f64;
            let var = matrix
                .entries()
                .iter()
                .map(|e| (e.value - mean).powi(2))
                .sum::<f64>()
                / (count - 1) as f64;
            if var == 0.0 {
                return Err(Error::Degenerate(
                    "all observed values are equal; z-score normalization undefined".into(),
                ));
            }
            NormalizationParams::ZScore { mean, std: var.sqrt() }
        }
    };
    Ok((matrix.map_values(|x| params.apply(x)), params))
}

/// Seeded shuffle then prefix/suffix split into train and test partitions.
pub fn split(matrix: &ObservedMatrix, ratio: f64, seed: u64) -> Result<(ObservedMatrix, ObservedMatrix)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Usage("split ratio must lie in (0, 1)".into()));
    }
    let mut entries = matrix.entries().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    entries.shuffle(&mut rng);
    let train_len = (ratio * entries.len() as f64).round() as usize;
    if train_len == 0 || train_len == entries.len() {
        return Err(Error::Usage(format!(
            "split ratio {ratio} leaves an empty side for {} entries",
            entries.len()
        )));
    }
    let test = entries.split_off(train_len);
    Ok((
        ObservedMatrix::from_validated(matrix.rows(), matrix.cols(), entries),
        ObservedMatrix::from_validated(matrix.rows(), matrix.cols(), test),
    ))
}

/// Parameters for a planted low-rank dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub m: usize,
    pub n: usize,
    pub rank: usize,
    pub density: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.rank == 0 {
            return Err(Error::Usage("synthetic dimensions and rank must be at least 1".into()));
        }
        if self.rank > self.m.min(self.n) {
            return Err(Error::Usage(format!(
                "rank {} exceeds min(m, n) = {}",
                self.rank,
                self.m.min(self.n)
            )));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::Usage("density must lie in (0, 1]".into()));
        }
        if (self.density * (self.m * self.n) as f64).ceil() < 1.0 {
            return Err(Error::Usage("density too low: no cells would be observed".into()));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::Usage("noise sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// Dense ground-truth matrix kept alongside a synthetic observation set.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTruth {
    m: usize,
    n: usize,
    values: Vec<f64>,
}

impl DenseTruth {
    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Plants a rank-`r` matrix R* = U* V*^T (factor entries uniform on [0, 1)),
/// samples distinct cells at the requested density, and perturbs the sampled
/// values with Gaussian noise. Returns the sparse observations and the
/// noiseless truth.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(ObservedMatrix, DenseTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (m, n, r) = (spec.m, spec.n, spec.rank);
    let u: Vec<f64> = (0..m * r).map(|_| rng.gen_range(0.0..1.0)).collect();
    let v: Vec<f64> = (0..n * r).map(|_| rng.gen_range(0.0..1.0)).collect();

    let mut values = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            values[i * n + j] = (0..r).map(|d| u[i * r + d] * v[j * r + d]).sum();
        }
    }
    let truth = DenseTruth { m, n, values };

    let sample_count = (spec.density * (m * n) as f64).ceil() as usize;
    let mut cells: Vec<usize> = (0..m * n).collect();
    cells.shuffle(&mut rng);
    cells.truncate(sample_count);

    let noise = if spec.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma).expect("validated sigma"))
    } else {
        None
    };
    let entries = cells
        .into_iter()
        .map(|cell| {
            let (i, j) = (cell / n, cell % n);
            let mut value = truth.get(i, j);
            if let Some(dist) = &noise {
                value += dist.sample(&mut rng);
            }
            ObservedEntry { row: i, col: j, value }
        })
        .collect();
    Ok((ObservedMatrix::new(m, n, entries)?, truth))
}
