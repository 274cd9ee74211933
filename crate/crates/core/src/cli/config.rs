//! Resolution of dataset and hyperparameter settings from flags, config
//! file, preset, and built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    generate_synthetic, load_delimited, normalize, split, FileHeader, NormalizationMode,
    NormalizationParams, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::model::ObservedMatrix;
use crate::optim::{OptimHyper, OptimizerKind};
use crate::pid::PidGains;
use crate::trainer::{Preset, TrainConfig};

use super::{DataArgs, HyperArgs};

/// Where the observations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    File { data: PathBuf, header: PathBuf },
    Synth { spec: SyntheticSpec },
}

/// Fully resolved dataset handling: source, normalization, and split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetOptions {
    pub source: DataSource,
    pub normalize: NormalizationMode,
    pub split_ratio: f64,
    pub split_seed: u64,
}

/// Loaded, normalized, and split observations ready for training.
pub struct PreparedData {
    pub train: ObservedMatrix,
    pub test: ObservedMatrix,
    pub full: ObservedMatrix,
    pub norm: NormalizationParams,
}

impl DatasetOptions {
    pub fn load_full(&self) -> Result<(ObservedMatrix, NormalizationParams)> {
        let raw = match &self.source {
            DataSource::File { data, header } => {
                let header = FileHeader::load(header)?;
                load_delimited(data, &header)?
            }
            DataSource::Synth { spec } => generate_synthetic(spec)?.0,
        };
        let (full, norm) = normalize(&raw, self.normalize)?;
        Ok((full, norm))
    }

    pub fn prepare(&self) -> Result<PreparedData> {
        let (full, norm) = self.load_full()?;
        let (train, test) = split(&full, self.split_ratio, self.split_seed)?;
        Ok(PreparedData { train, test, full, norm })
    }
}

/// Partial hyperparameter overrides; the on-disk schema of `--config`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub optimizer: Option<String>,
    pub rank: Option<usize>,
    pub eta: Option<f64>,
    pub lambda: Option<f64>,
    pub kp: Option<f64>,
    pub ki: Option<f64>,
    pub kd: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub epochs: Option<usize>,
    pub eps: Option<f64>,
    pub patience: Option<usize>,
    pub seed: Option<u64>,
    pub shuffle: Option<bool>,
    pub normalize: Option<String>,
    pub split: Option<f64>,
    pub split_seed: Option<u64>,
}

impl FileConfig {
    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    fn overlay(&mut self, higher: &FileConfig) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if higher.$field.is_some() { self.$field = higher.$field.clone(); })*
            };
        }
        take!(
            optimizer, rank, eta, lambda, kp, ki, kd, lambda_min, lambda_max, epochs, eps,
            patience, seed, shuffle, normalize, split, split_seed
        );
    }
}

fn flags_as_config(data: &DataArgs, hyper: &HyperArgs) -> FileConfig {
    FileConfig {
        optimizer: hyper.optimizer.clone(),
        rank: hyper.rank,
        eta: hyper.eta,
        lambda: hyper.lambda,
        kp: hyper.kp,
        ki: hyper.ki,
        kd: hyper.kd,
        lambda_min: hyper.lambda_min,
        lambda_max: hyper.lambda_max,
        epochs: hyper.epochs,
        eps: hyper.eps,
        patience: hyper.patience,
        seed: hyper.seed,
        shuffle: if hyper.no_shuffle { Some(false) } else { None },
        normalize: data.normalize.clone(),
        split: data.split,
        split_seed: data.split_seed,
    }
}

/// Parses "m=100,n=50,rank=3,density=0.3,noise=0.01[,seed=7]".
pub fn parse_synth_spec(text: &str, default_seed: u64) -> Result<SyntheticSpec> {
    let mut spec = SyntheticSpec {
        m: 0,
        n: 0,
        rank: 0,
        density: 1.0,
        noise_sigma: 0.0,
        seed: default_seed,
    };
    for field in text.split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("synth field '{field}' is not key=value")))?;
        let bad = |k: &str| Error::Usage(format!("invalid synth value for '{k}'"));
        match key.trim() {
            "m" => spec.m = value.trim().parse().map_err(|_| bad("m"))?,
            "n" => spec.n = value.trim().parse().map_err(|_| bad("n"))?,
            "rank" => spec.rank = value.trim().parse().map_err(|_| bad("rank"))?,
            "density" => spec.density = value.trim().parse().map_err(|_| bad("density"))?,
            "noise" => spec.noise_sigma = value.trim().parse().map_err(|_| bad("noise"))?,
            "seed" => spec.seed = value.trim().parse().map_err(|_| bad("seed"))?,
            other => return Err(Error::Usage(format!("unknown synth field '{other}'"))),
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// The resolved picture of a run before training starts.
pub struct Resolved {
    pub dataset: DatasetOptions,
    pub config: TrainConfig,
}

pub fn resolve(data: &DataArgs, hyper: &HyperArgs) -> Result<Resolved> {
    let mut acc = FileConfig::default();
    if let Some(name) = &hyper.preset {
        let preset = Preset::by_name(name)?;
        acc.overlay(&FileConfig {
            eta: Some(preset.eta),
            lambda: Some(preset.lambda),
            kp: Some(preset.kp),
            ki: Some(preset.ki),
            kd: Some(preset.kd),
            ..FileConfig::default()
        });
    }
    if let Some(path) = &hyper.config {
        acc.overlay(&FileConfig::load(path)?);
    }
    acc.overlay(&flags_as_config(data, hyper));

    let seed = acc.seed.unwrap_or(0);
    let source = match (&data.data, &data.synth) {
        (Some(_), Some(_)) => {
            return Err(Error::Usage("--data and --synth are mutually exclusive".into()))
        }
        (None, None) => return Err(Error::Usage("one of --data or --synth is required".into())),
        (Some(path), None) => {
            let header = data.header.clone().unwrap_or_else(|| {
                let mut h = path.as_os_str().to_owned();
                h.push(".header.json");
                PathBuf::from(h)
            });
            DataSource::File { data: path.clone(), header }
        }
        (None, Some(spec)) => DataSource::Synth { spec: parse_synth_spec(spec, seed)? },
    };

    let normalize_mode: NormalizationMode =
        acc.normalize.as_deref().unwrap_or("minmax").parse()?;
    let dataset = DatasetOptions {
        source,
        normalize: normalize_mode,
        split_ratio: acc.split.unwrap_or(0.8),
        split_seed: acc.split_seed.unwrap_or(seed),
    };

    let optimizer: OptimizerKind =
        acc.optimizer.as_deref().unwrap_or("lambda_opt").parse()?;
    let rank = match acc.rank {
        Some(r) => r,
        None => match &dataset.source {
            DataSource::Synth { spec } => spec.rank,
            DataSource::File { .. } => 8,
        },
    };

    let gains = if optimizer == OptimizerKind::LambdaOpt {
        let lambda_max = acc
            .lambda_max
            .or(acc.lambda.map(|l| 2.0 * l))
            .ok_or_else(|| {
                Error::Usage(
                    "lambda_opt needs clip bounds: pass --lambda-max, --lambda, or --preset".into(),
                )
            })?;
        Some(PidGains::new(
            acc.kp.unwrap_or(0.0),
            acc.ki.unwrap_or(0.0),
            acc.kd.unwrap_or(0.0),
            acc.lambda_min.unwrap_or(0.0),
            lambda_max,
        )?)
    } else {
        None
    };
    if optimizer.is_baseline() && acc.lambda.is_none() {
        return Err(Error::Usage(format!(
            "optimizer {} needs a fixed regularization: pass --lambda or --preset",
            optimizer.name()
        )));
    }

    let config = TrainConfig {
        eta: acc.eta.unwrap_or(5e-2),
        rank,
        max_epochs: acc.epochs.unwrap_or(200),
        seed,
        optimizer,
        fixed_lambda: acc.lambda,
        gains,
        shuffle: acc.shuffle.unwrap_or(true),
        convergence_eps: acc.eps.unwrap_or(1e-5),
        patience: acc.patience.unwrap_or(5),
        hyper: OptimHyper::default(),
    };
    config.validate()?;
    Ok(Resolved { dataset, config })
}
