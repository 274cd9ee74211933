//! Epoch loop for the adaptive trainer and the fixed-regularization
//! baselines, plus convergence detection and per-epoch reporting.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::evaluate;
use crate::model::{init_factors, predict, FactorPair, ObservedMatrix};
use crate::optim::{AdamState, OptimHyper, OptimizerKind, VelocityState};
use crate::pid::{pid_step, PidGains, PidTable};

/// Any factor entry beyond this magnitude aborts the run as divergent.
const DIVERGENCE_LIMIT: f64 = 1e6;

/// Full configuration of a single training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub eta: f64,
    pub rank: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Constant regularization for the baseline trainers.
    pub fixed_lambda: Option<f64>,
    /// Controller gains and clip bounds for the adaptive trainer.
    pub gains: Option<PidGains>,
    pub shuffle: bool,
    pub convergence_eps: f64,
    pub patience: usize,
    #[serde(default)]
    pub hyper: OptimHyper,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Usage("learning rate must be positive and finite".into()));
        }
        if self.rank == 0 {
            return Err(Error::Usage("rank must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Usage("max_epochs must be at least 1".into()));
        }
        if !(self.convergence_eps > 0.0) {
            return Err(Error::Usage("convergence_eps must be positive".into()));
        }
        if self.patience == 0 {
            return Err(Error::Usage("patience must be at least 1".into()));
        }
        match self.optimizer {
            OptimizerKind::LambdaOpt => {
                if self.gains.is_none() {
                    return Err(Error::Usage(
                        "optimizer lambda_opt requires PID gains".into(),
                    ));
                }
            }
            _ => match self.fixed_lambda {
                None => {
                    return Err(Error::Usage(format!(
                        "optimizer {} requires a fixed lambda",
                        self.optimizer.name()
                    )))
                }
                Some(l) if l < 0.0 || !l.is_finite() => {
                    return Err(Error::Usage("fixed lambda must be non-negative".into()))
                }
                Some(_) => {}
            },
        }
        Ok(())
    }
}

/// Per-epoch training and validation metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub train_rmse: f64,
    pub valid_rmse: f64,
    pub valid_mae: f64,
    /// Mean per-entry lambda at epoch end; the fixed lambda for baselines.
    pub mean_lambda: f64,
    pub wall_time_ms: u64,
}

/// Result of a completed training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub factors: FactorPair,
    pub reports: Vec<EpochReport>,
    /// True when the run stopped on the plateau rule rather than max_epochs.
    pub converged: bool,
}

impl TrainOutcome {
    pub fn epochs_run(&self) -> usize {
        self.reports.len()
    }
}

/// Per-sample gradient of the regularized objective at entry (i, j):
/// gU_i = -2 e V_j + 2 lambda U_i and gV_j = -2 e U_i + 2 lambda V_j.
pub fn grad_sample(
    factors: &FactorPair,
    i: usize,
    j: usize,
    e_t: f64,
    lambda_ij: f64,
) -> (Vec<f64>, Vec<f64>) {
    let k = factors.rank();
    let mut gu = vec![0.0; k];
    let mut gv = vec![0.0; k];
    grad_into(factors.u_row(i), factors.v_row(j), e_t, lambda_ij, &mut gu, &mut gv);
    (gu, gv)
}

fn grad_into(u_i: &[f64], v_j: &[f64], e_t: f64, lambda: f64, gu: &mut [f64], gv: &mut [f64]) {
    for d in 0..u_i.len() {
        gu[d] = -2.0 * e_t * v_j[d] + 2.0 * lambda * u_i[d];
        gv[d] = -2.0 * e_t * u_i[d] + 2.0 * lambda * v_j[d];
    }
}

/// Plain SGD update on rows U_i and V_j only.
pub fn sgd_apply(factors: &mut FactorPair, i: usize, j: usize, gu: &[f64], gv: &[f64], eta: f64) {
    let (u_row, v_row) = factors.rows_mut(i, j);
    for d in 0..u_row.len() {
        u_row[d] -= eta * gu[d];
        v_row[d] -= eta * gv[d];
    }
}

/// Plateau rule: converged once validation RMSE has improved by less than
/// `eps` for `patience` consecutive epochs.
pub fn check_convergence(reports: &[EpochReport], eps: f64, patience: usize) -> bool {
    if reports.len() < patience + 1 {
        return false;
    }
    reports
        .windows(2)
        .rev()
        .take(patience)
        .all(|w| w[0].valid_rmse - w[1].valid_rmse < eps)
}

fn check_rows(u_row: &[f64], v_row: &[f64], epoch: usize, i: usize, j: usize) -> Result<()> {
    for x in u_row.iter().chain(v_row.iter()) {
        if !x.is_finite() || x.abs() > DIVERGENCE_LIMIT {
            return Err(Error::Divergence { epoch, row: i, col: j });
        }
    }
    Ok(())
}

enum UpdateRule {
    /// Adaptive regularization; parameter update is plain SGD.
    Pid(PidTable, PidGains),
    Velocity(VelocityState, f64),
    Adam(AdamState, f64),
}

/// Runs the adaptive (lambda_opt) trainer.
pub fn train_lambda_opt(
    data_train: &ObservedMatrix,
    data_valid: &ObservedMatrix,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if config.optimizer != OptimizerKind::LambdaOpt {
        return Err(Error::Usage("train_lambda_opt requires optimizer lambda_opt".into()));
    }
    train(data_train, data_valid, config)
}

/// Runs one of the fixed-lambda baseline trainers.
pub fn train_baseline(
    data_train: &ObservedMatrix,
    data_valid: &ObservedMatrix,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if !config.optimizer.is_baseline() {
        return Err(Error::Usage("train_baseline requires a baseline optimizer".into()));
    }
    train(data_train, data_valid, config)
}

pub fn train(
    data_train: &ObservedMatrix,
    data_valid: &ObservedMatrix,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with_observer(data_train, data_valid, config, |_| {})
}

/// Shared epoch loop. `on_epoch` sees every report as it is produced, before
/// the convergence check; the CLI uses it for live progress output.
pub fn train_with_observer(
    data_train: &ObservedMatrix,
    data_valid: &ObservedMatrix,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochReport),
) -> Result<TrainOutcome> {
    config.validate()?;
    if data_train.rows() != data_valid.rows() || data_train.cols() != data_valid.cols() {
        return Err(Error::DimensionMismatch(
            "train and validation sets must declare the same dimensions".into(),
        ));
    }

    let k = config.rank;
    let mut factors = init_factors(data_train.rows(), data_train.cols(), k, config.seed)?;
    // Separate stream so shuffling never perturbs the init draw.
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(1);

    let mut rule = match config.optimizer {
        OptimizerKind::LambdaOpt => {
            let gains = config.gains.expect("validated");
            UpdateRule::Pid(PidTable::new(data_train.len(), &gains), gains)
        }
        OptimizerKind::Momentum => UpdateRule::Velocity(
            VelocityState::new(
                data_train.rows(),
                data_train.cols(),
                k,
                config.hyper.momentum_beta,
                false,
            ),
            config.fixed_lambda.expect("validated"),
        ),
        OptimizerKind::Nesterov => UpdateRule::Velocity(
            VelocityState::new(
                data_train.rows(),
                data_train.cols(),
                k,
                config.hyper.momentum_beta,
                true,
            ),
            config.fixed_lambda.expect("validated"),
        ),
        OptimizerKind::Adam => UpdateRule::Adam(
            AdamState::new(data_train.rows(), data_train.cols(), k, &config.hyper, false),
            config.fixed_lambda.expect("validated"),
        ),
        OptimizerKind::Nadam => UpdateRule::Adam(
            AdamState::new(data_train.rows(), data_train.cols(), k, &config.hyper, true),
            config.fixed_lambda.expect("validated"),
        ),
    };

    let mut order: Vec<usize> = (0..data_train.len()).collect();
    let mut gu = vec![0.0; k];
    let mut gv = vec![0.0; k];
    let mut reports: Vec<EpochReport> = Vec::new();
    let mut converged = false;

    for epoch in 1..=config.max_epochs {
        let started = Instant::now();
        if config.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        for &idx in &order {
            let entry = data_train.entries()[idx];
            let (i, j) = (entry.row, entry.col);
            match &mut rule {
                // Fused hot path: one borrow of the two rows covers the
                // prediction, the gradient step, and the divergence guard.
                // The arithmetic is ordered exactly as grad_into + sgd_apply
                // so the degenerate controller stays bitwise equal to SGD.
                UpdateRule::Pid(table, gains) => {
                    let (u_row, v_row) = factors.rows_mut(i, j);
                    let mut dot = 0.0;
                    for d in 0..k {
                        dot += u_row[d] * v_row[d];
                    }
                    let e_t = entry.value - dot;
                    if !e_t.is_finite() {
                        return Err(Error::Divergence { epoch, row: i, col: j });
                    }
                    let lambda = pid_step(gains, table.state_mut(idx), e_t)?;
                    let mut ok = true;
                    for d in 0..k {
                        let gu = -2.0 * e_t * v_row[d] + 2.0 * lambda * u_row[d];
                        let gv = -2.0 * e_t * u_row[d] + 2.0 * lambda * v_row[d];
                        let u_new = u_row[d] - config.eta * gu;
                        let v_new = v_row[d] - config.eta * gv;
                        u_row[d] = u_new;
                        v_row[d] = v_new;
                        ok &= u_new.abs() <= DIVERGENCE_LIMIT && v_new.abs() <= DIVERGENCE_LIMIT;
                    }
                    if !ok {
                        return Err(Error::Divergence { epoch, row: i, col: j });
                    }
                }
                UpdateRule::Velocity(state, lambda) => {
                    let e_t = entry.value - predict(&factors, i, j);
                    if !e_t.is_finite() {
                        return Err(Error::Divergence { epoch, row: i, col: j });
                    }
                    grad_into(factors.u_row(i), factors.v_row(j), e_t, *lambda, &mut gu, &mut gv);
                    let (u_row, v_row) = factors.rows_mut(i, j);
                    state.apply_u(i, k, u_row, &gu, config.eta);
                    state.apply_v(j, k, v_row, &gv, config.eta);
                    check_rows(u_row, v_row, epoch, i, j)?;
                }
                UpdateRule::Adam(state, lambda) => {
                    let e_t = entry.value - predict(&factors, i, j);
                    if !e_t.is_finite() {
                        return Err(Error::Divergence { epoch, row: i, col: j });
                    }
                    grad_into(factors.u_row(i), factors.v_row(j), e_t, *lambda, &mut gu, &mut gv);
                    let (u_row, v_row) = factors.rows_mut(i, j);
                    state.apply_u(i, k, u_row, &gu, config.eta);
                    state.apply_v(j, k, v_row, &gv, config.eta);
                    check_rows(u_row, v_row, epoch, i, j)?;
                }
            }
        }

        let train_eval = evaluate(data_train, &factors)?;
        let valid_eval = evaluate(data_valid, &factors)?;
        let mean_lambda = match &rule {
            UpdateRule::Pid(table, _) => table.mean_lambda(),
            UpdateRule::Velocity(_, lambda) | UpdateRule::Adam(_, lambda) => *lambda,
        };
        let report = EpochReport {
            epoch,
            train_rmse: train_eval.rmse,
            valid_rmse: valid_eval.rmse,
            valid_mae: valid_eval.mae,
            mean_lambda,
            wall_time_ms: started.elapsed().as_millis() as u64,
        };
        on_epoch(&report);
        reports.push(report);
        if check_convergence(&reports, config.convergence_eps, config.patience) {
            converged = true;
            break;
        }
    }

    Ok(TrainOutcome { factors, reports, converged })
}

/// Named hyperparameter presets for the two power-load corpora.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub eta: f64,
    pub lambda: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl Preset {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "ukdale" => Ok(Self { eta: 5e-2, lambda: 9e-4, kp: 5e-2, ki: 5e-4, kd: 5e-4 }),
            "iawe" => Ok(Self { eta: 5e-2, lambda: 5e-4, kp: 5e-3, ki: 5e-4, kd: 5e-5 }),
            other => Err(Error::Usage(format!("unknown preset '{other}'"))),
        }
    }

    /// Default clip bounds: floor at zero, ceiling at twice the known-good
    /// fixed lambda for the dataset.
    pub fn default_gains(&self) -> PidGains {
        PidGains::new(self.kp, self.ki, self.kd, 0.0, 2.0 * self.lambda)
            .expect("preset bounds are valid")
    }
}
