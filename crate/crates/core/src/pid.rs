//! Discrete PID control of the per-entry regularization coefficient.
//!
//! Each observed entry (i, j) carries its own controller state. On every
//! visit the trainer feeds the signed prediction residual to the controller
//! and receives the clipped regularization coefficient for that step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Controller gains and clip bounds for the regularization coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl PidGains {
    pub fn new(kp: f64, ki: f64, kd: f64, lambda_min: f64, lambda_max: f64) -> Result<Self> {
        if !(kp >= 0.0 && ki >= 0.0 && kd >= 0.0)
            || !kp.is_finite()
            || !ki.is_finite()
            || !kd.is_finite()
        {
            return Err(Error::Usage("PID gains must be finite and non-negative".into()));
        }
        if !(lambda_min >= 0.0 && lambda_min < lambda_max) {
            return Err(Error::Usage(
                "clip bounds must satisfy 0 <= lambda_min < lambda_max".into(),
            ));
        }
        Ok(Self { kp, ki, kd, lambda_min, lambda_max })
    }

    /// Zero gains with both bounds collapsed onto a fixed lambda. Degenerates
    /// the controller into a constant coefficient.
    ///
    /// Bypasses the lambda_min < lambda_max check on purpose; a collapsed
    /// range is only meaningful for this degenerate configuration.
    pub fn constant(lambda: f64) -> Self {
        Self { kp: 0.0, ki: 0.0, kd: 0.0, lambda_min: lambda, lambda_max: lambda }
    }
}

/// Per-entry controller state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryPidState {
    /// Running sum of all residuals ever fed to this state.
    pub integral: f64,
    /// Previous residual, 0 before the first update.
    pub prev_error: f64,
    /// Current clipped coefficient.
    pub lambda: f64,
}

impl EntryPidState {
    pub fn new(lambda_min: f64) -> Self {
        Self { integral: 0.0, prev_error: 0.0, lambda: lambda_min }
    }
}

/// Raw (unclipped) controller output for residual `e_t`.
///
/// The integral term includes the current residual: the stored integral does
/// not yet contain `e_t`, so it is added here.
pub fn pid_raw(gains: &PidGains, state: &EntryPidState, e_t: f64) -> Result<f64> {
    if !e_t.is_finite() {
        return Err(Error::Usage("PID input residual must be finite".into()));
    }
    Ok(gains.kp * e_t
        + gains.ki * (state.integral + e_t)
        + gains.kd * (e_t - state.prev_error))
}

/// Clamp a raw coefficient to [lambda_min, lambda_max].
pub fn clip_lambda(raw: f64, gains: &PidGains) -> f64 {
    raw.max(gains.lambda_min).min(gains.lambda_max)
}

/// One controller update: computes the clipped coefficient and advances the
/// state (integral, previous error, stored lambda). Returns the new lambda.
pub fn pid_step(gains: &PidGains, state: &mut EntryPidState, e_t: f64) -> Result<f64> {
    let raw = pid_raw(gains, state, e_t)?;
    let lambda = clip_lambda(raw, gains);
    state.integral += e_t;
    state.prev_error = e_t;
    state.lambda = lambda;
    Ok(lambda)
}

/// One controller state per observed entry, indexed in entry order.
#[derive(Debug, Clone)]
pub struct PidTable {
    states: Vec<EntryPidState>,
}

impl PidTable {
    pub fn new(entry_count: usize, gains: &PidGains) -> Self {
        Self { states: vec![EntryPidState::new(gains.lambda_min); entry_count] }
    }

    pub fn state_mut(&mut self, idx: usize) -> &mut EntryPidState {
        &mut self.states[idx]
    }

    /// Number of stored controller records; one per observed entry.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn mean_lambda(&self) -> f64 {
        if self.states.is_empty() {
            return 0.0;
        }
        self.states.iter().map(|s| s.lambda).sum::<f64>() / self.states.len() as f64
    }
}
