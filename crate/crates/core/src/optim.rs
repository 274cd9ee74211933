//! Parameter update rules for the baseline trainers.
//!
//! Buffers are allocated per factor-matrix row and touched lazily: a sample
//! on entry (i, j) updates only the buffers of row i of U and row j of V.
//! Adam-family rows carry their own step counters for bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    LambdaOpt,
    Momentum,
    Nesterov,
    Adam,
    Nadam,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 5] = [
        OptimizerKind::LambdaOpt,
        OptimizerKind::Momentum,
        OptimizerKind::Nesterov,
        OptimizerKind::Adam,
        OptimizerKind::Nadam,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::LambdaOpt => "lambda_opt",
            Self::Momentum => "momentum",
            Self::Nesterov => "nesterov",
            Self::Adam => "adam",
            Self::Nadam => "nadam",
        }
    }

    pub fn is_baseline(&self) -> bool {
        !matches!(self, Self::LambdaOpt)
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda_opt" => Ok(Self::LambdaOpt),
            "momentum" => Ok(Self::Momentum),
            "nesterov" => Ok(Self::Nesterov),
            "adam" => Ok(Self::Adam),
            "nadam" => Ok(Self::Nadam),
            other => Err(Error::Usage(format!("unknown optimizer '{other}'"))),
        }
    }
}

/// Hyperparameters of the baseline update rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimHyper {
    pub momentum_beta: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for OptimHyper {
    fn default() -> Self {
        Self { momentum_beta: 0.9, adam_beta1: 0.9, adam_beta2: 0.999, adam_eps: 1e-8 }
    }
}

/// Velocity buffers for momentum and Nesterov, one slot per parameter.
#[derive(Debug, Clone)]
pub struct VelocityState {
    beta: f64,
    nesterov: bool,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl VelocityState {
    pub fn new(m: usize, n: usize, k: usize, beta: f64, nesterov: bool) -> Self {
        Self { beta, nesterov, u: vec![0.0; m * k], v: vec![0.0; n * k] }
    }

    fn update_row(beta: f64, nesterov: bool, vel: &mut [f64], row: &mut [f64], grad: &[f64], eta: f64) {
        for d in 0..row.len() {
            let g = grad[d];
            vel[d] = beta * vel[d] + g;
            let step = if nesterov { g + beta * vel[d] } else { vel[d] };
            row[d] -= eta * step;
        }
    }

    pub fn apply_u(&mut self, i: usize, k: usize, row: &mut [f64], grad: &[f64], eta: f64) {
        Self::update_row(self.beta, self.nesterov, &mut self.u[i * k..(i + 1) * k], row, grad, eta);
    }

    pub fn apply_v(&mut self, j: usize, k: usize, row: &mut [f64], grad: &[f64], eta: f64) {
        Self::update_row(self.beta, self.nesterov, &mut self.v[j * k..(j + 1) * k], row, grad, eta);
    }
}

/// First/second moment estimates and per-row step counters for Adam/Nadam.
#[derive(Debug, Clone)]
pub struct AdamState {
    beta1: f64,
    beta2: f64,
    eps: f64,
    nesterov: bool,
    m_u: Vec<f64>,
    v_u: Vec<f64>,
    m_v: Vec<f64>,
    v_v: Vec<f64>,
    t_u: Vec<u64>,
    t_v: Vec<u64>,
}

impl AdamState {
    pub fn new(m: usize, n: usize, k: usize, hyper: &OptimHyper, nesterov: bool) -> Self {
        Self {
            beta1: hyper.adam_beta1,
            beta2: hyper.adam_beta2,
            eps: hyper.adam_eps,
            nesterov,
            m_u: vec![0.0; m * k],
            v_u: vec![0.0; m * k],
            m_v: vec![0.0; n * k],
            v_v: vec![0.0; n * k],
            t_u: vec![0; m],
            t_v: vec![0; n],
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn update_row(
        beta1: f64,
        beta2: f64,
        eps: f64,
        nesterov: bool,
        t: &mut u64,
        m_buf: &mut [f64],
        v_buf: &mut [f64],
        row: &mut [f64],
        grad: &[f64],
        eta: f64,
    ) {
        *t += 1;
        let t = *t as f64;
        let bc1 = 1.0 - beta1.powf(t);
        let bc2 = 1.0 - beta2.powf(t);
        for d in 0..row.len() {
            let g = grad[d];
            m_buf[d] = beta1 * m_buf[d] + (1.0 - beta1) * g;
            v_buf[d] = beta2 * v_buf[d] + (1.0 - beta2) * g * g;
            let m_hat = m_buf[d] / bc1;
            let v_hat = v_buf[d] / bc2;
            let numer = if nesterov {
                beta1 * m_hat + (1.0 - beta1) * g / bc1
            } else {
                m_hat
            };
            row[d] -= eta * numer / (v_hat.sqrt() + eps);
        }
    }

    pub fn apply_u(&mut self, i: usize, k: usize, row: &mut [f64], grad: &[f64], eta: f64) {
        Self::update_row(
            self.beta1,
            self.beta2,
            self.eps,
            self.nesterov,
            &mut self.t_u[i],
            &mut self.m_u[i * k..(i + 1) * k],
            &mut self.v_u[i * k..(i + 1) * k],
            row,
            grad,
            eta,
        );
    }

    pub fn apply_v(&mut self, j: usize, k: usize, row: &mut [f64], grad: &[f64], eta: f64) {
        Self::update_row(
            self.beta1,
            self.beta2,
            self.eps,
            self.nesterov,
            &mut self.t_v[j],
            &mut self.m_v[j * k..(j + 1) * k],
            &mut self.v_v[j * k..(j + 1) * k],
            row,
            grad,
            eta,
        );
    }
}
