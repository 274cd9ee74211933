//! Sparse matrix completion by low-rank factorization, with a discrete PID
//! controller that adapts the per-entry regularization coefficient from the
//! live prediction residual. Includes fixed-regularization baseline trainers
//! (momentum, Nesterov, Adam, Nadam) and a benchmark harness.

pub mod cli;
pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod pid;
pub mod trainer;

pub use error::{Error, Result};
pub use metrics::{evaluate, EvalResult};
pub use model::{
    init_factors, predict, residual, sample_loss, total_loss, FactorPair, ObservedEntry,
    ObservedMatrix,
};
pub use optim::OptimizerKind;
pub use pid::{clip_lambda, pid_raw, pid_step, EntryPidState, PidGains, PidTable};
pub use trainer::{
    check_convergence, grad_sample, sgd_apply, train, train_baseline, train_lambda_opt,
    EpochReport, Preset, TrainConfig, TrainOutcome,
};
