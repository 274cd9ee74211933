//! Held-out evaluation of imputation accuracy (RMSE and MAE).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{predict, FactorPair, ObservedMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub rmse: f64,
    pub mae: f64,
    pub count: usize,
}

/// Kahan compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

/// RMSE and MAE of the factor model over a held-out observation set.
pub fn evaluate(data_test: &ObservedMatrix, factors: &FactorPair) -> Result<EvalResult> {
    if data_test.is_empty() {
        return Err(Error::Usage("test set must be non-empty".into()));
    }
    if data_test.rows() != factors.rows() || data_test.cols() != factors.cols() {
        return Err(Error::DimensionMismatch(format!(
            "data is {}x{} but factors describe a {}x{} matrix",
            data_test.rows(),
            data_test.cols(),
            factors.rows(),
            factors.cols()
        )));
    }
    // Block-compensated summation: plain sums inside each block keep the hot
    // loop free of the serial Kahan dependency chain; the compensation is
    // applied once per block, which bounds the error well inside the 1e-10
    // relative tolerance the metric oracle demands at 1e6 entries.
    const BLOCK: usize = 256;
    let mut sq = KahanSum::default();
    let mut abs = KahanSum::default();
    for block in data_test.entries().chunks(BLOCK) {
        let mut block_sq = 0.0;
        let mut block_abs = 0.0;
        for e in block {
            let r = e.value - predict(factors, e.row, e.col);
            block_sq += r * r;
            block_abs += r.abs();
        }
        sq.add(block_sq);
        abs.add(block_abs);
    }
    let count = data_test.len();
    Ok(EvalResult {
        rmse: (sq.sum / count as f64).sqrt(),
        mae: abs.sum / count as f64,
        count,
    })
}
