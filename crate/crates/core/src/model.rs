//! Sparse observation structure, latent factor pair, prediction and loss.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single observed measurement at (row, col).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedEntry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Sparse set of observed entries with declared dimensions m x n.
///
/// Entries are kept in insertion order; (row, col) pairs are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedMatrix {
    m: usize,
    n: usize,
    entries: Vec<ObservedEntry>,
}

impl ObservedMatrix {
    pub fn new(m: usize, n: usize, entries: Vec<ObservedEntry>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Usage("matrix dimensions must be at least 1x1".into()));
        }
        if entries.is_empty() {
            return Err(Error::Usage("observed matrix must contain at least one entry".into()));
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if e.row >= m || e.col >= n {
                return Err(Error::IndexOutOfBounds { row: e.row, col: e.col, m, n });
            }
            if !e.value.is_finite() {
                return Err(Error::Usage(format!(
                    "non-finite value at ({}, {})",
                    e.row, e.col
                )));
            }
            if !seen.insert((e.row, e.col)) {
                return Err(Error::DuplicateEntry { row: e.row, col: e.col });
            }
        }
        Ok(Self { m, n, entries })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[ObservedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Applies `f` to every observed value, keeping structure intact.
    pub fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|e| ObservedEntry { value: f(e.value), ..*e })
            .collect();
        Self { m: self.m, n: self.n, entries }
    }

    /// Rebuilds a matrix from entries known to be valid (internal use after
    /// a shuffle/split of an already-validated matrix).
    pub(crate) fn from_validated(m: usize, n: usize, entries: Vec<ObservedEntry>) -> Self {
        Self { m, n, entries }
    }
}

/// Dense latent matrices U (m x k) and V (n x k), row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorPair {
    m: usize,
    n: usize,
    k: usize,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl FactorPair {
    pub fn from_parts(m: usize, n: usize, k: usize, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != m * k || v.len() != n * k {
            return Err(Error::DimensionMismatch(format!(
                "expected U of {}x{} and V of {}x{}, got {} and {} values",
                m,
                k,
                n,
                k,
                u.len(),
                v.len()
            )));
        }
        Ok(Self { m, n, k, u, v })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.k
    }

    pub fn u_row(&self, i: usize) -> &[f64] {
        &self.u[i * self.k..(i + 1) * self.k]
    }

    pub fn v_row(&self, j: usize) -> &[f64] {
        &self.v[j * self.k..(j + 1) * self.k]
    }

    pub fn u_row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.u[i * self.k..(i + 1) * self.k]
    }

    pub fn v_row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.v[j * self.k..(j + 1) * self.k]
    }

    /// Mutable access to rows U_i and V_j at once, for a single SGD step.
    pub fn rows_mut(&mut self, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
        let k = self.k;
        (&mut self.u[i * k..(i + 1) * k], &mut self.v[j * k..(j + 1) * k])
    }

    /// Total stored factor values: (m + n) * k.
    pub fn value_count(&self) -> usize {
        self.u.len() + self.v.len()
    }

    /// Re-checks the shape invariants, for pairs deserialized from disk.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.m == 0 || self.n == 0 {
            return Err(Error::DimensionMismatch("factor dimensions must be at least 1".into()));
        }
        if self.u.len() != self.m * self.k || self.v.len() != self.n * self.k {
            return Err(Error::DimensionMismatch(format!(
                "stored factor lengths {} and {} do not match {}x{} / {}x{}",
                self.u.len(),
                self.v.len(),
                self.m,
                self.k,
                self.n,
                self.k
            )));
        }
        if self.u.iter().chain(&self.v).any(|x| !x.is_finite()) {
            return Err(Error::DimensionMismatch("stored factors contain non-finite values".into()));
        }
        Ok(())
    }

    pub fn frobenius_sq(&self) -> (f64, f64) {
        let u = self.u.iter().map(|x| x * x).sum();
        let v = self.v.iter().map(|x| x * x).sum();
        (u, v)
    }
}

/// Predicted value for cell (i, j): the inner product of U_i and V_j.
pub fn predict(factors: &FactorPair, i: usize, j: usize) -> f64 {
    debug_assert!(i < factors.m && j < factors.n);
    factors
        .u_row(i)
        .iter()
        .zip(factors.v_row(j))
        .map(|(a, b)| a * b)
        .sum()
}

/// Prediction residual e_ij = observed - predicted.
pub fn residual(observed: f64, factors: &FactorPair, i: usize, j: usize) -> f64 {
    observed - predict(factors, i, j)
}

/// Per-sample objective: e_ij^2 + lambda_ij * (|U_i|^2 + |V_j|^2).
pub fn sample_loss(
    observed: f64,
    factors: &FactorPair,
    i: usize,
    j: usize,
    lambda_ij: f64,
) -> Result<f64> {
    if lambda_ij < 0.0 {
        return Err(Error::Usage("lambda must be non-negative".into()));
    }
    let e = residual(observed, factors, i, j);
    let u_sq: f64 = factors.u_row(i).iter().map(|x| x * x).sum();
    let v_sq: f64 = factors.v_row(j).iter().map(|x| x * x).sum();
    Ok(e * e + lambda_ij * (u_sq + v_sq))
}

/// Global-lambda monitoring loss: sum of squared residuals over the observed
/// set plus lambda times the squared Frobenius norms of both factors.
pub fn total_loss(data: &ObservedMatrix, factors: &FactorPair, lambda: f64) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::Usage("lambda must be non-negative".into()));
    }
    let mut sum = 0.0;
    for e in data.entries() {
        let r = residual(e.value, factors, e.row, e.col);
        sum += r * r;
    }
    let (u_sq, v_sq) = factors.frobenius_sq();
    Ok(sum + lambda * (u_sq + v_sq))
}

/// Seeded random initialization: every entry uniform on [0.01, 0.1).
pub fn init_factors(m: usize, n: usize, k: usize, seed: u64) -> Result<FactorPair> {
    if m == 0 || n == 0 || k == 0 {
        return Err(Error::Usage("factor dimensions must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = (0..m * k).map(|_| rng.gen_range(0.01..0.1)).collect();
    let v = (0..n * k).map(|_| rng.gen_range(0.01..0.1)).collect();
    FactorPair::from_parts(m, n, k, u, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_from_rows(u_i: &[f64], v_j: &[f64]) -> FactorPair {
        FactorPair::from_parts(1, 1, u_i.len(), u_i.to_vec(), v_j.to_vec()).unwrap()
    }

    #[test]
    fn predict_dot_product() {
        let p = pair_from_rows(&[1.0, 0.0, 2.0], &[3.0, 5.0, 1.0]);
        assert_eq!(predict(&p, 0, 0), 5.0);
    }

    #[test]
    fn predict_zero_factor() {
        let p = pair_from_rows(&[0.0, 0.0, 0.0], &[3.0, -2.0, 7.0]);
        assert_eq!(predict(&p, 0, 0), 0.0);
    }

    #[test]
    fn predict_rank_one() {
        let p = pair_from_rows(&[1.5], &[-2.0]);
        assert_eq!(predict(&p, 0, 0), -3.0);
    }

    #[test]
    fn predict_scales_linearly_in_u() {
        let p = pair_from_rows(&[1.0, 2.0], &[0.5, -0.25]);
        let scaled = pair_from_rows(&[3.0, 6.0], &[0.5, -0.25]);
        assert!((predict(&scaled, 0, 0) - 3.0 * predict(&p, 0, 0)).abs() < 1e-12);
    }

    #[test]
    fn residual_sign_convention() {
        let p = pair_from_rows(&[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(residual(2.0, &p, 0, 0), 0.0);
        let q = pair_from_rows(&[3.0], &[1.0]);
        assert_eq!(residual(1.0, &q, 0, 0), -2.0);
    }

    #[test]
    fn residual_plus_predict_recovers_observed() {
        let p = pair_from_rows(&[0.3, -0.7, 0.11], &[1.9, 0.2, -4.0]);
        let observed = 0.37;
        assert_eq!(residual(observed, &p, 0, 0) + predict(&p, 0, 0), observed);
    }

    #[test]
    fn sample_loss_zero_case() {
        let p = pair_from_rows(&[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!(sample_loss(0.0, &p, 0, 0, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn sample_loss_penalty_only() {
        let p = pair_from_rows(&[1.0, 0.0], &[0.0, 1.0]);
        // e = 0, penalty = 0.5 * (1 + 1) = 1
        assert_eq!(sample_loss(0.0, &p, 0, 0, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn sample_loss_reduces_to_squared_error() {
        let p = pair_from_rows(&[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(sample_loss(3.0, &p, 0, 0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn sample_loss_rejects_negative_lambda() {
        let p = pair_from_rows(&[1.0], &[1.0]);
        assert!(sample_loss(1.0, &p, 0, 0, -0.1).is_err());
    }

    #[test]
    fn total_loss_perfect_fit() {
        let p = pair_from_rows(&[2.0], &[3.0]);
        let data = ObservedMatrix::new(1, 1, vec![ObservedEntry { row: 0, col: 0, value: 6.0 }])
            .unwrap();
        assert_eq!(total_loss(&data, &p, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn total_loss_single_entry_zero_factors() {
        let p = pair_from_rows(&[0.0], &[0.0]);
        let data = ObservedMatrix::new(1, 1, vec![ObservedEntry { row: 0, col: 0, value: 1.0 }])
            .unwrap();
        assert_eq!(total_loss(&data, &p, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn total_loss_hand_built_two_by_two() {
        // k = 1: U = [2, 1]^T, V = [1, 3]^T, observed (0,0)=3 and (1,1)=2.
        let p = FactorPair::from_parts(2, 2, 1, vec![2.0, 1.0], vec![1.0, 3.0]).unwrap();
        let data = ObservedMatrix::new(
            2,
            2,
            vec![
                ObservedEntry { row: 0, col: 0, value: 3.0 },
                ObservedEntry { row: 1, col: 1, value: 2.0 },
            ],
        )
        .unwrap();
        // residuals: 3 - 2 = 1 and 2 - 3 = -1; frob: (4 + 1) + (1 + 9) = 15
        // total at lambda = 0.1: 1 + 1 + 1.5 = 3.5
        let got = total_loss(&data, &p, 0.1).unwrap();
        assert!((got - 3.5).abs() < 1e-12);
    }

    #[test]
    fn total_loss_nonnegative() {
        let p = init_factors(4, 3, 2, 9).unwrap();
        let data = ObservedMatrix::new(
            4,
            3,
            vec![
                ObservedEntry { row: 0, col: 1, value: -0.4 },
                ObservedEntry { row: 3, col: 2, value: 1.7 },
            ],
        )
        .unwrap();
        assert!(total_loss(&data, &p, 0.05).unwrap() >= 0.0);
    }

    #[test]
    fn init_factors_deterministic() {
        let a = init_factors(5, 4, 3, 42).unwrap();
        let b = init_factors(5, 4, 3, 42).unwrap();
        assert_eq!(a, b);
        let c = init_factors(5, 4, 3, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_factors_range_and_shape() {
        let p = init_factors(3, 2, 4, 7).unwrap();
        assert_eq!(p.rows(), 3);
        assert_eq!(p.cols(), 2);
        assert_eq!(p.rank(), 4);
        assert_eq!(p.value_count(), (3 + 2) * 4);
        for i in 0..3 {
            for x in p.u_row(i) {
                assert!((0.01..0.1).contains(x));
            }
        }
        for j in 0..2 {
            for x in p.v_row(j) {
                assert!((0.01..0.1).contains(x));
            }
        }
    }

    #[test]
    fn init_factors_rejects_zero_dims() {
        assert!(init_factors(0, 2, 1, 0).is_err());
        assert!(init_factors(2, 0, 1, 0).is_err());
        assert!(init_factors(2, 2, 0, 0).is_err());
    }

    #[test]
    fn observed_matrix_rejects_duplicates() {
        let err = ObservedMatrix::new(
            2,
            2,
            vec![
                ObservedEntry { row: 0, col: 0, value: 1.0 },
                ObservedEntry { row: 0, col: 0, value: 2.0 },
            ],
        );
        assert!(matches!(err, Err(Error::DuplicateEntry { row: 0, col: 0 })));
    }

    #[test]
    fn observed_matrix_rejects_out_of_bounds_and_nonfinite() {
        assert!(ObservedMatrix::new(2, 2, vec![ObservedEntry { row: 2, col: 0, value: 1.0 }])
            .is_err());
        assert!(ObservedMatrix::new(
            2,
            2,
            vec![ObservedEntry { row: 0, col: 0, value: f64::NAN }]
        )
        .is_err());
    }
}
