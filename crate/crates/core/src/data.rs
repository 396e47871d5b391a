//! Data containers, column normalization, and the synthetic
//! union-of-subspaces generator.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Norm below which a column counts as zero and cannot be normalized.
pub const ZERO_COLUMN_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("column {0} has norm below 1e-12 and cannot be normalized")]
    ZeroColumn(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Which similarity structure drives the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Ridge-regularized self-representation solved in closed form.
    LeastSquares,
    /// Sparse self-representation via orthogonal matching pursuit.
    MatchingPursuit,
    /// Neighbor search by greedy projection onto an incrementally spanned
    /// subspace; no coefficient matrix is solved.
    GreedyNeighbor,
}

/// Pipeline parameters.
///
/// `m` is the number of neighbors preserved per sample, `lambda_reg` the
/// self-representation trade-off, `lambda_m` / `lambda_f` the model-selection
/// and fusion reward trade-offs.
#[derive(Debug, Clone, Copy)]
pub struct Params {
    pub m: usize,
    pub lambda_reg: f64,
    pub lambda_m: f64,
    pub lambda_f: f64,
    pub solver: Solver,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            m: 8,
            lambda_reg: 0.1,
            lambda_m: 1.0,
            lambda_f: 1.0,
            solver: Solver::LeastSquares,
        }
    }
}

impl Params {
    /// Checks the parameter invariants against a dataset of `n_samples`.
    pub fn validate(&self, n_samples: usize) -> Result<(), DataError> {
        if self.m < 3 {
            return Err(DataError::InvalidConfig(format!(
                "m must be at least 3, got {}",
                self.m
            )));
        }
        if self.m >= n_samples {
            return Err(DataError::InvalidConfig(format!(
                "m ({}) must be smaller than the number of samples ({})",
                self.m, n_samples
            )));
        }
        if !(self.lambda_reg.is_finite() && self.lambda_reg > 0.0) {
            return Err(DataError::InvalidConfig(format!(
                "lambda_reg must be finite and positive, got {}",
                self.lambda_reg
            )));
        }
        for (name, v) in [("lambda_m", self.lambda_m), ("lambda_f", self.lambda_f)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(DataError::InvalidConfig(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A sample set of `n_features` x `n_samples`; column `j` is sample `x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    /// Wraps a features-by-samples matrix, checking finiteness and the
    /// minimum sample count.
    pub fn new(values: DMatrix<f64>) -> Result<Self, DataError> {
        if values.ncols() < 3 {
            return Err(DataError::InvalidConfig(format!(
                "need at least 3 samples, got {}",
                values.ncols()
            )));
        }
        if values.nrows() == 0 {
            return Err(DataError::InvalidConfig("need at least 1 feature".into()));
        }
        if let Some((idx, _)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let (r, c) = (idx % values.nrows(), idx / values.nrows());
            return Err(DataError::InvalidConfig(format!(
                "non-finite entry at row {r}, column {c}"
            )));
        }
        Ok(Self { values })
    }

    pub fn n_features(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Reorders samples; `perm[new_index] = old_index`.
    pub fn permute_samples(&self, perm: &[usize]) -> Result<Self, DataError> {
        if perm.len() != self.n_samples() {
            return Err(DataError::InvalidConfig(
                "permutation length does not match sample count".into(),
            ));
        }
        let mut out = DMatrix::zeros(self.n_features(), self.n_samples());
        for (new_j, &old_j) in perm.iter().enumerate() {
            out.set_column(new_j, &self.values.column(old_j));
        }
        Self::new(out)
    }
}

/// Reference labeling of a sample set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub labels: Vec<usize>,
    pub k_true: usize,
}

impl GroundTruth {
    pub fn new(labels: Vec<usize>, k_true: usize) -> Result<Self, DataError> {
        if k_true == 0 {
            return Err(DataError::InvalidConfig("k_true must be positive".into()));
        }
        let mut seen = vec![false; k_true];
        for (i, &l) in labels.iter().enumerate() {
            if l >= k_true {
                return Err(DataError::InvalidConfig(format!(
                    "label {l} at position {i} is outside [0, {k_true})"
                )));
            }
            seen[l] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(DataError::InvalidConfig(
                "every cluster id in [0, k_true) must occur at least once".into(),
            ));
        }
        Ok(Self { labels, k_true })
    }
}

/// Scales every column to unit Euclidean norm.
///
/// Fails with [`DataError::ZeroColumn`] if any column norm is below 1e-12.
pub fn normalize_columns(data: &DataMatrix) -> Result<DataMatrix, DataError> {
    let mut values = data.values.clone();
    for j in 0..values.ncols() {
        let norm = values.column(j).norm();
        if norm < ZERO_COLUMN_TOL {
            return Err(DataError::ZeroColumn(j));
        }
        let mut col = values.column_mut(j);
        col /= norm;
    }
    Ok(DataMatrix { values })
}

/// Synthetic data: `k` clusters of `per_cluster` samples, each cluster drawn
/// from a random `dim`-dimensional subspace of `R^ambient_dim`, plus
/// isotropic Gaussian noise of scale `noise_sigma`. Also returns the
/// generating bases so tests can measure subspace residuals.
pub fn generate_synthetic_with_bases(
    k: usize,
    dim: usize,
    per_cluster: usize,
    ambient_dim: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<(DataMatrix, GroundTruth, Vec<DMatrix<f64>>), DataError> {
    if k == 0 || dim == 0 || per_cluster == 0 || ambient_dim == 0 {
        return Err(DataError::InvalidConfig(
            "k, dim, per_cluster and ambient_dim must be positive".into(),
        ));
    }
    if dim >= ambient_dim {
        return Err(DataError::InvalidConfig(format!(
            "subspace dim ({dim}) must be smaller than ambient_dim ({ambient_dim})"
        )));
    }
    if per_cluster < dim {
        return Err(DataError::InvalidConfig(format!(
            "per_cluster ({per_cluster}) must be at least dim ({dim})"
        )));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(DataError::InvalidConfig(format!(
            "noise_sigma must be finite and nonnegative, got {noise_sigma}"
        )));
    }
    let n = k * per_cluster;
    if n < 3 {
        return Err(DataError::InvalidConfig(format!(
            "k * per_cluster must be at least 3, got {n}"
        )));
    }
    if k * dim > ambient_dim {
        log::warn!(
            "k * dim = {} exceeds ambient_dim = {}; subspaces will overlap",
            k * dim,
            ambient_dim
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = DMatrix::zeros(ambient_dim, n);
    let mut labels = Vec::with_capacity(n);
    let mut bases = Vec::with_capacity(k);

    for cluster in 0..k {
        let gaussian =
            DMatrix::from_fn(ambient_dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let basis = gaussian.qr().q();
        let coeffs =
            DMatrix::from_fn(dim, per_cluster, |_, _| rng.sample::<f64, _>(StandardNormal));
        let samples = &basis * coeffs;
        for s in 0..per_cluster {
            values.set_column(cluster * per_cluster + s, &samples.column(s));
            labels.push(cluster);
        }
        bases.push(basis);
    }

    let mut data = normalize_columns(&DataMatrix::new(values)?)?;
    if noise_sigma > 0.0 {
        let noise = DMatrix::from_fn(ambient_dim, n, |_, _| {
            noise_sigma * rng.sample::<f64, _>(StandardNormal)
        });
        data = normalize_columns(&DataMatrix::new(data.values + noise)?)?;
    }
    let truth = GroundTruth::new(labels, k)?;
    Ok((data, truth, bases))
}

/// Like [`generate_synthetic_with_bases`] but without the bases.
pub fn generate_synthetic(
    k: usize,
    dim: usize,
    per_cluster: usize,
    ambient_dim: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<(DataMatrix, GroundTruth), DataError> {
    let (data, truth, _) =
        generate_synthetic_with_bases(k, dim, per_cluster, ambient_dim, noise_sigma, seed)?;
    Ok((data, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normalize_scales_columns_to_unit_norm() {
        let m = DMatrix::from_columns(&[
            nalgebra::dvector![3.0, 4.0],
            nalgebra::dvector![1.0, 0.0],
            nalgebra::dvector![0.0, 2.0],
        ]);
        let out = normalize_columns(&DataMatrix::new(m).unwrap()).unwrap();
        assert_relative_eq!(out.values()[(0, 0)], 0.6, epsilon = 1e-12);
        assert_relative_eq!(out.values()[(1, 0)], 0.8, epsilon = 1e-12);
        for j in 0..3 {
            assert_relative_eq!(out.values().column(j).norm(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn normalize_is_identity_on_unit_columns_and_idempotent() {
        let (data, _) = generate_synthetic(2, 2, 4, 6, 0.05, 11).unwrap();
        let once = normalize_columns(&data).unwrap();
        let twice = normalize_columns(&once).unwrap();
        for (a, b) in data.values().iter().zip(once.values().iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-9);
        }
        assert_eq!(once.values(), twice.values());
    }

    #[test]
    fn normalize_rejects_zero_column() {
        let m = DMatrix::from_columns(&[
            nalgebra::dvector![1.0, 0.0],
            nalgebra::dvector![0.0, 0.0],
            nalgebra::dvector![0.0, 2.0],
        ]);
        let err = normalize_columns(&DataMatrix::new(m).unwrap()).unwrap_err();
        match err {
            DataError::ZeroColumn(j) => assert_eq!(j, 1),
            other => panic!("expected ZeroColumn, got {other:?}"),
        }
    }

    #[test]
    fn single_subspace_has_expected_rank() {
        let (data, _) = generate_synthetic(1, 2, 5, 10, 0.0, 3).unwrap();
        assert_eq!(data.n_features(), 10);
        assert_eq!(data.n_samples(), 5);
        let rank = data.values().clone().svd(false, false).rank(1e-9);
        assert_eq!(rank, 2);
    }

    #[test]
    fn generator_is_deterministic() {
        let (a, ta) = generate_synthetic(5, 4, 50, 30, 0.01, 7).unwrap();
        let (b, tb) = generate_synthetic(5, 4, 50, 30, 0.01, 7).unwrap();
        assert_eq!(a.values(), b.values());
        assert_eq!(ta.labels, tb.labels);
    }

    #[test]
    fn labels_match_generation_layout() {
        let (data, truth) = generate_synthetic(5, 4, 50, 30, 0.01, 7).unwrap();
        assert_eq!(data.n_samples(), 250);
        assert_eq!(truth.k_true, 5);
        for c in 0..5 {
            assert_eq!(
                truth.labels.iter().filter(|&&l| l == c).count(),
                50,
                "cluster {c} should hold 50 samples"
            );
        }
    }

    #[test]
    fn noiseless_samples_lie_in_their_generating_subspace() {
        let (data, truth, bases) = generate_synthetic_with_bases(3, 3, 8, 20, 0.0, 42).unwrap();
        for j in 0..data.n_samples() {
            let x = data.values().column(j);
            let basis = &bases[truth.labels[j]];
            let residual = &x - basis * (basis.transpose() * &x);
            assert!(
                residual.norm() < 1e-9,
                "sample {j} residual {}",
                residual.norm()
            );
        }
    }

    #[test]
    fn generator_rejects_bad_configs() {
        assert!(generate_synthetic(2, 5, 10, 5, 0.0, 0).is_err());
        assert!(generate_synthetic(2, 4, 2, 30, 0.0, 0).is_err());
        assert!(generate_synthetic(0, 2, 5, 10, 0.0, 0).is_err());
        assert!(generate_synthetic(2, 2, 5, 10, -0.1, 0).is_err());
    }

    #[test]
    fn params_validation() {
        let mut p = Params::default();
        assert!(p.validate(100).is_ok());
        assert!(p.validate(8).is_err());
        p.m = 2;
        assert!(p.validate(100).is_err());
        p.m = 8;
        p.lambda_reg = 0.0;
        assert!(p.validate(100).is_err());
        p.lambda_reg = 0.1;
        p.lambda_f = -1.0;
        assert!(p.validate(100).is_err());
    }
}
