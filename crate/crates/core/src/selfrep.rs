//! Similarity structure: self-representation solvers and the neighbor maps
//! derived from them, plus the solver-free greedy neighbor search.

use crate::data::DataMatrix;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SelfRepError {
    #[error("regularized Gram matrix is numerically singular")]
    SingularSystem,
    #[error("similarity matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("m ({m}) must be smaller than the number of samples ({n})")]
    BadNeighborCount { m: usize, n: usize },
    #[error("invalid neighbor list for sample {0}")]
    BadNeighborList(usize),
    #[error("similarity is {sim} samples but data holds {data}")]
    SizeMismatch { sim: usize, data: usize },
}

/// Pairwise coefficients: entry `(i, j)` is the weight of sample `i` in the
/// representation of sample `j`. The diagonal is held at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: DMatrix<f64>,
}

impl SimilarityMatrix {
    /// Wraps an N x N coefficient matrix, forcing the diagonal to zero.
    pub fn new(mut values: DMatrix<f64>) -> Result<Self, SelfRepError> {
        if values.nrows() != values.ncols() {
            return Err(SelfRepError::NotSquare {
                rows: values.nrows(),
                cols: values.ncols(),
            });
        }
        values.fill_diagonal(0.0);
        Ok(Self { values })
    }

    /// Raw cosine similarities (Gram matrix of the normalized data) with a
    /// zeroed diagonal. Useful as a solver-free baseline.
    pub fn cosine(data: &DataMatrix) -> Self {
        let x = data.values();
        let mut gram = x.tr_mul(x);
        gram.fill_diagonal(0.0);
        Self { values: gram }
    }

    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

/// For each sample, the `m` samples it is most strongly tied to.
///
/// Lists are ordered (by descending coefficient magnitude, or by greedy
/// selection order) and carry an O(1) membership mask; the mask is exactly
/// the binarized similarity matrix, entry `(i, j)` set iff `i` is a neighbor
/// of sample `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborMap {
    m: usize,
    lists: Vec<Vec<usize>>,
    mask: Vec<bool>,
}

impl NeighborMap {
    /// Builds a map from per-sample neighbor lists; every list must hold
    /// exactly the same number of distinct in-range entries, none equal to
    /// the sample itself.
    pub fn new(lists: Vec<Vec<usize>>) -> Result<Self, SelfRepError> {
        let n = lists.len();
        let m = lists.first().map_or(0, Vec::len);
        if m == 0 || m >= n {
            return Err(SelfRepError::BadNeighborCount { m, n });
        }
        let mut mask = vec![false; n * n];
        for (j, list) in lists.iter().enumerate() {
            if list.len() != m {
                return Err(SelfRepError::BadNeighborList(j));
            }
            for &i in list {
                if i >= n || i == j || mask[j * n + i] {
                    return Err(SelfRepError::BadNeighborList(j));
                }
                mask[j * n + i] = true;
            }
        }
        Ok(Self { m, lists, mask })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_samples(&self) -> usize {
        self.lists.len()
    }

    /// Ordered neighbor list of sample `j`.
    pub fn neighbors(&self, j: usize) -> &[usize] {
        &self.lists[j]
    }

    /// Whether `i` is among the m neighbors of sample `j`.
    pub fn is_neighbor(&self, i: usize, j: usize) -> bool {
        self.mask[j * self.lists.len() + i]
    }

    /// Materializes the binary matrix: entry `(i, j)` is 1 iff `i` is a
    /// neighbor of sample `j`.
    pub fn to_binary_matrix(&self) -> DMatrix<f64> {
        let n = self.lists.len();
        DMatrix::from_fn(n, n, |i, j| if self.is_neighbor(i, j) { 1.0 } else { 0.0 })
    }
}

/// Closed-form ridge self-representation: minimizes
/// `||X - XC||_F^2 + lambda ||C||_F^2` through the normal equations
/// `(X^T X + lambda I) C = X^T X`, then zeroes the diagonal.
pub fn solve_least_squares(
    data: &DataMatrix,
    lambda_reg: f64,
) -> Result<SimilarityMatrix, SelfRepError> {
    let full = solve_least_squares_full(data, lambda_reg)?;
    SimilarityMatrix::new(full)
}

/// The ridge minimizer with its diagonal intact.
pub(crate) fn solve_least_squares_full(
    data: &DataMatrix,
    lambda_reg: f64,
) -> Result<DMatrix<f64>, SelfRepError> {
    let x = data.values();
    let gram = x.tr_mul(x);
    let mut lhs = gram.clone();
    for d in 0..lhs.nrows() {
        lhs[(d, d)] += lambda_reg;
    }
    let chol = lhs.cholesky().ok_or(SelfRepError::SingularSystem)?;
    Ok(chol.solve(&gram))
}

/// Residual threshold below which matching pursuit stops early.
const OMP_RESIDUAL_TOL: f64 = 1e-6;
/// Correlation below which no further atom is selected.
const OMP_CORRELATION_TOL: f64 = 1e-12;

/// Sparse self-representation via orthogonal matching pursuit: each column
/// greedily selects up to `m` atoms from the other samples, re-fitting
/// least-squares coefficients on the support after every selection.
pub fn solve_matching_pursuit(
    data: &DataMatrix,
    m: usize,
) -> Result<SimilarityMatrix, SelfRepError> {
    let x = data.values();
    let n = x.ncols();
    if m >= n {
        return Err(SelfRepError::BadNeighborCount { m, n });
    }
    let mut coeffs = DMatrix::zeros(n, n);
    for j in 0..n {
        let target = x.column(j).into_owned();
        let mut residual = target.clone();
        let mut support: Vec<usize> = Vec::with_capacity(m);
        let mut fitted = DVector::zeros(0);
        for step in 0..m {
            if residual.norm() < OMP_RESIDUAL_TOL {
                break;
            }
            let mut best: Option<(usize, f64)> = None;
            for i in 0..n {
                if i == j || support.contains(&i) {
                    continue;
                }
                let corr = x.column(i).dot(&residual).abs();
                if best.map_or(true, |(_, b)| corr > b) {
                    best = Some((i, corr));
                }
            }
            let Some((atom, corr)) = best else { break };
            // The first selection is forced; afterwards a vanishing
            // correlation means the residual is orthogonal to every atom.
            if step > 0 && corr <= OMP_CORRELATION_TOL {
                break;
            }
            support.push(atom);
            let sub = DMatrix::from_columns(
                &support.iter().map(|&i| x.column(i)).collect::<Vec<_>>(),
            );
            let svd = sub.clone().svd(true, true);
            fitted = svd
                .solve(&target, 1e-12)
                .map_err(|_| SelfRepError::SingularSystem)?;
            residual = &target - &sub * &fitted;
        }
        for (slot, &i) in support.iter().enumerate() {
            coeffs[(i, j)] = fitted[slot];
        }
    }
    SimilarityMatrix::new(coeffs)
}

/// Selects, for every sample `j`, the `m` indices with the largest `|c_ij|`,
/// ordered by descending magnitude with ties broken toward smaller indices.
///
/// Columns holding fewer than `m` nonzero coefficients are padded by raw
/// cosine similarity against `data`; this is logged as a warning, not an
/// error.
pub fn top_m_neighbors(
    sim: &SimilarityMatrix,
    m: usize,
    data: &DataMatrix,
) -> Result<NeighborMap, SelfRepError> {
    let n = sim.size();
    if m == 0 || m >= n {
        return Err(SelfRepError::BadNeighborCount { m, n });
    }
    if data.n_samples() != n {
        return Err(SelfRepError::SizeMismatch {
            sim: n,
            data: data.n_samples(),
        });
    }
    let c = sim.values();
    let x = data.values();
    let mut lists = Vec::with_capacity(n);
    for j in 0..n {
        let mut ranked: Vec<usize> = (0..n).filter(|&i| i != j).collect();
        ranked.sort_by(|&a, &b| {
            c[(b, j)]
                .abs()
                .partial_cmp(&c[(a, j)].abs())
                .unwrap()
                .then(a.cmp(&b))
        });
        let nonzero = ranked.iter().take_while(|&&i| c[(i, j)].abs() > 0.0).count();
        let mut list: Vec<usize> = ranked[..nonzero.min(m)].to_vec();
        if list.len() < m {
            log::warn!(
                "column {j} has only {} nonzero coefficients; padding to m={m} by cosine similarity",
                list.len()
            );
            let xj = x.column(j);
            let mut pad: Vec<usize> = (0..n).filter(|&i| i != j && !list.contains(&i)).collect();
            pad.sort_by(|&a, &b| {
                x.column(b)
                    .dot(&xj)
                    .abs()
                    .partial_cmp(&x.column(a).dot(&xj).abs())
                    .unwrap()
                    .then(a.cmp(&b))
            });
            list.extend(pad.into_iter().take(m - list.len()));
        }
        lists.push(list);
    }
    NeighborMap::new(lists)
}

/// Norm below which a candidate adds no new span direction.
const SPAN_EXTENSION_TOL: f64 = 1e-9;

/// Solver-free neighbor search: for each sample, greedily pick the candidate
/// with the largest projection energy onto the subspace spanned so far, then
/// extend the span with the new neighbor's orthogonal component.
pub fn greedy_neighbors(data: &DataMatrix, m: usize) -> Result<NeighborMap, SelfRepError> {
    let x = data.values();
    let n = x.ncols();
    let d = x.nrows();
    if m == 0 || m >= n {
        return Err(SelfRepError::BadNeighborCount { m, n });
    }
    if m > d {
        log::warn!("m = {m} exceeds the ambient dimension {d}; extra neighbors add no span");
    }
    let mut lists = Vec::with_capacity(n);
    for j in 0..n {
        let mut basis: Vec<DVector<f64>> = vec![x.column(j).into_owned()];
        // Projection energy onto the current span, accumulated one basis
        // vector at a time; adding an orthonormal direction only ever adds
        // a nonnegative term, so scores are monotone per candidate.
        let mut scores: Vec<f64> = (0..n).map(|k| x.column(k).dot(&basis[0]).powi(2)).collect();
        let mut picked = vec![false; n];
        picked[j] = true;
        let mut list = Vec::with_capacity(m);
        for _ in 0..m {
            let mut best = None;
            let mut best_score = f64::NEG_INFINITY;
            for k in 0..n {
                if !picked[k] && scores[k] > best_score {
                    best = Some(k);
                    best_score = scores[k];
                }
            }
            let chosen = best.expect("m < n leaves at least one candidate");
            picked[chosen] = true;
            list.push(chosen);
            // Gram-Schmidt with one re-orthogonalization pass.
            let mut v = x.column(chosen).into_owned();
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dot(&v);
                    v.axpy(-proj, b, 1.0);
                }
            }
            let norm = v.norm();
            if norm >= SPAN_EXTENSION_TOL {
                v /= norm;
                for k in 0..n {
                    if !picked[k] {
                        scores[k] += x.column(k).dot(&v).powi(2);
                    }
                }
                basis.push(v);
            }
        }
        lists.push(list);
    }
    NeighborMap::new(lists)
}
