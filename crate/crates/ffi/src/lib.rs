//! C ABI for the autosc library: opaque result handles, integer status
//! codes, and a cbindgen-generated header (`include/autosc.h`).
//!
//! Data crosses the boundary as a column-major `n_features x n_samples`
//! array: column `j` occupies `data[j * n_features .. (j + 1) * n_features]`.

use autosc::cluster::{auto_sc, auto_sc_n, ClusterError, ClusteringResult};
use autosc::data::{DataMatrix, Params, Solver};
use autosc::metrics::nmi;
use nalgebra::DMatrix;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AutoscStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Arguments violated a precondition.
    InvalidArgument = 2,
    /// No triplet structure was found; the result is a single cluster.
    DegenerateFallback = 3,
    /// An unexpected internal failure.
    InternalError = 4,
}

/// Which similarity structure drives the clustering.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AutoscSolver {
    /// Ridge-regularized self-representation solved in closed form.
    LeastSquares = 0,
    /// Sparse self-representation via orthogonal matching pursuit.
    MatchingPursuit = 1,
    /// Solver-free greedy neighbor search (the representation-free variant).
    GreedyNeighbor = 2,
}

/// Pipeline parameters; obtain defaults from `autosc_params_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AutoscParams {
    /// Neighbors preserved per sample.
    pub m: usize,
    /// Self-representation trade-off (least-squares solver).
    pub lambda_reg: f64,
    /// Model-selection reward trade-off.
    pub lambda_m: f64,
    /// Fusion reward trade-off.
    pub lambda_f: f64,
    pub solver: AutoscSolver,
}

impl AutoscParams {
    fn to_params(self) -> Params {
        Params {
            m: self.m,
            lambda_reg: self.lambda_reg,
            lambda_m: self.lambda_m,
            lambda_f: self.lambda_f,
            solver: match self.solver {
                AutoscSolver::LeastSquares => Solver::LeastSquares,
                AutoscSolver::MatchingPursuit => Solver::MatchingPursuit,
                AutoscSolver::GreedyNeighbor => Solver::GreedyNeighbor,
            },
        }
    }
}

/// Opaque clustering result; free with `autosc_result_free`.
pub struct AutoscResult {
    inner: ClusteringResult,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn autosc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Fills `out` with the default parameters (m = 8, lambda_reg = 0.1,
/// lambda_m = lambda_f = 1, least-squares solver).
///
/// # Safety
/// `out` must point to writable memory for one `AutoscParams`.
#[no_mangle]
pub unsafe extern "C" fn autosc_params_default(out: *mut AutoscParams) -> AutoscStatus {
    if out.is_null() {
        return AutoscStatus::NullPointer;
    }
    out.write(AutoscParams {
        m: 8,
        lambda_reg: 0.1,
        lambda_m: 1.0,
        lambda_f: 1.0,
        solver: AutoscSolver::LeastSquares,
    });
    AutoscStatus::Ok
}

/// Clusters a column-major `n_features x n_samples` array and writes an
/// owned result handle to `out_result`.
///
/// Returns `DegenerateFallback` (with a valid single-cluster handle) when
/// no triplet structure exists.
///
/// # Safety
/// `data` must point to `n_features * n_samples` doubles, `params` to a
/// valid parameter struct, and `out_result` to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn autosc_cluster(
    data: *const f64,
    n_features: usize,
    n_samples: usize,
    params: *const AutoscParams,
    out_result: *mut *mut AutoscResult,
) -> AutoscStatus {
    if data.is_null() || params.is_null() || out_result.is_null() {
        return AutoscStatus::NullPointer;
    }
    if n_features == 0 || n_samples == 0 || n_features.checked_mul(n_samples).is_none() {
        return AutoscStatus::InvalidArgument;
    }
    let slice = std::slice::from_raw_parts(data, n_features * n_samples);
    let params = (*params).to_params();
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        let matrix = DMatrix::from_column_slice(n_features, n_samples, slice);
        let data = DataMatrix::new(matrix)?;
        match params.solver {
            Solver::GreedyNeighbor => auto_sc_n(&data, &params),
            _ => auto_sc(&data, &params),
        }
        .map(|r| (r, false))
        .or_else(|e| match e {
            ClusterError::NoTriplets => {
                Ok((ClusteringResult::single_cluster(data.n_samples()), true))
            }
            other => Err(other),
        })
    }));
    match outcome {
        Ok(Ok((result, degenerate))) => {
            let handle = Box::new(AutoscResult { inner: result });
            out_result.write(Box::into_raw(handle));
            if degenerate {
                AutoscStatus::DegenerateFallback
            } else {
                AutoscStatus::Ok
            }
        }
        Ok(Err(_)) => AutoscStatus::InvalidArgument,
        Err(_) => AutoscStatus::InternalError,
    }
}

/// Estimated number of clusters; 0 for a null handle.
///
/// # Safety
/// `result` must be a handle from `autosc_cluster` (or null).
#[no_mangle]
pub unsafe extern "C" fn autosc_result_k_hat(result: *const AutoscResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.k_hat)
}

/// Number of labeled samples; 0 for a null handle.
///
/// # Safety
/// `result` must be a handle from `autosc_cluster` (or null).
#[no_mangle]
pub unsafe extern "C" fn autosc_result_n_samples(result: *const AutoscResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.labels.len())
}

/// Copies the label of every sample into `out`, which must hold `len`
/// entries with `len` at least the sample count.
///
/// # Safety
/// `result` must be a live handle and `out` writable for `len` entries.
#[no_mangle]
pub unsafe extern "C" fn autosc_result_labels(
    result: *const AutoscResult,
    out: *mut usize,
    len: usize,
) -> AutoscStatus {
    let Some(r) = result.as_ref() else {
        return AutoscStatus::NullPointer;
    };
    if out.is_null() {
        return AutoscStatus::NullPointer;
    }
    if len < r.inner.labels.len() {
        return AutoscStatus::InvalidArgument;
    }
    std::ptr::copy_nonoverlapping(r.inner.labels.as_ptr(), out, r.inner.labels.len());
    AutoscStatus::Ok
}

/// Releases a result handle; null is ignored.
///
/// # Safety
/// `result` must be a handle from `autosc_cluster`, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn autosc_result_free(result: *mut AutoscResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Normalized mutual information between two labelings of `len` samples.
///
/// # Safety
/// `a` and `b` must point to `len` labels each; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn autosc_nmi(
    a: *const usize,
    b: *const usize,
    len: usize,
    out: *mut f64,
) -> AutoscStatus {
    if a.is_null() || b.is_null() || out.is_null() {
        return AutoscStatus::NullPointer;
    }
    if len == 0 {
        return AutoscStatus::InvalidArgument;
    }
    let a = std::slice::from_raw_parts(a, len);
    let b = std::slice::from_raw_parts(b, len);
    match nmi(a, b) {
        Ok(v) => {
            out.write(v);
            AutoscStatus::Ok
        }
        Err(_) => AutoscStatus::InvalidArgument,
    }
}
