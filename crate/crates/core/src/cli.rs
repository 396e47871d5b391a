//! Command implementations behind the `autosc` binary: CSV dataset I/O,
//! pipeline execution with stage timings, benchmark sweeps, and similarity
//! rendering. Kept binary-free so tests can drive the commands directly.

use crate::cluster::{cluster_with_neighbors, ClusterError, ClusteringResult};
use crate::data::{
    generate_synthetic, normalize_columns, DataMatrix, GroundTruth, Params, Solver,
};
use crate::metrics::{nmi, triplet_error_rate};
use crate::selfrep::{
    greedy_neighbors, solve_least_squares, solve_matching_pursuit, top_m_neighbors, NeighborMap,
    SimilarityMatrix,
};
use crate::triplet::{enumerate_triplets_with, Orientation};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input or configuration; the binary exits with code 2.
    #[error("{0}")]
    BadInput(String),
}

impl From<crate::data::DataError> for CliError {
    fn from(e: crate::data::DataError) -> Self {
        CliError::BadInput(e.to_string())
    }
}

impl From<crate::selfrep::SelfRepError> for CliError {
    fn from(e: crate::selfrep::SelfRepError) -> Self {
        CliError::BadInput(e.to_string())
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::BadInput(msg.into()))
}

/// Parses `lsr`, `omp` or `greedy-n`.
pub fn parse_solver(name: &str) -> Result<Solver, CliError> {
    match name {
        "lsr" => Ok(Solver::LeastSquares),
        "omp" => Ok(Solver::MatchingPursuit),
        "greedy-n" => Ok(Solver::GreedyNeighbor),
        other => bad(format!("unknown solver '{other}' (expected lsr, omp or greedy-n)")),
    }
}

pub fn solver_name(solver: Solver) -> &'static str {
    match solver {
        Solver::LeastSquares => "lsr",
        Solver::MatchingPursuit => "omp",
        Solver::GreedyNeighbor => "greedy-n",
    }
}

// ---------------------------------------------------------------------------
// File formats: CSV matrices (rows = features, columns = samples, no
// header), label files (one integer per line), binary PGM (P5).

/// Loads a dense matrix; errors name the offending row and column, 1-based.
pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (c, cell) in line.split(',').enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                CliError::BadInput(format!(
                    "{}: row {}, column {}: invalid number '{}'",
                    path.display(),
                    r + 1,
                    c + 1,
                    cell.trim()
                ))
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return bad(format!(
                    "{}: row {} has {} columns, expected {}",
                    path.display(),
                    r + 1,
                    row.len(),
                    first.len()
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return bad(format!("{}: no data rows", path.display()));
    }
    let (nr, nc) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

/// Writes a matrix in the shortest round-trippable decimal form.
pub fn format_matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

/// Loads one integer label per line.
pub fn load_labels(path: &Path) -> Result<Vec<usize>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
    let mut labels = Vec::new();
    for (r, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: usize = line.trim().parse().map_err(|_| {
            CliError::BadInput(format!(
                "{}: row {}: invalid label '{}'",
                path.display(),
                r + 1,
                line.trim()
            ))
        })?;
        labels.push(v);
    }
    if labels.is_empty() {
        return bad(format!("{}: no labels", path.display()));
    }
    Ok(labels)
}

/// Remaps arbitrary label values to `[0, k)` by first appearance.
pub fn compact_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let mut out = Vec::with_capacity(labels.len());
    for &l in labels {
        let next = map.len();
        out.push(*map.entry(l).or_insert(next));
    }
    (out, map.len())
}

/// Binary PGM (P5, maxval 255) with pixels scaled by the matrix's largest
/// magnitude; an all-zero matrix renders black.
pub fn render_pgm(m: &DMatrix<f64>) -> Vec<u8> {
    let max = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut out = format!("P5\n{} {}\n255\n", m.ncols(), m.nrows()).into_bytes();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let px = if max > 0.0 {
                (255.0 * m[(i, j)].abs() / max).round() as u8
            } else {
                0
            };
            out.push(px);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// cluster

#[derive(Debug, Clone)]
pub struct ClusterArgs {
    pub input: PathBuf,
    pub labels: Option<PathBuf>,
    pub params: Params,
    pub strict_orientation: bool,
    pub out: Option<PathBuf>,
}

/// Wall-clock milliseconds per pipeline stage.
#[derive(Debug, Clone, Default)]
pub struct StageTimings {
    pub normalize_ms: f64,
    pub similarity_ms: f64,
    pub neighbors_ms: f64,
    pub triplets_ms: f64,
    pub cluster_ms: f64,
    pub total_ms: f64,
}

/// Everything `cluster` reports: the estimate, metrics when ground truth is
/// supplied, timings, and the parameter echo.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub params: Params,
    pub strict_orientation: bool,
    pub n_features: usize,
    pub n_samples: usize,
    pub n_triplets: usize,
    pub k_hat: usize,
    pub labels: Vec<usize>,
    pub degenerate_fallback: bool,
    pub nmi: Option<f64>,
    pub triplet_error: Option<f64>,
    pub nce_contribution: Option<f64>,
    pub timings: StageTimings,
}

impl RunReport {
    /// Line-oriented key/value rendering with a trailing `labels:` CSV line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command: cluster");
        let _ = writeln!(s, "solver: {}", solver_name(self.params.solver));
        let _ = writeln!(s, "m: {}", self.params.m);
        let _ = writeln!(s, "lambda: {}", self.params.lambda_reg);
        let _ = writeln!(s, "lambda_m: {}", self.params.lambda_m);
        let _ = writeln!(s, "lambda_f: {}", self.params.lambda_f);
        let _ = writeln!(s, "strict_orientation: {}", self.strict_orientation);
        let _ = writeln!(s, "n_features: {}", self.n_features);
        let _ = writeln!(s, "n_samples: {}", self.n_samples);
        let _ = writeln!(s, "n_triplets: {}", self.n_triplets);
        let _ = writeln!(s, "k_hat: {}", self.k_hat);
        let _ = writeln!(s, "degenerate_fallback: {}", self.degenerate_fallback);
        if let Some(v) = self.nmi {
            let _ = writeln!(s, "nmi: {v:.6}");
        }
        if let Some(v) = self.triplet_error {
            let _ = writeln!(s, "triplet_error: {v:.6}");
        }
        if let Some(v) = self.nce_contribution {
            let _ = writeln!(s, "nce_contribution: {v}");
        }
        let t = &self.timings;
        let _ = writeln!(s, "time_normalize_ms: {:.3}", t.normalize_ms);
        let _ = writeln!(s, "time_similarity_ms: {:.3}", t.similarity_ms);
        let _ = writeln!(s, "time_neighbors_ms: {:.3}", t.neighbors_ms);
        let _ = writeln!(s, "time_triplets_ms: {:.3}", t.triplets_ms);
        let _ = writeln!(s, "time_cluster_ms: {:.3}", t.cluster_ms);
        let _ = writeln!(s, "time_total_ms: {:.3}", t.total_ms);
        let labels: Vec<String> = self.labels.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "labels: {}", labels.join(","));
        s
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// The staged pipeline shared by `cluster` and `bench`: returns the result,
/// the triplet count, the triplet set (for error-rate metrics), and timings.
fn run_pipeline(
    data: &DataMatrix,
    params: &Params,
    orientation: Orientation,
) -> Result<(Result<ClusteringResult, ClusterError>, crate::triplet::TripletSet, StageTimings), CliError>
{
    params
        .validate(data.n_samples())
        .map_err(|e| CliError::BadInput(e.to_string()))?;
    let mut timings = StageTimings::default();
    let total = Instant::now();

    let t0 = Instant::now();
    let normalized = normalize_columns(data)?;
    timings.normalize_ms = ms(t0);

    let t0 = Instant::now();
    let sim = match params.solver {
        Solver::LeastSquares => Some(solve_least_squares(&normalized, params.lambda_reg)?),
        Solver::MatchingPursuit => Some(solve_matching_pursuit(&normalized, params.m)?),
        Solver::GreedyNeighbor => None,
    };
    timings.similarity_ms = ms(t0);

    let t0 = Instant::now();
    let nbrs = match &sim {
        Some(sim) => top_m_neighbors(sim, params.m, &normalized)?,
        None => greedy_neighbors(&normalized, params.m)?,
    };
    timings.neighbors_ms = ms(t0);

    let t0 = Instant::now();
    let ts = enumerate_triplets_with(&nbrs, orientation);
    timings.triplets_ms = ms(t0);

    let t0 = Instant::now();
    let outcome = cluster_with_neighbors(&nbrs, &ts, params.lambda_f);
    timings.cluster_ms = ms(t0);

    timings.total_ms = ms(total);
    Ok((outcome, ts, timings))
}

/// Runs the full pipeline on a CSV dataset. A degenerate similarity
/// structure (no triplets) still yields a report, flagged, with a single
/// all-in-one cluster; the binary maps that to exit code 3.
pub fn cmd_cluster(args: &ClusterArgs) -> Result<RunReport, CliError> {
    let raw = load_matrix(&args.input)?;
    let data = DataMatrix::new(raw)?;
    let truth = match &args.labels {
        Some(path) => {
            let labels = load_labels(path)?;
            if labels.len() != data.n_samples() {
                return bad(format!(
                    "{}: {} labels for {} samples",
                    path.display(),
                    labels.len(),
                    data.n_samples()
                ));
            }
            let (compact, k) = compact_labels(&labels);
            Some(GroundTruth::new(compact, k).map_err(|e| CliError::BadInput(e.to_string()))?)
        }
        None => None,
    };

    let orientation = if args.strict_orientation {
        Orientation::Strict
    } else {
        Orientation::Either
    };
    let (outcome, ts, timings) = run_pipeline(&data, &args.params, orientation)?;
    let (result, degenerate) = match outcome {
        Ok(r) => (r, false),
        Err(ClusterError::NoTriplets) => {
            (ClusteringResult::single_cluster(data.n_samples()), true)
        }
        Err(e) => return bad(e.to_string()),
    };

    let (nmi_score, tri_err, nce_contribution) = match &truth {
        Some(t) => {
            let score = nmi(&result.labels, &t.labels)
                .map_err(|e| CliError::BadInput(e.to_string()))?;
            let err = if ts.is_empty() {
                None
            } else {
                Some(triplet_error_rate(&ts, t).expect("nonempty triplet set"))
            };
            let dev = (result.k_hat as f64 - t.k_true as f64).abs();
            (Some(score), err, Some(dev))
        }
        None => (None, None, None),
    };

    Ok(RunReport {
        params: args.params,
        strict_orientation: args.strict_orientation,
        n_features: data.n_features(),
        n_samples: data.n_samples(),
        n_triplets: ts.len(),
        k_hat: result.k_hat,
        labels: result.labels,
        degenerate_fallback: degenerate,
        nmi: nmi_score,
        triplet_error: tri_err,
        nce_contribution,
        timings,
    })
}

// ---------------------------------------------------------------------------
// synth

#[derive(Debug, Clone)]
pub struct SynthArgs {
    pub k: usize,
    pub dim: usize,
    pub per_cluster: usize,
    pub ambient_dim: usize,
    pub sigma: f64,
    pub seed: u64,
    pub out_x: PathBuf,
    pub out_gt: PathBuf,
}

/// Generates a dataset and writes `X.csv` / `gt.csv`; byte-identical for a
/// fixed seed.
pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let (data, truth) = generate_synthetic(
        args.k,
        args.dim,
        args.per_cluster,
        args.ambient_dim,
        args.sigma,
        args.seed,
    )?;
    let x_text = format_matrix_csv(data.values());
    let gt_text: String = truth.labels.iter().map(|l| format!("{l}\n")).collect();
    fs::write(&args.out_x, x_text)
        .map_err(|e| CliError::BadInput(format!("{}: {e}", args.out_x.display())))?;
    fs::write(&args.out_gt, gt_text)
        .map_err(|e| CliError::BadInput(format!("{}: {e}", args.out_gt.display())))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// bench

#[derive(Debug, Clone)]
pub struct BenchArgs {
    pub k_list: Vec<usize>,
    pub m_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub dim: usize,
    pub per_cluster: usize,
    pub ambient_dim: usize,
    pub sigma: f64,
    pub solver: Solver,
    pub lambda_reg: f64,
    pub lambda_f: f64,
}

impl Default for BenchArgs {
    fn default() -> Self {
        Self {
            k_list: vec![5],
            m_list: vec![8],
            trials: 10,
            seed: 0,
            dim: 4,
            per_cluster: 50,
            ambient_dim: 30,
            sigma: 0.01,
            solver: Solver::LeastSquares,
            lambda_reg: 0.1,
            lambda_f: 1.0,
        }
    }
}

/// One sweep configuration with metric means over its trials.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub k: usize,
    pub m: usize,
    pub trials: usize,
    pub nce: f64,
    pub nmi: f64,
    pub tri_err: f64,
    pub ms: f64,
}

/// Runs the sweep; trials execute concurrently but reduce in trial order,
/// so the output is byte-stable.
pub fn cmd_bench(args: &BenchArgs) -> Result<Vec<BenchRow>, CliError> {
    if args.k_list.is_empty() || args.m_list.is_empty() {
        return bad("k-list and m-list must be nonempty");
    }
    if args.trials == 0 {
        return bad("trials must be at least 1");
    }
    let mut rows = Vec::new();
    for &k in &args.k_list {
        for &m in &args.m_list {
            let params = Params {
                m,
                lambda_reg: args.lambda_reg,
                lambda_m: 1.0,
                lambda_f: args.lambda_f,
                solver: args.solver,
            };
            let outcomes: Vec<Result<(f64, f64, f64, f64), CliError>> = (0..args.trials)
                .into_par_iter()
                .map(|trial| {
                    let (data, truth) = generate_synthetic(
                        k,
                        args.dim,
                        args.per_cluster,
                        args.ambient_dim,
                        args.sigma,
                        args.seed + trial as u64,
                    )
                    .map_err(|e| CliError::BadInput(e.to_string()))?;
                    let started = Instant::now();
                    let (outcome, ts, _) = run_pipeline(&data, &params, Orientation::Either)?;
                    let elapsed = ms(started);
                    let result = match outcome {
                        Ok(r) => r,
                        Err(ClusterError::NoTriplets) => {
                            ClusteringResult::single_cluster(data.n_samples())
                        }
                        Err(e) => return bad(e.to_string()),
                    };
                    let dev = (result.k_hat as f64 - k as f64).abs();
                    let score = nmi(&result.labels, &truth.labels)
                        .map_err(|e| CliError::BadInput(e.to_string()))?;
                    let err = if ts.is_empty() {
                        1.0
                    } else {
                        triplet_error_rate(&ts, &truth).expect("nonempty triplet set")
                    };
                    Ok((dev, score, err, elapsed))
                })
                .collect();
            let mut sums = (0.0, 0.0, 0.0, 0.0);
            for o in outcomes {
                let (dev, score, err, elapsed) = o?;
                sums.0 += dev;
                sums.1 += score;
                sums.2 += err;
                sums.3 += elapsed;
            }
            let t = args.trials as f64;
            rows.push(BenchRow {
                k,
                m,
                trials: args.trials,
                nce: sums.0 / t,
                nmi: sums.1 / t,
                tri_err: sums.2 / t,
                ms: sums.3 / t,
            });
        }
    }
    Ok(rows)
}

/// CSV rendering with the fixed header `k,m,trials,nce,nmi,tri_err,ms`.
pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("k,m,trials,nce,nmi,tri_err,ms\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.3}",
            r.k, r.m, r.trials, r.nce, r.nmi, r.tri_err, r.ms
        );
    }
    out
}

// ---------------------------------------------------------------------------
// render

#[derive(Debug, Clone)]
pub struct RenderArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    /// When set, the input is a dataset and this solver produces the
    /// similarity matrix; otherwise the input is a saved matrix.
    pub solver: Option<Solver>,
    pub m: usize,
    pub lambda_reg: f64,
}

/// Computes the similarity image for `render`.
pub fn render_similarity(args: &RenderArgs) -> Result<DMatrix<f64>, CliError> {
    let raw = load_matrix(&args.input)?;
    match args.solver {
        None => Ok(raw),
        Some(Solver::GreedyNeighbor) => {
            bad("greedy-n produces no similarity matrix; use lsr or omp")
        }
        Some(solver) => {
            let data = normalize_columns(&DataMatrix::new(raw)?)?;
            let sim: SimilarityMatrix = match solver {
                Solver::LeastSquares => solve_least_squares(&data, args.lambda_reg)?,
                Solver::MatchingPursuit => solve_matching_pursuit(&data, args.m)?,
                Solver::GreedyNeighbor => unreachable!(),
            };
            Ok(sim.values().clone())
        }
    }
}

pub fn cmd_render(args: &RenderArgs) -> Result<(), CliError> {
    let matrix = render_similarity(args)?;
    let pgm = render_pgm(&matrix);
    fs::write(&args.out, pgm)
        .map_err(|e| CliError::BadInput(format!("{}: {e}", args.out.display())))?;
    Ok(())
}

/// Helper for drivers that need a neighbor map without a full pipeline run;
/// used by scaling probes.
pub fn cosine_neighbor_map(data: &DataMatrix, m: usize) -> Result<NeighborMap, CliError> {
    let sim = SimilarityMatrix::cosine(data);
    Ok(top_m_neighbors(&sim, m, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn matrix_csv_round_trips_exactly() {
        let m = dmatrix![0.1, -2.5e-3, 3.0; 1.0 / 3.0, 5e300, -0.0];
        let text = format_matrix_csv(&m);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        fs::write(&path, &text).unwrap();
        let back = load_matrix(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn load_matrix_names_bad_cell() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "1.0,2.0\n3.0,oops\n").unwrap();
        let err = load_matrix(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2"), "{msg}");
        assert!(msg.contains("column 2"), "{msg}");
    }

    #[test]
    fn load_matrix_rejects_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        fs::write(&path, "1.0,2.0\n3.0\n").unwrap();
        let msg = load_matrix(&path).unwrap_err().to_string();
        assert!(msg.contains("row 2"), "{msg}");
    }

    #[test]
    fn compact_labels_relabel_by_first_appearance() {
        let (compact, k) = compact_labels(&[7, 7, 3, 9, 3]);
        assert_eq!(compact, vec![0, 0, 1, 2, 1]);
        assert_eq!(k, 3);
    }

    #[test]
    fn pgm_scales_to_full_range() {
        let m = dmatrix![0.0, 0.5; -1.0, 0.25];
        let pgm = render_pgm(&m);
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        let px = &pgm[header.len()..];
        assert_eq!(px, &[0, 128, 255, 64]);
    }

    #[test]
    fn pgm_of_uniform_offdiagonal_matrix() {
        // Equal off-diagonal magnitudes render uniform white off the
        // diagonal and black on it.
        let n = 4;
        let m = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 0.3 });
        let pgm = render_pgm(&m);
        let px = &pgm[b"P5\n4 4\n255\n".len()..];
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j { 0 } else { 255 };
                assert_eq!(px[i * n + j], expected);
            }
        }
    }

    #[test]
    fn bench_header_is_pinned() {
        let csv = bench_csv(&[]);
        assert_eq!(csv, "k,m,trials,nce,nmi,tri_err,ms\n");
    }

    #[test]
    fn solver_names_round_trip() {
        for name in ["lsr", "omp", "greedy-n"] {
            assert_eq!(solver_name(parse_solver(name).unwrap()), name);
        }
        assert!(parse_solver("spectral").is_err());
    }
}
