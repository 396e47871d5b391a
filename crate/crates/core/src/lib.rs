//! Joint cluster-number estimation and subspace clustering.
//!
//! High-dimensional samples drawn from a union of low-dimensional subspaces
//! are grouped without knowing the number of clusters in advance. The
//! pipeline binarizes a self-representation similarity structure into
//! per-sample neighbor lists, collects *triplets* (three samples closing a
//! cycle in that graph) as clustering meta-elements, then greedily seeds
//! clusters at the densest triplets, grows them by triplet co-occurrence,
//! merges over-segmented clusters, and assigns leftover samples by a fusion
//! reward.
//!
//! Two drivers are provided: [`cluster::auto_sc`] solves a self-representation
//! problem for the similarity structure (ridge least-squares or orthogonal
//! matching pursuit), while [`cluster::auto_sc_n`] skips the solve and finds
//! neighbors by greedy projection onto incrementally spanned subspaces.
//!
//! ```
//! use autosc::data::{generate_synthetic, Params};
//! use autosc::cluster::auto_sc;
//!
//! let (data, truth) = generate_synthetic(3, 3, 20, 24, 0.0, 7).unwrap();
//! let result = auto_sc(&data, &Params::default()).unwrap();
//! assert_eq!(result.k_hat, 3);
//! let score = autosc::metrics::nmi(&result.labels, &truth.labels).unwrap();
//! assert!(score > 0.99);
//! ```

pub mod cli;
pub mod cluster;
pub mod data;
pub mod metrics;
pub mod selfrep;
pub mod triplet;

pub use cluster::{auto_sc, auto_sc_n, ClusteringResult};
pub use data::{generate_synthetic, normalize_columns, DataMatrix, GroundTruth, Params, Solver};
pub use metrics::{nce, nmi, triplet_error_rate};
pub use selfrep::{
    greedy_neighbors, solve_least_squares, solve_matching_pursuit, top_m_neighbors, NeighborMap,
    SimilarityMatrix,
};
pub use triplet::{brute_force_triplets, enumerate_triplets, Orientation, Triplet, TripletSet};
