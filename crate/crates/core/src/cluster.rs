//! The clustering engine: density-seeded cluster initialization over
//! triplets, co-occurrence growth, over-segmentation merging, and residual
//! assignment, plus the two end-to-end drivers.

use crate::data::{normalize_columns, DataError, DataMatrix, Params, Solver};
use crate::selfrep::{
    greedy_neighbors, solve_least_squares, solve_matching_pursuit, top_m_neighbors, NeighborMap,
    SelfRepError,
};
use crate::triplet::{enumerate_triplets, triplet_frequency, TripletSet};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("no triplets found; the similarity structure is degenerate")]
    NoTriplets,
    #[error("no out-of-cluster triplet is available")]
    Exhausted,
    #[error("no clusters were initialized")]
    NoClusters,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    SelfRep(#[from] SelfRepError),
}

/// An initialized cluster: its member samples and the triplets assigned to
/// it. Cluster ids double as creation order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cluster {
    pub members: BTreeSet<usize>,
    pub triplets: BTreeSet<usize>,
}

/// Bookkeeping for the greedy driver: which triplets are still out of
/// clusters, the in/out sample frequencies, and the clusters built so far.
#[derive(Debug, Clone)]
pub struct PartitionState {
    n_triplets: usize,
    /// Per triplet, the cluster it was moved into; `None` while out.
    triplet_owner: Vec<Option<usize>>,
    /// Per sample, the cluster that claimed it.
    sample_owner: Vec<Option<usize>>,
    x_out: Vec<usize>,
    x_in: Vec<usize>,
    /// Slots are never reused; merged-away clusters become `None`.
    clusters: Vec<Option<Cluster>>,
}

impl PartitionState {
    /// Starts with every triplet out of clusters.
    pub fn new(ts: &TripletSet) -> Self {
        let all: BTreeSet<usize> = (0..ts.len()).collect();
        Self {
            n_triplets: ts.len(),
            triplet_owner: vec![None; ts.len()],
            sample_owner: vec![None; ts.n_samples()],
            x_out: triplet_frequency(ts, &all),
            x_in: vec![0; ts.n_samples()],
            clusters: vec![],
        }
    }

    pub fn x_out(&self) -> &[usize] {
        &self.x_out
    }

    pub fn x_in(&self) -> &[usize] {
        &self.x_in
    }

    pub fn t_out_count(&self) -> usize {
        self.triplet_owner.iter().filter(|o| o.is_none()).count()
    }

    pub fn t_in_count(&self) -> usize {
        self.n_triplets - self.t_out_count()
    }

    pub fn t_out_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.triplet_owner
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_none())
            .map(|(id, _)| id)
    }

    pub fn triplet_owner(&self, id: usize) -> Option<usize> {
        self.triplet_owner[id]
    }

    pub fn sample_owner(&self, sample: usize) -> Option<usize> {
        self.sample_owner[sample]
    }

    /// Live clusters in creation order.
    pub fn clusters(&self) -> impl Iterator<Item = (usize, &Cluster)> + '_ {
        self.clusters
            .iter()
            .enumerate()
            .filter_map(|(id, c)| c.as_ref().map(|c| (id, c)))
    }

    pub fn n_live_clusters(&self) -> usize {
        self.clusters.iter().filter(|c| c.is_some()).count()
    }

    /// Whether the triplet touches no sample claimed by a cluster other
    /// than `cluster`; seeds pass `None` (every cluster is foreign).
    fn is_eligible(&self, ts: &TripletSet, id: usize, cluster: Option<usize>) -> bool {
        ts.get(id)
            .indices()
            .iter()
            .all(|&s| self.sample_owner[s].is_none() || self.sample_owner[s] == cluster)
    }

    /// Opens a new cluster seeded by an out-of-cluster triplet.
    pub fn open_cluster(&mut self, seed: usize, ts: &TripletSet) -> usize {
        assert!(self.triplet_owner[seed].is_none(), "seed must be out");
        let id = self.clusters.len();
        self.clusters.push(Some(Cluster::default()));
        self.assign_triplet(seed, id, ts);
        id
    }

    /// Moves an out-of-cluster triplet into `cluster`, claiming its samples
    /// and updating both frequency multisets.
    pub fn assign_triplet(&mut self, id: usize, cluster: usize, ts: &TripletSet) {
        assert!(self.triplet_owner[id].is_none(), "triplet already assigned");
        assert!(
            self.is_eligible(ts, id, Some(cluster)),
            "triplet touches a sample owned by another cluster"
        );
        self.triplet_owner[id] = Some(cluster);
        let node = self.clusters[cluster]
            .as_mut()
            .expect("cluster must be live");
        node.triplets.insert(id);
        for s in ts.get(id).indices() {
            self.x_out[s] -= 1;
            self.x_in[s] += 1;
            node.members.insert(s);
            self.sample_owner[s] = Some(cluster);
        }
        self.debug_check(ts);
    }

    /// Claims a single sample for a cluster without touching triplets; used
    /// by the residual assignment stage.
    fn claim_sample(&mut self, sample: usize, cluster: usize) {
        assert!(self.sample_owner[sample].is_none());
        self.sample_owner[sample] = Some(cluster);
        self.clusters[cluster]
            .as_mut()
            .expect("cluster must be live")
            .members
            .insert(sample);
    }

    fn merge_clusters(&mut self, keep: usize, drop: usize) {
        let dropped = self.clusters[drop].take().expect("cluster must be live");
        let node = self.clusters[keep].as_mut().expect("cluster must be live");
        for &s in &dropped.members {
            self.sample_owner[s] = Some(keep);
        }
        node.members.extend(dropped.members);
        for &t in &dropped.triplets {
            self.triplet_owner[t] = Some(keep);
        }
        node.triplets.extend(dropped.triplets);
    }

    /// Frequency conservation; cheap enough to run on every move in debug
    /// builds. The full [`PartitionState::validate`] is for tests.
    fn debug_check(&self, _ts: &TripletSet) {
        debug_assert_eq!(
            self.x_out.iter().sum::<usize>(),
            3 * self.t_out_count(),
            "x_out mass must equal 3 * |t_out|"
        );
        debug_assert_eq!(
            self.x_in.iter().sum::<usize>(),
            3 * self.t_in_count(),
            "x_in mass must equal 3 * |t_in|"
        );
    }

    /// Full consistency check: frequencies match recomputation from the
    /// owner table, in-triplets sit inside their cluster's member set, and
    /// member sets are pairwise disjoint.
    pub fn validate(&self, ts: &TripletSet) -> Result<(), String> {
        let out: BTreeSet<usize> = self.t_out_ids().collect();
        let ins: BTreeSet<usize> = (0..self.n_triplets).filter(|i| !out.contains(i)).collect();
        if triplet_frequency(ts, &out) != self.x_out {
            return Err("x_out does not match t_out frequencies".into());
        }
        if triplet_frequency(ts, &ins) != self.x_in {
            return Err("x_in does not match t_in frequencies".into());
        }
        let mut seen = vec![false; self.sample_owner.len()];
        for (id, cluster) in self.clusters() {
            for &s in &cluster.members {
                if seen[s] {
                    return Err(format!("sample {s} belongs to two clusters"));
                }
                seen[s] = true;
                if self.sample_owner[s] != Some(id) {
                    return Err(format!("owner table disagrees for sample {s}"));
                }
            }
            for &t in &cluster.triplets {
                if self.triplet_owner[t] != Some(id) {
                    return Err(format!("triplet owner disagrees for triplet {t}"));
                }
                if !ts.get(t).indices().iter().all(|s| cluster.members.contains(s)) {
                    return Err(format!("triplet {t} leaks outside its cluster"));
                }
            }
        }
        Ok(())
    }
}

/// Estimated grouping: `labels[j]` in `[0, k_hat)`, plus the groups as
/// explicit member lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub k_hat: usize,
    pub groups: Vec<Vec<usize>>,
}

impl ClusteringResult {
    pub fn new(labels: Vec<usize>, k_hat: usize) -> Self {
        let mut groups = vec![Vec::new(); k_hat];
        for (sample, &l) in labels.iter().enumerate() {
            groups[l].push(sample);
        }
        Self {
            labels,
            k_hat,
            groups,
        }
    }

    /// The all-in-one fallback used when no triplet structure exists.
    pub fn single_cluster(n_samples: usize) -> Self {
        Self::new(vec![0; n_samples], 1)
    }
}

/// Sum of the triplet members' occurrence counts in a frequency multiset.
pub fn local_density(t: &crate::triplet::Triplet, freq: &[usize]) -> usize {
    t.indices()
        .iter()
        .map(|&s| freq.get(s).copied().unwrap_or(0))
        .sum()
}

/// Number of active triplets containing both samples.
pub fn connection_score(
    i: usize,
    j: usize,
    active: &BTreeSet<usize>,
    ts: &TripletSet,
) -> usize {
    debug_assert_ne!(i, j);
    ts.containing(i)
        .iter()
        .filter(|&&id| active.contains(&id) && ts.get(id).contains(j))
        .count()
}

/// Out-frequency mass of the members minus `lambda_m` times their
/// in-frequency mass. Diagnostic; the driver realizes its maximization
/// through seed selection and the termination rule.
pub fn model_selection_reward(
    members: &BTreeSet<usize>,
    x_out: &[usize],
    x_in: &[usize],
    lambda_m: f64,
) -> f64 {
    let out: usize = members.iter().map(|&s| x_out.get(s).copied().unwrap_or(0)).sum();
    let ins: usize = members.iter().map(|&s| x_in.get(s).copied().unwrap_or(0)).sum();
    out as f64 - lambda_m * ins as f64
}

/// How strongly sample `x` is pulled toward a cluster: the number of the
/// cluster's triplets containing `x`, plus `lambda_f` times the occurrences
/// of `x`'s neighbors in the members' pooled neighbor lists.
pub fn fusion_reward(
    x: usize,
    cluster_members: &BTreeSet<usize>,
    nbrs: &NeighborMap,
    ts: &TripletSet,
    cluster_triplets: &BTreeSet<usize>,
    lambda_f: f64,
) -> f64 {
    debug_assert!(!cluster_members.contains(&x));
    let direct = ts
        .containing(x)
        .iter()
        .filter(|id| cluster_triplets.contains(id))
        .count();
    let mut overlap = 0usize;
    for &y in cluster_members {
        for &v in nbrs.neighbors(y) {
            if nbrs.is_neighbor(v, x) {
                overlap += 1;
            }
        }
    }
    direct as f64 + lambda_f * overlap as f64
}

/// The out-of-cluster triplet with the highest local density against
/// `x_out`, skipping triplets that touch claimed samples. Ties fall to the
/// lexicographically smallest triple (triplet ids are stored sorted).
pub fn select_seed_triplet(state: &PartitionState, ts: &TripletSet) -> Result<usize, ClusterError> {
    let mut best: Option<(usize, usize)> = None;
    for id in state.t_out_ids() {
        if !state.is_eligible(ts, id, None) {
            continue;
        }
        let density = local_density(&ts.get(id), state.x_out());
        if best.map_or(true, |(d, _)| density > d) {
            best = Some((density, id));
        }
    }
    best.map(|(_, id)| id).ok_or(ClusterError::Exhausted)
}

/// True when estimation should stop: no eligible seed remains, or the best
/// candidate is denser among already-clustered samples than among the
/// remaining ones.
pub fn should_terminate(state: &PartitionState, ts: &TripletSet) -> bool {
    match select_seed_triplet(state, ts) {
        Err(_) => true,
        Ok(id) => {
            let t = ts.get(id);
            local_density(&t, state.x_out()) <= local_density(&t, state.x_in())
        }
    }
}

/// One growth sweep: repeatedly move the out-of-cluster triplet with the
/// highest connection-score sum toward the cluster, while that sum exceeds 1.
pub fn grow_cluster(state: &mut PartitionState, cluster_id: usize, ts: &TripletSet) {
    grow_cluster_hooked(state, cluster_id, ts, &mut |_| {});
}

fn grow_cluster_hooked(
    state: &mut PartitionState,
    cluster_id: usize,
    ts: &TripletSet,
    hook: &mut dyn FnMut(&PartitionState),
) {
    let n = state.sample_owner.len();
    let mut weights = vec![0usize; n];
    loop {
        // weights[i] = sum over members j of the co-occurrence count of
        // (i, j) across out-of-cluster triplets, so a candidate's score is
        // the sum of its three member weights.
        weights.iter_mut().for_each(|w| *w = 0);
        for id in 0..state.n_triplets {
            if state.triplet_owner[id].is_some() {
                continue;
            }
            let indices = ts.get(id).indices();
            let in_cluster = indices
                .iter()
                .filter(|&&s| state.sample_owner[s] == Some(cluster_id))
                .count();
            if in_cluster == 0 {
                continue;
            }
            for &s in &indices {
                let own = (state.sample_owner[s] == Some(cluster_id)) as usize;
                weights[s] += in_cluster - own;
            }
        }
        let mut best: Option<(usize, usize)> = None;
        for id in state.t_out_ids() {
            if !state.is_eligible(ts, id, Some(cluster_id)) {
                continue;
            }
            let score: usize = ts.get(id).indices().iter().map(|&s| weights[s]).sum();
            if score > 1 && best.map_or(true, |(s, _)| score > s) {
                best = Some((score, id));
            }
        }
        let Some((_, id)) = best else { break };
        state.assign_triplet(id, cluster_id, ts);
        hook(state);
    }
}

/// Collapses redundant clusters: whenever the number of triplets straddling
/// two clusters exceeds the smaller cluster's size, the pair is merged.
/// Straddle counts use the full triplet set.
pub fn merge_oversegmented(state: &mut PartitionState, ts: &TripletSet) {
    merge_oversegmented_hooked(state, ts, &mut |_| {});
}

fn merge_oversegmented_hooked(
    state: &mut PartitionState,
    ts: &TripletSet,
    hook: &mut dyn FnMut(&PartitionState),
) {
    loop {
        let live: Vec<(usize, usize)> = state
            .clusters()
            .map(|(id, c)| (id, c.members.len()))
            .collect();
        if live.len() < 2 {
            return;
        }
        let mut straddle: HashMap<(usize, usize), usize> = HashMap::new();
        for t in ts.triplets() {
            let mut owners: Vec<usize> = t
                .indices()
                .iter()
                .filter_map(|&s| state.sample_owner[s])
                .collect();
            owners.sort_unstable();
            owners.dedup();
            for a in 0..owners.len() {
                for b in (a + 1)..owners.len() {
                    *straddle.entry((owners[a], owners[b])).or_default() += 1;
                }
            }
        }
        // Small clusters first, then creation order.
        let mut order = live;
        order.sort_by_key(|&(id, size)| (size, id));
        let mut merged = false;
        'scan: for (i, &(a, size_a)) in order.iter().enumerate() {
            for &(b, size_b) in &order[i + 1..] {
                let key = (a.min(b), a.max(b));
                let s = straddle.get(&key).copied().unwrap_or(0);
                if s > size_a.min(size_b) {
                    state.merge_clusters(a.min(b), a.max(b));
                    hook(state);
                    merged = true;
                    break 'scan;
                }
            }
        }
        if !merged {
            return;
        }
    }
}

/// Places every unclaimed sample into the cluster with the highest fusion
/// reward, falling back to the cluster owning most of its neighbors and
/// then to the largest cluster. Labels are issued in cluster creation order.
pub fn assign_remaining(
    state: &mut PartitionState,
    nbrs: &NeighborMap,
    ts: &TripletSet,
    lambda_f: f64,
) -> Result<ClusteringResult, ClusterError> {
    assign_remaining_hooked(state, nbrs, ts, lambda_f, &mut |_| {})
}

fn assign_remaining_hooked(
    state: &mut PartitionState,
    nbrs: &NeighborMap,
    ts: &TripletSet,
    lambda_f: f64,
    hook: &mut dyn FnMut(&PartitionState),
) -> Result<ClusteringResult, ClusterError> {
    let live: Vec<usize> = state.clusters().map(|(id, _)| id).collect();
    if live.is_empty() {
        return Err(ClusterError::NoClusters);
    }
    let n = state.sample_owner.len();
    for x in 0..n {
        if state.sample_owner[x].is_some() {
            continue;
        }
        let mut chosen: Option<(f64, usize)> = None;
        for &id in &live {
            let cluster = state.clusters[id].as_ref().expect("live cluster");
            let reward = fusion_reward(x, &cluster.members, nbrs, ts, &cluster.triplets, lambda_f);
            if reward > 0.0 && chosen.map_or(true, |(r, _)| reward > r) {
                chosen = Some((reward, id));
            }
        }
        let target = match chosen {
            Some((_, id)) => id,
            None => {
                // No reward signal: follow the neighbors, then cluster size.
                let mut by_neighbors: Option<(usize, usize)> = None;
                for &id in &live {
                    let count = nbrs
                        .neighbors(x)
                        .iter()
                        .filter(|&&v| state.sample_owner[v] == Some(id))
                        .count();
                    if count > 0 && by_neighbors.map_or(true, |(c, _)| count > c) {
                        by_neighbors = Some((count, id));
                    }
                }
                match by_neighbors {
                    Some((_, id)) => id,
                    None => {
                        let mut largest = live[0];
                        let mut size = 0usize;
                        for &id in &live {
                            let len = state.clusters[id].as_ref().unwrap().members.len();
                            if len > size {
                                size = len;
                                largest = id;
                            }
                        }
                        largest
                    }
                }
            }
        };
        state.claim_sample(x, target);
        hook(state);
    }
    let rank: HashMap<usize, usize> = live.iter().enumerate().map(|(r, &id)| (id, r)).collect();
    let labels: Vec<usize> = (0..n)
        .map(|s| rank[&state.sample_owner[s].expect("all samples assigned")])
        .collect();
    Ok(ClusteringResult::new(labels, live.len()))
}

/// The driver tail shared by both entry points: seed, grow, merge, assign.
pub fn cluster_with_neighbors(
    nbrs: &NeighborMap,
    ts: &TripletSet,
    lambda_f: f64,
) -> Result<ClusteringResult, ClusterError> {
    cluster_with_neighbors_hooked(nbrs, ts, lambda_f, |_| {})
}

/// [`cluster_with_neighbors`] invoking `hook` after every state mutation;
/// the hook observes seeding, each growth move, merges, and every residual
/// assignment.
pub fn cluster_with_neighbors_hooked(
    nbrs: &NeighborMap,
    ts: &TripletSet,
    lambda_f: f64,
    mut hook: impl FnMut(&PartitionState),
) -> Result<ClusteringResult, ClusterError> {
    if ts.is_empty() {
        return Err(ClusterError::NoTriplets);
    }
    let mut state = PartitionState::new(ts);
    hook(&state);
    while !should_terminate(&state, ts) {
        let seed = select_seed_triplet(&state, ts)?;
        let cluster_id = state.open_cluster(seed, ts);
        hook(&state);
        grow_cluster_hooked(&mut state, cluster_id, ts, &mut hook);
    }
    merge_oversegmented_hooked(&mut state, ts, &mut hook);
    assign_remaining_hooked(&mut state, nbrs, ts, lambda_f, &mut hook)
}

/// Full pipeline over a solved similarity structure: normalize, solve the
/// self-representation per `params.solver`, select the top-m neighbors,
/// enumerate triplets, then run the greedy driver.
pub fn auto_sc(data: &DataMatrix, params: &Params) -> Result<ClusteringResult, ClusterError> {
    params.validate(data.n_samples())?;
    let normalized = normalize_columns(data)?;
    let nbrs = match params.solver {
        Solver::LeastSquares => {
            let sim = solve_least_squares(&normalized, params.lambda_reg)?;
            top_m_neighbors(&sim, params.m, &normalized)?
        }
        Solver::MatchingPursuit => {
            let sim = solve_matching_pursuit(&normalized, params.m)?;
            top_m_neighbors(&sim, params.m, &normalized)?
        }
        Solver::GreedyNeighbor => greedy_neighbors(&normalized, params.m)?,
    };
    let ts = enumerate_triplets(&nbrs);
    cluster_with_neighbors(&nbrs, &ts, params.lambda_f)
}

/// The representation-free variant: neighbors come from the greedy span
/// search instead of a solved coefficient matrix; the driver tail is shared
/// with [`auto_sc`].
pub fn auto_sc_n(data: &DataMatrix, params: &Params) -> Result<ClusteringResult, ClusterError> {
    params.validate(data.n_samples())?;
    let normalized = normalize_columns(data)?;
    let nbrs = greedy_neighbors(&normalized, params.m)?;
    let ts = enumerate_triplets(&nbrs);
    cluster_with_neighbors(&nbrs, &ts, params.lambda_f)
}
