//! Triplet relationships: three samples forming a cycle in the binarized
//! similarity graph, the meta-elements the clustering operates on.

use crate::selfrep::NeighborMap;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TripletError {
    #[error("brute-force enumeration is limited to 200 samples, got {0}")]
    TooLarge(usize),
    #[error("invalid triple {0:?}: indices must be distinct, sorted and in range")]
    BadTriple([usize; 3]),
}

/// Which cyclic orientations of a triple count as closed.
///
/// `Either` accepts both orientations of an unordered triple; `Strict`
/// requires the cycle in ascending index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    Either,
    Strict,
}

/// A sorted triple of distinct sample indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triplet {
    indices: [usize; 3],
}

impl Triplet {
    pub fn new(a: usize, b: usize, c: usize) -> Result<Self, TripletError> {
        let mut indices = [a, b, c];
        indices.sort_unstable();
        if indices[0] == indices[1] || indices[1] == indices[2] {
            return Err(TripletError::BadTriple(indices));
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> [usize; 3] {
        self.indices
    }

    pub fn contains(&self, sample: usize) -> bool {
        self.indices.contains(&sample)
    }
}

/// The collected triplets plus, for every sample, the ids of the triplets
/// containing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripletSet {
    n_samples: usize,
    triplets: Vec<Triplet>,
    membership: Vec<Vec<usize>>,
}

impl TripletSet {
    /// Builds a set from raw triples, validating and canonicalizing them.
    pub fn from_triples(
        n_samples: usize,
        triples: &[(usize, usize, usize)],
    ) -> Result<Self, TripletError> {
        let mut canonical = BTreeSet::new();
        for &(a, b, c) in triples {
            let t = Triplet::new(a, b, c)?;
            if t.indices[2] >= n_samples {
                return Err(TripletError::BadTriple(t.indices));
            }
            canonical.insert(t);
        }
        Ok(Self::from_sorted(n_samples, canonical.into_iter().collect()))
    }

    fn from_sorted(n_samples: usize, triplets: Vec<Triplet>) -> Self {
        let mut membership = vec![Vec::new(); n_samples];
        for (id, t) in triplets.iter().enumerate() {
            for &s in &t.indices {
                membership[s].push(id);
            }
        }
        Self {
            n_samples,
            triplets,
            membership,
        }
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn get(&self, id: usize) -> Triplet {
        self.triplets[id]
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    /// Ids of the triplets containing `sample`.
    pub fn containing(&self, sample: usize) -> &[usize] {
        &self.membership[sample]
    }

    /// Id of the triple `{a, b, c}`, if present. Triplets are stored in
    /// ascending order, so this is a binary search.
    pub fn id_of(&self, a: usize, b: usize, c: usize) -> Option<usize> {
        let t = Triplet::new(a, b, c).ok()?;
        self.triplets.binary_search(&t).ok()
    }
}

/// True if the directed cycle `n1 -> n2 -> n3 -> n1` is closed, where an
/// edge `u -> v` means `u` is among the m neighbors of `v`.
fn cycle_closed(nbrs: &NeighborMap, n1: usize, n2: usize, n3: usize) -> bool {
    nbrs.is_neighbor(n1, n2) && nbrs.is_neighbor(n2, n3) && nbrs.is_neighbor(n3, n1)
}

fn triple_qualifies(nbrs: &NeighborMap, t: [usize; 3], orientation: Orientation) -> bool {
    let [i, j, k] = t;
    match orientation {
        Orientation::Strict => cycle_closed(nbrs, i, j, k),
        Orientation::Either => cycle_closed(nbrs, i, j, k) || cycle_closed(nbrs, i, k, j),
    }
}

/// Enumerates every triplet by walking two neighbor hops and testing the
/// closing edge, O(N m^2) with the membership mask.
pub fn enumerate_triplets_with(nbrs: &NeighborMap, orientation: Orientation) -> TripletSet {
    let n = nbrs.n_samples();
    let mut found: BTreeSet<Triplet> = BTreeSet::new();
    for j in 0..n {
        // Edges a -> j and b -> a; the cycle closes iff j -> b.
        for &a in nbrs.neighbors(j) {
            for &b in nbrs.neighbors(a) {
                if b == j || !nbrs.is_neighbor(j, b) {
                    continue;
                }
                // Cycle b -> a -> j -> b holds; record its sorted triple.
                let t = Triplet::new(j, a, b).expect("indices are distinct");
                if match orientation {
                    Orientation::Either => true,
                    Orientation::Strict => {
                        let [i, jj, kk] = t.indices;
                        cycle_closed(nbrs, i, jj, kk)
                    }
                } {
                    found.insert(t);
                }
            }
        }
    }
    TripletSet::from_sorted(n, found.into_iter().collect())
}

/// [`enumerate_triplets_with`] accepting either cyclic orientation.
pub fn enumerate_triplets(nbrs: &NeighborMap) -> TripletSet {
    enumerate_triplets_with(nbrs, Orientation::Either)
}

/// Testing oracle: checks all C(N,3) triples directly. Guarded to N <= 200.
pub fn brute_force_triplets(
    nbrs: &NeighborMap,
    orientation: Orientation,
) -> Result<TripletSet, TripletError> {
    let n = nbrs.n_samples();
    if n > 200 {
        return Err(TripletError::TooLarge(n));
    }
    let mut found = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                if triple_qualifies(nbrs, [i, j, k], orientation) {
                    found.push(Triplet { indices: [i, j, k] });
                }
            }
        }
    }
    Ok(TripletSet::from_sorted(n, found))
}

/// Occurrence count of every sample across the `active` triplets; the
/// frequency-preserving multiset view of a triplet subset.
pub fn triplet_frequency(ts: &TripletSet, active: &BTreeSet<usize>) -> Vec<usize> {
    let mut counts = vec![0usize; ts.n_samples()];
    for &id in active {
        for s in ts.get(id).indices() {
            counts[s] += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfrep::NeighborMap;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_neighbor_map(n: usize, m: usize, seed: u64) -> NeighborMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lists: Vec<Vec<usize>> = (0..n)
            .map(|j| {
                let mut pool: Vec<usize> = (0..n).filter(|&i| i != j).collect();
                for idx in 0..m {
                    let swap = rng.gen_range(idx..pool.len());
                    pool.swap(idx, swap);
                }
                pool[..m].to_vec()
            })
            .collect();
        NeighborMap::new(lists).unwrap()
    }

    /// The worked four-sample fixture: only {0,1,2} closes a cycle.
    fn four_sample_map() -> NeighborMap {
        NeighborMap::new(vec![
            vec![1, 2],
            vec![0, 2],
            vec![0, 1],
            vec![0, 1],
        ])
        .unwrap()
    }

    #[test]
    fn four_sample_fixture_yields_single_triplet() {
        let nbrs = four_sample_map();
        let ts = enumerate_triplets(&nbrs);
        let expected: Vec<[usize; 3]> = vec![[0, 1, 2]];
        let got: Vec<[usize; 3]> = ts.triplets().iter().map(|t| t.indices()).collect();
        assert_eq!(got, expected);

        let brute = brute_force_triplets(&nbrs, Orientation::Either).unwrap();
        let got_brute: Vec<[usize; 3]> = brute.triplets().iter().map(|t| t.indices()).collect();
        assert_eq!(got_brute, expected);
    }

    #[test]
    fn mutual_clique_of_three_forms_one_triplet() {
        let nbrs = NeighborMap::new(vec![
            vec![1, 2],
            vec![0, 2],
            vec![0, 1],
            vec![4, 5],
            vec![3, 5],
            vec![3, 4],
        ])
        .unwrap();
        let ts = enumerate_triplets(&nbrs);
        let got: Vec<[usize; 3]> = ts.triplets().iter().map(|t| t.indices()).collect();
        assert_eq!(got, vec![[0, 1, 2], [3, 4, 5]]);
    }

    #[test]
    fn one_directional_cycle_is_still_found() {
        // Each list holds only one member of the cycle 0 -> 1 -> 2 -> 0
        // (as edges u -> v, u in N(v)); padding points elsewhere.
        let nbrs = NeighborMap::new(vec![
            vec![2, 3, 4],
            vec![0, 3, 4],
            vec![1, 3, 4],
            vec![4, 5, 0],
            vec![5, 3, 1],
            vec![3, 4, 2],
        ])
        .unwrap();
        let enumerated = enumerate_triplets(&nbrs);
        let brute = brute_force_triplets(&nbrs, Orientation::Either).unwrap();
        assert_eq!(enumerated.triplets(), brute.triplets());
        assert!(enumerated
            .triplets()
            .iter()
            .any(|t| t.indices() == [0, 1, 2]));
    }

    #[test]
    fn enumeration_matches_brute_force_on_random_maps() {
        for seed in 0..20u64 {
            let nbrs = random_neighbor_map(30, 4, seed);
            for orientation in [Orientation::Either, Orientation::Strict] {
                let fast = enumerate_triplets_with(&nbrs, orientation);
                let brute = brute_force_triplets(&nbrs, orientation).unwrap();
                assert_eq!(
                    fast.triplets(),
                    brute.triplets(),
                    "seed {seed}, orientation {orientation:?}"
                );
            }
        }
    }

    #[test]
    fn strict_orientation_is_a_subset_of_either() {
        for seed in 0..5u64 {
            let nbrs = random_neighbor_map(25, 5, seed);
            let either: BTreeSet<Triplet> =
                enumerate_triplets_with(&nbrs, Orientation::Either)
                    .triplets()
                    .iter()
                    .copied()
                    .collect();
            let strict = enumerate_triplets_with(&nbrs, Orientation::Strict);
            assert!(strict.triplets().iter().all(|t| either.contains(t)));
        }
    }

    #[test]
    fn enlarging_neighborhoods_never_removes_triplets() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..10u64 {
            let n = 20;
            let small = random_neighbor_map(n, 3, seed);
            let grown: Vec<Vec<usize>> = (0..n)
                .map(|j| {
                    let mut list = small.neighbors(j).to_vec();
                    let mut pool: Vec<usize> = (0..n)
                        .filter(|&i| i != j && !list.contains(&i))
                        .collect();
                    for _ in 0..2 {
                        let pick = rng.gen_range(0..pool.len());
                        list.push(pool.swap_remove(pick));
                    }
                    list
                })
                .collect();
            let big = NeighborMap::new(grown).unwrap();
            let before: BTreeSet<Triplet> = enumerate_triplets(&small)
                .triplets()
                .iter()
                .copied()
                .collect();
            let after: BTreeSet<Triplet> =
                enumerate_triplets(&big).triplets().iter().copied().collect();
            assert!(before.is_subset(&after), "seed {seed}");
        }
    }

    #[test]
    fn membership_index_is_consistent() {
        let nbrs = random_neighbor_map(25, 4, 7);
        let ts = enumerate_triplets(&nbrs);
        for (id, t) in ts.triplets().iter().enumerate() {
            let [a, b, c] = t.indices();
            assert!(a < b && b < c);
            for s in [a, b, c] {
                assert!(ts.containing(s).contains(&id));
            }
        }
        let total: usize = (0..ts.n_samples()).map(|s| ts.containing(s).len()).sum();
        assert_eq!(total, 3 * ts.len());
    }

    #[test]
    fn brute_force_rejects_large_inputs() {
        let nbrs = random_neighbor_map(201, 3, 0);
        assert!(matches!(
            brute_force_triplets(&nbrs, Orientation::Either),
            Err(TripletError::TooLarge(201))
        ));
    }

    #[test]
    fn frequency_counts_match_hand_example() {
        let ts = TripletSet::from_triples(5, &[(1, 2, 3), (1, 2, 4), (2, 3, 4)]).unwrap();
        let active: BTreeSet<usize> = (0..3).collect();
        let freq = triplet_frequency(&ts, &active);
        assert_eq!(freq, vec![0, 2, 3, 2, 2]);
        assert_eq!(freq.iter().sum::<usize>(), 3 * active.len());

        let empty = triplet_frequency(&ts, &BTreeSet::new());
        assert!(empty.iter().all(|&c| c == 0));
    }

    #[test]
    fn from_triples_deduplicates_and_sorts() {
        let ts = TripletSet::from_triples(6, &[(3, 1, 2), (1, 2, 3), (0, 4, 5)]).unwrap();
        let got: Vec<[usize; 3]> = ts.triplets().iter().map(|t| t.indices()).collect();
        assert_eq!(got, vec![[0, 4, 5], [1, 2, 3]]);
        assert!(TripletSet::from_triples(4, &[(1, 1, 2)]).is_err());
        assert!(TripletSet::from_triples(4, &[(1, 2, 9)]).is_err());
    }
}
