//! Clone deduplication: cluster notebooks whose token-bag similarity meets
//! the threshold, keep one representative per cluster.

use super::{similarity, TokenBag};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DedupResult {
    /// One representative per cluster (lexicographically smallest id),
    /// including singletons; sorted.
    pub kept: Vec<String>,
    /// Clusters with at least two members, each sorted, ordered by their
    /// smallest member.
    pub clusters: Vec<Vec<String>>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Pairs with similarity ≥ `threshold` are clone-related; clusters are the
/// transitive closure. `exhaustive` scores all O(n²) pairs; the default mode
/// prefilters candidates through a token index and a size-ratio bound, which
/// cannot change the result: bags sharing no token have similarity 0, and
/// `overlap ≤ min(|a|,|b|)` caps similarity at `min/max`.
pub fn dedup(bags: &[TokenBag], threshold: f64, exhaustive: bool) -> DedupResult {
    let n = bags.len();
    let mut uf = UnionFind::new(n);

    let candidate_pairs: Vec<(usize, usize)> = if exhaustive || threshold <= 0.0 {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect()
    } else {
        let mut token_index: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, bag) in bags.iter().enumerate() {
            for token in bag.distinct_tokens() {
                token_index.entry(token).or_default().push(i);
            }
        }
        let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
        for owners in token_index.values() {
            for (a, &i) in owners.iter().enumerate() {
                for &j in &owners[a + 1..] {
                    let min = bags[i].len().min(bags[j].len()) as f64;
                    let max = bags[i].len().max(bags[j].len()) as f64;
                    if min / max >= threshold {
                        pairs.insert((i, j));
                    }
                }
            }
        }
        // Empty bags share no tokens but are identical to each other.
        let empties: Vec<usize> = (0..n).filter(|&i| bags[i].is_empty()).collect();
        for (a, &i) in empties.iter().enumerate() {
            for &j in &empties[a + 1..] {
                pairs.insert((i, j));
            }
        }
        pairs.into_iter().collect()
    };

    let related: Vec<(usize, usize)> = candidate_pairs
        .into_par_iter()
        .filter(|&(i, j)| similarity(&bags[i], &bags[j]) >= threshold)
        .collect();
    for (i, j) in related {
        uf.union(i, j);
    }

    let mut clusters_by_root: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for i in 0..n {
        let root = uf.find(i);
        clusters_by_root
            .entry(root)
            .or_default()
            .push(bags[i].notebook_id.as_str());
    }

    let mut kept = Vec::new();
    let mut clusters = Vec::new();
    for members in clusters_by_root.values() {
        let mut members: Vec<String> = members.iter().map(|s| s.to_string()).collect();
        members.sort();
        kept.push(members[0].clone());
        if members.len() >= 2 {
            clusters.push(members);
        }
    }
    kept.sort();
    clusters.sort();

    DedupResult { kept, clusters }
}
