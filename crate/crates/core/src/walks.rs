//! Exact walk counting: totals, feature-typed walks and degree-typed
//! fingerprints, with a brute-force enumerator as the reference.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeFeatures, RootedGraph};

/// Default cap on distinct degree multisets in [`fingerprint`].
pub const DEFAULT_STATE_CAP: u64 = 1_000_000;

/// Cap on `m^k` for [`brute_force_walks`].
pub const BRUTE_FORCE_CAP: u64 = 10_000_000;

/// `(A^k·1)_i` for every node.
pub fn total_walks_all(g: &Graph, k: u32) -> Vec<BigInt> {
    let mut v = vec![BigInt::one(); g.n()];
    for _ in 0..k {
        v = (0..g.n())
            .map(|i| g.neighbors(i).iter().fold(BigInt::zero(), |acc, &j| acc + &v[j]))
            .collect();
    }
    v
}

/// Number of length-`k` walks starting at `i`.
pub fn total_walks(g: &Graph, i: usize, k: u32) -> BigInt {
    total_walks_all(g, k).swap_remove(i)
}

fn check_alphabet(f: &NodeFeatures, tuple: &[u32]) -> Result<()> {
    match tuple.iter().find(|x| !f.alphabet().contains(x)) {
        Some(&x) => Err(Error::FeatureNotInAlphabet(x)),
        None => Ok(()),
    }
}

/// Walks `root = i_0, i_1, ..., i_k` with `X_{i_j} = x_j` for `j = 1..k`.
pub fn count_attributed(rg: RootedGraph<'_>, f: &NodeFeatures, tuple: &[u32]) -> Result<BigInt> {
    if tuple.is_empty() {
        return Err(Error::InvalidArgument("feature tuple must be non-empty".into()));
    }
    check_alphabet(f, tuple)?;
    let g = rg.graph;
    let mut v = vec![BigInt::zero(); g.n()];
    v[rg.root] = BigInt::one();
    for &x in tuple {
        v = (0..g.n())
            .map(|u| {
                if f.label(u) != x {
                    return BigInt::zero();
                }
                g.neighbors(u).iter().fold(BigInt::zero(), |acc, &w| acc + &v[w])
            })
            .collect();
    }
    Ok(v.into_iter().sum())
}

/// Walk type: sorted degrees at steps `1..k−1`, end degree, end feature.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WalkType {
    pub intermediate: Vec<u32>,
    pub end_degree: u32,
    pub end_feature: u32,
}

/// `per_k[k−1]` maps each walk type of length `k` to its count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WalkFingerprint {
    pub per_k: Vec<BTreeMap<WalkType, BigInt>>,
}

impl WalkFingerprint {
    pub fn max_len(&self) -> usize {
        self.per_k.len()
    }

    pub fn at(&self, k: usize) -> &BTreeMap<WalkType, BigInt> {
        &self.per_k[k - 1]
    }

    /// Sum of all counts at length `k`.
    pub fn total(&self, k: usize) -> BigInt {
        self.at(k).values().sum()
    }

    /// Restriction to lengths `1..=k`.
    pub fn truncated(&self, k: usize) -> WalkFingerprint {
        WalkFingerprint { per_k: self.per_k[..k.min(self.per_k.len())].to_vec() }
    }
}

fn binomial(n: u64, r: u64) -> BigInt {
    (0..r).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// Degree-typed walk counts for lengths `1..=k`, by a DP over
/// `(current node, multiset of degrees already passed)`.
pub fn fingerprint(rg: RootedGraph<'_>, f: &NodeFeatures, k: usize, cap: u64) -> Result<WalkFingerprint> {
    if k == 0 {
        return Err(Error::InvalidArgument("fingerprint length K must be ≥ 1".into()));
    }
    let g = rg.graph;
    let deg = |i: usize| g.degree(i) as u32;
    let mut states: HashMap<(usize, Vec<u32>), BigInt> = HashMap::new();
    for &j in g.neighbors(rg.root) {
        *states.entry((j, Vec::new())).or_insert_with(BigInt::zero) += 1;
    }
    let mut per_k = Vec::with_capacity(k);
    for step in 1..=k {
        let mut table: BTreeMap<WalkType, BigInt> = BTreeMap::new();
        for ((node, ms), count) in &states {
            let key = WalkType { intermediate: ms.clone(), end_degree: deg(*node), end_feature: f.label(*node) };
            *table.entry(key).or_insert_with(BigInt::zero) += count;
        }
        per_k.push(table);
        if step == k {
            break;
        }
        let mut next: HashMap<(usize, Vec<u32>), BigInt> = HashMap::new();
        let mut multisets: HashSet<Vec<u32>> = HashSet::new();
        for ((node, ms), count) in states {
            let mut grown = ms;
            let d = deg(node);
            let pos = grown.partition_point(|&x| x <= d);
            grown.insert(pos, d);
            if multisets.insert(grown.clone()) && multisets.len() as u64 > cap {
                let m = (g.max_degree() as u64).max(1);
                let len = step as u64 + 1;
                return Err(Error::Budget {
                    what: format!("degree fingerprint at walk length {len}"),
                    needed: format!("up to C({len}+{m}-2, {m}-1) = {}", binomial(len + m - 2, m - 1)),
                    cap,
                });
            }
            for &w in g.neighbors(node) {
                *next.entry((w, grown.clone())).or_insert_with(BigInt::zero) += &count;
            }
        }
        states = next;
    }
    Ok(WalkFingerprint { per_k })
}

/// Query for [`brute_force_walks`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WalkQuery {
    Length(u32),
    Features(Vec<u32>),
}

impl WalkQuery {
    pub fn len(&self) -> u32 {
        match self {
            WalkQuery::Length(k) => *k,
            WalkQuery::Features(t) => t.len() as u32,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Explicit enumeration of every walk from the root, counting those that
/// match the query.
pub fn brute_force_walks(rg: RootedGraph<'_>, f: &NodeFeatures, query: &WalkQuery) -> Result<BigInt> {
    let k = query.len();
    let m = rg.graph.max_degree() as u64;
    let work = (m as f64).powi(k as i32);
    if work > BRUTE_FORCE_CAP as f64 {
        return Err(Error::Budget {
            what: format!("walk enumeration (max degree {m}, length {k})"),
            needed: format!("{work:.0}"),
            cap: BRUTE_FORCE_CAP,
        });
    }
    if let WalkQuery::Features(t) = query {
        check_alphabet(f, t)?;
    }
    fn go(g: &Graph, f: &NodeFeatures, q: &WalkQuery, at: usize, depth: usize, k: usize) -> u64 {
        if depth == k {
            return 1;
        }
        g.neighbors(at)
            .iter()
            .filter(|&&w| match q {
                WalkQuery::Length(_) => true,
                WalkQuery::Features(t) => f.label(w) == t[depth],
            })
            .map(|&w| go(g, f, q, w, depth + 1, k))
            .sum()
    }
    Ok(BigInt::from(go(rg.graph, f, query, rg.root, 0, k as usize)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rooted(g: &Graph, r: usize) -> RootedGraph<'_> {
        RootedGraph::new(g, r).unwrap()
    }

    #[test]
    fn totals() {
        let p3 = Graph::path(3);
        assert_eq!(total_walks(&p3, 1, 2), BigInt::from(2));
        assert_eq!(total_walks(&p3, 0, 0), BigInt::from(1));
        let g = Graph::star(4);
        for i in 0..5 {
            assert_eq!(total_walks(&g, i, 1), BigInt::from(g.degree(i)));
        }
    }

    #[test]
    fn attributed_basics() {
        let g = Graph::star(3);
        let f = NodeFeatures::with_alphabet(vec![0, 1, 1, 0], [0, 1, 2].into()).unwrap();
        assert_eq!(count_attributed(rooted(&g, 0), &f, &[1]).unwrap(), BigInt::from(2));
        assert_eq!(count_attributed(rooted(&g, 0), &f, &[2, 0]).unwrap(), BigInt::zero());
        assert_eq!(count_attributed(rooted(&g, 0), &f, &[3]), Err(Error::FeatureNotInAlphabet(3)));
        assert!(count_attributed(rooted(&g, 0), &f, &[]).is_err());
    }

    #[test]
    fn hexagon_fingerprint() {
        let g = Graph::cycle(6);
        let fp = fingerprint(rooted(&g, 0), &NodeFeatures::uniform(6), 2, DEFAULT_STATE_CAP).unwrap();
        let want = BTreeMap::from([(WalkType { intermediate: vec![2], end_degree: 2, end_feature: 0 }, BigInt::from(4))]);
        assert_eq!(fp.at(2), &want);
    }

    #[test]
    fn regular_single_key() {
        let g = Graph::hypercube(3);
        let fp = fingerprint(rooted(&g, 5), &NodeFeatures::uniform(8), 4, DEFAULT_STATE_CAP).unwrap();
        for k in 1..=4 {
            assert_eq!(fp.at(k).len(), 1);
            assert_eq!(fp.total(k), BigInt::from(3u32.pow(k as u32)));
        }
    }

    #[test]
    fn fingerprint_cap() {
        let g = Graph::star(3).disjoint_union(&Graph::path(4));
        let g = Graph::from_edges(8, &[g.edges().collect::<Vec<_>>(), vec![(3, 4)]].concat()).unwrap();
        let err = fingerprint(rooted(&g, 0), &NodeFeatures::uniform(8), 6, 2).unwrap_err();
        assert!(matches!(err, Error::Budget { cap: 2, .. }));
    }

    #[test]
    fn brute_force_matches() {
        let g = Graph::complete(4);
        let f = NodeFeatures::from_labels(vec![0, 1, 0, 1]);
        for k in 0..5 {
            assert_eq!(brute_force_walks(rooted(&g, 0), &f, &WalkQuery::Length(k)).unwrap(), total_walks(&g, 0, k));
        }
        let t = vec![1, 0, 1];
        assert_eq!(
            brute_force_walks(rooted(&g, 2), &f, &WalkQuery::Features(t.clone())).unwrap(),
            count_attributed(rooted(&g, 2), &f, &t).unwrap()
        );
        let big = Graph::star(20);
        assert!(matches!(
            brute_force_walks(rooted(&big, 0), &NodeFeatures::uniform(21), &WalkQuery::Length(6)),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(7, 0), BigInt::from(1));
    }
}
