//! Rooted binary-featured trees: canonical forms, exhaustive enumeration and
//! the fixed-profile families used in the counting bounds.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeFeatures};
use crate::report::big_json;

/// Default guard on the number of trees an enumerator may materialize.
pub const DEFAULT_TREE_BUDGET: u64 = 10_000_000;

/// Rooted tree with a feature per node. Children are kept sorted, so the
/// derived equality is rooted-isomorphism.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tree {
    feature: u32,
    children: Vec<Tree>,
}

impl Tree {
    pub fn leaf(feature: u32) -> Tree {
        Tree { feature, children: Vec::new() }
    }

    /// Node with the given children in any order.
    pub fn node(feature: u32, mut children: Vec<Tree>) -> Tree {
        children.sort();
        Tree { feature, children }
    }

    pub fn feature(&self) -> u32 {
        self.feature
    }

    pub fn children(&self) -> &[Tree] {
        &self.children
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    /// Number of nodes with `feature` at each depth `0..=depth`.
    pub fn level_counts(&self, feature: u32) -> Vec<u64> {
        let mut counts = vec![0; self.depth() + 1];
        let mut stack = vec![(self, 0usize)];
        while let Some((t, d)) = stack.pop() {
            if t.feature == feature {
                counts[d] += 1;
            }
            stack.extend(t.children.iter().map(|c| (c, d + 1)));
        }
        counts
    }

    /// Root-to-depth-`k` paths whose nodes below the root carry `tuple`
    /// in order, where `k = tuple.len()`.
    pub fn attributed_paths(&self, tuple: &[u32]) -> u64 {
        match tuple.split_first() {
            None => 1,
            Some((x, rest)) => self.children.iter().filter(|c| c.feature == *x).map(|c| c.attributed_paths(rest)).sum(),
        }
    }

    /// Graph with the root as node 0 and the remaining nodes in BFS order.
    pub fn to_graph(&self) -> (Graph, NodeFeatures) {
        let mut labels = vec![self.feature];
        let mut edges = Vec::new();
        let mut queue = VecDeque::from([(self, 0usize)]);
        while let Some((t, id)) = queue.pop_front() {
            for c in &t.children {
                let cid = labels.len();
                labels.push(c.feature);
                edges.push((id, cid));
                queue.push_back((c, cid));
            }
        }
        let g = Graph::from_edges(labels.len(), &edges).expect("tree edges are simple");
        (g, NodeFeatures::from_labels(labels))
    }
}

/// Rooted isomorphism by trying every matching of children; exponential,
/// intended as a reference for small trees.
pub fn isomorphic_brute_force(a: &Tree, b: &Tree) -> bool {
    fn matches(xs: &[Tree], ys: &[Tree], used: &mut [bool]) -> bool {
        let Some((x, rest)) = xs.split_first() else { return true };
        for j in 0..ys.len() {
            if !used[j] && isomorphic_brute_force(x, &ys[j]) {
                used[j] = true;
                if matches(rest, ys, used) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    a.feature == b.feature
        && a.children.len() == b.children.len()
        && matches(&a.children, &b.children, &mut vec![false; b.children.len()])
}

fn multichoose(n: &BigInt, r: u64) -> BigInt {
    // C(n + r − 1, r)
    let mut acc = BigInt::one();
    for i in 0..r {
        acc = acc * (n + BigInt::from(i)) / BigInt::from(i + 1);
    }
    acc
}

/// Sorted multisets of size `r` drawn from a sorted pool.
fn multisets<T: Clone>(pool: &[T], r: usize, mut visit: impl FnMut(&[T])) {
    fn go<T: Clone>(pool: &[T], start: usize, r: usize, cur: &mut Vec<T>, visit: &mut dyn FnMut(&[T])) {
        if cur.len() == r {
            visit(cur);
            return;
        }
        for i in start..pool.len() {
            cur.push(pool[i].clone());
            go(pool, i, r, cur, visit);
            cur.pop();
        }
    }
    go(pool, 0, r, &mut Vec::with_capacity(r), &mut visit);
}

fn budget_error(what: &str, needed: &BigInt, cap: u64) -> Error {
    Error::Budget { what: what.into(), needed: needed.to_string(), cap }
}

/// Result of an exhaustive enumeration.
#[derive(Debug, Clone, Serialize)]
pub struct EnumerationReport {
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<u64>>,
    #[serde(serialize_with = "big_json")]
    pub count: BigInt,
    #[serde(serialize_with = "big_json")]
    pub bound: BigInt,
    pub satisfied: bool,
}

/// `(m−1)^(2^K − 1)`.
pub fn lemma1_bound(m: usize, k: usize) -> BigInt {
    num_traits::pow(BigInt::from(m.saturating_sub(1)), (1usize << k) - 1)
}

/// Number of aggregation trees of depth `k` in which every non-leaf has
/// exactly `m` children and every node strictly between the root and the
/// leaves has a child carrying its parent's feature.
pub fn count_agg_trees(m: usize, k: usize) -> BigInt {
    // types[d][(p, a)]: subtrees rooted at depth d with feature a under a parent of feature p
    let mut below: HashMap<(u32, u32), BigInt> = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .into_iter()
        .map(|pa| (pa, BigInt::one()))
        .collect();
    for _ in 1..k {
        let mut here = HashMap::new();
        for p in 0..2u32 {
            for a in 0..2u32 {
                let t0 = &below[&(a, 0)];
                let t1 = &below[&(a, 1)];
                let all = multichoose(&(t0 + t1), m as u64);
                let without_p = multichoose(if p == 0 { t1 } else { t0 }, m as u64);
                here.insert((p, a), all - without_p);
            }
        }
        below = here;
    }
    if k == 0 {
        return BigInt::from(2);
    }
    (0..2u32).map(|a| multichoose(&(&below[&(a, 0)] + &below[&(a, 1)]), m as u64)).sum()
}

/// Materializes every aggregation tree counted by [`count_agg_trees`],
/// refusing when the count exceeds `budget`.
pub fn enumerate_agg_trees(m: usize, k: usize, budget: u64) -> Result<(EnumerationReport, Vec<Tree>)> {
    if m == 0 {
        return Err(Error::InvalidArgument("branching m must be ≥ 1".into()));
    }
    let expected = count_agg_trees(m, k);
    if expected > BigInt::from(budget) {
        return Err(budget_error(&format!("aggregation trees (m={m}, K={k})"), &expected, budget));
    }
    let mut memo: HashMap<(usize, u32, u32), Vec<Tree>> = HashMap::new();
    fn subtrees(d: usize, p: u32, a: u32, m: usize, k: usize, memo: &mut HashMap<(usize, u32, u32), Vec<Tree>>) -> Vec<Tree> {
        if let Some(v) = memo.get(&(d, p, a)) {
            return v.clone();
        }
        let out = if d == k {
            vec![Tree::leaf(a)]
        } else {
            let mut pool: Vec<Tree> = (0..2).flat_map(|b| subtrees(d + 1, a, b, m, k, memo)).collect();
            pool.sort();
            let mut out = Vec::new();
            multisets(&pool, m, |kids| {
                if d == 0 || kids.iter().any(|c| c.feature == p) {
                    out.push(Tree { feature: a, children: kids.to_vec() });
                }
            });
            out
        };
        memo.insert((d, p, a), out.clone());
        out
    }
    let mut trees: Vec<Tree> = (0..2).flat_map(|a| subtrees(0, 0, a, m, k, &mut memo)).collect();
    trees.sort();
    trees.dedup();
    let count = BigInt::from(trees.len());
    let bound = lemma1_bound(m, k);
    let report = EnumerationReport { m, k, q: None, satisfied: count >= bound, count, bound };
    Ok((report, trees))
}

/// Full m-ary depth-K binary-featured trees, optionally restricted to the
/// per-level feature-0 counts `q = (q_0, ..., q_K)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeSpec {
    pub m: usize,
    pub k: usize,
    pub q: Option<Vec<u64>>,
}

impl TreeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidArgument("branching m must be ≥ 1".into()));
        }
        if let Some(q) = &self.q {
            if q.len() != self.k + 1 {
                return Err(Error::Dimension { expected: self.k + 1, got: q.len() });
            }
            for (level, &qk) in q.iter().enumerate() {
                let cap = (self.m as u128).checked_pow(level as u32);
                if cap.is_some_and(|c| qk as u128 > c) {
                    return Err(Error::InvalidArgument(format!("q_{level} = {qk} exceeds m^{level}")));
                }
            }
        }
        Ok(())
    }
}

/// Whether `2^k − 2^(k−2) ≤ q_k ≤ m^k / 2` holds for every `2 ≤ k ≤ K`.
pub fn lemma2_condition(m: usize, q: &[u64]) -> bool {
    q.iter().enumerate().skip(2).all(|(k, &qk)| {
        let lo = (1u128 << k) - (1u128 << (k - 2));
        let mk = (m as u128).pow(k as u32);
        lo <= qk as u128 && 2 * qk as u128 <= mk
    })
}

/// `2^(2^(K−1) − 1)`, or 1 for `K = 0`.
pub fn lemma2_bound(k: usize) -> BigInt {
    if k == 0 {
        return BigInt::one();
    }
    num_traits::pow(BigInt::from(2), (1usize << (k - 1)) - 1)
}

/// Every q-tuple with `2^k − 2^(k−2) ≤ q_k ≤ m^k/2` for `k ≥ 2`, with `q_0 ∈ {0,1}` and
/// `q_1 ∈ 0..=m` unconstrained.
pub fn lemma2_tuples(m: usize, k: usize) -> Vec<Vec<u64>> {
    let ranges: Vec<Vec<u64>> = (0..=k)
        .map(|level| {
            let mk = (m as u64).pow(level as u32);
            if level < 2 {
                return (0..=mk).collect();
            }
            let lo = (1u64 << level) - (1u64 << (level - 2));
            (lo..=mk / 2).collect()
        })
        .collect();
    let mut out = vec![Vec::new()];
    for r in ranges {
        out = out.into_iter().flat_map(|p| r.iter().map(move |&x| [p.clone(), vec![x]].concat())).collect();
    }
    out
}

// Profile of a subtree: feature-0 count per relative depth.
type Profile = Vec<u64>;

fn full_mary_profiles(m: usize, k: usize) -> BTreeMap<Profile, BigInt> {
    let mut level: BTreeMap<Profile, BigInt> = BTreeMap::from([(vec![1], BigInt::one()), (vec![0], BigInt::one())]);
    for _ in 0..k {
        // multisets of m child types, grouped by summed profile
        let groups: Vec<(&Profile, &BigInt)> = level.iter().collect();
        let width = groups[0].0.len();
        let mut states: HashMap<(usize, Profile), BigInt> = HashMap::from([((0, vec![0; width]), BigInt::one())]);
        for (profile, n) in groups {
            let mut next: HashMap<(usize, Profile), BigInt> = HashMap::new();
            for ((used, sum), ways) in &states {
                for j in 0..=(m - used) {
                    let s: Profile = sum.iter().zip(profile).map(|(a, b)| a + b * j as u64).collect();
                    let w = ways * multichoose(n, j as u64);
                    *next.entry((used + j, s)).or_insert_with(BigInt::zero) += w;
                }
            }
            states = next;
        }
        let mut up: BTreeMap<Profile, BigInt> = BTreeMap::new();
        for ((used, sum), ways) in states {
            if used != m {
                continue;
            }
            for root0 in [1u64, 0] {
                let p: Profile = std::iter::once(root0).chain(sum.iter().copied()).collect();
                *up.entry(p).or_insert_with(BigInt::zero) += &ways;
            }
        }
        level = up;
    }
    level
}

/// Exact count of non-isomorphic trees matching `spec`.
pub fn count_full_mary(spec: &TreeSpec) -> Result<BigInt> {
    spec.validate()?;
    let profiles = full_mary_profiles(spec.m, spec.k);
    Ok(match &spec.q {
        Some(q) => profiles.get(q).cloned().unwrap_or_else(BigInt::zero),
        None => profiles.values().sum(),
    })
}

/// Counts trees for `spec` and reports against `2^(2^(K−1) − 1)` (the bound
/// applies only when `q` meets the condition; otherwise `satisfied` is true
/// vacuously).
pub fn enumerate_full_mary(spec: &TreeSpec) -> Result<EnumerationReport> {
    let count = count_full_mary(spec)?;
    let bound = lemma2_bound(spec.k);
    let applies = spec.q.as_ref().is_some_and(|q| lemma2_condition(spec.m, q));
    Ok(EnumerationReport {
        m: spec.m,
        k: spec.k,
        q: spec.q.clone(),
        satisfied: !applies || count >= bound,
        count,
        bound,
    })
}

/// Materializes the trees of `spec` by brute-force generation of all full
/// m-ary trees and filtering by profile.
pub fn full_mary_trees(spec: &TreeSpec, budget: u64) -> Result<Vec<Tree>> {
    spec.validate()?;
    let total: BigInt = full_mary_profiles(spec.m, spec.k).into_values().sum();
    if total > BigInt::from(budget) {
        return Err(budget_error(&format!("full {}-ary trees of depth {}", spec.m, spec.k), &total, budget));
    }
    let mut level = vec![Tree::leaf(0), Tree::leaf(1)];
    for _ in 0..spec.k {
        let mut next = Vec::new();
        multisets(&level, spec.m, |kids| {
            for f in 0..2 {
                next.push(Tree { feature: f, children: kids.to_vec() });
            }
        });
        next.sort();
        level = next;
    }
    if let Some(q) = &spec.q {
        level.retain(|t| padded_counts(t, spec.k) == *q);
    }
    Ok(level)
}

fn padded_counts(t: &Tree, k: usize) -> Vec<u64> {
    let mut c = t.level_counts(0);
    c.resize(k + 1, 0);
    c
}

/// Member of the fixed-profile family with many attributed-walk counts.
#[derive(Debug, Clone)]
pub struct Prop8Member {
    /// Number of feature-1 leaves under the first depth-1 node.
    pub c: u64,
    pub tree: Tree,
}

/// Depth-k full m-ary trees, indexed by paths `[l_1, ..., l_d]`, where a node
/// at depth `1..k−1` has feature 1 iff `l_1 = 1`. Member `c` puts feature 1 on
/// the first `c` leaves under `[1]` and feature 0 on the first `c` leaves of
/// the other branches, so every member has the same per-level counts. The
/// count of walks with features `(1, ..., 1)` is `c`.
pub fn prop8_family(m: usize, k: usize, budget: u64) -> Result<Vec<Prop8Member>> {
    if m < 2 || k < 2 {
        return Err(Error::InvalidArgument(format!("family needs m ≥ 2 and k ≥ 2, got m={m}, k={k}")));
    }
    let branch = (m as u64).checked_pow(k as u32 - 1).ok_or_else(|| Error::InvalidArgument("m^(k−1) overflows".into()))?;
    let nodes = BigInt::from(m).pow(k as u32 + 1) / BigInt::from(m - 1);
    let work = &nodes * BigInt::from(branch + 1);
    if work > BigInt::from(budget) {
        return Err(budget_error(&format!("family trees (m={m}, k={k})"), &work, budget));
    }
    fn build(m: usize, k: usize, branch: u64, c: u64, first: usize, depth: usize, ordinal: u64) -> Tree {
        if depth == k {
            let f = if first == 1 {
                u32::from(ordinal < c)
            } else {
                let global = (first as u64 - 2) * branch + ordinal;
                u32::from(global >= c)
            };
            return Tree::leaf(f);
        }
        let feature = if depth == 0 { 0 } else { u32::from(first == 1) };
        let children = (1..=m)
            .map(|l| {
                let (f, ord) = if depth == 0 { (l, 0) } else { (first, ordinal * m as u64 + (l as u64 - 1)) };
                build(m, k, branch, c, f, depth + 1, ord)
            })
            .collect();
        Tree::node(feature, children)
    }
    Ok((0..=branch)
        .map(|c| Prop8Member { c, tree: build(m, k, branch, c, 0, 0, 0) })
        .collect())
}

/// Non-backtracking walks of length `k` from `root` in a tree (each is a
/// root-to-depth-k path); errors on graphs that are not trees.
pub fn tree_non_backtracking_walks(g: &Graph, root: usize, k: usize) -> Result<BigInt> {
    let spans = g.n() > 0 && g.edge_count() + 1 == g.n() && depths(g, root).iter().all(|&d| d != usize::MAX);
    if !spans {
        return Err(Error::InvalidArgument("non-backtracking counts are implemented for trees only".into()));
    }
    if k == 0 {
        return Ok(BigInt::one());
    }
    // DP over directed edges (previous, current)
    let mut states: HashMap<(usize, usize), BigInt> = g.neighbors(root).iter().map(|&j| ((root, j), BigInt::one())).collect();
    for _ in 1..k {
        let mut next: HashMap<(usize, usize), BigInt> = HashMap::new();
        for ((prev, cur), count) in states {
            for &w in g.neighbors(cur) {
                if w != prev {
                    *next.entry((cur, w)).or_insert_with(BigInt::zero) += &count;
                }
            }
        }
        states = next;
    }
    Ok(states.into_values().sum())
}

fn depths(g: &Graph, root: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Number of nodes at depth `k` below `root`.
pub fn nodes_at_depth(g: &Graph, root: usize, k: usize) -> usize {
    depths(g, root).iter().filter(|&&d| d == k).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    #[test]
    fn lemma1_small_counts() {
        assert_eq!(count_agg_trees(3, 1), BigInt::from(8));
        assert_eq!(count_agg_trees(2, 1), BigInt::from(6));
        assert_eq!(count_agg_trees(2, 2), BigInt::from(20));
        assert_eq!(count_agg_trees(3, 2), BigInt::from(112));
        for (m, k) in [(2, 1), (3, 1), (2, 2), (3, 2), (2, 3)] {
            let (report, trees) = enumerate_agg_trees(m, k, DEFAULT_TREE_BUDGET).unwrap();
            assert_eq!(report.count, count_agg_trees(m, k));
            assert_eq!(trees.len(), report.count.to_usize().unwrap());
            assert!(report.satisfied);
        }
    }

    #[test]
    fn agg_constraint_holds() {
        let (_, trees) = enumerate_agg_trees(2, 3, DEFAULT_TREE_BUDGET).unwrap();
        fn ok(t: &Tree, parent: Option<u32>) -> bool {
            let here = match parent {
                Some(p) if !t.children.is_empty() => t.children.iter().any(|c| c.feature == p),
                _ => true,
            };
            here && t.children.iter().all(|c| ok(c, Some(t.feature)))
        }
        assert!(trees.iter().all(|t| ok(t, None)));
    }

    #[test]
    fn budget_guard() {
        assert!(matches!(enumerate_agg_trees(3, 3, 1000), Err(Error::Budget { .. })));
    }

    #[test]
    fn full_mary_counts_match_materialization() {
        for (m, k) in [(2, 1), (2, 2), (3, 2)] {
            let all = full_mary_trees(&TreeSpec { m, k, q: None }, DEFAULT_TREE_BUDGET).unwrap();
            assert_eq!(BigInt::from(all.len()), count_full_mary(&TreeSpec { m, k, q: None }).unwrap());
            let mut by_q: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
            for t in &all {
                *by_q.entry(padded_counts(t, k)).or_default() += 1;
            }
            for (q, n) in by_q {
                assert_eq!(count_full_mary(&TreeSpec { m, k, q: Some(q) }).unwrap(), BigInt::from(n));
            }
        }
    }

    #[test]
    fn all_ones_profile_is_unique() {
        let spec = TreeSpec { m: 3, k: 2, q: Some(vec![0, 0, 0]) };
        assert_eq!(count_full_mary(&spec).unwrap(), BigInt::one());
    }

    #[test]
    fn lemma2_at_m3_k2() {
        let tuples = lemma2_tuples(3, 2);
        assert_eq!(tuples.len(), 2 * 4 * 2);
        assert!(tuples.iter().all(|q| q[2] == 3 || q[2] == 4));
        for q in tuples {
            let r = enumerate_full_mary(&TreeSpec { m: 3, k: 2, q: Some(q) }).unwrap();
            assert!(r.satisfied && r.count >= BigInt::from(2));
        }
    }

    #[test]
    fn invalid_q() {
        assert!(count_full_mary(&TreeSpec { m: 2, k: 1, q: Some(vec![0, 3]) }).is_err());
        assert!(count_full_mary(&TreeSpec { m: 2, k: 1, q: Some(vec![0]) }).is_err());
    }

    #[test]
    fn canonical_equality_matches_brute_force() {
        let (_, trees) = enumerate_agg_trees(2, 2, DEFAULT_TREE_BUDGET).unwrap();
        for a in &trees {
            for b in &trees {
                assert_eq!(a == b, isomorphic_brute_force(a, b));
            }
        }
        let a = Tree::node(0, vec![Tree::leaf(1), Tree::node(0, vec![Tree::leaf(1)])]);
        let b = Tree::node(0, vec![Tree::node(0, vec![Tree::leaf(1)]), Tree::leaf(1)]);
        assert_eq!(a, b);
        assert!(isomorphic_brute_force(&a, &b));
    }

    #[test]
    fn family_profiles_constant() {
        let fam = prop8_family(3, 3, DEFAULT_TREE_BUDGET).unwrap();
        assert_eq!(fam.len(), 10);
        let q = padded_counts(&fam[0].tree, 3);
        assert_eq!(q, vec![1, 2, 6, 9]);
        assert!(fam.iter().all(|f| padded_counts(&f.tree, 3) == q));
        let paths: Vec<u64> = fam.iter().map(|f| f.tree.attributed_paths(&[1, 1, 1])).collect();
        assert_eq!(paths, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn attributed_paths_small() {
        let t = Tree::node(0, vec![Tree::node(1, vec![Tree::leaf(1), Tree::leaf(0)]), Tree::node(1, vec![Tree::leaf(1)])]);
        assert_eq!(t.attributed_paths(&[]), 1);
        assert_eq!(t.attributed_paths(&[1]), 2);
        assert_eq!(t.attributed_paths(&[1, 1]), 2);
        assert_eq!(t.attributed_paths(&[1, 0]), 1);
        assert_eq!(t.attributed_paths(&[0]), 0);
    }

    #[test]
    fn non_backtracking_on_trees() {
        let (g, _) = prop8_family(2, 3, DEFAULT_TREE_BUDGET).unwrap()[0].tree.to_graph();
        for k in 0..=4 {
            assert_eq!(tree_non_backtracking_walks(&g, 0, k).unwrap(), BigInt::from(nodes_at_depth(&g, 0, k)));
        }
        assert!(tree_non_backtracking_walks(&Graph::cycle(4), 0, 2).is_err());
    }
}
