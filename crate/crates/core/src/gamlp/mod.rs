//! Graph-augmented MLP features, the equivalence classes they induce, graph
//! identifiers and linear readouts.

mod identifiers;
mod readout;

pub use identifiers::{alpha_threshold, babai_identifier, degree_pair_fingerprint, BabaiIdentifier, DegreePairFingerprint};
pub use readout::{
    fit_logistic, fit_ridge, normalized_mse, LogisticConfig, LogisticFit, Readout, ReadoutModel, RidgeFit, Standardizer,
};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphCollection, NodeFeatures, RootedGraph};
use crate::operators::{apply, neighbor_degree_multiset, FeatureMatrix, OperatorFamily, OperatorSpec};
use crate::report::{distinct, size_histogram, ClassCount, EquivalenceReport, Method, Scope};
use crate::scalar::{Radical, Scalar, Tower};
use crate::walks::{fingerprint, WalkFingerprint, DEFAULT_STATE_CAP};

/// `[ω_1(A)·X, ..., ω_K(A)·X]` with `X` the one-hot encoding of `f`.
pub fn augment<S: Scalar>(g: &Graph, f: &NodeFeatures, omega: &OperatorFamily) -> Result<FeatureMatrix<S>> {
    if f.len() != g.n() {
        return Err(Error::Dimension { expected: g.n(), got: f.len() });
    }
    let x = FeatureMatrix::<S>::one_hot(f);
    let mut out = FeatureMatrix::empty(g.n());
    for (idx, op) in omega.members().iter().enumerate() {
        out.append(apply(op, g, &x)?, idx)?;
    }
    Ok(out)
}

/// Float-tower augmentation with per-column standardization after every
/// propagation step: a power `B^k` is computed as `k` applications of `B`,
/// each followed by standardization. Non-power operators are applied once
/// and standardized.
pub fn augment_normalized(g: &Graph, f: &NodeFeatures, omega: &OperatorFamily) -> Result<FeatureMatrix<f64>> {
    if f.len() != g.n() {
        return Err(Error::Dimension { expected: g.n(), got: f.len() });
    }
    let x = FeatureMatrix::<f64>::one_hot(f);
    let standardize = |m: &FeatureMatrix<f64>| Standardizer::fit(m).apply(m);
    // chains[base] = [B·X, B·B·X, ...] with standardization between steps
    let mut chains: HashMap<String, Vec<FeatureMatrix<f64>>> = HashMap::new();
    let mut out = FeatureMatrix::empty(g.n());
    for (idx, op) in omega.members().iter().enumerate() {
        let base = op.with_power(1);
        let is_power = matches!(
            op,
            OperatorSpec::AdjacencyPower(_)
                | OperatorSpec::NormalizedAdjacencyPower { .. }
                | OperatorSpec::SelfLoopNormalizedPower { .. }
                | OperatorSpec::BetheHessianShifted { .. }
        );
        let block = if is_power && op.hops() >= 1 {
            let chain = chains.entry(base.to_string()).or_default();
            while chain.len() < op.hops() as usize {
                let prev = chain.last().unwrap_or(&x);
                let next = standardize(&apply(&base, g, prev)?);
                chain.push(next);
            }
            chain[op.hops() as usize - 1].clone()
        } else {
            standardize(&apply(op, g, &x)?)
        };
        out.append(block, idx)?;
    }
    Ok(out)
}

/// How GA-MLP node keys are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquivMode {
    /// Augmented rows compared exactly; needs an exact tower.
    ExactFeatures,
    /// Augmented rows in floating point, rounded to 12 significant digits.
    RoundedFeatures,
    /// Root degree, root feature and degree-typed walk counts up to the
    /// family's largest power. Equal keys imply equal features for any
    /// `{I, (D^-α A D^-β)^k}` family.
    WalkFingerprint,
    /// Root feature, root degree and sorted neighbor degrees.
    DegreePairMultiset,
}

impl EquivMode {
    pub fn name(self) -> &'static str {
        match self {
            EquivMode::ExactFeatures => "exact",
            EquivMode::RoundedFeatures => "rounded",
            EquivMode::WalkFingerprint => "walk",
            EquivMode::DegreePairMultiset => "degree-pair",
        }
    }
}

impl fmt::Display for EquivMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EquivMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(EquivMode::ExactFeatures),
            "rounded" => Ok(EquivMode::RoundedFeatures),
            "walk" => Ok(EquivMode::WalkFingerprint),
            "degree-pair" => Ok(EquivMode::DegreePairMultiset),
            other => Err(format!("unknown mode `{other}` (expected exact, rounded, walk or degree-pair)")),
        }
    }
}

/// Canonical node key; equal keys mean equal augmented features.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeKey {
    Row(Vec<String>),
    Walk { feature: u32, degree: u32, walks: Option<WalkFingerprint> },
    Pair { feature: u32, degree: usize, neighbors: Vec<usize> },
}

// Everything needed to build node keys at any truncation K' ≤ K.
enum GraphKeyData {
    Columns { hops: Vec<u32>, rows: Vec<Vec<String>> },
    Walks { features: Vec<u32>, degrees: Vec<u32>, walks: Vec<WalkFingerprint> },
    Pairs(Vec<NodeKey>),
}

fn row_strings<S: Scalar>(m: &FeatureMatrix<S>, key: impl Fn(&S) -> String) -> Vec<Vec<String>> {
    (0..m.rows()).map(|i| m.columns().iter().map(|c| key(&c[i])).collect()).collect()
}

fn key_data(g: &Graph, f: &NodeFeatures, omega: &OperatorFamily, mode: EquivMode) -> Result<GraphKeyData> {
    match mode {
        EquivMode::ExactFeatures | EquivMode::RoundedFeatures => {
            let (rows, hops) = match (mode, omega.tower()) {
                (EquivMode::ExactFeatures, Tower::Float) => {
                    return Err(Error::InvalidArgument(
                        "exact feature keys need an exact tower; use rounded keys for float families".into(),
                    ))
                }
                (EquivMode::ExactFeatures, Tower::ExactInteger) => {
                    let m = augment::<BigInt>(g, f, omega)?;
                    (row_strings(&m, Scalar::key), column_hops(&m, omega))
                }
                (EquivMode::ExactFeatures, Tower::ExactRational) => {
                    let m = augment::<Radical>(g, f, omega)?;
                    (row_strings(&m, Scalar::key), column_hops(&m, omega))
                }
                _ => {
                    let m = augment::<f64>(g, f, omega)?;
                    (row_strings(&m, Scalar::key), column_hops(&m, omega))
                }
            };
            Ok(GraphKeyData::Columns { hops, rows })
        }
        EquivMode::WalkFingerprint => {
            let k = omega.max_hops() as usize;
            let walks = if k == 0 {
                Vec::new()
            } else {
                (0..g.n())
                    .map(|i| fingerprint(RootedGraph::new(g, i)?, f, k, DEFAULT_STATE_CAP))
                    .collect::<Result<_>>()?
            };
            Ok(GraphKeyData::Walks {
                features: f.labels().to_vec(),
                degrees: (0..g.n()).map(|i| g.degree(i) as u32).collect(),
                walks,
            })
        }
        EquivMode::DegreePairMultiset => Ok(GraphKeyData::Pairs(
            (0..g.n())
                .map(|i| NodeKey::Pair { feature: f.label(i), degree: g.degree(i), neighbors: neighbor_degree_multiset(g, i) })
                .collect(),
        )),
    }
}

fn column_hops<S: Scalar>(m: &FeatureMatrix<S>, omega: &OperatorFamily) -> Vec<u32> {
    m.sources().iter().map(|s| omega.members()[s.operator.expect("augmented column")].hops()).collect()
}

impl GraphKeyData {
    fn keys_at(&self, k: u32) -> Vec<NodeKey> {
        match self {
            GraphKeyData::Columns { hops, rows } => rows
                .iter()
                .map(|r| NodeKey::Row(r.iter().zip(hops).filter(|(_, &h)| h <= k).map(|(s, _)| s.clone()).collect()))
                .collect(),
            GraphKeyData::Walks { features, degrees, walks } => (0..features.len())
                .map(|i| {
                    if k == 0 {
                        NodeKey::Walk { feature: features[i], degree: 0, walks: None }
                    } else {
                        NodeKey::Walk { feature: features[i], degree: degrees[i], walks: Some(walks[i].truncated(k as usize)) }
                    }
                })
                .collect(),
            GraphKeyData::Pairs(keys) => keys.clone(),
        }
    }
}

/// Node-class ids, interned across the whole collection, for the family
/// truncated to `k` hops.
pub struct ClassIds {
    pub k: u32,
    pub per_graph: Vec<Vec<u32>>,
}

fn truncations(omega: &OperatorFamily) -> Vec<u32> {
    (0..=omega.max_hops()).filter(|&k| omega.truncated(k).is_some()).collect()
}

/// Class ids for every truncation K' of Ω that keeps at least one member.
pub fn node_class_ids(c: &GraphCollection, omega: &OperatorFamily, mode: EquivMode) -> Result<Vec<ClassIds>> {
    let data: Vec<GraphKeyData> = c
        .entries()
        .par_iter()
        .map(|e| key_data(&e.graph, &e.features(), omega, mode))
        .collect::<Result<_>>()?;
    Ok(truncations(omega)
        .into_iter()
        .map(|k| {
            let mut table: HashMap<NodeKey, u32> = HashMap::new();
            let per_graph = data
                .iter()
                .map(|d| {
                    d.keys_at(k)
                        .into_iter()
                        .map(|key| {
                            let next = table.len() as u32;
                            *table.entry(key).or_insert(next)
                        })
                        .collect()
                })
                .collect();
            ClassIds { k, per_graph }
        })
        .collect())
}

fn gamlp_report(scope: Scope, omega: &OperatorFamily, mode: EquivMode) -> EquivalenceReport {
    let mut r = EquivalenceReport::new(scope, Method::Gamlp);
    r.operators = Some(omega.text());
    r.mode = Some(mode.name().into());
    r
}

/// Pooled node classes per K' ≤ K.
pub fn count_node_classes(c: &GraphCollection, omega: &OperatorFamily, mode: EquivMode) -> Result<EquivalenceReport> {
    let ids = node_class_ids(c, omega, mode)?;
    let mut report = gamlp_report(Scope::Node, omega, mode);
    for t in &ids {
        let pooled: Vec<u32> = t.per_graph.concat();
        report.per_k.push(ClassCount { k: t.k, classes: distinct(&pooled) });
    }
    if let Some(last) = ids.last() {
        report.sizes = Some(size_histogram(&last.per_graph.concat()));
    }
    Ok(report)
}

/// Graph classes: graph key is the sorted multiset of node keys.
pub fn count_graph_classes(c: &GraphCollection, omega: &OperatorFamily, mode: EquivMode) -> Result<EquivalenceReport> {
    let ids = node_class_ids(c, omega, mode)?;
    let mut report = gamlp_report(Scope::Graph, omega, mode);
    let mut last_keys = Vec::new();
    for t in &ids {
        let keys: Vec<Vec<u32>> = t
            .per_graph
            .iter()
            .map(|g| {
                let mut s = g.clone();
                s.sort_unstable();
                s
            })
            .collect();
        report.per_k.push(ClassCount { k: t.k, classes: distinct(&keys) });
        last_keys = keys;
    }
    report.sizes = Some(size_histogram(&last_keys));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_augmentation_chains_steps() {
        let g = Graph::path(5);
        let f = NodeFeatures::uniform(5);
        let omega = OperatorFamily::parse("I,A^1..A^3,dist(2)", Tower::Float).unwrap();
        let x = augment_normalized(&g, &f, &omega).unwrap();
        assert_eq!(x.cols(), 5);
        // the constant identity column standardizes to zero
        assert!(x.column(0).iter().all(|v| *v == 0.0));
        let std = |c: &[f64]| {
            let m = c.iter().sum::<f64>() / 5.0;
            (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 5.0).sqrt()
        };
        for j in 1..5 {
            assert!((std(x.column(j)) - 1.0).abs() < 1e-12);
        }
        // A^2 column is standardize(A · standardize(A·1)), by hand
        let a1 = [1.0, 2.0, 2.0, 2.0, 1.0];
        let s1: Vec<f64> = a1.iter().map(|v| (v - 1.6) / 0.24f64.sqrt()).collect();
        let a2: Vec<f64> = (0..5).map(|i| g.neighbors(i).iter().map(|&j| s1[j]).sum()).collect();
        let m = a2.iter().sum::<f64>() / 5.0;
        let sd = std(&a2);
        for i in 0..5 {
            assert!((x.get(i, 2) - (a2[i] - m) / sd).abs() < 1e-12);
        }
    }
    use crate::operators::OperatorSpec;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn identity_is_one_hot() {
        let g = Graph::path(3);
        let f = NodeFeatures::from_labels(vec![0, 2, 0]);
        let omega = OperatorFamily::parse("I", Tower::ExactInteger).unwrap();
        let m = augment::<BigInt>(&g, &f, &omega).unwrap();
        assert_eq!(m.columns(), FeatureMatrix::<BigInt>::one_hot(&f).columns());
    }

    #[test]
    fn path_powers() {
        let g = Graph::path(3);
        let omega = OperatorFamily::parse("I,A,A^2", Tower::ExactInteger).unwrap();
        let m = augment::<BigInt>(&g, &NodeFeatures::uniform(3), &omega).unwrap();
        assert_eq!(m.column(0), ints(&[1, 1, 1]).as_slice());
        assert_eq!(m.column(1), ints(&[1, 2, 1]).as_slice());
        assert_eq!(m.column(2), ints(&[2, 2, 2]).as_slice());
        assert_eq!(m.sources()[2].operator, Some(2));
    }

    #[test]
    fn normalized_on_regular_pair_is_all_ones() {
        let omega = OperatorFamily::parse("N(1/2,1/2)^1..N(1/2,1/2)^3", Tower::ExactRational).unwrap();
        for g in [Graph::cycle(8), Graph::hypercube(3)] {
            let m = augment::<Radical>(&g, &NodeFeatures::uniform(8), &omega).unwrap();
            assert!(m.columns().iter().flatten().all(|v| *v == Radical::from_i64(1)));
        }
    }

    #[test]
    fn hexagon_vs_triangles_modes() {
        let c = GraphCollection::from_graphs([Graph::cycle(6), Graph::complete(3).disjoint_union(&Graph::complete(3))]);
        let binarized = OperatorFamily::parse("I,A,minpow(2)", Tower::ExactInteger).unwrap();
        let dist = OperatorFamily::parse("I,A,dist(2)", Tower::ExactInteger).unwrap();
        let r = count_graph_classes(&c, &binarized, EquivMode::ExactFeatures).unwrap();
        assert_eq!(r.classes_at(2), Some(1));
        let r = count_graph_classes(&c, &dist, EquivMode::ExactFeatures).unwrap();
        assert_eq!(r.classes_at(2), Some(2));
        assert_eq!(r.classes_at(1), Some(1));
        assert_eq!(r.operators.as_deref(), Some("I,A^1,dist(2)"));
    }

    #[test]
    fn float_family_needs_rounded_mode() {
        let c = GraphCollection::from_graphs([Graph::path(4)]);
        let omega = OperatorFamily::parse("I,BH(8,auto)^1", Tower::Float).unwrap();
        assert!(count_node_classes(&c, &omega, EquivMode::ExactFeatures).is_err());
        let r = count_node_classes(&c, &omega, EquivMode::RoundedFeatures).unwrap();
        assert_eq!(r.classes_at(1), Some(2));
    }

    #[test]
    fn vertex_transitive_single_class() {
        let c = GraphCollection::from_graphs([Graph::hypercube(3)]);
        let omega = OperatorFamily::powers(&OperatorSpec::AdjacencyPower(1), 4, Tower::ExactInteger).unwrap();
        for mode in [EquivMode::ExactFeatures, EquivMode::WalkFingerprint, EquivMode::DegreePairMultiset] {
            let r = count_node_classes(&c, &omega, mode).unwrap();
            assert!(r.per_k.iter().all(|x| x.classes == 1), "{mode}");
        }
    }

    #[test]
    fn walk_keys_refine_exact_keys() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (1, 5)]).unwrap();
        let c = GraphCollection::from_graphs([g]);
        let omega = OperatorFamily::powers(&OperatorSpec::AdjacencyPower(1), 3, Tower::ExactInteger).unwrap();
        let exact = node_class_ids(&c, &omega, EquivMode::ExactFeatures).unwrap();
        let walk = node_class_ids(&c, &omega, EquivMode::WalkFingerprint).unwrap();
        for (e, w) in exact.iter().zip(&walk) {
            assert!(crate::report::refines(&w.per_graph[0], &e.per_graph[0]));
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [EquivMode::ExactFeatures, EquivMode::RoundedFeatures, EquivMode::WalkFingerprint, EquivMode::DegreePairMultiset] {
            assert_eq!(m.name().parse::<EquivMode>().unwrap(), m);
        }
    }
}
