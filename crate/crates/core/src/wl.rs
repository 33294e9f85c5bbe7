//! Weisfeiler-Lehman color refinement and GNN-induced equivalence classes.
//!
//! A node's color after `t` rounds names its depth-`t` rooted aggregation
//! tree. Colors are interned by full value, so two nodes share a color
//! exactly when their trees are equal.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphCollection, NodeFeatures};
use crate::report::{distinct, size_histogram, ClassCount, EquivalenceReport, Method, Scope};

/// Dense colors per iteration: `colors[t][i]` is the color of node `i` after
/// `t` rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorAssignment {
    colors: Vec<Vec<u32>>,
}

impl ColorAssignment {
    /// Number of refinement rounds K.
    pub fn rounds(&self) -> usize {
        self.colors.len() - 1
    }

    pub fn at(&self, t: usize) -> &[u32] {
        &self.colors[t]
    }

    pub fn last(&self) -> &[u32] {
        self.colors.last().expect("iteration 0 always present")
    }

    /// Sorted `(color, multiplicity)` pairs at iteration `t`.
    pub fn histogram(&self, t: usize) -> Vec<(u32, usize)> {
        let mut counts: HashMap<u32, usize> = HashMap::new();
        for &c in &self.colors[t] {
            *counts.entry(c).or_default() += 1;
        }
        let mut h: Vec<_> = counts.into_iter().collect();
        h.sort_unstable();
        h
    }
}

/// Interning tables for every iteration. Sharing one interner across graphs
/// makes their colors comparable.
#[derive(Debug, Default, Clone)]
pub struct ColorInterner {
    base: HashMap<u32, u32>,
    levels: Vec<HashMap<(u32, Vec<u32>), u32>>,
}

impl ColorInterner {
    pub fn new() -> ColorInterner {
        ColorInterner::default()
    }

    /// Distinct colors seen so far at iteration `t`.
    pub fn colors_at(&self, t: usize) -> usize {
        if t == 0 {
            self.base.len()
        } else {
            self.levels.get(t - 1).map_or(0, HashMap::len)
        }
    }

    pub fn refine(&mut self, g: &Graph, f: &NodeFeatures, k: usize) -> ColorAssignment {
        assert_eq!(g.n(), f.len(), "feature length must match node count");
        let mut current: Vec<u32> = f
            .labels()
            .iter()
            .map(|&l| {
                let next = self.base.len() as u32;
                *self.base.entry(l).or_insert(next)
            })
            .collect();
        let mut colors = Vec::with_capacity(k + 1);
        while self.levels.len() < k {
            self.levels.push(HashMap::new());
        }
        for t in 0..k {
            let table = &mut self.levels[t];
            let next: Vec<u32> = (0..g.n())
                .map(|i| {
                    let mut nbr: Vec<u32> = g.neighbors(i).iter().map(|&j| current[j]).collect();
                    nbr.sort_unstable();
                    let id = table.len() as u32;
                    *table.entry((current[i], nbr)).or_insert(id)
                })
                .collect();
            colors.push(std::mem::replace(&mut current, next));
        }
        colors.push(current);
        ColorAssignment { colors }
    }
}

/// K rounds of refinement on a single graph.
pub fn refine(g: &Graph, f: &NodeFeatures, k: usize) -> ColorAssignment {
    ColorInterner::new().refine(g, f, k)
}

/// Refines every graph of a collection with one shared interner.
pub fn refine_collection(c: &GraphCollection, k: usize) -> Vec<ColorAssignment> {
    let mut interner = ColorInterner::new();
    c.entries().iter().map(|e| interner.refine(&e.graph, &e.features(), k)).collect()
}

/// Node classes pooled over the collection, for every K' ≤ K.
pub fn count_node_classes(c: &GraphCollection, k: usize) -> EquivalenceReport {
    let assignments = refine_collection(c, k);
    let pooled = |t: usize| -> Vec<u32> { assignments.iter().flat_map(|a| a.at(t).iter().copied()).collect() };
    let mut report = EquivalenceReport::new(Scope::Node, Method::Gnn);
    for t in 0..=k {
        report.per_k.push(ClassCount { k: t as u32, classes: distinct(&pooled(t)) });
    }
    report.sizes = Some(size_histogram(&pooled(k)));
    report
}

/// Graph classes: two graphs match when their color histograms agree.
pub fn count_graph_classes(c: &GraphCollection, k: usize) -> EquivalenceReport {
    let assignments = refine_collection(c, k);
    let mut report = EquivalenceReport::new(Scope::Graph, Method::Gnn);
    let keys = |t: usize| -> Vec<Vec<(u32, usize)>> { assignments.iter().map(|a| a.histogram(t)).collect() };
    for t in 0..=k {
        report.per_k.push(ClassCount { k: t as u32, classes: distinct(&keys(t)) });
    }
    report.sizes = Some(size_histogram(&keys(k)));
    report
}

/// Mean label per color; unseen colors get the fallback.
#[derive(Debug, Clone)]
pub struct TabularPredictor {
    means: HashMap<u32, f64>,
    fallback: f64,
}

impl TabularPredictor {
    pub fn predict(&self, color: u32) -> f64 {
        self.means.get(&color).copied().unwrap_or(self.fallback)
    }

    pub fn fallback(&self) -> f64 {
        self.fallback
    }
}

/// Fits the color lookup table. `fallback` defaults to the global train mean.
pub fn tabular_predictor(train: &[(u32, f64)], fallback: Option<f64>) -> Result<TabularPredictor> {
    if train.is_empty() {
        return Err(Error::Empty("tabular predictor needs at least one training example".into()));
    }
    let mut sums: HashMap<u32, (f64, usize)> = HashMap::new();
    for &(c, y) in train {
        let e = sums.entry(c).or_default();
        e.0 += y;
        e.1 += 1;
    }
    let global = train.iter().map(|p| p.1).sum::<f64>() / train.len() as f64;
    let means = sums.into_iter().map(|(c, (s, n))| (c, s / n as f64)).collect();
    Ok(TabularPredictor { means, fallback: fallback.unwrap_or(global) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(a: &ColorAssignment, t: usize) -> usize {
        distinct(a.at(t))
    }

    #[test]
    fn hexagon_single_class() {
        let g = Graph::cycle(6);
        let a = refine(&g, &NodeFeatures::uniform(6), 3);
        for t in 0..=3 {
            assert_eq!(classes(&a, t), 1);
        }
    }

    #[test]
    fn path_splits_by_degree() {
        let g = Graph::path(3);
        let a = refine(&g, &NodeFeatures::uniform(3), 1);
        assert_eq!(classes(&a, 1), 2);
        assert_eq!(a.at(1)[0], a.at(1)[2]);
        assert_ne!(a.at(1)[0], a.at(1)[1]);
    }

    #[test]
    fn first_occurrence_ids() {
        let g = Graph::path(4);
        let a = refine(&g, &NodeFeatures::from_labels(vec![5, 2, 5, 7]), 1);
        assert_eq!(a.at(0), &[0, 1, 0, 2]);
        assert_eq!(a.at(1), &[0, 1, 2, 3]);
    }

    #[test]
    fn collection_counts() {
        let hex = GraphCollection::from_graphs([Graph::cycle(6)]);
        let r = count_node_classes(&hex, 4);
        assert!(r.per_k.iter().all(|c| c.classes == 1));

        let p = Graph::path(5);
        let one = count_node_classes(&GraphCollection::from_graphs([p.clone()]), 3);
        let two = count_node_classes(&GraphCollection::from_graphs([p.clone(), p]), 3);
        assert_eq!(one.per_k, two.per_k);
    }

    #[test]
    fn graph_classes() {
        let c = GraphCollection::from_graphs([Graph::cycle(6), Graph::cycle(3).disjoint_union(&Graph::cycle(3))]);
        let r = count_graph_classes(&c, 10);
        assert!(r.per_k.iter().all(|x| x.classes == 1));
        let single = count_graph_classes(&GraphCollection::from_graphs([Graph::path(4)]), 2);
        assert_eq!(single.classes_at(2), Some(1));
        let c = GraphCollection::from_graphs([Graph::path(4), Graph::star(3)]);
        assert_eq!(count_graph_classes(&c, 1).classes_at(1), Some(2));
        assert_eq!(count_graph_classes(&c, 1).classes_at(0), Some(1));
    }

    #[test]
    fn tabular() {
        let p = tabular_predictor(&[(0, 1.0), (0, 3.0), (1, 5.0)], None).unwrap();
        assert_eq!(p.predict(0), 2.0);
        assert_eq!(p.predict(1), 5.0);
        assert_eq!(p.predict(9), 3.0);
        let constant = tabular_predictor(&[(0, 4.0), (1, 4.0)], None).unwrap();
        assert_eq!(constant.predict(0), constant.predict(7));
        assert!(matches!(tabular_predictor(&[], None), Err(Error::Empty(_))));
        assert_eq!(tabular_predictor(&[(0, 1.0)], Some(-1.0)).unwrap().predict(3), -1.0);
    }
}
