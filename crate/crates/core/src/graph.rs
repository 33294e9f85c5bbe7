//! Simple undirected graphs in compressed sparse row form, node features over
//! a finite alphabet, rooted views and named collections.
//!
//! Edge-list text format: one edge `u v` per line with 0-based ids, `#` starts
//! a comment, blank lines are ignored. A comment of the form `# nodes: N`
//! declares the node count (so isolated trailing nodes survive a round trip).

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Immutable simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Graph {
    /// Builds a graph on `n` nodes. Self-loops, duplicate edges and
    /// out-of-range ids are errors; `line` fields report the edge index + 1.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        let lines: Vec<usize> = (1..=edges.len()).collect();
        Self::build(n, edges, &lines)
    }

    fn build(n: usize, edges: &[(usize, usize)], lines: &[usize]) -> Result<Graph> {
        let mut seen = HashSet::with_capacity(edges.len());
        let mut degree = vec![0usize; n];
        for (&(u, v), &line) in edges.iter().zip(lines) {
            for id in [u, v] {
                if id >= n {
                    return Err(Error::NodeOutOfRange { id, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop { line, node: u });
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::DuplicateEdge { line, u, v });
            }
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0usize; offsets[n]];
        for &(u, v) in edges {
            targets[fill[u]] = v;
            fill[u] += 1;
            targets[fill[v]] = u;
            fill[v] += 1;
        }
        for i in 0..n {
            targets[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Ok(Graph { offsets, targets })
    }

    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Graph {
        Graph { offsets: vec![0; n + 1], targets: Vec::new() }
    }

    pub fn cycle(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges).expect("cycle needs n >= 3")
    }

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).expect("valid path")
    }

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Graph::from_edges(n, &edges).expect("valid clique")
    }

    /// Star K_{1,leaves} with the center at node 0.
    pub fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::from_edges(leaves + 1, &edges).expect("valid star")
    }

    /// Hypercube Q_dim on 2^dim nodes.
    pub fn hypercube(dim: u32) -> Graph {
        let n = 1usize << dim;
        let mut edges = Vec::new();
        for i in 0..n {
            for b in 0..dim {
                let j = i ^ (1 << b);
                if i < j {
                    edges.push((i, j));
                }
            }
        }
        Graph::from_edges(n, &edges).expect("valid hypercube")
    }

    /// Disjoint union; nodes of `other` are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let shift = self.n();
        let mut edges: Vec<_> = self.edges().collect();
        edges.extend(other.edges().map(|(u, v)| (u + shift, v + shift)));
        Graph::from_edges(shift + other.n(), &edges).expect("union of valid graphs")
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n() {
            return Err(Error::Dimension { expected: self.n(), got: perm.len() });
        }
        let edges: Vec<_> = self.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        Graph::from_edges(self.n(), &edges)
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|i| self.degree(i)).collect()
    }

    /// Maximum degree `m`; 0 for a graph without nodes.
    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    pub fn mean_degree(&self) -> f64 {
        if self.n() == 0 {
            0.0
        } else {
            self.targets.len() as f64 / self.n() as f64
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u).iter().filter(move |&&v| u < v).map(move |&v| (u, v))
        })
    }

    /// Serializes to the edge-list text format with a node-count declaration.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# nodes: {}\n", self.n());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

fn declared_nodes(comment: &str) -> Option<usize> {
    let rest = comment.trim().strip_prefix("nodes:")?;
    rest.trim().parse().ok()
}

fn parse_lines(text: &str) -> Result<(Option<usize>, Vec<(usize, [&str; 2])>)> {
    let mut declared = None;
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let (body, comment) = match raw.find('#') {
            Some(p) => (&raw[..p], Some(&raw[p + 1..])),
            None => (raw, None),
        };
        if let Some(n) = comment.and_then(declared_nodes) {
            declared = Some(n);
        }
        let mut tokens = body.split_whitespace();
        let Some(a) = tokens.next() else { continue };
        let b = tokens
            .next()
            .ok_or_else(|| Error::Parse { line, msg: "expected two node ids".into() })?;
        if tokens.next().is_some() {
            return Err(Error::Parse { line, msg: "trailing tokens after edge".into() });
        }
        rows.push((line, [a, b]));
    }
    Ok((declared, rows))
}

/// Parses an edge list with dense 0-based ids. The node count is the
/// declared `# nodes: N` if present, otherwise max id + 1.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    let (declared, rows) = parse_lines(text)?;
    let mut edges = Vec::with_capacity(rows.len());
    let mut lines = Vec::with_capacity(rows.len());
    let mut max_id = None::<usize>;
    for (line, [a, b]) in rows {
        let parse = |tok: &str| {
            tok.parse::<usize>()
                .map_err(|_| Error::Parse { line, msg: format!("invalid node id `{tok}`") })
        };
        let (u, v) = (parse(a)?, parse(b)?);
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
        lines.push(line);
    }
    let n = declared.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
    Graph::build(n, &edges, &lines)
}

/// Parses an edge list with arbitrary string ids, assigning dense ids in
/// first-occurrence order. Returns the graph and the original id of each node.
pub fn load_edge_list_relabel(text: &str) -> Result<(Graph, Vec<String>)> {
    let (_, rows) = parse_lines(text)?;
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut names = Vec::new();
    let mut edges = Vec::with_capacity(rows.len());
    let mut lines = Vec::with_capacity(rows.len());
    for (line, toks) in rows {
        let mut ids = [0usize; 2];
        for (slot, tok) in ids.iter_mut().zip(toks) {
            *slot = *index.entry(tok).or_insert_with(|| {
                names.push(tok.to_string());
                names.len() - 1
            });
        }
        edges.push((ids[0], ids[1]));
        lines.push(line);
    }
    let g = Graph::build(names.len(), &edges, &lines)?;
    Ok((g, names))
}

/// Per-node labels from a finite alphabet of small non-negative integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeFeatures {
    alphabet: BTreeSet<u32>,
    labels: Vec<u32>,
}

impl NodeFeatures {
    /// All-zero labels over the alphabet `{0}` (features-removed mode).
    pub fn uniform(n: usize) -> NodeFeatures {
        NodeFeatures { alphabet: BTreeSet::from([0]), labels: vec![0; n] }
    }

    /// Alphabet is the set of labels seen, plus 0.
    pub fn from_labels(labels: Vec<u32>) -> NodeFeatures {
        let mut alphabet: BTreeSet<u32> = labels.iter().copied().collect();
        alphabet.insert(0);
        NodeFeatures { alphabet, labels }
    }

    /// Labels with an explicitly wider alphabet.
    pub fn with_alphabet(labels: Vec<u32>, alphabet: BTreeSet<u32>) -> Result<NodeFeatures> {
        if let Some(&bad) = labels.iter().find(|l| !alphabet.contains(l)) {
            return Err(Error::FeatureNotInAlphabet(bad));
        }
        Ok(NodeFeatures { alphabet, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn alphabet(&self) -> &BTreeSet<u32> {
        &self.alphabet
    }

    pub fn permute(&self, perm: &[usize]) -> NodeFeatures {
        let mut labels = vec![0; self.labels.len()];
        for (i, &l) in self.labels.iter().enumerate() {
            labels[perm[i]] = l;
        }
        NodeFeatures { alphabet: self.alphabet.clone(), labels }
    }
}

/// Parses `node_id label` lines; missing nodes get label 0.
pub fn load_features(text: &str, n: usize) -> Result<NodeFeatures> {
    let mut labels = vec![0u32; n];
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut tokens = body.split_whitespace();
        let Some(a) = tokens.next() else { continue };
        let b = tokens
            .next()
            .ok_or_else(|| Error::Parse { line, msg: "expected `node_id label`".into() })?;
        let id: usize = a
            .parse()
            .map_err(|_| Error::Parse { line, msg: format!("invalid node id `{a}`") })?;
        let label: i64 = b
            .parse()
            .map_err(|_| Error::Parse { line, msg: format!("invalid label `{b}`") })?;
        if id >= n {
            return Err(Error::NodeOutOfRange { id, n });
        }
        if label < 0 {
            return Err(Error::NegativeLabel { node: id, label });
        }
        labels[id] = u32::try_from(label)
            .map_err(|_| Error::Parse { line, msg: format!("label `{b}` too large") })?;
    }
    Ok(NodeFeatures::from_labels(labels))
}

/// A graph with a designated root node.
#[derive(Debug, Clone, Copy)]
pub struct RootedGraph<'g> {
    pub graph: &'g Graph,
    pub root: usize,
}

impl<'g> RootedGraph<'g> {
    pub fn new(graph: &'g Graph, root: usize) -> Result<RootedGraph<'g>> {
        if root >= graph.n() {
            return Err(Error::NodeOutOfRange { id: root, n: graph.n() });
        }
        Ok(RootedGraph { graph, root })
    }
}

/// One named member of a [`GraphCollection`].
#[derive(Debug, Clone)]
pub struct CollectionEntry {
    pub name: String,
    pub graph: Graph,
    pub features: Option<NodeFeatures>,
}

impl CollectionEntry {
    /// Explicit features, or the uniform labelling when none were given.
    pub fn features(&self) -> NodeFeatures {
        self.features.clone().unwrap_or_else(|| NodeFeatures::uniform(self.graph.n()))
    }
}

/// Named list of graphs with optional features.
#[derive(Debug, Clone, Default)]
pub struct GraphCollection {
    entries: Vec<CollectionEntry>,
}

impl GraphCollection {
    pub fn new() -> GraphCollection {
        GraphCollection::default()
    }

    pub fn push(
        &mut self,
        name: impl Into<String>,
        graph: Graph,
        features: Option<NodeFeatures>,
    ) -> Result<()> {
        let name = name.into();
        if self.entries.iter().any(|e| e.name == name) {
            return Err(Error::InvalidArgument(format!("duplicate graph name `{name}`")));
        }
        if let Some(f) = &features {
            if f.len() != graph.n() {
                return Err(Error::Dimension { expected: graph.n(), got: f.len() });
            }
        }
        self.entries.push(CollectionEntry { name, graph, features });
        Ok(())
    }

    /// Convenience builder for unnamed graphs (`g0`, `g1`, ...) without features.
    pub fn from_graphs(graphs: impl IntoIterator<Item = Graph>) -> GraphCollection {
        let mut c = GraphCollection::new();
        for (i, g) in graphs.into_iter().enumerate() {
            c.push(format!("g{i}"), g, None).expect("generated names are unique");
        }
        c
    }

    /// Drops all features (features-removed mode).
    pub fn without_features(&self) -> GraphCollection {
        let entries = self
            .entries
            .iter()
            .map(|e| CollectionEntry { features: None, ..e.clone() })
            .collect();
        GraphCollection { entries }
    }

    pub fn entries(&self) -> &[CollectionEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_nodes(&self) -> usize {
        self.entries.iter().map(|e| e.graph.n()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_from_text() {
        let g = load_edge_list("0 1\n1 2").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.degrees(), vec![1, 2, 1]);
        assert_eq!(g.max_degree(), 2);
    }

    #[test]
    fn self_loop_rejected() {
        assert!(matches!(load_edge_list("0 0"), Err(Error::SelfLoop { line: 1, node: 0 })));
    }

    #[test]
    fn duplicate_rejected() {
        let err = load_edge_list("# comment\n0 1\n\n1 0\n").unwrap_err();
        assert_eq!(err, Error::DuplicateEdge { line: 4, u: 1, v: 0 });
    }

    #[test]
    fn declared_node_count() {
        let g = load_edge_list("# nodes: 5\n0 1\n").unwrap();
        assert_eq!(g.n(), 5);
        assert!(matches!(
            load_edge_list("# nodes: 2\n0 3\n"),
            Err(Error::NodeOutOfRange { id: 3, n: 2 })
        ));
    }

    #[test]
    fn parse_error_has_line() {
        assert!(matches!(load_edge_list("0 1\n1 x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(load_edge_list("0 1 2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(load_edge_list("7\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn hexagon_file() {
        let g = load_edge_list("0 1\n1 2\n2 3\n3 4\n4 5\n5 0\n").unwrap();
        assert_eq!(g.n(), 6);
        assert!(g.degrees().iter().all(|&d| d == 2));
        assert_eq!(g, Graph::cycle(6));
    }

    #[test]
    fn max_degrees() {
        assert_eq!(Graph::path(3).max_degree(), 2);
        assert_eq!(Graph::cycle(6).max_degree(), 2);
        assert_eq!(Graph::star(4).max_degree(), 4);
        assert_eq!(Graph::empty(0).max_degree(), 0);
    }

    #[test]
    fn relabel_pass() {
        let (g, names) = load_edge_list_relabel("a b\nb c\n# x\nc a\n").unwrap();
        assert_eq!(g, Graph::cycle(3));
        assert_eq!(names, vec!["a", "b", "c"]);
    }

    #[test]
    fn features_defaults() {
        let f = load_features("", 3).unwrap();
        assert_eq!(f.labels(), &[0, 0, 0]);
        assert_eq!(f.alphabet(), &BTreeSet::from([0]));

        let f = load_features("0 1\n2 1", 3).unwrap();
        assert_eq!(f.labels(), &[1, 0, 1]);
        assert_eq!(f.alphabet(), &BTreeSet::from([0, 1]));

        assert!(matches!(load_features("5 0", 3), Err(Error::NodeOutOfRange { id: 5, n: 3 })));
        assert!(matches!(load_features("1 -2", 3), Err(Error::NegativeLabel { node: 1, label: -2 })));
    }

    #[test]
    fn collection_invariants() {
        let mut c = GraphCollection::new();
        c.push("a", Graph::path(3), None).unwrap();
        assert!(c.push("a", Graph::path(2), None).is_err());
        assert!(c.push("b", Graph::path(2), Some(NodeFeatures::uniform(3))).is_err());
    }

    #[test]
    fn rooted_range() {
        let g = Graph::path(3);
        assert!(RootedGraph::new(&g, 2).is_ok());
        assert!(RootedGraph::new(&g, 3).is_err());
    }
}
