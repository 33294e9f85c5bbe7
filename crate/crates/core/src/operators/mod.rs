//! Graph operators `ω(A)` and their application to node feature matrices.
//!
//! Powers are applied as repeated sparse products; no dense `A^k` is ever
//! formed. Each operator has a canonical text form:
//!
//! | text               | operator                                   |
//! |--------------------|--------------------------------------------|
//! | `I`                | identity                                   |
//! | `D`                | degree matrix                              |
//! | `A^k`              | adjacency power                            |
//! | `N(α,β)^k`         | `(D^-α A D^-β)^k`                          |
//! | `SL(ε)^k`          | `(D̄^-½ (A+εI) D̄^-½)^k`, `D̄ = D + εI`        |
//! | `minpow(k)`        | `min(A^k, 1)`                              |
//! | `dist(k)`          | exact-distance-k indicator                 |
//! | `nds(α)`           | `A D^-α`                                   |
//! | `BH(κ,r)^k`        | `(κI − H(r))^k`, `r = auto` → √(mean deg)  |
//!
//! Family text is a comma-separated list; `X^a..X^b` expands to the powers
//! `a` through `b` of the same base operator.

mod spectral;

pub use spectral::{bethe_hessian, leading_eigenvectors, EigenPairs, PowerIterationOptions, SparseSymmetric};

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeFeatures};
use crate::scalar::{Scalar, Tower};

/// Radius parameter of the Bethe Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BetheRadius {
    Value(f64),
    /// √(mean degree) of the graph the operator is applied to.
    Auto,
}

impl BetheRadius {
    pub fn resolve(self, g: &Graph) -> f64 {
        match self {
            BetheRadius::Value(r) => r,
            BetheRadius::Auto => g.mean_degree().sqrt(),
        }
    }
}

/// Declarative description of one operator `ω(A)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OperatorSpec {
    Identity,
    Degree,
    AdjacencyPower(u32),
    NormalizedAdjacencyPower { alpha: Rational64, beta: Rational64, k: u32 },
    SelfLoopNormalizedPower { eps: Rational64, k: u32 },
    WalkBinarized(u32),
    DistanceExact(u32),
    NeighborDegreeSum(Rational64),
    BetheHessianShifted { kappa: f64, r: BetheRadius, k: u32 },
}

fn is_half_integer(q: Rational64) -> bool {
    *q.denom() == 1 || *q.denom() == 2
}

impl OperatorSpec {
    /// Receptive field in hops.
    pub fn hops(&self) -> u32 {
        match self {
            OperatorSpec::Identity | OperatorSpec::Degree => 0,
            OperatorSpec::NeighborDegreeSum(_) => 1,
            OperatorSpec::AdjacencyPower(k)
            | OperatorSpec::WalkBinarized(k)
            | OperatorSpec::DistanceExact(k)
            | OperatorSpec::NormalizedAdjacencyPower { k, .. }
            | OperatorSpec::SelfLoopNormalizedPower { k, .. }
            | OperatorSpec::BetheHessianShifted { k, .. } => *k,
        }
    }

    /// Lowest numeric tower in which the operator's entries are exact.
    pub fn min_tower(&self) -> Tower {
        match self {
            OperatorSpec::Identity
            | OperatorSpec::Degree
            | OperatorSpec::AdjacencyPower(_)
            | OperatorSpec::WalkBinarized(_)
            | OperatorSpec::DistanceExact(_) => Tower::ExactInteger,
            OperatorSpec::NormalizedAdjacencyPower { k: 0, .. }
            | OperatorSpec::SelfLoopNormalizedPower { k: 0, .. }
            | OperatorSpec::BetheHessianShifted { k: 0, .. } => Tower::ExactInteger,
            OperatorSpec::NormalizedAdjacencyPower { alpha, beta, .. } => {
                if is_half_integer(*alpha) && is_half_integer(*beta) {
                    Tower::ExactRational
                } else {
                    Tower::Float
                }
            }
            OperatorSpec::SelfLoopNormalizedPower { .. } => Tower::ExactRational,
            OperatorSpec::NeighborDegreeSum(alpha) => {
                if is_half_integer(*alpha) {
                    Tower::ExactRational
                } else {
                    Tower::Float
                }
            }
            OperatorSpec::BetheHessianShifted { .. } => Tower::Float,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OperatorSpec::SelfLoopNormalizedPower { eps, .. } if *eps < Rational64::zero() => {
                Err(Error::InvalidArgument(format!("ε must be ≥ 0 in `{self}`")))
            }
            OperatorSpec::BetheHessianShifted { kappa, r, .. } => {
                let r_ok = match r {
                    BetheRadius::Value(v) => v.is_finite(),
                    BetheRadius::Auto => true,
                };
                if kappa.is_finite() && r_ok {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!("κ and r must be finite in `{self}`")))
                }
            }
            _ => Ok(()),
        }
    }

    /// Same operator with power `k` (identity-like kinds are unchanged).
    pub fn with_power(&self, k: u32) -> OperatorSpec {
        let mut s = self.clone();
        match &mut s {
            OperatorSpec::AdjacencyPower(p) | OperatorSpec::WalkBinarized(p) | OperatorSpec::DistanceExact(p) => *p = k,
            OperatorSpec::NormalizedAdjacencyPower { k: p, .. }
            | OperatorSpec::SelfLoopNormalizedPower { k: p, .. }
            | OperatorSpec::BetheHessianShifted { k: p, .. } => *p = k,
            _ => {}
        }
        s
    }
}

fn fmt_rational(q: Rational64) -> String {
    if q.is_integer() {
        return q.numer().to_string();
    }
    let mut d = *q.denom();
    while d % 2 == 0 {
        d /= 2;
    }
    while d % 5 == 0 {
        d /= 5;
    }
    if d == 1 {
        // terminating decimal: print exactly
        let v = *q.numer() as f64 / *q.denom() as f64;
        format!("{v}")
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn parse_rational(s: &str) -> Option<Rational64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b): (i64, i64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return (b != 0).then(|| Rational64::new(a, b));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 15 {
        return None;
    }
    let denom = 10i64.checked_pow(frac.len() as u32)?;
    let int_v: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let frac_v: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    let numer = int_v.checked_mul(denom)?.checked_add(frac_v)?;
    let q = Rational64::new(numer, denom);
    Some(if neg { -q } else { q })
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorSpec::Identity => write!(f, "I"),
            OperatorSpec::Degree => write!(f, "D"),
            OperatorSpec::AdjacencyPower(k) => write!(f, "A^{k}"),
            OperatorSpec::NormalizedAdjacencyPower { alpha, beta, k } => {
                write!(f, "N({},{})^{k}", fmt_rational(*alpha), fmt_rational(*beta))
            }
            OperatorSpec::SelfLoopNormalizedPower { eps, k } => write!(f, "SL({})^{k}", fmt_rational(*eps)),
            OperatorSpec::WalkBinarized(k) => write!(f, "minpow({k})"),
            OperatorSpec::DistanceExact(k) => write!(f, "dist({k})"),
            OperatorSpec::NeighborDegreeSum(a) => write!(f, "nds({})", fmt_rational(*a)),
            OperatorSpec::BetheHessianShifted { kappa, r, k } => match r {
                BetheRadius::Auto => write!(f, "BH({kappa},auto)^{k}"),
                BetheRadius::Value(v) => write!(f, "BH({kappa},{v})^{k}"),
            },
        }
    }
}

fn split_power(s: &str) -> Result<(&str, u32)> {
    match s.rsplit_once('^') {
        Some((base, p)) => {
            let k = p.trim().parse().map_err(|_| Error::OperatorSyntax(s.into()))?;
            Ok((base.trim(), k))
        }
        None => Ok((s.trim(), 1)),
    }
}

fn call_args<'a>(base: &'a str, name: &str) -> Option<Vec<&'a str>> {
    let inner = base.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.split(',').map(str::trim).collect())
}

impl FromStr for OperatorSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let err = || Error::OperatorSyntax(text.to_string());
        let s = text.trim();
        let spec = match s {
            "I" => OperatorSpec::Identity,
            "D" => OperatorSpec::Degree,
            _ => {
                let (base, k) = split_power(s)?;
                let rat = |a: &str| parse_rational(a).ok_or_else(err);
                let int = |a: &str| a.parse::<u32>().map_err(|_| err());
                if base == "A" {
                    OperatorSpec::AdjacencyPower(k)
                } else if let Some(args) = call_args(base, "N") {
                    let [a, b] = args[..] else { return Err(err()) };
                    OperatorSpec::NormalizedAdjacencyPower { alpha: rat(a)?, beta: rat(b)?, k }
                } else if let Some(args) = call_args(base, "SL") {
                    let [e] = args[..] else { return Err(err()) };
                    OperatorSpec::SelfLoopNormalizedPower { eps: rat(e)?, k }
                } else if let Some(args) = call_args(base, "BH") {
                    let [kappa, r] = args[..] else { return Err(err()) };
                    let kappa: f64 = kappa.parse().map_err(|_| err())?;
                    let r = if r == "auto" {
                        BetheRadius::Auto
                    } else {
                        BetheRadius::Value(r.parse().map_err(|_| err())?)
                    };
                    OperatorSpec::BetheHessianShifted { kappa, r, k }
                } else if s.contains('^') {
                    return Err(err());
                } else if let Some(args) = call_args(s, "minpow") {
                    let [k] = args[..] else { return Err(err()) };
                    OperatorSpec::WalkBinarized(int(k)?)
                } else if let Some(args) = call_args(s, "dist") {
                    let [k] = args[..] else { return Err(err()) };
                    OperatorSpec::DistanceExact(int(k)?)
                } else if let Some(args) = call_args(s, "nds") {
                    let [a] = args[..] else { return Err(err()) };
                    OperatorSpec::NeighborDegreeSum(rat(a)?)
                } else {
                    return Err(err());
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Splits on commas that are not inside parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

/// Parses a family list such as `I,A^1..A^5` or `BH(8,auto)^0..BH(8,auto)^30`.
pub fn parse_operator_list(text: &str) -> Result<Vec<OperatorSpec>> {
    let mut out = Vec::new();
    for item in split_top_level(text) {
        let item = item.trim();
        if item.is_empty() {
            return Err(Error::OperatorSyntax(text.to_string()));
        }
        if let Some((lo, hi)) = item.split_once("..") {
            let (lo, hi): (OperatorSpec, OperatorSpec) = (lo.parse()?, hi.parse()?);
            if lo.with_power(0) != hi.with_power(0) || lo.hops() > hi.hops() {
                return Err(Error::OperatorSyntax(item.to_string()));
            }
            out.extend((lo.hops()..=hi.hops()).map(|k| lo.with_power(k)));
        } else {
            out.push(item.parse()?);
        }
    }
    Ok(out)
}

/// Ordered operator family Ω with its numeric tower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorFamily {
    members: Vec<OperatorSpec>,
    tower: Tower,
}

impl OperatorFamily {
    pub fn new(members: Vec<OperatorSpec>, tower: Tower) -> Result<OperatorFamily> {
        if members.is_empty() {
            return Err(Error::Empty("operator family".into()));
        }
        for m in &members {
            m.validate()?;
            if m.min_tower() > tower {
                return Err(Error::Tower { op: m.to_string(), tower: tower.to_string() });
            }
        }
        Ok(OperatorFamily { members, tower })
    }

    /// Family in the lowest tower that represents every member exactly.
    pub fn exact_or_float(members: Vec<OperatorSpec>) -> Result<OperatorFamily> {
        let tower = members.iter().map(OperatorSpec::min_tower).max().unwrap_or(Tower::ExactInteger);
        OperatorFamily::new(members, tower)
    }

    pub fn parse(text: &str, tower: Tower) -> Result<OperatorFamily> {
        OperatorFamily::new(parse_operator_list(text)?, tower)
    }

    /// `{I, op^1, ..., op^k}` for a power-indexed operator.
    pub fn powers(base: &OperatorSpec, k: u32, tower: Tower) -> Result<OperatorFamily> {
        let mut members = vec![OperatorSpec::Identity];
        members.extend((1..=k).map(|p| base.with_power(p)));
        OperatorFamily::new(members, tower)
    }

    pub fn members(&self) -> &[OperatorSpec] {
        &self.members
    }

    pub fn tower(&self) -> Tower {
        self.tower
    }

    pub fn max_hops(&self) -> u32 {
        self.members.iter().map(OperatorSpec::hops).max().unwrap_or(0)
    }

    /// Sub-family of members reaching at most `k` hops (`None` if empty).
    pub fn truncated(&self, k: u32) -> Option<OperatorFamily> {
        let members: Vec<_> = self.members.iter().filter(|m| m.hops() <= k).cloned().collect();
        (!members.is_empty()).then(|| OperatorFamily { members, tower: self.tower })
    }

    pub fn text(&self) -> String {
        self.members.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
    }
}

/// Origin of one augmented column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSource {
    /// Index into Ω; `None` for raw input columns.
    pub operator: Option<usize>,
    pub input: usize,
}

/// Column-major `n × c` matrix with column provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<S> {
    n: usize,
    columns: Vec<Vec<S>>,
    sources: Vec<ColumnSource>,
}

impl<S: Scalar> FeatureMatrix<S> {
    pub fn from_columns(n: usize, columns: Vec<Vec<S>>) -> Result<FeatureMatrix<S>> {
        if let Some(c) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::Dimension { expected: n, got: c.len() });
        }
        let sources = (0..columns.len()).map(|input| ColumnSource { operator: None, input }).collect();
        Ok(FeatureMatrix { n, columns, sources })
    }

    pub fn ones(n: usize) -> FeatureMatrix<S> {
        FeatureMatrix {
            n,
            columns: vec![vec![S::one(); n]],
            sources: vec![ColumnSource { operator: None, input: 0 }],
        }
    }

    /// One column per alphabet symbol, in ascending symbol order.
    pub fn one_hot(f: &NodeFeatures) -> FeatureMatrix<S> {
        let columns = f
            .alphabet()
            .iter()
            .map(|&x| f.labels().iter().map(|&l| if l == x { S::one() } else { S::zero() }).collect())
            .collect();
        FeatureMatrix::from_columns(f.len(), columns).expect("columns have length n")
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[S] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<S>] {
        &self.columns
    }

    pub fn sources(&self) -> &[ColumnSource] {
        &self.sources
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.columns[j][i]
    }

    pub fn row(&self, i: usize) -> Vec<S> {
        self.columns.iter().map(|c| c[i].clone()).collect()
    }

    /// Horizontal concatenation; `block` tags provenance of the appended columns.
    pub fn append(&mut self, other: FeatureMatrix<S>, operator: usize) -> Result<()> {
        if other.n != self.n && self.cols() > 0 {
            return Err(Error::Dimension { expected: self.n, got: other.n });
        }
        self.n = other.n;
        for (col, src) in other.columns.into_iter().zip(other.sources) {
            self.columns.push(col);
            self.sources.push(ColumnSource { operator: Some(operator), input: src.input });
        }
        Ok(())
    }

    pub fn empty(n: usize) -> FeatureMatrix<S> {
        FeatureMatrix { n, columns: Vec::new(), sources: Vec::new() }
    }

    pub fn to_f64(&self) -> FeatureMatrix<f64> {
        FeatureMatrix {
            n: self.n,
            columns: self.columns.iter().map(|c| c.iter().map(Scalar::to_f64).collect()).collect(),
            sources: self.sources.clone(),
        }
    }

    /// Replaces the provenance tags; the count must match the column count.
    pub fn set_sources(&mut self, sources: Vec<ColumnSource>) {
        assert_eq!(sources.len(), self.columns.len());
        self.sources = sources;
    }

    /// Sub-matrix of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix<S> {
        let columns = self.columns.iter().map(|c| rows.iter().map(|&i| c[i].clone()).collect()).collect();
        FeatureMatrix { n: rows.len(), columns, sources: self.sources.clone() }
    }

    /// Sub-matrix of the given columns.
    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix<S> {
        FeatureMatrix {
            n: self.n,
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
            sources: cols.iter().map(|&j| self.sources[j]).collect(),
        }
    }

    /// Rows permuted so that row `i` moves to `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> FeatureMatrix<S> {
        let columns = self
            .columns
            .iter()
            .map(|c| {
                let mut out = vec![S::zero(); self.n];
                for (i, v) in c.iter().enumerate() {
                    out[perm[i]] = v.clone();
                }
                out
            })
            .collect();
        FeatureMatrix { n: self.n, columns, sources: self.sources.clone() }
    }
}

fn adjacency_mul<S: Scalar>(g: &Graph, v: &[S]) -> Vec<S> {
    (0..g.n())
        .map(|i| g.neighbors(i).iter().fold(S::zero(), |acc, &j| acc + v[j].clone()))
        .collect()
}

fn hadamard<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() * y.clone()).collect()
}

fn tower_error(spec: &OperatorSpec, tower: Tower) -> Error {
    Error::Tower { op: spec.to_string(), tower: tower.to_string() }
}

// d^{-exponent} per node; isolated nodes map to 0.
fn degree_power<S: Scalar>(g: &Graph, extra: Rational64, exponent: Rational64, spec: &OperatorSpec) -> Result<Vec<S>> {
    (0..g.n())
        .map(|i| {
            let base = Rational64::from_integer(g.degree(i) as i64) + extra;
            if base.is_zero() {
                return Ok(S::zero());
            }
            S::rational_pow(base, -exponent).ok_or_else(|| tower_error(spec, S::TOWER))
        })
        .collect()
}

/// Nodes reachable from `i` by walks of length exactly `k`.
fn walk_reach(g: &Graph, i: usize, k: u32, mark: &mut [u32], stamp: &mut u32) -> Vec<usize> {
    let mut frontier = vec![i];
    for _ in 0..k {
        *stamp += 1;
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in g.neighbors(u) {
                if mark[w] != *stamp {
                    mark[w] = *stamp;
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    frontier
}

/// Nodes at shortest-path distance exactly `k` from `i`.
fn distance_shell(g: &Graph, i: usize, k: u32, dist: &mut [u32], touched: &mut Vec<usize>) -> Vec<usize> {
    let mut shell = Vec::new();
    let mut queue = VecDeque::from([i]);
    dist[i] = 0;
    touched.push(i);
    while let Some(u) = queue.pop_front() {
        if dist[u] == k {
            shell.push(u);
            continue;
        }
        for &w in g.neighbors(u) {
            if dist[w] == u32::MAX {
                dist[w] = dist[u] + 1;
                touched.push(w);
                queue.push_back(w);
            }
        }
    }
    for &u in touched.iter() {
        dist[u] = u32::MAX;
    }
    touched.clear();
    shell
}

/// Sparse 0/1 pattern as per-row column lists.
fn apply_pattern<S: Scalar>(rows: &[Vec<usize>], v: &[S]) -> Vec<S> {
    rows.iter().map(|r| r.iter().fold(S::zero(), |acc, &j| acc + v[j].clone())).collect()
}

fn operator_pattern(spec: &OperatorSpec, g: &Graph) -> Vec<Vec<usize>> {
    let n = g.n();
    match spec {
        OperatorSpec::WalkBinarized(k) => {
            let mut mark = vec![0u32; n];
            let mut stamp = 0u32;
            (0..n).map(|i| walk_reach(g, i, *k, &mut mark, &mut stamp)).collect()
        }
        OperatorSpec::DistanceExact(k) => {
            let mut dist = vec![u32::MAX; n];
            let mut touched = Vec::new();
            (0..n).map(|i| distance_shell(g, i, *k, &mut dist, &mut touched)).collect()
        }
        _ => unreachable!("only pattern operators"),
    }
}

/// Computes `ω(A)·x` column by column.
pub fn apply<S: Scalar>(spec: &OperatorSpec, g: &Graph, x: &FeatureMatrix<S>) -> Result<FeatureMatrix<S>> {
    if x.rows() != g.n() {
        return Err(Error::Dimension { expected: g.n(), got: x.rows() });
    }
    spec.validate()?;
    if spec.min_tower() > S::TOWER {
        return Err(tower_error(spec, S::TOWER));
    }
    let n = g.n();
    let columns: Vec<Vec<S>> = match spec {
        OperatorSpec::Identity => x.columns.clone(),
        OperatorSpec::Degree => {
            let d: Vec<S> = (0..n).map(|i| S::from_i64(g.degree(i) as i64)).collect();
            x.columns.iter().map(|c| hadamard(&d, c)).collect()
        }
        OperatorSpec::AdjacencyPower(k) => x
            .columns
            .iter()
            .map(|c| (0..*k).fold(c.clone(), |v, _| adjacency_mul(g, &v)))
            .collect(),
        OperatorSpec::NormalizedAdjacencyPower { alpha, beta, k } => {
            let zero = Rational64::zero();
            let left: Vec<S> = degree_power(g, zero, *alpha, spec)?;
            let right: Vec<S> = degree_power(g, zero, *beta, spec)?;
            x.columns
                .iter()
                .map(|c| (0..*k).fold(c.clone(), |v, _| hadamard(&left, &adjacency_mul(g, &hadamard(&right, &v)))))
                .collect()
        }
        OperatorSpec::SelfLoopNormalizedPower { eps, k } => {
            let scale: Vec<S> = degree_power(g, *eps, Rational64::new(1, 2), spec)?;
            let eps_s = if eps.is_zero() {
                S::zero()
            } else {
                S::rational_pow(*eps, Rational64::one()).ok_or_else(|| tower_error(spec, S::TOWER))?
            };
            x.columns
                .iter()
                .map(|c| {
                    (0..*k).fold(c.clone(), |v, _| {
                        let s = hadamard(&scale, &v);
                        let av = adjacency_mul(g, &s);
                        let mixed: Vec<S> = av.into_iter().zip(&s).map(|(a, si)| a + eps_s.clone() * si.clone()).collect();
                        hadamard(&scale, &mixed)
                    })
                })
                .collect()
        }
        OperatorSpec::WalkBinarized(_) | OperatorSpec::DistanceExact(_) => {
            let rows = operator_pattern(spec, g);
            x.columns.iter().map(|c| apply_pattern(&rows, c)).collect()
        }
        OperatorSpec::NeighborDegreeSum(alpha) => {
            let right: Vec<S> = degree_power(g, Rational64::zero(), *alpha, spec)?;
            x.columns.iter().map(|c| adjacency_mul(g, &hadamard(&right, c))).collect()
        }
        OperatorSpec::BetheHessianShifted { kappa, r, k } => {
            let m = bethe_hessian(g, r.resolve(g)).shifted_negated(*kappa);
            x.columns
                .iter()
                .map(|c| {
                    let mut v: Vec<f64> = c.iter().map(Scalar::to_f64).collect();
                    for _ in 0..*k {
                        v = m.matvec(&v);
                    }
                    v.into_iter()
                        .map(|f| S::from_f64(f).ok_or_else(|| tower_error(spec, S::TOWER)))
                        .collect::<Result<Vec<S>>>()
                })
                .collect::<Result<_>>()?
        }
    };
    let sources = x.sources.clone();
    Ok(FeatureMatrix { n, columns, sources })
}

/// Sorted neighbor-degree multiset `{d_j : j ∈ N(i)}`; the exact information
/// carried by `(A D^{-α} 1)_i` once α exceeds the injectivity threshold.
pub fn neighbor_degree_multiset(g: &Graph, i: usize) -> Vec<usize> {
    let mut ds: Vec<usize> = g.neighbors(i).iter().map(|&j| g.degree(j)).collect();
    ds.sort_unstable();
    ds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Radical;
    use num_bigint::BigInt;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn apply_ones<S: Scalar>(spec: &str, g: &Graph) -> Vec<S> {
        let spec: OperatorSpec = spec.parse().unwrap();
        apply(&spec, g, &FeatureMatrix::<S>::ones(g.n())).unwrap().column(0).to_vec()
    }

    fn two_triangles() -> Graph {
        Graph::complete(3).disjoint_union(&Graph::complete(3))
    }

    #[test]
    fn adjacency_square_on_path() {
        assert_eq!(apply_ones::<BigInt>("A^2", &Graph::path(3)), ints(&[2, 2, 2]));
        assert_eq!(apply_ones::<BigInt>("D", &Graph::path(3)), ints(&[1, 2, 1]));
        assert_eq!(apply_ones::<BigInt>("A^0", &Graph::path(3)), ints(&[1, 1, 1]));
    }

    #[test]
    fn normalized_on_regular_graphs_is_exactly_one() {
        for g in [Graph::cycle(8), Graph::hypercube(3), Graph::complete(5)] {
            for k in 0..5 {
                let v = apply_ones::<Radical>(&format!("N(0.5,0.5)^{k}"), &g);
                assert!(v.iter().all(|x| *x == Radical::one()), "k={k}");
            }
        }
    }

    #[test]
    fn distance_vs_binarized_on_hexagon_and_triangles() {
        let hex = Graph::cycle(6);
        let tri = two_triangles();
        assert_eq!(apply_ones::<BigInt>("dist(2)", &hex), ints(&[2; 6]));
        assert_eq!(apply_ones::<BigInt>("dist(2)", &tri), ints(&[0; 6]));
        assert_eq!(apply_ones::<BigInt>("minpow(2)", &hex), ints(&[3; 6]));
        assert_eq!(apply_ones::<BigInt>("minpow(2)", &tri), ints(&[3; 6]));
    }

    #[test]
    fn tower_violation() {
        let spec: OperatorSpec = "N(0.5,0.5)^2".parse().unwrap();
        let x = FeatureMatrix::<BigInt>::ones(3);
        assert!(matches!(apply(&spec, &Graph::path(3), &x), Err(Error::Tower { .. })));
        let spec: OperatorSpec = "N(0.3,0.7)^1".parse().unwrap();
        assert_eq!(spec.min_tower(), Tower::Float);
        assert!(OperatorFamily::new(vec![spec], Tower::ExactRational).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let x = FeatureMatrix::<BigInt>::ones(4);
        assert!(matches!(
            apply(&OperatorSpec::AdjacencyPower(1), &Graph::path(3), &x),
            Err(Error::Dimension { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn self_loop_normalized_matches_float() {
        let g = Graph::path(4);
        let exact = apply_ones::<Radical>("SL(1)^3", &g);
        let float = apply_ones::<f64>("SL(1)^3", &g);
        for (e, f) in exact.iter().zip(&float) {
            assert!((e.to_f64() - f).abs() < 1e-12);
        }
    }

    #[test]
    fn neighbor_degree_sum() {
        let g = Graph::star(3);
        let v = apply_ones::<f64>("nds(1)", &g);
        assert!((v[0] - 3.0).abs() < 1e-12);
        assert!((v[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(neighbor_degree_multiset(&g, 0), vec![1, 1, 1]);
        assert_eq!(neighbor_degree_multiset(&g, 2), vec![3]);
    }

    #[test]
    fn text_round_trip() {
        for s in ["I", "D", "A^3", "N(0.5,0.5)^2", "SL(1)^2", "minpow(2)", "dist(2)", "BH(8,auto)^1", "nds(1/3)", "BH(8,1.5)^4"] {
            let spec: OperatorSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("A^x".parse::<OperatorSpec>().is_err());
        assert!("Q^2".parse::<OperatorSpec>().is_err());
        assert!("SL(-1)^2".parse::<OperatorSpec>().is_err());
        assert!("dist(2)^2".parse::<OperatorSpec>().is_err());
    }

    #[test]
    fn family_ranges() {
        let fam = OperatorFamily::parse("I,A^1..A^5", Tower::ExactInteger).unwrap();
        assert_eq!(fam.members().len(), 6);
        assert_eq!(fam.text(), "I,A^1,A^2,A^3,A^4,A^5");
        assert_eq!(fam.truncated(2).unwrap().members().len(), 3);
        let fam = OperatorFamily::parse("N(0.5,0.5)^0..N(0.5,0.5)^2", Tower::ExactRational).unwrap();
        assert_eq!(fam.members().len(), 3);
        assert!(OperatorFamily::parse("A^3..A^1", Tower::ExactInteger).is_err());
        assert!(OperatorFamily::parse("A^1..D", Tower::ExactInteger).is_err());
        assert!(OperatorFamily::parse("", Tower::ExactInteger).is_err());
    }

    #[test]
    fn bethe_operator_on_hexagon() {
        // κI − H(√2) = 5I + √2 A on C6, so applied to 1 it gives 5 + 2√2.
        let v = apply_ones::<f64>("BH(8,1.4142135623730951)^1", &Graph::cycle(6));
        for x in v {
            assert!((x - (5.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
        }
    }
}
