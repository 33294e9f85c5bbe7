//! Equivalence-class reports shared by the WL and GA-MLP counters.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Node,
    Graph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Gnn,
    Gamlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCount {
    pub k: u32,
    pub classes: usize,
}

/// One bucket of a class-size histogram: `count` classes have `size` members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeBucket {
    pub size: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub scope: Scope,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub operators: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mode: Option<String>,
    pub per_k: Vec<ClassCount>,
    /// Class-size histogram at the largest K.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sizes: Option<Vec<SizeBucket>>,
}

impl EquivalenceReport {
    pub fn new(scope: Scope, method: Method) -> EquivalenceReport {
        EquivalenceReport { scope, method, operators: None, mode: None, per_k: Vec::new(), sizes: None }
    }

    /// Class count at `k`, if reported.
    pub fn classes_at(&self, k: u32) -> Option<usize> {
        self.per_k.iter().find(|c| c.k == k).map(|c| c.classes)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Serializes a big integer as a JSON number when it fits in `u64` or
/// `i64`, otherwise as a decimal string.
pub fn big_json<S: serde::Serializer>(v: &num_bigint::BigInt, s: S) -> Result<S::Ok, S::Error> {
    use num_traits::ToPrimitive;
    if let Some(u) = v.to_u64() {
        s.serialize_u64(u)
    } else if let Some(i) = v.to_i64() {
        s.serialize_i64(i)
    } else {
        s.serialize_str(&v.to_string())
    }
}

/// Number of distinct keys.
pub fn distinct<T: Eq + Hash>(keys: &[T]) -> usize {
    keys.iter().collect::<std::collections::HashSet<_>>().len()
}

/// Histogram of class sizes for the partition induced by `keys`.
pub fn size_histogram<T: Eq + Hash>(keys: &[T]) -> Vec<SizeBucket> {
    let mut members: HashMap<&T, usize> = HashMap::new();
    for k in keys {
        *members.entry(k).or_default() += 1;
    }
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for size in members.into_values() {
        *hist.entry(size).or_default() += 1;
    }
    hist.into_iter().map(|(size, count)| SizeBucket { size, count }).collect()
}

/// True when every class of `fine` lies inside one class of `coarse`.
pub fn refines<A: Eq + Hash, B: Eq>(fine: &[A], coarse: &[B]) -> bool {
    assert_eq!(fine.len(), coarse.len());
    let mut rep: HashMap<&A, usize> = HashMap::new();
    for (i, a) in fine.iter().enumerate() {
        let r = *rep.entry(a).or_insert(i);
        if coarse[r] != coarse[i] {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let mut r = EquivalenceReport::new(Scope::Node, Method::Gnn);
        r.per_k.push(ClassCount { k: 1, classes: 3 });
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["scope"], "node");
        assert_eq!(v["method"], "GNN");
        assert_eq!(v["per_k"][0]["classes"], 3);
        assert!(v.get("sizes").is_none());
        let back: EquivalenceReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn histogram_and_refinement() {
        let keys = ["a", "b", "a", "c", "c", "c"];
        assert_eq!(distinct(&keys), 3);
        assert_eq!(
            size_histogram(&keys),
            vec![SizeBucket { size: 1, count: 1 }, SizeBucket { size: 2, count: 1 }, SizeBucket { size: 3, count: 1 }]
        );
        assert!(refines(&[0, 1, 2, 3], &[0, 0, 1, 1]));
        assert!(!refines(&[0, 0, 1, 1], &[0, 1, 1, 1]));
    }
}
