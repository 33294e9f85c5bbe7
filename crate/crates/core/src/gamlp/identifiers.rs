//! Graph identifiers built from degree information.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::operators::neighbor_degree_multiset;

/// Sorted multiset of the sorted sets `γ_i` of high-degree neighbor degrees.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BabaiIdentifier(pub Vec<Vec<usize>>);

/// Sorted multiset of `(d_i, sorted {d_j : j ∈ N(i)})`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DegreePairFingerprint(pub Vec<(usize, Vec<usize>)>);

/// Degree-threshold identifier: with `r = ⌊3·log₂ n⌋` clamped to `[1, n]`
/// and `d̄` the r-th largest degree, `γ_i` collects the degrees of the
/// neighbors of `i` that exceed `d̄`.
pub fn babai_identifier(g: &Graph) -> BabaiIdentifier {
    let n = g.n();
    if n == 0 {
        return BabaiIdentifier(Vec::new());
    }
    let r = ((3.0 * (n as f64).log2()).floor() as usize).clamp(1, n);
    let mut degrees = g.degrees();
    degrees.sort_unstable_by(|a, b| b.cmp(a));
    let threshold = degrees[r - 1];
    let mut gammas: Vec<Vec<usize>> = (0..n)
        .map(|i| neighbor_degree_multiset(g, i).into_iter().filter(|&d| d > threshold).collect())
        .collect();
    gammas.sort_unstable();
    BabaiIdentifier(gammas)
}

pub fn degree_pair_fingerprint(g: &Graph) -> DegreePairFingerprint {
    let mut pairs: Vec<(usize, Vec<usize>)> = (0..g.n()).map(|i| (g.degree(i), neighbor_degree_multiset(g, i))).collect();
    pairs.sort_unstable();
    DegreePairFingerprint(pairs)
}

/// Smallest α above which `m ↦ Σ_{d ∈ m} d^{-α}` is injective on degree
/// multisets of graphs with `n` nodes: `ln n / (ln n − ln(n−1))`.
pub fn alpha_threshold(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("alpha threshold needs n ≥ 2, got {n}")));
    }
    let nf = n as f64;
    Ok(nf.ln() / -(-1.0 / nf).ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_values() {
        assert!((alpha_threshold(2).unwrap() - 1.0).abs() < 1e-12);
        assert!((alpha_threshold(30).unwrap() - 100.3).abs() < 0.05);
        assert!(alpha_threshold(1).is_err());
        let mut prev = 0.0;
        for n in 2..=1000 {
            let a = alpha_threshold(n).unwrap();
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn edgeless_identifier() {
        let id = babai_identifier(&Graph::empty(5));
        assert!(id.0.iter().all(Vec::is_empty));
        assert_eq!(id.0.len(), 5);
    }

    #[test]
    fn regular_degree_pairs() {
        let fp = degree_pair_fingerprint(&Graph::hypercube(3));
        assert!(fp.0.iter().all(|p| *p == (3, vec![3, 3, 3])));
    }

    #[test]
    fn permutation_invariance() {
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (3, 4)]).unwrap();
        let h = g.permute(&[4, 2, 0, 1, 3]).unwrap();
        assert_eq!(babai_identifier(&g), babai_identifier(&h));
        assert_eq!(degree_pair_fingerprint(&g), degree_pair_fingerprint(&h));
    }

    #[test]
    fn star_threshold() {
        // n = 4: r = ⌊3·2⌋ clamped to 4, so d̄ is the smallest degree and only the hub counts
        let id = babai_identifier(&Graph::star(3));
        assert_eq!(id.0, vec![vec![], vec![3], vec![3], vec![3]]);
    }
}
