//! Random graph models used by experiments and property tests.

use std::collections::HashSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Erdős–Rényi G(n, p).
pub fn gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).expect("generated edges are simple")
}

/// Random simple d-regular graph by incremental stub pairing (Steger and
/// Wormald): stubs are matched one suitable pair at a time and the process
/// restarts only when no suitable pair remains. Asymptotically uniform for
/// fixed d.
pub fn random_regular<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Graph> {
    if (n * d) % 2 != 0 || d >= n.max(1) {
        return Err(Error::InvalidArgument(format!("no simple {d}-regular graph on {n} nodes")));
    }
    'attempt: for _ in 0..1_000 {
        let mut stubs: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat(i).take(d)).collect();
        let mut seen = HashSet::with_capacity(n * d / 2);
        let mut edges = Vec::with_capacity(n * d / 2);
        while !stubs.is_empty() {
            let mut placed = false;
            for _ in 0..100 {
                let i = rng.gen_range(0..stubs.len());
                let j = rng.gen_range(0..stubs.len());
                let (a, b) = (stubs[i], stubs[j]);
                let key = (a.min(b), a.max(b));
                if i == j || a == b || seen.contains(&key) {
                    continue;
                }
                seen.insert(key);
                edges.push(key);
                let (hi, lo) = (i.max(j), i.min(j));
                stubs.swap_remove(hi);
                stubs.swap_remove(lo);
                placed = true;
                break;
            }
            if !placed && !has_suitable_pair(&stubs, &seen) {
                continue 'attempt;
            }
        }
        return Graph::from_edges(n, &edges);
    }
    Err(Error::InvalidArgument(format!("pairing failed for n={n}, d={d}")))
}

fn has_suitable_pair(stubs: &[usize], seen: &HashSet<(usize, usize)>) -> bool {
    stubs.iter().enumerate().any(|(i, &a)| {
        stubs[i + 1..].iter().any(|&b| a != b && !seen.contains(&(a.min(b), a.max(b))))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn regular_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_regular(100, 6, &mut rng).unwrap();
        assert!(g.degrees().iter().all(|&d| d == 6));
        assert!(random_regular(5, 3, &mut rng).is_err());
    }

    #[test]
    fn gnp_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(gnp(6, 0.0, &mut rng).edge_count(), 0);
        assert_eq!(gnp(6, 1.0, &mut rng).edge_count(), 15);
    }
}
