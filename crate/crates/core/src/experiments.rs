//! Experiment drivers shared by the command-line tool and the acceptance
//! suite: attributed-walk regression and the degree-identifier sweep.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gamlp::{augment, babai_identifier, degree_pair_fingerprint, fit_ridge, normalized_mse};
use crate::generators::gnp;
use crate::graph::{Graph, NodeFeatures, RootedGraph};
use crate::operators::{OperatorFamily, OperatorSpec};
use crate::scalar::Tower;
use crate::walks::count_attributed;
use crate::wl;

/// Label 1 ("blue") on even node indices and 0 ("red") on odd ones.
pub fn parity_features(n: usize) -> NodeFeatures {
    NodeFeatures::with_alphabet((0..n).map(|i| u32::from(i % 2 == 0)).collect(), [0, 1].into())
        .expect("labels lie in {0, 1}")
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodScore {
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operators: Option<String>,
    pub train_nmse: f64,
    pub test_nmse: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WalkTaskReport {
    pub n: usize,
    pub tuple: Vec<u32>,
    pub train: usize,
    pub test: usize,
    pub seed: u64,
    pub lambda: f64,
    pub label_variance: f64,
    pub methods: Vec<MethodScore>,
}

impl WalkTaskReport {
    pub fn method(&self, name: &str) -> Option<&MethodScore> {
        self.methods.iter().find(|m| m.method == name)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WalkTaskConfig {
    pub train: usize,
    pub seed: u64,
    pub lambda: f64,
}

fn big_to_f64(v: &BigInt) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}

fn pick(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

/// Regresses `|W_k(G^{[i]}; tuple)|` with the WL lookup table and with
/// ridge readouts on `{I, A, ..., A^k}` and `{I, A, ..., A^{2k}}`.
pub fn fit_walk_task(g: &Graph, f: &NodeFeatures, tuple: &[u32], cfg: WalkTaskConfig) -> Result<WalkTaskReport> {
    let n = g.n();
    if cfg.train == 0 || cfg.train >= n {
        return Err(Error::InvalidArgument(format!("training size must lie in 1..{n}, got {}", cfg.train)));
    }
    let k = tuple.len();
    let labels: Vec<f64> = (0..n)
        .map(|i| Ok(big_to_f64(&count_attributed(RootedGraph::new(g, i)?, f, tuple)?)))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let (train, test) = order.split_at(cfg.train);
    let (y_train, y_test) = (pick(&labels, train), pick(&labels, test));
    let mean = labels.iter().sum::<f64>() / n as f64;
    let label_variance = labels.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n as f64;

    let colors = wl::refine(g, f, k);
    let color = colors.at(k);
    let table: Vec<(u32, f64)> = train.iter().map(|&i| (color[i], labels[i])).collect();
    let predictor = wl::tabular_predictor(&table, None)?;
    let predict = |idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| predictor.predict(color[i])).collect() };
    let mut methods = vec![MethodScore {
        method: "wl-tabular".into(),
        operators: None,
        train_nmse: normalized_mse(&predict(train), &y_train),
        test_nmse: normalized_mse(&predict(test), &y_test),
    }];

    for (name, powers) in [("ridge", k), ("ridge+", 2 * k)] {
        let omega = OperatorFamily::powers(&OperatorSpec::AdjacencyPower(1), powers as u32, Tower::ExactInteger)?;
        let x = augment::<BigInt>(g, f, &omega)?.to_f64();
        let fit = fit_ridge(&x.select_rows(train), &y_train, cfg.lambda)?;
        let test_pred = fit.model.predict(&x.select_rows(test));
        methods.push(MethodScore {
            method: name.into(),
            operators: Some(omega.text()),
            train_nmse: fit.train_nmse,
            test_nmse: normalized_mse(&test_pred, &y_test),
        });
    }
    Ok(WalkTaskReport {
        n,
        tuple: tuple.to_vec(),
        train: train.len(),
        test: test.len(),
        seed: cfg.seed,
        lambda: cfg.lambda,
        label_variance,
        methods,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BabaiReport {
    pub n: usize,
    pub graphs: usize,
    pub p: f64,
    pub seed: u64,
    pub pairs: u64,
    pub separated_by_identifier: u64,
    pub separated_by_fingerprint: u64,
    /// Pairs the identifier separates but the degree-pair fingerprint merges.
    pub violations: u64,
}

fn pairs_within<K: std::hash::Hash + Eq>(keys: impl Iterator<Item = K>) -> u64 {
    let mut counts: HashMap<K, u64> = HashMap::new();
    for k in keys {
        *counts.entry(k).or_default() += 1;
    }
    counts.values().map(|c| c * (c - 1) / 2).sum()
}

/// Compares the degree-threshold identifier with the degree-pair
/// fingerprint over all pairs of `graphs` samples of G(n, p).
pub fn babai_sweep(n: usize, graphs: usize, p: f64, seed: u64) -> Result<BabaiReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("edge probability must lie in [0, 1], got {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample: Vec<Graph> = (0..graphs).map(|_| gnp(n, p, &mut rng)).collect();
    let ids: Vec<_> = sample.iter().map(babai_identifier).collect();
    let fps: Vec<_> = sample.iter().map(degree_pair_fingerprint).collect();
    let pairs = (graphs as u64) * (graphs as u64).saturating_sub(1) / 2;
    let same_id = pairs_within(ids.iter());
    let same_fp = pairs_within(fps.iter());
    let same_both = pairs_within(ids.iter().zip(&fps));
    Ok(BabaiReport {
        n,
        graphs,
        p,
        seed,
        pairs,
        separated_by_identifier: pairs - same_id,
        separated_by_fingerprint: pairs - same_fp,
        violations: same_fp - same_both,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::random_regular;

    #[test]
    fn parity_labels() {
        assert_eq!(parity_features(5).labels(), &[1, 0, 1, 0, 1]);
    }

    #[test]
    fn length_one_task_is_linear() {
        let g = random_regular(200, 4, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let f = parity_features(200);
        let r = fit_walk_task(&g, &f, &[1], WalkTaskConfig { train: 100, seed: 1, lambda: 1e-9 }).unwrap();
        for m in &r.methods {
            assert!(m.train_nmse < 1e-6, "{m:?}");
        }
    }

    #[test]
    fn constant_labels_give_zero_error() {
        // on a cycle with uniform features every node has 2^k walks
        let g = Graph::cycle(12);
        let f = NodeFeatures::uniform(12);
        let r = fit_walk_task(&g, &f, &[0, 0, 0], WalkTaskConfig { train: 6, seed: 0, lambda: 1e-6 }).unwrap();
        assert_eq!(r.label_variance, 0.0);
        for m in &r.methods {
            assert_eq!(m.train_nmse, 0.0, "{m:?}");
        }
    }

    #[test]
    fn sweep_counts_are_consistent() {
        let r = babai_sweep(12, 40, 0.5, 5).unwrap();
        assert_eq!(r.pairs, 780);
        assert!(r.violations <= r.separated_by_identifier);
        assert!(r.separated_by_fingerprint <= r.pairs);
        assert!(babai_sweep(5, 3, 1.5, 0).is_err());
    }

    #[test]
    fn pair_counting() {
        assert_eq!(pairs_within([1, 1, 2, 1, 2].iter()), 4);
    }
}
