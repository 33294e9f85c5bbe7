//! Two-community stochastic block model, Bethe-Hessian spectral clustering
//! and GA-MLP community detection.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamlp::{augment, augment_normalized, fit_logistic, LogisticConfig};
use crate::graph::{Graph, NodeFeatures};
use crate::operators::{bethe_hessian, leading_eigenvectors, OperatorFamily, OperatorSpec, PowerIterationOptions};
use crate::scalar::Tower;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub n: usize,
    /// In-group rate; `p_in = a/n`.
    pub a: f64,
    /// Out-group rate; `p_out = b/n`.
    pub b: f64,
    pub seed: u64,
}

impl SbmParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n > 0 && self.b >= 0.0 && self.b <= self.a && self.a <= self.n as f64 && self.a.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("SBM needs n > 0 and 0 ≤ b ≤ a ≤ n, got n={}, a={}, b={}", self.n, self.a, self.b)))
        }
    }

    pub fn mean_degree(&self) -> f64 {
        (self.a + self.b) / 2.0
    }
}

/// Named `(a, b)` settings spanning the detectability threshold SNR = 1.
pub const PRESETS: [(&str, f64, f64); 5] = [
    ("snr-0.08", 3.5, 2.5),
    ("snr-0.52", 4.25, 1.75),
    ("snr-1.00", 4.73, 1.27),
    ("snr-1.45", 5.09, 0.91),
    ("snr-2.08", 5.5, 0.5),
];

pub fn preset(name: &str) -> Result<(f64, f64)> {
    PRESETS
        .iter()
        .find(|p| p.0 == name)
        .map(|p| (p.1, p.2))
        .ok_or_else(|| Error::InvalidArgument(format!("unknown SBM preset `{name}`")))
}

#[derive(Debug, Clone)]
pub struct SbmInstance {
    pub graph: Graph,
    pub truth: Vec<i8>,
    pub params: SbmParams,
}

pub fn generate(p: SbmParams) -> Result<SbmInstance> {
    p.validate()?;
    let n = p.n;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let truth: Vec<i8> = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    let (p_in, p_out) = (p.a / n as f64, p.b / n as f64);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let prob = if truth[i] == truth[j] { p_in } else { p_out };
            if rng.gen::<f64>() < prob {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::from_edges(n, &edges)?;
    Ok(SbmInstance { graph, truth, params: p })
}

/// `(a − b)² / (2(a + b))`.
pub fn snr(a: f64, b: f64) -> Result<f64> {
    if a + b <= 0.0 {
        return Err(Error::InvalidArgument("SNR needs a + b > 0".into()));
    }
    Ok((a - b).powi(2) / (2.0 * (a + b)))
}

/// `2·max(acc, 1 − acc) − 1`, computed from integer counts, where `acc` is the fraction of agreeing labels.
pub fn overlap(pred: &[i8], truth: &[i8]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Dimension { expected: truth.len(), got: pred.len() });
    }
    if truth.is_empty() {
        return Err(Error::Empty("overlap of zero labels".into()));
    }
    let agree = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    let best = agree.max(truth.len() - agree);
    Ok((2 * best - truth.len()) as f64 / truth.len() as f64)
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub labels: Vec<i8>,
    pub overlap: f64,
    pub eigenvalues: Vec<f64>,
    pub r: f64,
}

/// Signs of the mean-centered second leading eigenvector of `κI − H(r)`;
/// `r` defaults to the square root of the empirical mean degree.
pub fn bethe_hessian_cluster(inst: &SbmInstance, kappa: f64, r: Option<f64>) -> Result<SpectralResult> {
    let g = &inst.graph;
    if g.n() < 2 {
        return Err(Error::InvalidArgument("spectral clustering needs at least two nodes".into()));
    }
    let r = r.unwrap_or_else(|| g.mean_degree().sqrt());
    let m = bethe_hessian(g, r).shifted_negated(kappa);
    let opts = PowerIterationOptions { seed: inst.params.seed, ..Default::default() };
    let pairs = leading_eigenvectors(&m, 2, opts)?;
    // centering keeps the split meaningful when the second vector is
    // supported on one component only (disjoint blocks)
    let v = &pairs.vectors[1];
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let labels: Vec<i8> = v.iter().map(|&x| if x >= mean { 1 } else { -1 }).collect();
    let overlap = overlap(&labels, &inst.truth)?;
    Ok(SpectralResult { labels, overlap, eigenvalues: pairs.values, r })
}

/// Held-out overlap of a logistic readout on `Ω`-augmented all-ones
/// features, trained on a random `train_frac` share of the nodes. With
/// `normalize`, features are standardized after every propagation step.
pub fn gamlp_community(
    inst: &SbmInstance,
    omega: &OperatorFamily,
    cfg: LogisticConfig,
    train_frac: f64,
    normalize: bool,
) -> Result<f64> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidArgument(format!("train fraction must lie in (0, 1), got {train_frac}")));
    }
    if omega.tower() != Tower::Float {
        return Err(Error::InvalidArgument("community detection uses the float tower".into()));
    }
    let g = &inst.graph;
    let n = g.n();
    let ones = NodeFeatures::uniform(n);
    let x = if normalize { augment_normalized(g, &ones, omega)? } else { augment::<f64>(g, &ones, omega)? };
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(inst.params.seed ^ 0x5b5b_5b5b));
    let cut = ((n as f64 * train_frac).round() as usize).clamp(1, n - 1);
    let (train, test) = order.split_at(cut);
    let y: Vec<f64> = train.iter().map(|&i| f64::from(inst.truth[i])).collect();
    let fit = fit_logistic(&x.select_rows(train), &y, cfg)?;
    let pred: Vec<i8> = fit.model.predict(&x.select_rows(test)).iter().map(|&v| v as i8).collect();
    let truth: Vec<i8> = test.iter().map(|&i| inst.truth[i]).collect();
    overlap(&pred, &truth)
}

/// `{I, base^1, ..., base^k}` in the float tower.
pub fn power_family(base: &str, k: u32) -> Result<OperatorFamily> {
    let spec: OperatorSpec = base.parse()?;
    OperatorFamily::powers(&spec.with_power(1), k, Tower::Float)
}

/// Method evaluated by [`bench`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum BenchMethod {
    BetheHessian { kappa: f64 },
    Gamlp { omega: String, normalize: bool, train_frac: f64, logistic: LogisticConfig },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchParams {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub params: BenchParams,
    #[serde(flatten)]
    pub method: BenchMethod,
    pub snr: f64,
    pub per_seed: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Runs `method` on one instance per seed, in parallel; results are in seed
/// order regardless of scheduling.
pub fn bench(params: BenchParams, method: BenchMethod) -> Result<BenchReport> {
    if params.seeds.is_empty() {
        return Err(Error::Empty("no seeds".into()));
    }
    let snr = snr(params.a, params.b)?;
    let omega = match &method {
        BenchMethod::Gamlp { omega, .. } => Some(OperatorFamily::parse(omega, Tower::Float)?),
        BenchMethod::BetheHessian { .. } => None,
    };
    let per_seed = params
        .seeds
        .par_iter()
        .map(|&seed| {
            let inst = generate(SbmParams { n: params.n, a: params.a, b: params.b, seed })?;
            match &method {
                BenchMethod::BetheHessian { kappa } => Ok(bethe_hessian_cluster(&inst, *kappa, None)?.overlap),
                BenchMethod::Gamlp { normalize, train_frac, logistic, .. } => {
                    gamlp_community(&inst, omega.as_ref().expect("parsed above"), *logistic, *train_frac, *normalize)
                }
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let k = per_seed.len() as f64;
    let mean = per_seed.iter().sum::<f64>() / k;
    let std = (per_seed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k).sqrt();
    Ok(BenchReport { params, method, snr, per_seed, mean, std })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, a: f64, b: f64, seed: u64) -> SbmParams {
        SbmParams { n, a, b, seed }
    }

    #[test]
    fn snr_values() {
        assert_eq!(snr(3.0, 3.0).unwrap(), 0.0);
        assert!((snr(5.5, 0.5).unwrap() - 25.0 / 12.0).abs() < 1e-12);
        assert!((snr(3.5, 2.5).unwrap() - 1.0 / 12.0).abs() < 1e-12);
        assert!(snr(0.0, 0.0).is_err());
        for (name, a, b) in PRESETS {
            let label: f64 = name.trim_start_matches("snr-").parse().unwrap();
            assert!((snr(a, b).unwrap() - label).abs() < 0.01, "{name}");
        }
    }

    #[test]
    fn overlap_cases() {
        let t = [1, -1, 1, -1];
        assert_eq!(overlap(&t, &t).unwrap(), 1.0);
        assert_eq!(overlap(&[-1, 1, -1, 1], &t).unwrap(), 1.0);
        assert_eq!(overlap(&[1, 1, 1, 1], &t).unwrap(), 0.0);
        assert!(overlap(&[1], &t).is_err());
    }

    #[test]
    fn generation_is_reproducible() {
        let a = generate(params(200, 5.0, 1.0, 3)).unwrap();
        let b = generate(params(200, 5.0, 1.0, 3)).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.truth, b.truth);
        assert!(generate(params(10, 1.0, 2.0, 0)).is_err());
    }

    #[test]
    fn mean_degree_within_three_sigma() {
        let inst = generate(params(1000, 5.5, 0.5, 7)).unwrap();
        // edge count is a sum of independent Bernoullis with mean ≈ n·c/2
        let expected = 1000.0 * 3.0 / 2.0;
        let m = inst.graph.edge_count() as f64;
        assert!((m - expected).abs() < 3.0 * expected.sqrt(), "{m}");
    }

    #[test]
    fn disjoint_cliques_are_recovered() {
        let inst = generate(params(40, 40.0, 0.0, 1)).unwrap();
        let r = bethe_hessian_cluster(&inst, 8.0, None).unwrap();
        assert_eq!(r.overlap, 1.0);
        assert!(r.eigenvalues[0] >= r.eigenvalues[1]);
    }

    #[test]
    fn identity_only_family_is_featureless() {
        let inst = generate(params(400, 5.5, 0.5, 2)).unwrap();
        let omega = OperatorFamily::parse("I", Tower::Float).unwrap();
        let o = gamlp_community(&inst, &omega, LogisticConfig::default(), 0.5, true).unwrap();
        assert!(o < 0.15, "{o}");
        let exact = OperatorFamily::parse("I", Tower::ExactInteger).unwrap();
        assert!(gamlp_community(&inst, &exact, LogisticConfig::default(), 0.5, true).is_err());
        assert!(gamlp_community(&inst, &omega, LogisticConfig::default(), 1.0, true).is_err());
    }

    #[test]
    fn bench_is_order_independent() {
        let p = BenchParams { n: 300, a: 5.5, b: 0.5, seeds: vec![1, 2, 3] };
        let r = bench(p.clone(), BenchMethod::BetheHessian { kappa: 8.0 }).unwrap();
        let single: Vec<f64> = p
            .seeds
            .iter()
            .map(|&s| bethe_hessian_cluster(&generate(params(300, 5.5, 0.5, s)).unwrap(), 8.0, None).unwrap().overlap)
            .collect();
        assert_eq!(r.per_seed, single);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["method"], "bethe-hessian");
        assert!(v["per_seed"].is_array());
    }
}
