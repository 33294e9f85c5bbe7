//! Linear readouts on augmented features: ridge regression and logistic
//! regression by full-batch gradient descent.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig { lr: 0.1, epochs: 500, l2: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Readout {
    Ridge { lambda: f64 },
    Logistic(LogisticConfig),
}

/// Weights plus an unregularized bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub kind: Readout,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ReadoutModel {
    /// Linear scores `x·w + b`.
    pub fn scores(&self, x: &FeatureMatrix<f64>) -> Vec<f64> {
        let mut s = vec![self.bias; x.rows()];
        for (c, w) in x.columns().iter().zip(&self.weights) {
            s.iter_mut().zip(c).for_each(|(acc, v)| *acc += w * v);
        }
        s
    }

    /// Regression output for ridge, ±1 class for logistic.
    pub fn predict(&self, x: &FeatureMatrix<f64>) -> Vec<f64> {
        let s = self.scores(x);
        match self.kind {
            Readout::Ridge { .. } => s,
            Readout::Logistic(_) => s.into_iter().map(|v| if v >= 0.0 { 1.0 } else { -1.0 }).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RidgeFit {
    pub model: ReadoutModel,
    pub train_nmse: f64,
}

#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub model: ReadoutModel,
    pub train_accuracy: f64,
    pub final_loss: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// MSE divided by the label variance; 0 when both are 0.
pub fn normalized_mse(pred: &[f64], y: &[f64]) -> f64 {
    let mse = pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64;
    let m = mean(y);
    let var = y.iter().map(|t| (t - m).powi(2)).sum::<f64>() / y.len() as f64;
    if var == 0.0 {
        if mse == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        mse / var
    }
}

/// Minimizes `‖Φw + b − y‖² + λ‖w‖²`.
///
/// Solved on centered data (which eliminates the bias exactly) as the
/// least-squares problem `[Φ_c; √λ I] w ≈ [y_c; 0]` by SVD, with columns
/// scaled to unit norm for conditioning. Columns that are constant on the
/// training rows get weight 0 when `λ > 0`.
pub fn fit_ridge(x: &FeatureMatrix<f64>, y: &[f64], lambda: f64) -> Result<RidgeFit> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::Empty("ridge regression needs at least one row".into()));
    }
    if y.len() != n {
        return Err(Error::Dimension { expected: n, got: y.len() });
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("ridge λ must be ≥ 0, got {lambda}")));
    }
    let y_mean = mean(y);
    let means: Vec<f64> = x.columns().iter().map(|c| mean(c)).collect();
    let centered: Vec<Vec<f64>> =
        x.columns().iter().zip(&means).map(|(c, m)| c.iter().map(|v| v - m).collect()).collect();
    let scales: Vec<f64> = centered.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let active: Vec<usize> = (0..x.cols()).filter(|&j| scales[j] > 0.0).collect();
    if lambda == 0.0 && active.len() < x.cols() {
        return Err(Error::Singular(format!(
            "{} column(s) are constant on the training rows; use λ > 0",
            x.cols() - active.len()
        )));
    }
    let mut weights = vec![0.0; x.cols()];
    if !active.is_empty() {
        let p = active.len();
        let rows = n + if lambda > 0.0 { p } else { 0 };
        let mut a = DMatrix::<f64>::zeros(rows, p);
        for (col, &j) in active.iter().enumerate() {
            for i in 0..n {
                a[(i, col)] = centered[j][i] / scales[j];
            }
            if lambda > 0.0 {
                a[(n + col, col)] = lambda.sqrt() / scales[j];
            }
        }
        let mut b = DVector::<f64>::zeros(rows);
        for i in 0..n {
            b[i] = y[i] - y_mean;
        }
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let tol = smax * 1e-12 * rows.max(p) as f64;
        if lambda == 0.0 && svd.singular_values.iter().any(|&s| s <= tol) {
            return Err(Error::Singular("feature columns are linearly dependent; use λ > 0".into()));
        }
        let u = svd.solve(&b, tol).map_err(|e| Error::Singular(e.to_string()))?;
        for (col, &j) in active.iter().enumerate() {
            weights[j] = u[col] / scales[j];
        }
    }
    let bias = y_mean - weights.iter().zip(&means).map(|(w, m)| w * m).sum::<f64>();
    let model = ReadoutModel { kind: Readout::Ridge { lambda }, weights, bias };
    let train_nmse = normalized_mse(&model.predict(x), y);
    Ok(RidgeFit { model, train_nmse })
}

/// Full-batch gradient descent on the mean logistic loss plus `l2/2·‖w‖²`,
/// starting from zero weights. Labels must be ±1.
pub fn fit_logistic(x: &FeatureMatrix<f64>, y: &[f64], cfg: LogisticConfig) -> Result<LogisticFit> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::Empty("logistic regression needs at least one row".into()));
    }
    if y.len() != n {
        return Err(Error::Dimension { expected: n, got: y.len() });
    }
    if let Some(bad) = y.iter().find(|&&t| t != 1.0 && t != -1.0) {
        return Err(Error::InvalidArgument(format!("logistic labels must be ±1, got {bad}")));
    }
    let mut model = ReadoutModel { kind: Readout::Logistic(cfg), weights: vec![0.0; x.cols()], bias: 0.0 };
    let mut loss = f64::NAN;
    for epoch in 0..cfg.epochs {
        let scores = model.scores(x);
        // d loss / d score_i = −y_i σ(−y_i s_i) / n
        let mut total = 0.0;
        let coef: Vec<f64> = scores
            .iter()
            .zip(y)
            .map(|(s, t)| {
                let m = t * s;
                total += if m > 0.0 { (-m).exp().ln_1p() } else { -m + m.exp().ln_1p() };
                -t / (1.0 + m.exp()) / n as f64
            })
            .collect();
        let reg: f64 = model.weights.iter().map(|w| w * w).sum();
        loss = total / n as f64 + 0.5 * cfg.l2 * reg;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        for (w, c) in model.weights.iter_mut().zip(x.columns()) {
            let g: f64 = c.iter().zip(&coef).map(|(v, k)| v * k).sum::<f64>() + cfg.l2 * *w;
            *w -= cfg.lr * g;
        }
        model.bias -= cfg.lr * coef.iter().sum::<f64>();
        if model.weights.iter().any(|w| !w.is_finite()) || !model.bias.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
    }
    let pred = model.predict(x);
    let train_accuracy = pred.iter().zip(y).filter(|(p, t)| p == t).count() as f64 / n as f64;
    Ok(LogisticFit { model, train_accuracy, final_loss: loss })
}

/// Per-column standardization to mean 0 and variance 1; constant columns
/// map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &FeatureMatrix<f64>) -> Standardizer {
        let means: Vec<f64> = x.columns().iter().map(|c| mean(c)).collect();
        let stds = x
            .columns()
            .iter()
            .zip(&means)
            .map(|(c, m)| (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / c.len() as f64).sqrt())
            .collect();
        Standardizer { means, stds }
    }

    pub fn apply(&self, x: &FeatureMatrix<f64>) -> FeatureMatrix<f64> {
        let columns = x
            .columns()
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(c, (m, s))| c.iter().map(|v| if *s > 0.0 { (v - m) / s } else { 0.0 }).collect())
            .collect();
        let mut out = FeatureMatrix::from_columns(x.rows(), columns).expect("same shape");
        out.set_sources(x.sources().to_vec());
        out
    }
}
