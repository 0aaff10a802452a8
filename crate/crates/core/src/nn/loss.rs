use super::Matrix;
use crate::error::{shape, Error, Result};

/// Tolerance on the row sum of a soft-label target.
pub const TARGET_SUM_TOL: f64 = 1e-9;

/// Numerically stable softmax of one row.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Numerically stable log-softmax of one row.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&z| z - lse).collect()
}

/// Hard-label cross-entropy `-log softmax(logits)_class`.
pub fn cross_entropy(logits: &[f64], class: usize) -> f64 {
    -log_softmax(logits)[class]
}

/// Per-row soft-label cross-entropy and its gradient with respect to the logits.
///
/// `loss_i = -Σ_c t_ic · log softmax(z_i)_c`, `grad_i = softmax(z_i) - t_i`.
/// Each target row must be non-negative and sum to one.
pub fn softmax_cross_entropy(logits: &Matrix, targets: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if logits.shape() != targets.shape() {
        return Err(shape(
            "softmax_cross_entropy",
            format!(
                "logits {:?} vs targets {:?}",
                logits.shape(),
                targets.shape()
            ),
        ));
    }
    let mut losses = Vec::with_capacity(logits.rows());
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    for r in 0..logits.rows() {
        let t = targets.row(r);
        let sum: f64 = t.iter().sum();
        if (sum - 1.0).abs() > TARGET_SUM_TOL || t.iter().any(|&v| v < 0.0) {
            return Err(Error::Contract(format!(
                "target row {r} is not a probability vector (sum {sum})"
            )));
        }
        let z = logits.row(r);
        let logp = log_softmax(z);
        losses.push(-t.iter().zip(&logp).map(|(ti, lp)| ti * lp).sum::<f64>());
        for ((g, lp), ti) in grad.row_mut(r).iter_mut().zip(&logp).zip(t) {
            *g = lp.exp() - ti;
        }
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("softmax_cross_entropy"));
    }
    Ok((losses, grad))
}

/// One-hot target matrix for hard labels.
pub fn one_hot(labels: &[usize], classes: usize) -> Matrix {
    let mut m = Matrix::zeros(labels.len(), classes);
    for (r, &y) in labels.iter().enumerate() {
        m.set(r, y, 1.0);
    }
    m
}
