//! Utility (AUC, F1, accuracy) and group-fairness (ΔSP, ΔEO) metrics for
//! binary node classification.
//!
//! All functions take node-index masks into per-node arrays so they can be
//! evaluated directly on a split of a [`Graph`](crate::graph::Graph).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::{softmax, Matrix};

/// Test-set scores, each in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub auc: f64,
    pub f1: f64,
    pub acc: f64,
    pub delta_sp: f64,
    /// True-positive-rate gap (equal opportunity).
    pub delta_eo: f64,
    /// `max(|ΔTPR|, |ΔFPR|)`; absent when a sensitive bucket has no negatives.
    pub delta_eodds: Option<f64>,
}

fn rate_by_group(
    mask: &[usize],
    sens: &[usize],
    keep: impl Fn(usize) -> bool,
    hit: impl Fn(usize) -> bool,
) -> BTreeMap<usize, (usize, usize)> {
    let mut by: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for &v in mask.iter().filter(|&&v| keep(v)) {
        let e = by.entry(sens[v]).or_default();
        e.1 += 1;
        if hit(v) {
            e.0 += 1;
        }
    }
    by
}

fn max_gap(by: &BTreeMap<usize, (usize, usize)>, what: &str) -> Result<f64> {
    if by.len() < 2 {
        return Err(Error::UndefinedMetric(format!(
            "{what} needs two non-empty sensitive buckets, found {}",
            by.len()
        )));
    }
    let rates = by.values().map(|&(h, t)| h as f64 / t as f64);
    let (lo, hi) = rates.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
        (lo.min(r), hi.max(r))
    });
    Ok(hi - lo)
}

/// Statistical parity gap `|P(ŷ=1|s=0) − P(ŷ=1|s=1)|`.
pub fn delta_sp(preds: &[usize], sens: &[usize], mask: &[usize]) -> Result<f64> {
    let by = rate_by_group(mask, sens, |_| true, |v| preds[v] == 1);
    max_gap(&by, "ΔSP")
}

/// Equal-opportunity gap `|TPR(s=0) − TPR(s=1)|`.
pub fn delta_eo(preds: &[usize], labels: &[usize], sens: &[usize], mask: &[usize]) -> Result<f64> {
    let by = rate_by_group(mask, sens, |v| labels[v] == 1, |v| preds[v] == 1);
    max_gap(&by, "ΔEO")
}

/// Equalized-odds gap `max(|ΔTPR|, |ΔFPR|)`.
pub fn delta_eodds(
    preds: &[usize],
    labels: &[usize],
    sens: &[usize],
    mask: &[usize],
) -> Result<f64> {
    let tpr = delta_eo(preds, labels, sens, mask)?;
    let by = rate_by_group(mask, sens, |v| labels[v] == 0, |v| preds[v] == 1);
    Ok(tpr.max(max_gap(&by, "ΔFPR")?))
}

/// Area under the ROC curve as the Mann–Whitney probability that a random
/// positive outscores a random negative, ties counted as one half.
pub fn auc(scores: &[f64], labels: &[usize], mask: &[usize]) -> Result<f64> {
    let mut items: Vec<(f64, bool)> = mask.iter().map(|&v| (scores[v], labels[v] == 1)).collect();
    let n_pos = items.iter().filter(|x| x.1).count();
    let n_neg = items.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUC needs both classes present".into(),
        ));
    }
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    // sum of positive mid-ranks (1-based)
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < items.len() {
        let mut j = i;
        while j < items.len() && items[j].0 == items[i].0 {
            j += 1;
        }
        let mid = (i + 1 + j) as f64 / 2.0;
        let pos = items[i..j].iter().filter(|x| x.1).count();
        rank_sum += mid * pos as f64;
        i = j;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

/// Binary F1 on the positive class and accuracy. F1 is zero when precision
/// and recall are both zero.
pub fn f1_acc(preds: &[usize], labels: &[usize], mask: &[usize]) -> Result<(f64, f64)> {
    if mask.is_empty() {
        return Err(Error::UndefinedMetric("empty evaluation mask".into()));
    }
    let (mut tp, mut fp, mut fneg, mut correct) = (0usize, 0usize, 0usize, 0usize);
    for &v in mask {
        match (preds[v] == 1, labels[v] == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
        if preds[v] == labels[v] {
            correct += 1;
        }
    }
    let denom = 2 * tp + fp + fneg;
    let f1 = if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    };
    Ok((f1, correct as f64 / mask.len() as f64))
}

/// Predicted class per row (argmax, first index wins ties).
pub fn argmax_rows(logits: &Matrix) -> Vec<usize> {
    (0..logits.rows())
        .map(|r| {
            logits
                .row(r)
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (c, &z)| {
                    if z > best.1 {
                        (c, z)
                    } else {
                        best
                    }
                })
                .0
        })
        .collect()
}

/// Probability of class 1 per row.
pub fn positive_scores(logits: &Matrix) -> Vec<f64> {
    (0..logits.rows())
        .map(|r| softmax(logits.row(r))[1])
        .collect()
}

/// Dense label/sensitive arrays; unknown values map to `usize::MAX`.
pub(crate) fn label_arrays(graph: &Graph) -> (Vec<usize>, Vec<usize>) {
    let n = graph.num_nodes();
    (
        (0..n)
            .map(|v| graph.label(v).unwrap_or(usize::MAX))
            .collect(),
        (0..n)
            .map(|v| graph.sensitive(v).unwrap_or(usize::MAX))
            .collect(),
    )
}

/// Scores the first `graph.num_nodes()` rows of `logits` on `mask`.
pub fn evaluate(logits: &Matrix, graph: &Graph, mask: &[usize]) -> Result<Evaluation> {
    if logits.cols() != 2 {
        return Err(Error::UndefinedMetric(format!(
            "binary metrics need 2 logit columns, got {}",
            logits.cols()
        )));
    }
    if let Some(&v) = mask
        .iter()
        .find(|&&v| graph.label(v).is_none() || graph.sensitive(v).is_none())
    {
        return Err(Error::UndefinedMetric(format!(
            "evaluation node {v} lacks a label or sensitive value"
        )));
    }
    let (labels, sens) = label_arrays(graph);
    let preds = argmax_rows(logits);
    let scores = positive_scores(logits);
    let (f1, acc) = f1_acc(&preds, &labels, mask)?;
    Ok(Evaluation {
        auc: auc(&scores, &labels, mask)?,
        f1,
        acc,
        delta_sp: delta_sp(&preds, &sens, mask)?,
        delta_eo: delta_eo(&preds, &labels, &sens, mask)?,
        delta_eodds: delta_eodds(&preds, &labels, &sens, mask).ok(),
    })
}
