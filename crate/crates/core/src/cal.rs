//! Contribution alignment: per-sample logit-gradient contributions, group
//! totals, group weights and the weighted mixup loss. Also hosts the
//! quantity-based re-weighting and over-sampling baselines.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cnm::{AugmentedGraph, LabelPair, MixedEgoNetwork};
use crate::error::{shape, Error, Result};
use crate::graph::{Graph, GroupKey, GroupTable};
use crate::nn::{cross_entropy, softmax, Matrix};

/// Denominator floor for [`group_weights`].
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-3;
/// Weights are capped at this multiple of the mean weight.
pub const WEIGHT_CAP_FACTOR: f64 = 100.0;

/// `‖∇_z CE(z, y)‖₁ = ‖softmax(z) − e_y‖₁`, which equals `2·(1 − softmax(z)_y)`.
pub fn contribution(logits: &[f64], y: usize) -> f64 {
    softmax(logits)
        .iter()
        .enumerate()
        .map(|(c, p)| if c == y { (p - 1.0).abs() } else { p.abs() })
        .sum()
}

/// One side of a mixed pair: the source group and its contribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideContribution {
    pub group: GroupKey,
    pub r: f64,
}

/// Group contribution totals `R_{t,b}` for one epoch.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ContributionLedger {
    pub epoch: usize,
    pub totals: BTreeMap<GroupKey, f64>,
}

impl ContributionLedger {
    pub fn total(&self) -> f64 {
        self.totals.values().sum()
    }

    /// Ensures every listed group has an entry, inserting zeros.
    pub fn with_groups(mut self, keys: impl IntoIterator<Item = GroupKey>) -> Self {
        for k in keys {
            self.totals.entry(k).or_insert(0.0);
        }
        self
    }
}

/// Sums side contributions into their source groups.
pub fn accumulate(sides: impl IntoIterator<Item = SideContribution>) -> ContributionLedger {
    let mut totals = BTreeMap::new();
    for s in sides {
        *totals.entry(s.group).or_insert(0.0) += s.r;
    }
    ContributionLedger { epoch: 0, totals }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupWeights {
    pub w: BTreeMap<GroupKey, f64>,
    /// Groups whose contribution fell below the floor.
    pub floored: Vec<GroupKey>,
}

impl GroupWeights {
    /// All weights one.
    pub fn uniform(keys: impl IntoIterator<Item = GroupKey>) -> Self {
        Self {
            w: keys.into_iter().map(|k| (k, 1.0)).collect(),
            floored: Vec::new(),
        }
    }

    pub fn get(&self, key: GroupKey) -> Result<f64> {
        self.w
            .get(&key)
            .copied()
            .ok_or_else(|| Error::Contract(format!("no weight for group {key:?}")))
    }
}

/// `w_{t,b} = Σ R / max(R_{t,b}, floor)`, capped at
/// [`WEIGHT_CAP_FACTOR`] times the mean weight.
pub fn group_weights(ledger: &ContributionLedger, floor: f64) -> Result<GroupWeights> {
    let total = ledger.total();
    if ledger.totals.is_empty() || total <= 0.0 {
        return Err(Error::NoContributions);
    }
    let mut floored = Vec::new();
    let mut w: BTreeMap<GroupKey, f64> = ledger
        .totals
        .iter()
        .map(|(&k, &r)| {
            if r < floor {
                floored.push(k);
            }
            (k, total / r.max(floor))
        })
        .collect();
    let cap = WEIGHT_CAP_FACTOR * w.values().sum::<f64>() / w.len() as f64;
    for v in w.values_mut() {
        *v = v.min(cap);
    }
    Ok(GroupWeights { w, floored })
}

/// Label and source groups of one mixed node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixTarget {
    pub labels: LabelPair,
    pub groups: (GroupKey, GroupKey),
}

impl From<&MixedEgoNetwork> for MixTarget {
    fn from(e: &MixedEgoNetwork) -> Self {
        Self {
            labels: e.label_pair,
            groups: e.source_groups,
        }
    }
}

/// Both side contributions of every mixed node (`logits` row `k` belongs
/// to `targets[k]`).
pub fn pair_contributions(logits: &Matrix, targets: &[MixTarget]) -> Result<Vec<SideContribution>> {
    if logits.rows() != targets.len() {
        return Err(shape(
            "pair_contributions",
            format!("{} logit rows vs {} targets", logits.rows(), targets.len()),
        ));
    }
    Ok(targets
        .iter()
        .enumerate()
        .flat_map(|(k, t)| {
            let z = logits.row(k);
            [
                SideContribution {
                    group: t.groups.0,
                    r: contribution(z, t.labels.y_i),
                },
                SideContribution {
                    group: t.groups.1,
                    r: contribution(z, t.labels.y_j),
                },
            ]
        })
        .collect())
}

/// Weighted mixup loss
/// `mean_k [ w_i·λ·CE(z_k, y_i) + w_j·(1 − λ)·CE(z_k, y_j) ]` and its
/// gradient with respect to each row of `logits`. `None` uses unit weights,
/// which is the plain decomposed mixup loss. Weights are constants.
pub fn cal_loss(
    logits: &Matrix,
    targets: &[MixTarget],
    weights: Option<&GroupWeights>,
) -> Result<(f64, Matrix)> {
    if logits.rows() != targets.len() {
        return Err(shape(
            "cal_loss",
            format!("{} logit rows vs {} targets", logits.rows(), targets.len()),
        ));
    }
    if targets.is_empty() {
        return Ok((0.0, Matrix::zeros(0, logits.cols())));
    }
    let n = targets.len() as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    for (k, t) in targets.iter().enumerate() {
        let (wi, wj) = match weights {
            Some(w) => (w.get(t.groups.0)?, w.get(t.groups.1)?),
            None => (1.0, 1.0),
        };
        let lam = t.labels.lambda;
        let ci = wi * lam;
        let cj = wj * (1.0 - lam);
        let z = logits.row(k);
        let p = softmax(z);
        loss += ci * cross_entropy(z, t.labels.y_i) + cj * cross_entropy(z, t.labels.y_j);
        let g = grad.row_mut(k);
        for (gc, pc) in g.iter_mut().zip(&p) {
            *gc = (ci + cj) * pc / n;
        }
        g[t.labels.y_i] -= ci / n;
        g[t.labels.y_j] -= cj / n;
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("cal_loss"));
    }
    Ok((loss / n, grad))
}

/// Quantity re-weighting: `weight(v) = N_train / |D_{y_v, s_v}|` for every
/// train node, returned as `(node, weight)` in group order.
pub fn rw_weights(groups: &GroupTable) -> Vec<(usize, f64)> {
    let n = groups.num_train() as f64;
    groups
        .iter()
        .flat_map(|(_, members)| {
            let w = n / members.len() as f64;
            members.iter().map(move |&v| (v, w))
        })
        .collect()
}

/// Source node of every duplicate needed to bring each group up to the
/// size of the largest group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OversamplePlan {
    pub duplicates: Vec<usize>,
}

impl OversamplePlan {
    /// Injects each duplicate as a copy of its source: same features, label,
    /// sensitive value and full neighbor list.
    pub fn augmented_graph<'g>(&self, graph: &'g Graph) -> Result<AugmentedGraph<'g>> {
        let injected = self
            .duplicates
            .iter()
            .map(|&v| {
                let g = graph
                    .group_of(v)
                    .ok_or_else(|| Error::Schema(format!("duplicate source {v} lacks a group")))?;
                Ok(MixedEgoNetwork {
                    x_mix: graph.features().row(v).to_vec(),
                    label_pair: LabelPair {
                        y_i: g.0,
                        y_j: g.0,
                        lambda: 1.0,
                    },
                    source_groups: (g, g),
                    neighbors: graph.neighbors(v).to_vec(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        AugmentedGraph::new(graph, injected)
    }

    /// Effective per-group counts (originals plus duplicates).
    pub fn effective_counts(
        &self,
        graph: &Graph,
        groups: &GroupTable,
    ) -> BTreeMap<GroupKey, usize> {
        let mut c = groups.counts();
        for &v in &self.duplicates {
            if let Some(g) = graph.group_of(v) {
                *c.entry(g).or_insert(0) += 1;
            }
        }
        c
    }
}

/// Samples minority-group members with replacement until every non-empty
/// group reaches the largest group's size.
pub fn oversample<R: Rng + ?Sized>(groups: &GroupTable, rng: &mut R) -> OversamplePlan {
    let max = groups.iter().map(|(_, m)| m.len()).max().unwrap_or(0);
    let mut duplicates = Vec::new();
    for (_, members) in groups.iter() {
        for _ in members.len()..max {
            duplicates.push(members[rng.random_range(0..members.len())]);
        }
    }
    OversamplePlan { duplicates }
}
