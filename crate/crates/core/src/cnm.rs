//! Counterfactual node mixup.
//!
//! Every train node is paired with a counterexample that differs in exactly
//! one of (label, sensitive value). The pair's features, labels and neighbor
//! distributions are interpolated with a shared `λ ~ Beta(α, α)` and the
//! resulting ego-network is injected into the graph as a new node whose
//! edges point into the base graph only.

use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::graph::{
    Adjacency, DegreeDistribution, Graph, GroupKey, GroupTable, NeighborDistribution,
};
use crate::nn::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixKind {
    /// Same label, different sensitive value.
    InterDomain,
    /// Different label, same sensitive value.
    InterClass,
}

impl MixKind {
    pub fn other(self) -> Self {
        match self {
            MixKind::InterDomain => MixKind::InterClass,
            MixKind::InterClass => MixKind::InterDomain,
        }
    }

    /// Whether `candidate` qualifies as a counterexample for `source`.
    pub fn admits(self, source: GroupKey, candidate: GroupKey) -> bool {
        match self {
            MixKind::InterDomain => candidate.0 == source.0 && candidate.1 != source.1,
            MixKind::InterClass => candidate.0 != source.0 && candidate.1 == source.1,
        }
    }
}

/// How the target degree of an injected node is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DegreeMode {
    /// Uniformly from the base graph's degree multiset.
    #[default]
    Global,
    /// `round(λ·deg(i) + (1 − λ)·deg(j))`.
    Interpolated,
}

impl std::str::FromStr for DegreeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(Self::Global),
            "interpolated" => Ok(Self::Interpolated),
            other => Err(Error::Config(format!("unknown degree mode `{other}`"))),
        }
    }
}

/// A counterfactual pair. `i == j` with `λ = 1` marks the identity fallback
/// used when no counterexample of either kind exists.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixPair {
    pub i: usize,
    pub j: usize,
    pub kind: MixKind,
    pub lambda: f64,
}

/// Mixed label `λ·e_{y_i} + (1 − λ)·e_{y_j}`, kept as its two components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelPair {
    pub y_i: usize,
    pub y_j: usize,
    pub lambda: f64,
}

impl LabelPair {
    pub fn soft(&self, classes: usize) -> Vec<f64> {
        let mut t = vec![0.0; classes];
        t[self.y_i] += self.lambda;
        t[self.y_j] += 1.0 - self.lambda;
        t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixedEgoNetwork {
    pub x_mix: Vec<f64>,
    pub label_pair: LabelPair,
    pub source_groups: (GroupKey, GroupKey),
    /// Base-graph nodes this node aggregates from.
    pub neighbors: Vec<usize>,
}

/// Base graph plus injected mixed nodes with ids `N..N+m`.
#[derive(Clone, Debug)]
pub struct AugmentedGraph<'g> {
    base: &'g Graph,
    injected: Vec<MixedEgoNetwork>,
    adjacency: Adjacency,
    features: Matrix,
}

impl<'g> AugmentedGraph<'g> {
    pub fn new(base: &'g Graph, injected: Vec<MixedEgoNetwork>) -> Result<Self> {
        let rows: Vec<Vec<usize>> = injected.iter().map(|e| e.neighbors.clone()).collect();
        let adjacency = base.adjacency().with_appended_rows(&rows)?;
        let mut extra = Vec::with_capacity(injected.len() * base.num_features());
        for e in &injected {
            if e.x_mix.len() != base.num_features() {
                return Err(shape(
                    "AugmentedGraph::new",
                    format!(
                        "{} mixed features vs {}",
                        e.x_mix.len(),
                        base.num_features()
                    ),
                ));
            }
            extra.extend_from_slice(&e.x_mix);
        }
        let features =
            base.features()
                .vstack(&Matrix::new(injected.len(), base.num_features(), extra)?)?;
        Ok(Self {
            base,
            injected,
            adjacency,
            features,
        })
    }

    pub fn base(&self) -> &'g Graph {
        self.base
    }

    pub fn injected(&self) -> &[MixedEgoNetwork] {
        &self.injected
    }

    pub fn num_base(&self) -> usize {
        self.base.num_nodes()
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.num_rows()
    }

    /// Node ids of the injected nodes.
    pub fn injected_ids(&self) -> std::ops::Range<usize> {
        self.num_base()..self.num_nodes()
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }
}

/// Draws `inter_class` with probability `η`: `μ ~ U(0,1)`, `μ ≥ η` selects
/// inter-domain.
pub fn choose_kind<R: Rng + ?Sized>(eta: f64, rng: &mut R) -> MixKind {
    let mu: f64 = rng.random();
    if mu >= eta {
        MixKind::InterDomain
    } else {
        MixKind::InterClass
    }
}

/// Uniform draw from the union of groups that qualify under `kind`.
pub fn sample_counterexample<R: Rng + ?Sized>(
    groups: &GroupTable,
    source: GroupKey,
    kind: MixKind,
    rng: &mut R,
) -> Result<usize> {
    let candidates: Vec<&[usize]> = groups
        .iter()
        .filter(|&(k, _)| kind.admits(source, k))
        .map(|(_, m)| m)
        .collect();
    let total: usize = candidates.iter().map(|m| m.len()).sum();
    if total == 0 {
        return Err(Error::NoCounterexample {
            label: source.0,
            sensitive: source.1,
        });
    }
    let mut k = rng.random_range(0..total);
    for m in candidates {
        if k < m.len() {
            return Ok(m[k]);
        }
        k -= m.len();
    }
    unreachable!("index within total candidate count")
}

/// `x_mix = λ·x_i + (1 − λ)·x_j`, label kept as `(y_i, y_j, λ)`.
pub fn mix_features_labels(
    x_i: &[f64],
    x_j: &[f64],
    y_i: usize,
    y_j: usize,
    lambda: f64,
) -> Result<(Vec<f64>, LabelPair)> {
    if x_i.len() != x_j.len() {
        return Err(shape(
            "mix_features_labels",
            format!("{} vs {} features", x_i.len(), x_j.len()),
        ));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Contract(format!("λ={lambda} outside [0,1]")));
    }
    let x = x_i
        .iter()
        .zip(x_j)
        .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
        .collect();
    Ok((x, LabelPair { y_i, y_j, lambda }))
}

/// `p_mix(v) = λ·p_i(v) + (1 − λ)·p_j(v)` over the union of supports.
///
/// Zero-mass entries are dropped. When one side is empty (an isolated
/// node) the other side is returned unchanged so the result still sums to
/// one.
pub fn mix_neighbor_distribution(
    p_i: &NeighborDistribution,
    p_j: &NeighborDistribution,
    lambda: f64,
) -> Result<NeighborDistribution> {
    match (p_i.is_empty(), p_j.is_empty()) {
        (true, true) => return Err(Error::IsolatedPair),
        (false, true) => return Ok(p_i.clone()),
        (true, false) => return Ok(p_j.clone()),
        (false, false) => {}
    }
    let mut mass: BTreeMap<usize, f64> = BTreeMap::new();
    for (&v, &p) in p_i.support.iter().zip(&p_i.probs) {
        *mass.entry(v).or_default() += lambda * p;
    }
    for (&v, &p) in p_j.support.iter().zip(&p_j.probs) {
        *mass.entry(v).or_default() += (1.0 - lambda) * p;
    }
    let (support, probs) = mass.into_iter().filter(|&(_, p)| p > 0.0).unzip();
    Ok(NeighborDistribution { support, probs })
}

/// Draws `degree` (clamped to `[1, |support|]`) distinct neighbors by
/// successive sampling proportional to `p_mix` without replacement.
pub fn sample_neighbors_with_degree<R: Rng + ?Sized>(
    p_mix: &NeighborDistribution,
    degree: usize,
    rng: &mut R,
) -> Vec<usize> {
    let d = degree.clamp(1, p_mix.len().max(1)).min(p_mix.len());
    if d == p_mix.len() {
        return p_mix.support.clone();
    }
    let mut weights = p_mix.probs.clone();
    let mut remaining: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(d);
    while out.len() < d {
        let mut u = rng.random::<f64>() * remaining;
        let mut pick = None;
        for (k, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            pick = Some(k);
            if u < w {
                break;
            }
            u -= w;
        }
        let k = pick.expect("positive mass remains while out.len() < support size");
        out.push(p_mix.support[k]);
        remaining -= weights[k];
        weights[k] = 0.0;
    }
    out.sort_unstable();
    out
}

/// Target degree drawn from the base graph's degree multiset.
pub fn sample_ego_neighbors<R: Rng + ?Sized>(
    p_mix: &NeighborDistribution,
    deg_dist: &DegreeDistribution,
    rng: &mut R,
) -> Vec<usize> {
    let d = deg_dist.sample(rng);
    sample_neighbors_with_degree(p_mix, d, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixupConfig {
    /// Probability of an inter-class counterexample.
    pub eta: f64,
    /// Shape of the symmetric `Beta(α, α)` for `λ`.
    pub beta_alpha: f64,
    pub degree_mode: DegreeMode,
}

impl Default for MixupConfig {
    fn default() -> Self {
        Self {
            eta: 0.5,
            beta_alpha: 1.0,
            degree_mode: DegreeMode::Global,
        }
    }
}

/// One mixed ego-network per train node.
///
/// Falls back to the other counterexample kind when the chosen kind has no
/// candidates, and to an identity pair `(i, i, λ = 1)` when neither does.
pub fn build_augmented_graph<'g>(
    graph: &'g Graph,
    groups: &GroupTable,
    degrees: &DegreeDistribution,
    cfg: &MixupConfig,
    rng: &mut dyn RngCore,
) -> Result<(AugmentedGraph<'g>, Vec<MixPair>)> {
    if !(0.0..=1.0).contains(&cfg.eta) {
        return Err(Error::Config(format!("η={} outside [0,1]", cfg.eta)));
    }
    let beta = Beta::new(cfg.beta_alpha, cfg.beta_alpha)
        .map_err(|e| Error::Config(format!("beta_alpha={}: {e}", cfg.beta_alpha)))?;
    let train = &graph.masks().train;
    let mut pairs = Vec::with_capacity(train.len());
    let mut injected = Vec::with_capacity(train.len());
    for &i in train {
        let gi = graph
            .group_of(i)
            .ok_or_else(|| Error::Schema(format!("train node {i} lacks a group")))?;
        let kind = choose_kind(cfg.eta, rng);
        let drawn = sample_counterexample(groups, gi, kind, rng)
            .map(|j| (j, kind))
            .or_else(|_| {
                sample_counterexample(groups, gi, kind.other(), rng).map(|j| (j, kind.other()))
            });
        let pair = match drawn {
            Ok((j, kind)) => MixPair {
                i,
                j,
                kind,
                lambda: beta.sample(rng).clamp(0.0, 1.0),
            },
            Err(_) => MixPair {
                i,
                j: i,
                kind,
                lambda: 1.0,
            },
        };
        let gj = graph
            .group_of(pair.j)
            .expect("counterexamples are train nodes");
        debug_assert!(pair.i == pair.j || pair.kind.admits(gi, gj));
        let (x_mix, label_pair) = mix_features_labels(
            graph.features().row(i),
            graph.features().row(pair.j),
            gi.0,
            gj.0,
            pair.lambda,
        )?;
        let neighbors = match mix_neighbor_distribution(
            &NeighborDistribution::of(graph, i),
            &NeighborDistribution::of(graph, pair.j),
            pair.lambda,
        ) {
            Ok(p_mix) => {
                let d = match cfg.degree_mode {
                    DegreeMode::Global => degrees.sample(rng),
                    DegreeMode::Interpolated => (pair.lambda * graph.degree(i) as f64
                        + (1.0 - pair.lambda) * graph.degree(pair.j) as f64)
                        .round() as usize,
                };
                sample_neighbors_with_degree(&p_mix, d, rng)
            }
            Err(Error::IsolatedPair) => Vec::new(),
            Err(e) => return Err(e),
        };
        injected.push(MixedEgoNetwork {
            x_mix,
            label_pair,
            source_groups: (gi, gj),
            neighbors,
        });
        pairs.push(pair);
    }
    Ok((AugmentedGraph::new(graph, injected)?, pairs))
}

/// Per-group occurrence counts of pair sides (both the original node and
/// its counterexample are counted).
pub fn occurrence_counts(injected: &[MixedEgoNetwork]) -> BTreeMap<GroupKey, usize> {
    let mut c = BTreeMap::new();
    for e in injected {
        *c.entry(e.source_groups.0).or_insert(0) += 1;
        *c.entry(e.source_groups.1).or_insert(0) += 1;
    }
    c
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    /// `max_{y,s} |P̂(Y=y | S=s) − P̂(Y=y)|` over non-empty sensitive buckets.
    pub max_deviation: f64,
    /// Sensitive values whose bucket has zero occurrences.
    pub excluded_sensitive: Vec<usize>,
}

/// Measures how far label frequencies conditioned on the sensitive value
/// are from the marginal label frequencies.
pub fn verify_independence(occurrences: &BTreeMap<GroupKey, usize>) -> Result<IndependenceReport> {
    let total: usize = occurrences.values().sum();
    if total == 0 {
        return Err(Error::Contract("occurrence counts are all zero".into()));
    }
    let mut by_label: BTreeMap<usize, usize> = BTreeMap::new();
    let mut by_sens: BTreeMap<usize, usize> = BTreeMap::new();
    for (&(y, s), &c) in occurrences {
        *by_label.entry(y).or_default() += c;
        *by_sens.entry(s).or_default() += c;
    }
    let mut max_deviation: f64 = 0.0;
    let mut excluded_sensitive = Vec::new();
    for (&s, &ns) in &by_sens {
        if ns == 0 {
            excluded_sensitive.push(s);
            continue;
        }
        for (&y, &ny) in &by_label {
            let joint = occurrences.get(&(y, s)).copied().unwrap_or(0);
            let cond = joint as f64 / ns as f64;
            let marg = ny as f64 / total as f64;
            max_deviation = max_deviation.max((cond - marg).abs());
        }
    }
    Ok(IndependenceReport {
        max_deviation,
        excluded_sensitive,
    })
}
