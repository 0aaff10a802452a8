//! End-to-end training: warm-up cross-entropy, then per-epoch mixup and
//! contribution-aligned weighting; baselines; model selection; multi-seed
//! experiments.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cal::{
    cal_loss, contribution, group_weights, oversample, pair_contributions, rw_weights,
    ContributionLedger, MixTarget, SideContribution, DEFAULT_WEIGHT_FLOOR,
};
use crate::cnm::{build_augmented_graph, occurrence_counts, MixupConfig};
use crate::encoders::{EncoderConfig, Mode, Model, ModelState};
use crate::error::{Error, Result};
use crate::graph::{DegreeDistribution, Graph, GroupKey, GroupTable};
use crate::metrics::{
    argmax_rows, auc, evaluate, f1_acc, label_arrays, positive_scores, Evaluation,
};
use crate::nn::{cross_entropy, softmax, AdamConfig, Matrix};
use crate::report::{GroupValue, RepeatReport, RunReport, StdKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Vanilla,
    /// Loss re-weighted by inverse group size.
    Rw,
    /// Minority groups over-sampled to the largest group size.
    Os,
    /// Counterfactual mixup with contribution-aligned group weights.
    #[default]
    Fairgb,
    /// Counterfactual mixup with unit weights.
    FairgbWoCal,
    /// Contribution-aligned weights on plain per-node cross-entropy.
    FairgbWoCnm,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Vanilla,
        Method::Rw,
        Method::Os,
        Method::Fairgb,
        Method::FairgbWoCal,
        Method::FairgbWoCnm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Vanilla => "vanilla",
            Method::Rw => "rw",
            Method::Os => "os",
            Method::Fairgb => "fairgb",
            Method::FairgbWoCal => "fairgb_wo_cal",
            Method::FairgbWoCnm => "fairgb_wo_cnm",
        }
    }

    fn needs_two_sensitive_groups(self) -> bool {
        matches!(
            self,
            Method::Fairgb | Method::FairgbWoCal | Method::FairgbWoCnm
        )
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Checkpoint with the best validation `(AUC + F1) / 2`.
    #[default]
    BestValidation,
    Last,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub method: Method,
    pub encoder: EncoderConfig,
    pub epochs: usize,
    pub warmup: usize,
    pub mixup: MixupConfig,
    pub optimizer: AdamConfig,
    pub weight_floor: f64,
    pub seed: u64,
    pub repeats: usize,
    pub selection: Selection,
    pub std_kind: StdKind,
    /// Keep per-epoch occurrence counts, ledgers and weights in the report.
    pub record_epochs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Fairgb,
            encoder: EncoderConfig::default(),
            epochs: 1000,
            warmup: 400,
            mixup: MixupConfig::default(),
            optimizer: AdamConfig::default(),
            weight_floor: DEFAULT_WEIGHT_FLOOR,
            seed: 0,
            repeats: 10,
            selection: Selection::BestValidation,
            std_kind: StdKind::Population,
            record_epochs: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        if self.warmup > self.epochs {
            return Err(Error::Config(format!(
                "warm-up {} exceeds total epochs {}",
                self.warmup, self.epochs
            )));
        }
        if !(0.0..=1.0).contains(&self.mixup.eta) {
            return Err(Error::Config(format!("η={} outside [0,1]", self.mixup.eta)));
        }
        if !self.mixup.beta_alpha.is_finite() || self.mixup.beta_alpha <= 0.0 {
            return Err(Error::Config("beta_alpha must be positive".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if !self.optimizer.lr.is_finite()
            || self.optimizer.lr <= 0.0
            || self.optimizer.weight_decay < 0.0
        {
            return Err(Error::Config(
                "lr must be positive, weight decay non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Whether epoch `t` (1-based) runs the method's own objective.
    fn is_main_phase(&self, t: usize) -> bool {
        self.method != Method::Vanilla && t > self.warmup
    }
}

/// Per-epoch group statistics of the re-balancing phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochGroups {
    pub epoch: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub occurrences: Vec<GroupValue<usize>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub ledger: Vec<GroupValue<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub weights: Vec<GroupValue<f64>>,
}

pub struct TrainOutcome {
    pub state: ModelState,
    pub report: RepeatReport,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const STREAM_MODEL: u64 = 0;
const STREAM_OVERSAMPLE: u64 = 1;
const STREAM_MIXUP_BASE: u64 = 1 << 32;

/// Mean cross-entropy over `rows`, each with a weight; returns the loss and
/// `dL/dlogits` for the whole logit matrix.
fn weighted_ce(logits: &Matrix, rows: &[(usize, usize, f64)], norm: f64) -> (f64, Matrix) {
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    let mut loss = 0.0;
    for &(r, y, w) in rows {
        let z = logits.row(r);
        loss += w * cross_entropy(z, y);
        let p = softmax(z);
        let g = grad.row_mut(r);
        for (gc, pc) in g.iter_mut().zip(&p) {
            *gc = w * pc / norm;
        }
        g[y] -= w / norm;
    }
    (loss / norm, grad)
}

fn group_values<T: Copy>(m: &BTreeMap<GroupKey, T>) -> Vec<GroupValue<T>> {
    m.iter()
        .map(|(&(label, sensitive), &value)| GroupValue {
            label,
            sensitive,
            value,
        })
        .collect()
}

/// Validation `(AUC + F1) / 2`, using whichever of the two is defined.
fn validation_score(logits: &Matrix, graph: &Graph) -> Option<f64> {
    let mask = &graph.masks().valid;
    if mask.is_empty() {
        return None;
    }
    let (labels, _) = label_arrays(graph);
    let a = auc(&positive_scores(logits), &labels, mask).ok();
    let f = f1_acc(&argmax_rows(logits), &labels, mask)
        .ok()
        .map(|x| x.0);
    match (a, f) {
        (Some(a), Some(f)) => Some((a + f) / 2.0),
        (a, f) => a.or(f),
    }
}

/// Trains one model with `seed` and evaluates the selected checkpoint on
/// the test mask.
pub fn train(graph: &Graph, config: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    config.validate()?;
    let groups = GroupTable::build(graph)?;
    if config.method.needs_two_sensitive_groups() && groups.distinct_sensitive() < 2 {
        return Err(Error::Config(format!(
            "method {} needs at least two sensitive groups among train nodes",
            config.method
        )));
    }
    let degrees = DegreeDistribution::of(graph);
    let classes = graph.num_classes();
    let train_rows: Vec<(usize, usize)> = graph
        .masks()
        .train
        .iter()
        .map(|&v| (v, graph.label(v).expect("train nodes are labeled")))
        .collect();

    let mut rng = stream_rng(seed, STREAM_MODEL);
    let model = Model::new(config.encoder, graph.num_features(), classes, &mut rng)?;
    let mut state = ModelState::new(model);

    let rw: BTreeMap<usize, f64> = if config.method == Method::Rw {
        rw_weights(&groups).into_iter().collect()
    } else {
        BTreeMap::new()
    };
    let os_graph = if config.method == Method::Os {
        let plan = oversample(&groups, &mut stream_rng(seed, STREAM_OVERSAMPLE));
        Some(plan.augmented_graph(graph)?)
    } else {
        None
    };

    let restrict_selection = config.method != Method::Vanilla && config.warmup < config.epochs;
    let mut best: Option<(f64, usize, Model)> = None;
    let mut losses = Vec::with_capacity(config.epochs);
    let mut group_log = Vec::new();

    for t in 1..=config.epochs {
        let mut record = EpochGroups {
            epoch: t,
            occurrences: Vec::new(),
            ledger: Vec::new(),
            weights: Vec::new(),
        };
        let model = &state.model;
        let (loss, grads) = if !config.is_main_phase(t) {
            let (logits, cache) =
                model.forward(graph.adjacency(), graph.features(), Mode::Train(&mut rng))?;
            let rows: Vec<_> = train_rows.iter().map(|&(v, y)| (v, y, 1.0)).collect();
            let (loss, g) = weighted_ce(&logits, &rows, rows.len() as f64);
            (loss, model.backward(graph.adjacency(), &cache, &g)?)
        } else {
            match config.method {
                Method::Vanilla => unreachable!("vanilla never enters the main phase"),
                Method::Rw => {
                    let (logits, cache) = model.forward(
                        graph.adjacency(),
                        graph.features(),
                        Mode::Train(&mut rng),
                    )?;
                    let rows: Vec<_> = train_rows.iter().map(|&(v, y)| (v, y, rw[&v])).collect();
                    let (loss, g) = weighted_ce(&logits, &rows, rows.len() as f64);
                    (loss, model.backward(graph.adjacency(), &cache, &g)?)
                }
                Method::Os => {
                    let aug = os_graph.as_ref().expect("built for os");
                    let (logits, cache) =
                        model.forward(aug.adjacency(), aug.features(), Mode::Train(&mut rng))?;
                    let rows: Vec<_> = train_rows
                        .iter()
                        .map(|&(v, y)| (v, y, 1.0))
                        .chain(
                            aug.injected_ids()
                                .zip(aug.injected())
                                .map(|(id, e)| (id, e.label_pair.y_i, 1.0)),
                        )
                        .collect();
                    let (loss, g) = weighted_ce(&logits, &rows, rows.len() as f64);
                    (loss, model.backward(aug.adjacency(), &cache, &g)?)
                }
                Method::Fairgb | Method::FairgbWoCal => {
                    let mut mix_rng = stream_rng(seed, STREAM_MIXUP_BASE + t as u64);
                    let (aug, _pairs) = build_augmented_graph(
                        graph,
                        &groups,
                        &degrees,
                        &config.mixup,
                        &mut mix_rng as &mut dyn RngCore,
                    )?;
                    let (logits, cache) =
                        model.forward(aug.adjacency(), aug.features(), Mode::Train(&mut rng))?;
                    let ids: Vec<usize> = aug.injected_ids().collect();
                    let mixed_logits = logits.select_rows(&ids);
                    let targets: Vec<MixTarget> =
                        aug.injected().iter().map(MixTarget::from).collect();
                    let weights = if config.method == Method::Fairgb {
                        let sides = pair_contributions(&mixed_logits, &targets)?;
                        let ledger = ledger_for(&groups, sides, t);
                        let w = group_weights(&ledger, config.weight_floor)?;
                        if config.record_epochs {
                            record.ledger = group_values(&ledger.totals);
                            record.weights = group_values(&w.w);
                        }
                        Some(w)
                    } else {
                        None
                    };
                    if config.record_epochs {
                        record.occurrences = group_values(&occurrence_counts(aug.injected()));
                    }
                    let (loss, g_mixed) = cal_loss(&mixed_logits, &targets, weights.as_ref())?;
                    let g = scatter_rows(&g_mixed, &ids, logits.rows());
                    (loss, model.backward(aug.adjacency(), &cache, &g)?)
                }
                Method::FairgbWoCnm => {
                    let (logits, cache) = model.forward(
                        graph.adjacency(),
                        graph.features(),
                        Mode::Train(&mut rng),
                    )?;
                    let sides = train_rows.iter().map(|&(v, y)| SideContribution {
                        group: graph.group_of(v).expect("train nodes have groups"),
                        r: contribution(logits.row(v), y),
                    });
                    let ledger = ledger_for(&groups, sides, t);
                    let w = group_weights(&ledger, config.weight_floor)?;
                    let rows = train_rows
                        .iter()
                        .map(|&(v, y)| Ok((v, y, w.get(graph.group_of(v).expect("grouped"))?)))
                        .collect::<Result<Vec<_>>>()?;
                    if config.record_epochs {
                        record.ledger = group_values(&ledger.totals);
                        record.weights = group_values(&w.w);
                    }
                    let (loss, g) = weighted_ce(&logits, &rows, rows.len() as f64);
                    (loss, model.backward(graph.adjacency(), &cache, &g)?)
                }
            }
        };
        if !loss.is_finite() {
            return Err(Error::NonFinite("training loss"));
        }
        losses.push(loss);
        if config.record_epochs && config.is_main_phase(t) {
            group_log.push(record);
        }
        let ModelState { model, optimizer } = &mut state;
        optimizer.step(&config.optimizer, &mut model.params_mut(), &grads)?;

        if config.selection == Selection::BestValidation
            && (!restrict_selection || t > config.warmup)
        {
            let (logits, _) =
                state
                    .model
                    .forward(graph.adjacency(), graph.features(), Mode::Eval)?;
            if let Some(score) = validation_score(&logits, graph) {
                if best.as_ref().is_none_or(|b| score > b.0) {
                    best = Some((score, t, state.model.clone()));
                }
            }
        }
    }

    let (best_epoch, valid_score) = match best {
        Some((score, epoch, model)) => {
            state.model = model;
            (epoch, Some(score))
        }
        None => (config.epochs, None),
    };
    let (logits, _) = state
        .model
        .forward(graph.adjacency(), graph.features(), Mode::Eval)?;
    let test: Evaluation = evaluate(&logits, graph, &graph.masks().test)?;
    Ok(TrainOutcome {
        state,
        report: RepeatReport {
            seed,
            best_epoch,
            valid_score,
            test,
            losses,
            groups: group_log,
        },
    })
}

fn ledger_for(
    groups: &GroupTable,
    sides: impl IntoIterator<Item = SideContribution>,
    epoch: usize,
) -> ContributionLedger {
    let mut ledger = crate::cal::accumulate(sides).with_groups(groups.keys());
    ledger.epoch = epoch;
    ledger
}

fn scatter_rows(rows: &Matrix, ids: &[usize], total: usize) -> Matrix {
    let mut out = Matrix::zeros(total, rows.cols());
    for (k, &id) in ids.iter().enumerate() {
        out.row_mut(id).copy_from_slice(rows.row(k));
    }
    out
}

/// Runs `config.repeats` independent trainings with seeds
/// `seed..seed + repeats` and aggregates their test metrics.
pub fn run_experiment(graph: &Graph, config: &TrainConfig, dataset: &str) -> Result<RunReport> {
    config.validate()?;
    let seeds: Vec<u64> = (0..config.repeats as u64)
        .map(|k| config.seed + k)
        .collect();
    let repeats = seeds
        .par_iter()
        .map(|&s| {
            train(graph, config, s)
                .map(|o| o.report)
                .map_err(|e| Error::Config(format!("repeat with seed {s} failed: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport::new(dataset, config.clone(), repeats))
}

/// Runs one experiment per `η ∈ {0, 0.1, …, 1}`.
pub fn eta_sweep(graph: &Graph, config: &TrainConfig, dataset: &str) -> Result<Vec<RunReport>> {
    (0..=10)
        .map(|k| {
            let mut cfg = config.clone();
            cfg.mixup.eta = k as f64 / 10.0;
            run_experiment(graph, &cfg, dataset)
        })
        .collect()
}
