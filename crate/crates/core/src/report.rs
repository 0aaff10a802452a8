//! Run reports: per-repeat evaluations, mean ± std aggregation, and the
//! table/CSV renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::metrics::Evaluation;
use crate::train::{EpochGroups, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StdKind {
    #[default]
    Population,
    Sample,
}

/// A per-group value keyed by `(label, sensitive)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupValue<T> {
    pub label: usize,
    pub sensitive: usize,
    pub value: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    pub seed: u64,
    pub best_epoch: usize,
    pub valid_score: Option<f64>,
    pub test: Evaluation,
    /// Training loss per epoch.
    pub losses: Vec<f64>,
    /// Group statistics for each re-balancing epoch (when recorded).
    pub groups: Vec<EpochGroups>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and standard deviation; a single value has std 0.
    pub fn of(values: &[f64], kind: StdKind) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        let denom = match kind {
            StdKind::Population => n as f64,
            StdKind::Sample if n > 1 => (n - 1) as f64,
            StdKind::Sample => 1.0,
        };
        Self {
            mean,
            std: (ss / denom).sqrt(),
        }
    }

    /// `mean±std` in percent with two decimals.
    pub fn percent(&self) -> String {
        format!("{:.2}±{:.2}", 100.0 * self.mean, 100.0 * self.std)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub auc: MeanStd,
    pub f1: MeanStd,
    pub acc: MeanStd,
    pub delta_sp: MeanStd,
    pub delta_eo: MeanStd,
    pub delta_eodds: Option<MeanStd>,
}

impl Aggregate {
    pub fn of(repeats: &[RepeatReport], kind: StdKind) -> Self {
        let col = |f: fn(&Evaluation) -> f64| {
            MeanStd::of(
                &repeats.iter().map(|r| f(&r.test)).collect::<Vec<_>>(),
                kind,
            )
        };
        let eodds: Option<Vec<f64>> = repeats.iter().map(|r| r.test.delta_eodds).collect();
        Self {
            auc: col(|e| e.auc),
            f1: col(|e| e.f1),
            acc: col(|e| e.acc),
            delta_sp: col(|e| e.delta_sp),
            delta_eo: col(|e| e.delta_eo),
            delta_eodds: eodds.map(|v| MeanStd::of(&v, kind)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub method: String,
    pub config: TrainConfig,
    pub repeats: Vec<RepeatReport>,
    pub aggregate: Aggregate,
}

pub const TABLE_HEADER: &str = "dataset,method,encoder,eta,auc,f1,acc,delta_sp,delta_eo";

impl RunReport {
    pub fn new(dataset: &str, config: TrainConfig, repeats: Vec<RepeatReport>) -> Self {
        let aggregate = Aggregate::of(&repeats, config.std_kind);
        Self {
            dataset: dataset.to_string(),
            method: config.method.name().to_string(),
            config,
            repeats,
            aggregate,
        }
    }

    /// One `table.csv` row (percentages, two decimals).
    pub fn table_row(&self) -> String {
        let a = &self.aggregate;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.dataset,
            self.method,
            self.config.encoder.kind,
            self.config.mixup.eta,
            a.auc.percent(),
            a.f1.percent(),
            a.acc.percent(),
            a.delta_sp.percent(),
            a.delta_eo.percent()
        )
    }

    /// `occurrences.csv` body: one line per repeat, epoch and group.
    pub fn occurrences_csv(&self) -> String {
        let mut out = String::from("seed,epoch,label,sensitive,count\n");
        for r in &self.repeats {
            for e in &r.groups {
                for o in &e.occurrences {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        r.seed, e.epoch, o.label, o.sensitive, o.value
                    );
                }
            }
        }
        out
    }
}
