//! Fair node classification through group re-balancing.
//!
//! The crate pairs every labeled node with a counterfactual partner (same
//! label and different sensitive value, or the reverse), mixes their
//! features, labels and neighborhoods into new ego-networks, and weights the
//! resulting loss so that every `(label, sensitive)` group contributes the
//! same total logit-gradient mass. Vanilla GCN/SAGE/GIN encoders, simple
//! re-weighting and over-sampling baselines, fairness metrics, dataset
//! loaders and a seeded experiment harness are included.

pub mod cal;
pub mod cnm;
pub mod data;
pub mod encoders;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod nn;
pub mod report;
pub mod train;

pub use error::{Error, Result};
