use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Masks};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StratifyBy {
    /// Per class label.
    #[default]
    Class,
    /// Per `(label, sensitive)` group.
    Group,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitPolicy {
    /// Index lists used verbatim.
    Explicit {
        train: Vec<usize>,
        valid: Vec<usize>,
        test: Vec<usize>,
    },
    /// Stratified random split of the nodes that carry a label and a
    /// sensitive value. The test set receives what the other two leave.
    Fraction {
        train: f64,
        valid: f64,
        seed: u64,
        stratify: StratifyBy,
    },
}

impl Default for SplitPolicy {
    fn default() -> Self {
        SplitPolicy::Fraction {
            train: 0.5,
            valid: 0.25,
            seed: 0,
            stratify: StratifyBy::Class,
        }
    }
}

pub fn split_nodes(graph: &Graph, policy: &SplitPolicy) -> Result<Masks> {
    let masks = match policy {
        SplitPolicy::Explicit { train, valid, test } => Masks {
            train: train.clone(),
            valid: valid.clone(),
            test: test.clone(),
        },
        &SplitPolicy::Fraction {
            train,
            valid,
            seed,
            stratify,
        } => {
            if !(0.0..=1.0).contains(&train)
                || !(0.0..=1.0).contains(&valid)
                || train + valid > 1.0 + 1e-12
            {
                return Err(Error::Split(format!(
                    "fractions train={train} valid={valid} must lie in [0,1] and sum to at most 1"
                )));
            }
            let mut strata: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
            for v in 0..graph.num_nodes() {
                if let Some((y, s)) = graph.group_of(v) {
                    let key = match stratify {
                        StratifyBy::Class => (y, 0),
                        StratifyBy::Group => (y, s),
                    };
                    strata.entry(key).or_default().push(v);
                }
            }
            if strata.is_empty() {
                return Err(Error::Split("no labeled nodes to split".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = Masks::default();
            for nodes in strata.values_mut() {
                nodes.shuffle(&mut rng);
                let n = nodes.len() as f64;
                let n_train = ((train * n).round() as usize).min(nodes.len());
                let n_valid = ((valid * n).round() as usize).min(nodes.len() - n_train);
                m.train.extend_from_slice(&nodes[..n_train]);
                m.valid
                    .extend_from_slice(&nodes[n_train..n_train + n_valid]);
                m.test.extend_from_slice(&nodes[n_train + n_valid..]);
            }
            m.train.sort_unstable();
            m.valid.sort_unstable();
            m.test.sort_unstable();
            m
        }
    };
    masks.validate(graph.num_nodes())?;
    Ok(masks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Adjacency;
    use crate::nn::Matrix;

    fn graph8() -> Graph {
        let labels: Vec<_> = (0..8).map(|v| Some(v % 2)).collect();
        let sens: Vec<_> = (0..8).map(|v| Some((v / 2) % 2)).collect();
        Graph::new(
            Adjacency::from_undirected_edges(8, &[]).unwrap(),
            Matrix::zeros(8, 1),
            &labels,
            &sens,
            Masks::default(),
        )
        .unwrap()
    }

    #[test]
    fn stratified_sizes() {
        let policy = SplitPolicy::Fraction {
            train: 0.5,
            valid: 0.25,
            seed: 7,
            stratify: StratifyBy::Class,
        };
        let m = split_nodes(&graph8(), &policy).unwrap();
        assert_eq!((m.train.len(), m.valid.len(), m.test.len()), (4, 2, 2));
        let g = graph8();
        for set in [&m.train, &m.valid, &m.test] {
            let ones = set.iter().filter(|&&v| g.label(v) == Some(1)).count();
            assert_eq!(ones * 2, set.len());
        }
        assert_eq!(m, split_nodes(&g, &policy).unwrap());
    }

    #[test]
    fn explicit_passthrough_and_errors() {
        let g = graph8();
        let p = SplitPolicy::Explicit {
            train: vec![0, 3],
            valid: vec![5],
            test: vec![7, 1],
        };
        let m = split_nodes(&g, &p).unwrap();
        assert_eq!(m.test, vec![7, 1]);
        let overlap = SplitPolicy::Explicit {
            train: vec![0, 3],
            valid: vec![3],
            test: vec![],
        };
        assert!(split_nodes(&g, &overlap).is_err());
        let range = SplitPolicy::Explicit {
            train: vec![8],
            valid: vec![],
            test: vec![],
        };
        assert!(split_nodes(&g, &range).is_err());
    }
}
