//! Attributed graph model, demographic-group index, and neighbor/degree
//! distributions.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Sentinel stored for nodes without a label or sensitive value.
pub const UNLABELED: u32 = u32::MAX;

/// A demographic group key `(class, sensitive)`.
pub type GroupKey = (usize, usize);

/// Compressed sparse rows: `targets[offsets[i]..offsets[i + 1]]` are the
/// sorted out-neighbors of row `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Adjacency {
    /// Builds a symmetric adjacency from an undirected edge list.
    ///
    /// Each `(i, j)` is stored in both directions. Self-loops and repeated
    /// pairs are rejected.
    pub fn from_undirected_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut rows = vec![Vec::new(); num_nodes];
        for &(i, j) in edges {
            if i >= num_nodes || j >= num_nodes {
                return Err(Error::Schema(format!(
                    "edge ({i},{j}) references a node outside 0..{num_nodes}"
                )));
            }
            if i == j {
                return Err(Error::Schema(format!("self-loop on node {i}")));
            }
            rows[i].push(j);
            rows[j].push(i);
        }
        for (i, r) in rows.iter_mut().enumerate() {
            r.sort_unstable();
            if let Some(w) = r.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::Schema(format!("duplicate edge ({i},{})", w[0])));
            }
        }
        Ok(Self::from_sorted_rows(rows))
    }

    /// Builds a (possibly directed) adjacency from per-row neighbor lists.
    /// Rows are sorted and must not contain repeats.
    pub fn from_rows(mut rows: Vec<Vec<usize>>) -> Result<Self> {
        let n = rows.len();
        for (i, r) in rows.iter_mut().enumerate() {
            r.sort_unstable();
            if r.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Schema(format!("row {i} repeats a neighbor")));
            }
            if let Some(&bad) = r.iter().find(|&&j| j >= n) {
                return Err(Error::Schema(format!("row {i} points at {bad} >= {n}")));
            }
        }
        Ok(Self::from_sorted_rows(rows))
    }

    fn from_sorted_rows(rows: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut targets = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        for r in rows {
            targets.extend(r);
            offsets.push(targets.len());
        }
        Self { offsets, targets }
    }

    #[inline]
    pub fn num_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of stored (directed) entries.
    #[inline]
    pub fn num_entries(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.num_rows()).all(|i| self.neighbors(i).iter().all(|&j| self.has_edge(j, i)))
    }

    /// Sorted `(i, j)` pairs with `i < j`.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_rows())
            .flat_map(|i| {
                self.neighbors(i)
                    .iter()
                    .filter(move |&&j| j > i)
                    .map(move |&j| (i, j))
            })
            .collect()
    }

    /// Appends rows whose neighbors point into existing rows only. The
    /// existing rows are unchanged, so the new rows are sources, never targets.
    pub fn with_appended_rows(&self, extra: &[Vec<usize>]) -> Result<Self> {
        let base = self.num_rows();
        let mut offsets = self.offsets.clone();
        let mut targets = self.targets.clone();
        for (k, r) in extra.iter().enumerate() {
            let mut r = r.clone();
            r.sort_unstable();
            if r.windows(2).any(|w| w[0] == w[1]) || r.iter().any(|&j| j >= base) {
                return Err(Error::Schema(format!(
                    "appended row {k} must list distinct base nodes"
                )));
            }
            targets.extend(r);
            offsets.push(targets.len());
        }
        Ok(Self { offsets, targets })
    }
}

/// Disjoint train/validation/test node-index sets.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Masks {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl Masks {
    /// Checks that every index is below `n` and the three sets are disjoint.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for (name, set) in [
            ("train", &self.train),
            ("valid", &self.valid),
            ("test", &self.test),
        ] {
            for &i in set {
                if i >= n {
                    return Err(Error::Split(format!(
                        "{name} index {i} out of range 0..{n}"
                    )));
                }
                if seen[i] {
                    return Err(Error::Split(format!("index {i} appears twice")));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }
}

/// Immutable attributed graph.
#[derive(Clone, Debug)]
pub struct Graph {
    adjacency: Adjacency,
    features: Matrix,
    labels: Vec<u32>,
    sensitive: Vec<u32>,
    masks: Masks,
    num_classes: usize,
    num_groups: usize,
}

impl Graph {
    /// Validates and assembles a graph. `labels` and `sensitive` use
    /// `None` for unknown values.
    pub fn new(
        adjacency: Adjacency,
        features: Matrix,
        labels: &[Option<usize>],
        sensitive: &[Option<usize>],
        masks: Masks,
    ) -> Result<Self> {
        let n = adjacency.num_rows();
        if features.rows() != n || labels.len() != n || sensitive.len() != n {
            return Err(Error::Schema(format!(
                "{n} nodes but {} feature rows, {} labels, {} sensitive values",
                features.rows(),
                labels.len(),
                sensitive.len()
            )));
        }
        if !features.is_finite() {
            return Err(Error::Schema(
                "feature matrix has non-finite entries".into(),
            ));
        }
        if (0..n).any(|i| adjacency.has_edge(i, i)) {
            return Err(Error::Schema("adjacency stores a self-loop".into()));
        }
        if !adjacency.is_symmetric() {
            return Err(Error::Schema("adjacency is not symmetric".into()));
        }
        masks.validate(n)?;
        for &i in &masks.train {
            if labels[i].is_none() || sensitive[i].is_none() {
                return Err(Error::Schema(format!(
                    "train node {i} lacks a label or sensitive value"
                )));
            }
        }
        let encode = |v: &Option<usize>| v.map_or(UNLABELED, |x| x as u32);
        let num_classes = labels.iter().flatten().max().map_or(0, |m| m + 1);
        let num_groups = sensitive.iter().flatten().max().map_or(0, |m| m + 1);
        Ok(Self {
            adjacency,
            features,
            labels: labels.iter().map(encode).collect(),
            sensitive: sensitive.iter().map(encode).collect(),
            masks,
            num_classes: num_classes.max(2),
            num_groups: num_groups.max(2),
        })
    }

    /// Same graph with different split masks.
    pub fn with_masks(&self, masks: Masks) -> Result<Self> {
        masks.validate(self.num_nodes())?;
        for &i in &masks.train {
            if self.label(i).is_none() || self.sensitive(i).is_none() {
                return Err(Error::Schema(format!(
                    "train node {i} lacks a label or sensitive value"
                )));
            }
        }
        Ok(Self {
            masks,
            ..self.clone()
        })
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.adjacency.num_rows()
    }

    pub fn num_undirected_edges(&self) -> usize {
        self.adjacency.num_entries() / 2
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    /// Number of classes `C` (at least two).
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Number of sensitive groups `B` (at least two).
    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn masks(&self) -> &Masks {
        &self.masks
    }

    #[inline]
    pub fn label(&self, v: usize) -> Option<usize> {
        decode(self.labels[v])
    }

    #[inline]
    pub fn sensitive(&self, v: usize) -> Option<usize> {
        decode(self.sensitive[v])
    }

    /// `(label, sensitive)` of a node, when both are known.
    pub fn group_of(&self, v: usize) -> Option<GroupKey> {
        Some((self.label(v)?, self.sensitive(v)?))
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        self.adjacency.neighbors(v)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency.degree(v)
    }
}

#[inline]
fn decode(v: u32) -> Option<usize> {
    (v != UNLABELED).then_some(v as usize)
}

/// Train nodes partitioned by `(label, sensitive)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupTable {
    groups: BTreeMap<GroupKey, Vec<usize>>,
    num_classes: usize,
    num_groups: usize,
}

impl GroupTable {
    pub fn build(graph: &Graph) -> Result<Self> {
        let train = &graph.masks().train;
        if train.is_empty() {
            return Err(Error::EmptyTrainSet);
        }
        let mut groups: BTreeMap<GroupKey, Vec<usize>> = BTreeMap::new();
        for &v in train {
            let key = graph.group_of(v).ok_or_else(|| {
                Error::Schema(format!("train node {v} lacks a label or sensitive value"))
            })?;
            groups.entry(key).or_default().push(v);
        }
        Ok(Self {
            groups,
            num_classes: graph.num_classes(),
            num_groups: graph.num_groups(),
        })
    }

    /// Builds a table directly from group lists.
    pub fn from_groups(
        groups: BTreeMap<GroupKey, Vec<usize>>,
        num_classes: usize,
        num_groups: usize,
    ) -> Self {
        let groups = groups.into_iter().filter(|(_, v)| !v.is_empty()).collect();
        Self {
            groups,
            num_classes,
            num_groups,
        }
    }

    pub fn members(&self, key: GroupKey) -> &[usize] {
        self.groups.get(&key).map_or(&[], Vec::as_slice)
    }

    pub fn count(&self, key: GroupKey) -> usize {
        self.members(key).len()
    }

    /// Non-empty groups in key order.
    pub fn iter(&self) -> impl Iterator<Item = (GroupKey, &[usize])> {
        self.groups.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn keys(&self) -> impl Iterator<Item = GroupKey> + '_ {
        self.groups.keys().copied()
    }

    pub fn counts(&self) -> BTreeMap<GroupKey, usize> {
        self.groups.iter().map(|(k, v)| (*k, v.len())).collect()
    }

    pub fn num_train(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    /// Number of distinct sensitive values present.
    pub fn distinct_sensitive(&self) -> usize {
        self.groups
            .keys()
            .map(|k| k.1)
            .collect::<std::collections::BTreeSet<_>>()
            .len()
    }
}

/// Probability distribution over a node's neighbors.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborDistribution {
    pub support: Vec<usize>,
    pub probs: Vec<f64>,
}

impl NeighborDistribution {
    /// Uniform `1 / |N(v)|` over the neighbors of `v`; empty when isolated.
    pub fn of(graph: &Graph, v: usize) -> Self {
        let support = graph.neighbors(v).to_vec();
        let p = 1.0 / support.len() as f64;
        let probs = vec![p; support.len()];
        Self { support, probs }
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn prob(&self, v: usize) -> f64 {
        self.support
            .iter()
            .position(|&u| u == v)
            .map_or(0.0, |k| self.probs[k])
    }
}

/// Empirical multiset of node degrees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeDistribution {
    degrees: Vec<usize>,
}

impl DegreeDistribution {
    pub fn of(graph: &Graph) -> Self {
        Self {
            degrees: (0..graph.num_nodes()).map(|v| graph.degree(v)).collect(),
        }
    }

    pub fn from_degrees(degrees: Vec<usize>) -> Self {
        Self { degrees }
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Total mass (number of nodes).
    pub fn total(&self) -> usize {
        self.degrees.len()
    }

    /// `degree -> number of nodes`.
    pub fn histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for &d in &self.degrees {
            *h.entry(d).or_insert(0) += 1;
        }
        h
    }

    /// Draws one degree uniformly from the multiset.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.degrees[rng.random_range(0..self.degrees.len())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy(
        n: usize,
        edges: &[(usize, usize)],
        groups: &[(usize, usize)],
        train: Vec<usize>,
    ) -> Graph {
        let adj = Adjacency::from_undirected_edges(n, edges).unwrap();
        let labels: Vec<_> = groups.iter().map(|g| Some(g.0)).collect();
        let sens: Vec<_> = groups.iter().map(|g| Some(g.1)).collect();
        Graph::new(
            adj,
            Matrix::zeros(n, 1),
            &labels,
            &sens,
            Masks {
                train,
                ..Masks::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn group_table_counts() {
        let g = toy(4, &[], &[(0, 0), (0, 0), (1, 0), (1, 1)], vec![0, 1, 2, 3]);
        let t = GroupTable::build(&g).unwrap();
        let c = t.counts();
        assert_eq!(c.len(), 3);
        assert_eq!(c[&(0, 0)], 2);
        assert_eq!(c[&(1, 0)], 1);
        assert_eq!(c[&(1, 1)], 1);
        assert_eq!(t.num_train(), 4);
    }

    #[test]
    fn group_table_empty_train() {
        let g = toy(2, &[], &[(0, 0), (1, 1)], vec![]);
        assert!(matches!(GroupTable::build(&g), Err(Error::EmptyTrainSet)));
    }

    #[test]
    fn group_table_single_group() {
        let g = toy(5, &[], &[(1, 1); 5], vec![0, 1, 2, 3, 4]);
        let t = GroupTable::build(&g).unwrap();
        assert_eq!(t.count((1, 1)), 5);
        assert_eq!(t.count((0, 0)), 0);
        assert_eq!(t.counts().len(), 1);
    }

    #[test]
    fn train_node_without_label_is_rejected() {
        let adj = Adjacency::from_undirected_edges(2, &[]).unwrap();
        let err = Graph::new(
            adj,
            Matrix::zeros(2, 1),
            &[Some(0), None],
            &[Some(0), Some(1)],
            Masks {
                train: vec![0, 1],
                ..Masks::default()
            },
        );
        assert!(matches!(err, Err(Error::Schema(_))));
    }

    #[test]
    fn neighbor_distribution_cases() {
        let g = toy(8, &[(0, 1), (0, 2), (3, 7)], &[(0, 0); 8], vec![0]);
        let p = NeighborDistribution::of(&g, 0);
        assert_eq!(p.support, vec![1, 2]);
        assert_eq!(p.probs, vec![0.5, 0.5]);
        let p = NeighborDistribution::of(&g, 3);
        assert_eq!(p.support, vec![7]);
        assert_eq!(p.probs, vec![1.0]);
        assert!(NeighborDistribution::of(&g, 5).is_empty());
    }

    #[test]
    fn degree_distribution_cases() {
        let path = toy(3, &[(0, 1), (1, 2)], &[(0, 0); 3], vec![0]);
        assert_eq!(DegreeDistribution::of(&path).degrees(), &[1, 2, 1]);
        let empty = toy(3, &[], &[(0, 0); 3], vec![0]);
        assert_eq!(DegreeDistribution::of(&empty).degrees(), &[0, 0, 0]);
        let k3 = toy(3, &[(0, 1), (1, 2), (0, 2)], &[(0, 0); 3], vec![0]);
        let d = DegreeDistribution::of(&k3);
        assert_eq!(d.degrees(), &[2, 2, 2]);
        assert_eq!(d.total(), 3);
    }

    #[test]
    fn adjacency_rejects_bad_edges() {
        assert!(Adjacency::from_undirected_edges(3, &[(0, 0)]).is_err());
        assert!(Adjacency::from_undirected_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Adjacency::from_undirected_edges(3, &[(0, 3)]).is_err());
    }

    #[test]
    fn appended_rows_leave_base_untouched() {
        let a = Adjacency::from_undirected_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let b = a.with_appended_rows(&[vec![2, 0]]).unwrap();
        assert_eq!(b.num_rows(), 4);
        assert_eq!(b.neighbors(3), &[0, 2]);
        for i in 0..3 {
            assert_eq!(a.neighbors(i), b.neighbors(i));
        }
        assert!(a.with_appended_rows(&[vec![3]]).is_err());
    }
}
