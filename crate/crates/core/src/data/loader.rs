use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{split_nodes, standardize_features, SplitPolicy};
use crate::error::{Error, Result};
use crate::graph::{Adjacency, Graph, Masks};
use crate::nn::Matrix;

/// Where a dataset lives and how to interpret its columns.
///
/// `nodes.csv` carries a header row with an id column, feature columns, a
/// label column and a sensitive column. `edges.csv` lists one undirected
/// edge per row as two node ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub nodes_path: PathBuf,
    pub edges_path: PathBuf,
    pub id_column: String,
    pub label_column: String,
    pub sensitive_column: String,
    pub include_sensitive_in_features: bool,
    pub standardize: bool,
    pub split: DatasetSplit,
}

/// Split source for a dataset on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DatasetSplit {
    /// `train.idx`, `valid.idx`, `test.idx`: one 0-based row index per line.
    IndexFiles {
        train: PathBuf,
        valid: PathBuf,
        test: PathBuf,
    },
    Policy(SplitPolicy),
}

impl DatasetSpec {
    /// Canonical layout `<dir>/nodes.csv`, `<dir>/edges.csv`, using index
    /// files from the same directory when all three exist.
    pub fn in_dir(name: &str, dir: &Path, fallback: SplitPolicy) -> Self {
        let idx = |s: &str| dir.join(format!("{s}.idx"));
        let split = if ["train", "valid", "test"].iter().all(|s| idx(s).exists()) {
            DatasetSplit::IndexFiles {
                train: idx("train"),
                valid: idx("valid"),
                test: idx("test"),
            }
        } else {
            DatasetSplit::Policy(fallback)
        };
        Self {
            name: name.to_string(),
            nodes_path: dir.join("nodes.csv"),
            edges_path: dir.join("edges.csv"),
            id_column: "node_id".into(),
            label_column: "label".into(),
            sensitive_column: "sensitive".into(),
            include_sensitive_in_features: true,
            standardize: true,
            split,
        }
    }
}

/// Counts recorded while loading, for auditing against published tables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadStats {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub num_features: usize,
    pub num_labeled: usize,
    pub self_loops_dropped: usize,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub graph: Graph,
    pub stats: LoadStats,
    pub feature_names: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(file: &Path, row: usize, column: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        file: file.display().to_string(),
        row,
        column: column.to_string(),
        reason: reason.into(),
    }
}

/// Empty, `-1`, `NA` and `nan` denote an unknown category.
fn parse_category(cell: &str) -> std::result::Result<Option<usize>, String> {
    let t = cell.trim();
    if t.is_empty() || t == "-1" || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    if let Ok(v) = t.parse::<usize>() {
        return Ok(Some(v));
    }
    match t.parse::<f64>() {
        Ok(f) if f >= 0.0 && f.fract() == 0.0 && f < u32::MAX as f64 => Ok(Some(f as usize)),
        _ => Err(format!("`{t}` is not a non-negative integer category")),
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    let nodes_path = spec.nodes_path.as_path();
    let mut rdr = open_csv(nodes_path)?;
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let label_col = find(&spec.label_column)
        .ok_or_else(|| parse_err(nodes_path, 1, &spec.label_column, "missing label column"))?;
    let sens_col = find(&spec.sensitive_column).ok_or_else(|| {
        parse_err(
            nodes_path,
            1,
            &spec.sensitive_column,
            "missing sensitive column",
        )
    })?;
    let id_col = find(&spec.id_column);
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| {
            Some(c) != id_col
                && c != label_col
                && (c != sens_col || spec.include_sensitive_in_features)
        })
        .collect();
    let feature_names: Vec<String> = feature_cols
        .iter()
        .map(|&c| headers[c].to_string())
        .collect();

    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut sensitive = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(parse_err(
                nodes_path,
                line,
                "*",
                format!("{} cells, header has {}", rec.len(), headers.len()),
            ));
        }
        let row = labels.len();
        let id = id_col.map_or_else(|| row.to_string(), |c| rec[c].to_string());
        if ids.insert(id.clone(), row).is_some() {
            return Err(parse_err(
                nodes_path,
                line,
                &spec.id_column,
                format!("duplicate node id `{id}`"),
            ));
        }
        for &c in &feature_cols {
            let v: f64 = rec[c].parse().map_err(|_| {
                parse_err(
                    nodes_path,
                    line,
                    &headers[c],
                    format!("`{}` is not numeric", &rec[c]),
                )
            })?;
            if !v.is_finite() {
                return Err(parse_err(nodes_path, line, &headers[c], "non-finite value"));
            }
            features.push(v);
        }
        labels.push(
            parse_category(&rec[label_col])
                .map_err(|e| parse_err(nodes_path, line, &headers[label_col], e))?,
        );
        sensitive.push(
            parse_category(&rec[sens_col])
                .map_err(|e| parse_err(nodes_path, line, &headers[sens_col], e))?,
        );
    }
    let n = labels.len();
    let x = Matrix::new(n, feature_cols.len(), features)?;
    let x = if spec.standardize {
        standardize_features(&x)
    } else {
        x
    };

    let edges_path = spec.edges_path.as_path();
    let mut rdr = open_csv(edges_path)?;
    let eh = rdr.headers()?.clone();
    if eh.len() < 2 {
        return Err(parse_err(edges_path, 1, "*", "need two endpoint columns"));
    }
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    let mut self_loops = 0;
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        let endpoint = |c: usize| {
            ids.get(&rec[c]).copied().ok_or_else(|| {
                parse_err(
                    edges_path,
                    line,
                    &eh[c],
                    format!("dangling endpoint `{}`", &rec[c]),
                )
            })
        };
        let (a, b) = (endpoint(0)?, endpoint(1)?);
        if a == b {
            self_loops += 1;
            continue;
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(parse_err(
                edges_path,
                line,
                "*",
                format!("duplicate edge ({},{})", &rec[0], &rec[1]),
            ));
        }
        edges.push((a, b));
    }
    let adjacency = Adjacency::from_undirected_edges(n, &edges)?;
    let unsplit = Graph::new(adjacency, x, &labels, &sensitive, Masks::default())?;
    let policy = match &spec.split {
        DatasetSplit::IndexFiles { train, valid, test } => SplitPolicy::Explicit {
            train: read_index_file(train)?,
            valid: read_index_file(valid)?,
            test: read_index_file(test)?,
        },
        DatasetSplit::Policy(p) => p.clone(),
    };
    let masks = split_nodes(&unsplit, &policy)?;
    let graph = unsplit.with_masks(masks)?;
    let stats = LoadStats {
        num_nodes: n,
        num_edges: edges.len(),
        num_features: graph.num_features(),
        num_labeled: labels.iter().flatten().count(),
        self_loops_dropped: self_loops,
    };
    Ok(Dataset {
        graph,
        stats,
        feature_names,
    })
}

/// Reads one non-negative index per non-blank line.
pub fn read_index_file(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            l.trim().parse().map_err(|_| {
                parse_err(
                    path,
                    k + 1,
                    "index",
                    format!("`{}` is not an index", l.trim()),
                )
            })
        })
        .collect()
}
