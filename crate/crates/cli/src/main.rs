//! `fairgb` command line: load or generate a graph, train one or more
//! methods over several seeds, write `report.json`, `table.csv` and
//! `occurrences.csv`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Parser};
use fairgb::cnm::DegreeMode;
use fairgb::data::{generate_synthetic, load_dataset, DatasetSpec, SplitPolicy, SyntheticSpec};
use fairgb::encoders::EncoderKind;
use fairgb::graph::Graph;
use fairgb::report::{RunReport, StdKind, TABLE_HEADER};
use fairgb::train::{eta_sweep, run_experiment, Method, TrainConfig};

/// Fair node classification with counterfactual mixup and contribution
/// alignment.
#[derive(Parser, Debug)]
#[command(name = "fairgb", version)]
struct Cli {
    /// `synthetic`, `synthetic-biased`, or the name of a directory under
    /// `--data-dir` holding `nodes.csv` and `edges.csv`.
    #[arg(long, default_value = "synthetic")]
    dataset: String,
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    /// TOML file with synthetic-graph parameters.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// TOML file with training parameters; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// One or more methods, comma separated.
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    #[arg(long)]
    encoder: Option<EncoderKind>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    beta_alpha: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Report sample instead of population standard deviations.
    #[arg(long)]
    sample_std: bool,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Run every η in {0, 0.1, …, 1}.
    #[arg(long)]
    eta_sweep: bool,
    #[arg(long, action = ArgAction::Set)]
    include_sensitive_in_features: Option<bool>,
    #[arg(long)]
    degree_mode: Option<DegreeMode>,
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn train_config(cli: &Cli) -> Result<TrainConfig> {
    let mut cfg: TrainConfig = match &cli.config {
        Some(p) => read_toml(p)?,
        None => TrainConfig::default(),
    };
    if let Some(v) = cli.encoder {
        cfg.encoder.kind = v;
    }
    if let Some(v) = cli.eta {
        cfg.mixup.eta = v;
    }
    if let Some(v) = cli.beta_alpha {
        cfg.mixup.beta_alpha = v;
    }
    if let Some(v) = cli.degree_mode {
        cfg.mixup.degree_mode = v;
    }
    if let Some(v) = cli.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = cli.warmup {
        cfg.warmup = v;
    }
    if let Some(v) = cli.lr {
        cfg.optimizer.lr = v;
    }
    if let Some(v) = cli.weight_decay {
        cfg.optimizer.weight_decay = v;
    }
    if let Some(v) = cli.hidden {
        cfg.encoder.hidden_dim = v;
        cfg.encoder.embed_dim = v;
    }
    if let Some(v) = cli.layers {
        cfg.encoder.layers = v;
    }
    if let Some(v) = cli.dropout {
        cfg.encoder.dropout = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.repeats {
        cfg.repeats = v;
    }
    if cli.sample_std {
        cfg.std_kind = StdKind::Sample;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_graph(cli: &Cli) -> Result<Graph> {
    match cli.dataset.as_str() {
        "synthetic" | "synthetic-biased" => {
            let mut spec = match (&cli.spec, cli.dataset.as_str()) {
                (Some(p), _) => read_toml::<SyntheticSpec>(p)?,
                (None, "synthetic-biased") => SyntheticSpec::biased_benchmark(),
                (None, _) => SyntheticSpec::default(),
            };
            if let Some(v) = cli.include_sensitive_in_features {
                spec.include_sensitive_in_features = v;
            }
            Ok(generate_synthetic(&spec)?)
        }
        name => {
            if cli.spec.is_some() {
                bail!("--spec only applies to synthetic datasets");
            }
            let nested = cli.data_dir.join(name);
            let dir = if nested.is_dir() {
                nested
            } else {
                cli.data_dir.clone()
            };
            let mut spec = DatasetSpec::in_dir(name, &dir, SplitPolicy::default());
            if let Some(v) = cli.include_sensitive_in_features {
                spec.include_sensitive_in_features = v;
            }
            let ds = load_dataset(&spec).with_context(|| format!("loading {name}"))?;
            eprintln!(
                "{name}: {} nodes, {} edges, {} features ({} self-loops dropped)",
                ds.stats.num_nodes,
                ds.stats.num_edges,
                ds.stats.num_features,
                ds.stats.self_loops_dropped
            );
            Ok(ds.graph)
        }
    }
}

fn write_outputs(dir: &Path, reports: &[RunReport]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let json = serde_json::to_string_pretty(reports)?;
    fs::write(dir.join("report.json"), json + "\n")?;

    let mut table = format!("{TABLE_HEADER}\n");
    for r in reports {
        table.push_str(&r.table_row());
        table.push('\n');
    }
    fs::write(dir.join("table.csv"), table)?;

    let mut occ = String::from("method,eta,seed,epoch,label,sensitive,count\n");
    for r in reports {
        let prefix = format!("{},{}", r.method, r.config.mixup.eta);
        for line in r.occurrences_csv().lines().skip(1) {
            occ.push_str(&prefix);
            occ.push(',');
            occ.push_str(line);
            occ.push('\n');
        }
    }
    fs::write(dir.join("occurrences.csv"), occ)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Ok(n) = std::env::var("FAIRGB_THREADS") {
        let n: usize = n
            .parse()
            .context("FAIRGB_THREADS must be a positive integer")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    let base = train_config(&cli)?;
    let graph = load_graph(&cli)?;
    let methods = if cli.method.is_empty() {
        vec![base.method]
    } else {
        cli.method.clone()
    };

    println!("{TABLE_HEADER}");
    let mut reports = Vec::new();
    for method in methods {
        let cfg = TrainConfig {
            method,
            ..base.clone()
        };
        let batch = if cli.eta_sweep {
            eta_sweep(&graph, &cfg, &cli.dataset)?
        } else {
            vec![run_experiment(&graph, &cfg, &cli.dataset)?]
        };
        for r in &batch {
            println!("{}", r.table_row());
        }
        reports.extend(batch);
    }
    if let Some(dir) = &cli.output {
        write_outputs(dir, &reports)?;
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
