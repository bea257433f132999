//! Command-line front end: homophily metrics, model sweeps, classifier-based
//! performance metrics, synthetic graph generation, and the embedding
//! proportion test. Emits JSON for reports and CSV for curves.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use homoscope_core::cpm::{
    cpm_pvalue, prop_pvalue, prop_statistic, Classifier, CpmConfig, PropConfig,
};
use homoscope_core::csbmh::{default_h_grid, sweep, MeasureSet, SweepConfig};
use homoscope_core::error::Error;
use homoscope_core::graph::{AggregationKind, FeatureMatrix, Graph, LoadOptions};
use homoscope_core::homophily::homophily_report;
use homoscope_core::synthgen::{
    generate_csbmh_graph, generate_homophily_graph, FeatureSource, GenManifest, HomophilyGenSpec,
};

#[derive(Parser)]
#[command(name = "homoscope", version)]
#[command(about = "Training-free prediction of when graph-aware models beat graph-agnostic ones")]
struct Cli {
    /// RNG seed for the seeded subcommands
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (0 = all cores); the HOMOSCOPE_THREADS env var is the fallback
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Force JSON output
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,

    /// Force CSV output
    #[arg(long, global = true)]
    csv: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Homophily metrics of a labeled graph (JSON report by default)
    Metrics(MetricsArgs),
    /// Distinguishability measures across a homophily grid (CSV curves by default)
    Sweep(SweepArgs),
    /// Classifier-based performance metric over a graph with features
    Cpm(CpmArgs),
    /// Generate synthetic datasets
    #[command(subcommand)]
    Gen(GenCommand),
    /// Proportion test between two directories of embedding runs
    Prop(PropArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AggChoice {
    Rw,
    Sym,
}

fn aggregation(agg: AggChoice, self_loops: bool) -> AggregationKind {
    let base = match agg {
        AggChoice::Rw => AggregationKind::random_walk(),
        AggChoice::Sym => AggregationKind::symmetric(),
    };
    if self_loops {
        base.with_self_loops()
    } else {
        base
    }
}

#[derive(Args)]
struct GraphInputArgs {
    /// Edge list file: `u v` per line, `#` comments allowed
    #[arg(long)]
    edges: PathBuf,

    /// Label file: one class id per line, line i labels node i
    #[arg(long)]
    labels: PathBuf,

    /// Treat the edge list as undirected (mirror every edge)
    #[arg(long)]
    undirected: bool,

    /// Keep self-loops instead of rejecting them
    #[arg(long)]
    self_loops: bool,

    /// Aggregation operator
    #[arg(long, value_enum, default_value = "rw")]
    agg: AggChoice,

    /// Add self-loops to the aggregation operator
    #[arg(long)]
    agg_self_loops: bool,
}

impl GraphInputArgs {
    fn load(&self) -> Result<Graph, Error> {
        Graph::load(
            &self.edges,
            &self.labels,
            LoadOptions {
                directed: !self.undirected,
                allow_self_loops: self.self_loops,
            },
        )
    }

    fn aggregation(&self) -> AggregationKind {
        aggregation(self.agg, self.agg_self_loops)
    }
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    input: GraphInputArgs,

    /// Optional feature CSV enabling the generalized edge homophily metric
    #[arg(long)]
    features: Option<PathBuf>,

    /// Exclude each node's own aggregated row from its same-label multiset
    #[arg(long)]
    exclude_self: bool,

    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config: mu0, mu1, sigma0_sq, sigma1_sq, d0, d1, prior_p0?, h_grid?
    #[arg(long)]
    config: PathBuf,

    /// Comma-separated subset of pbe,dngj,nswd,nshd
    #[arg(long, default_value = "pbe,dngj,nswd,nshd")]
    measures: String,

    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierChoice {
    KrNngp,
    KrLinear,
    Gnb,
}

#[derive(Args)]
struct CpmArgs {
    #[command(flatten)]
    input: GraphInputArgs,

    #[arg(long)]
    features: PathBuf,

    #[arg(long, value_enum, default_value = "kr-nngp")]
    classifier: ClassifierChoice,

    /// Nodes sampled per round (clamped to the node count)
    #[arg(long, default_value_t = 500)]
    samples: usize,

    #[arg(long, default_value_t = 100)]
    repeats: usize,

    #[arg(long, default_value_t = 0.6)]
    train_frac: f64,

    /// Ridge jitter scale for the kernel-regression solve
    #[arg(long, default_value_t = 1e-8)]
    ridge: f64,

    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Sample a directed two-class model graph with Gaussian features
    Csbmh(GenCsbmhArgs),
    /// Build an undirected graph with a controlled edge homophily level
    Homophily(GenHomophilyArgs),
}

#[derive(Args)]
struct GenCsbmhArgs {
    /// JSON parameter file: mu0, mu1, sigma0_sq, sigma1_sq, d0, d1, h, prior_p0?
    #[arg(long)]
    config: PathBuf,

    #[arg(long)]
    n0: usize,

    #[arg(long)]
    n1: usize,

    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct GenHomophilyArgs {
    #[arg(long, default_value_t = 5)]
    classes: usize,

    #[arg(long, default_value_t = 400)]
    per_class: usize,

    #[arg(long, default_value_t = 4000)]
    intra_edges: usize,

    /// Target edge homophily in (0, 1]
    #[arg(long)]
    target_h: f64,

    /// Gaussian blob dimensionality (ignored with --features-file)
    #[arg(long, default_value_t = 5)]
    feature_dim: usize,

    /// Gaussian blob center spread (ignored with --features-file)
    #[arg(long, default_value_t = 2.0)]
    spread: f64,

    /// Reuse rows of this CSV as node features, permuted within class blocks
    #[arg(long)]
    features_file: Option<PathBuf>,

    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PropArgs {
    /// Directory of embedding CSVs for the first model
    #[arg(long)]
    embeddings_a: PathBuf,

    /// Directory of embedding CSVs for the second model
    #[arg(long)]
    embeddings_b: PathBuf,

    #[arg(long)]
    labels: PathBuf,

    /// Per-node significance level
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Sampled distances per node and side
    #[arg(long, default_value_t = 300)]
    pairs: usize,

    #[arg(long)]
    out: PathBuf,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Parse { .. } | Error::Invalid(_) => 2,
        Error::UndefinedMetric { .. } | Error::DegenerateNodes { .. } => 3,
        Error::Accuracy { .. } | Error::Solver(_) | Error::Classifier { .. } => 4,
    }
}

fn write_out(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Metrics(args) => {
            let g = args.input.load()?;
            let features = args
                .features
                .as_deref()
                .map(|p| FeatureMatrix::load_csv(p, g.n_nodes()))
                .transpose()?;
            let report = homophily_report(
                &g,
                features.as_ref(),
                args.input.aggregation(),
                !args.exclude_self,
            )?;
            let text = if cli.csv {
                report.to_csv()
            } else {
                serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
            };
            write_out(&args.out, &text)
        }
        Command::Sweep(args) => {
            let config = SweepConfig::load(&args.config)?;
            let measures = MeasureSet::parse(&args.measures)?;
            let grid = config.h_grid.clone().unwrap_or_else(default_h_grid);
            let result = sweep(&config.params, &grid, measures)?;
            let text = if cli.json {
                serde_json::to_string_pretty(&result).expect("sweep serializes") + "\n"
            } else {
                result.to_csv()
            };
            write_out(&args.out, &text)
        }
        Command::Cpm(args) => {
            let g = args.input.load()?;
            let x = FeatureMatrix::load_csv(&args.features, g.n_nodes())?;
            let cfg = CpmConfig {
                n_sample: args.samples,
                train_fraction: args.train_frac,
                repeats: args.repeats,
                seed: cli.seed,
                classifier: match args.classifier {
                    ClassifierChoice::KrNngp => Classifier::KrNngp,
                    ClassifierChoice::KrLinear => Classifier::KrLinear,
                    ClassifierChoice::Gnb => Classifier::Gnb,
                },
                aggregation: args.input.aggregation(),
                ridge: args.ridge,
            };
            let report = cpm_pvalue(&g, &x, &cfg)?;
            if report.clamped {
                eprintln!(
                    "warning: --samples {} clamped to the {} labeled nodes",
                    args.samples, report.n_sample_used
                );
            }
            let text = if cli.csv {
                let mut s = String::from("round,acc_x,acc_h\n");
                for (i, (ax, ah)) in report.acc_x.iter().zip(&report.acc_h).enumerate() {
                    s.push_str(&format!("{i},{ax},{ah}\n"));
                }
                s
            } else {
                serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
            };
            write_out(&args.out, &text)
        }
        Command::Gen(GenCommand::Csbmh(args)) => {
            let config = SweepConfig::load(&args.config)?;
            let sample = generate_csbmh_graph(&config.params, args.n0, args.n1, cli.seed)?;
            write_dataset(
                &args.out_dir,
                &sample.graph,
                Some(&sample.features),
                cli.seed,
                sample.realized_h,
            )
        }
        Command::Gen(GenCommand::Homophily(args)) => {
            let spec = HomophilyGenSpec {
                n_classes: args.classes,
                nodes_per_class: args.per_class,
                intra_edges_per_class: args.intra_edges,
                target_h_edge: args.target_h,
                feature_source: match args.features_file {
                    Some(path) => FeatureSource::FromFile(path),
                    None => FeatureSource::GaussianBlobs {
                        dim: args.feature_dim,
                        spread: args.spread,
                    },
                },
                seed: cli.seed,
            };
            let (graph, features, realized) = generate_homophily_graph(&spec)?;
            write_dataset(&args.out_dir, &graph, Some(&features), cli.seed, realized)
        }
        Command::Prop(args) => {
            let labels = homoscope_core::graph::load_labels(&args.labels)?;
            let cfg = PropConfig {
                pairs_per_node: args.pairs,
                alpha: args.alpha,
                seed: cli.seed,
            };
            let props_a = prop_over_dir(&args.embeddings_a, &labels, &cfg)?;
            let props_b = prop_over_dir(&args.embeddings_b, &labels, &cfg)?;
            let test = prop_pvalue(&props_a, &props_b)?;
            let text = if cli.csv {
                let mut s = String::from("run,prop_a,prop_b\n");
                for i in 0..props_a.len().max(props_b.len()) {
                    let a = props_a.get(i).map(|v| v.to_string()).unwrap_or_default();
                    let b = props_b.get(i).map(|v| v.to_string()).unwrap_or_default();
                    s.push_str(&format!("{i},{a},{b}\n"));
                }
                s
            } else {
                let payload = serde_json::json!({
                    "props_a": props_a,
                    "props_b": props_b,
                    "t_stat": test.t_stat,
                    "dof": test.dof,
                    "p_value": test.p_value,
                });
                serde_json::to_string_pretty(&payload).expect("payload serializes") + "\n"
            };
            write_out(&args.out, &text)
        }
    }
}

fn prop_over_dir(dir: &Path, labels: &[u32], cfg: &PropConfig) -> Result<Vec<f64>, Error> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::Io {
            path: dir.into(),
            source: e,
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Invalid(format!(
            "no .csv embedding files in {}",
            dir.display()
        )));
    }
    let mut props = Vec::with_capacity(files.len());
    for file in files {
        let emb = FeatureMatrix::load_csv(&file, labels.len())?;
        props.push(prop_statistic(&emb, labels, cfg)?.prop);
    }
    Ok(props)
}

fn write_dataset(
    dir: &Path,
    graph: &Graph,
    features: Option<&FeatureMatrix>,
    seed: u64,
    realized_h_edge: f64,
) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.into(),
        source: e,
    })?;
    graph.write_edges(&dir.join("edges.txt"))?;
    graph.write_labels(&dir.join("labels.txt"))?;
    if let Some(x) = features {
        x.write_csv(&dir.join("features.csv"))?;
    }
    let manifest = GenManifest {
        n_nodes: graph.n_nodes(),
        n_classes: graph.n_classes(),
        n_edges: graph.n_edges(),
        directed: graph.directed(),
        seed,
        realized_h_edge,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_out(&dir.join("manifest.json"), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = if cli.threads > 0 {
        cli.threads
    } else {
        std::env::var("HOMOSCOPE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0)
    };
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
