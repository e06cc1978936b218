use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tritree::bench::{self, ExperimentConfig, NamedDataset};
use tritree::biasdemo::{self, BiasScenario};
use tritree::data::read_features;
use tritree::synth::{self, SynthConfig};
use tritree::{load_csv, ColumnKind, Error, LeafValue, Result, Scenario, Schema, Strategy, TaskKind, TrainConfig, Tree};

#[derive(Parser)]
#[command(name = "tritree", version, about = "Decision trees with missing-value strategies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Censoring benchmark over a grid of missingness levels.
    Run(RunArgs),
    /// Train one tree and optionally save it.
    Train(TrainArgs),
    /// Predict with a saved tree.
    Predict(PredictArgs),
    /// Print a saved tree.
    Render {
        #[arg(long)]
        tree: PathBuf,
    },
    /// Monte-Carlo estimate of left-leaf bias per strategy.
    Bias(BiasArgs),
    /// Write the synthetic benchmark dataset.
    Synth {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SchemaArgs {
    /// TOML schema; overrides --target, --task and --categorical.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long, default_value = "regression")]
    task: TaskKind,
    /// Comma-separated categorical columns.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
}

impl SchemaArgs {
    fn resolve(&self) -> Result<Schema> {
        if let Some(path) = &self.schema {
            return Schema::from_toml_file(path);
        }
        let target = self
            .target
            .clone()
            .ok_or_else(|| Error::Config("either --schema or --target is required".into()))?;
        Ok(self
            .categorical
            .iter()
            .fold(Schema::new(target, self.task), |s, c| s.with_kind(c, ColumnKind::Categorical)))
    }
}

#[derive(Args)]
struct RunArgs {
    /// CSV file; repeat for several datasets.
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    #[command(flatten)]
    schema: SchemaArgs,
    #[arg(long, value_delimiter = ',', default_value = "majority,mia,fc,trinary,trinary-mia")]
    strategies: Vec<Strategy>,
    #[arg(long, value_delimiter = ',', default_value = "mcar,mcar-test,im")]
    scenario: Vec<Scenario>,
    #[arg(long, default_value = "0:0.9:0.1")]
    q_grid: String,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 5)]
    max_depth: usize,
    #[arg(long, default_value_t = 5)]
    min_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    schema: SchemaArgs,
    #[arg(long, default_value = "trinary")]
    strategy: Strategy,
    #[arg(long, default_value_t = 5)]
    depth: usize,
    #[arg(long, default_value_t = 5)]
    min_samples: usize,
    #[arg(long)]
    dump_tree: Option<PathBuf>,
    /// Print the tree to stdout.
    #[arg(long)]
    render: bool,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Extra tokens read as missing, besides "", "NA" and "nan".
    #[arg(long, value_delimiter = ',')]
    missing: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BiasArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    b: f64,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0.3)]
    q: f64,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?),
        None => Box::new(io::stdout().lock()),
    })
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn run(args: RunArgs) -> Result<()> {
    let schema = args.schema.resolve()?;
    let datasets = args
        .data
        .iter()
        .map(|p| {
            Ok(NamedDataset {
                name: dataset_name(p),
                data: load_csv(p, &schema)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cfg = ExperimentConfig {
        strategies: args.strategies,
        scenarios: args.scenario,
        q_grid: bench::parse_q_grid(&args.q_grid)?,
        folds: args.folds,
        max_depth: args.max_depth,
        min_samples: args.min_samples,
        seed: args.seed,
    };
    let records = bench::run_experiment(&datasets, &cfg)?;
    bench::write_records(&records, output(args.out.as_deref())?)
}

fn train(args: TrainArgs) -> Result<()> {
    let schema = args.schema.resolve()?;
    let ds = load_csv(&args.data, &schema)?;
    let tree = tritree::tree::train_all(&ds, &TrainConfig::new(args.strategy, args.depth, args.min_samples))?;
    if let Some(path) = &args.dump_tree {
        tree.save(path)?;
    }
    let eval = tree.evaluate(&ds)?;
    if args.render {
        print!("{}", tree.render());
    }
    eprintln!(
        "trained {} tree: {} nodes, depth {}, training loss {}",
        args.strategy,
        tree.n_nodes(),
        tree.depth(),
        eval.loss
    );
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    let tree = Tree::load(&args.tree)?;
    let mut schema = Schema::new(tree.target.clone(), TaskKind::Regression);
    schema.missing_tokens.extend(args.missing);
    for f in &tree.features {
        schema = schema.with_kind(f.name.clone(), f.kind);
    }
    let file = File::open(&args.data).map_err(|e| Error::Io {
        path: args.data.clone(),
        source: e,
    })?;
    // Only the tree's own columns are typed; anything else is dropped.
    let header = csv::Reader::from_path(&args.data)?.headers()?.clone();
    schema.ignore = header
        .iter()
        .map(str::trim)
        .filter(|h| *h != tree.target && !tree.features.iter().any(|f| f.name == *h))
        .map(str::to_string)
        .collect();
    let preds = tree.predict_columns(&read_features(file, &schema)?)?;

    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    let mut head = vec!["prediction".to_string()];
    head.extend(tree.classes.iter().map(|c| format!("p_{c}")));
    w.write_record(&head)?;
    for p in &preds {
        let mut rec = match p {
            LeafValue::Real(v) => vec![v.to_string()],
            LeafValue::Probs(_) => vec![tree.classes[p.point() as usize].clone()],
        };
        if let Some(probs) = p.probs() {
            rec.extend(probs.iter().map(f64::to_string));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::Config(e.to_string()))?;
    Ok(())
}

fn bias(args: BiasArgs) -> Result<()> {
    let sc = BiasScenario {
        a: args.a,
        b: args.b,
        p: args.p,
        q: args.q,
        sigma: args.sigma,
        n: args.n,
        reps: args.reps,
        seed: args.seed,
    };
    let results = biasdemo::simulate_all(&sc)?;
    biasdemo::write_results(&results, output(args.out.as_deref())?)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => run(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Render { tree } => {
            print!("{}", Tree::load(tree)?.render());
            Ok(())
        }
        Command::Bias(a) => bias(a),
        Command::Synth { n, seed, out } => {
            let ds = synth::generate(&SynthConfig {
                n,
                seed,
                ..SynthConfig::default()
            })?;
            ds.write_csv(output(out.as_deref())?)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
