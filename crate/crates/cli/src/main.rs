use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use imbal_core::pipeline::{
    cmd_balance, cmd_bench, cmd_evaluate, cmd_inspect, cmd_prune, cmd_train, cmd_tune, render_text, PipelineConfig,
    PipelineError, PolicyKind,
};

/// Benchmark binary classifiers on imbalanced tabular data, with SMOTE or
/// GAN oversampling and a weighted voting ensemble.
#[derive(Parser, Debug)]
#[command(name = "imbal", version)]
struct Cli {
    /// Run configuration (TOML). Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Input CSV with a binary label column.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    label_column: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print row, column and class counts.
    Inspect,
    /// Drop columns that correlate above a threshold with an earlier column.
    Prune {
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Oversample the minority class of the whole input.
    Balance {
        #[arg(long, value_enum)]
        policy: Option<Policy>,
    },
    /// Search hyperparameters of the GAN or of one preset.
    Tune {
        /// "gan" or a preset name such as "xgb-paper".
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 50)]
        n_trials: usize,
        /// Search space TOML; defaults to the one shipped for the target.
        #[arg(long)]
        space: Option<PathBuf>,
    },
    /// Fit the weighted ensemble on the whole input.
    Train {
        #[arg(long, value_enum)]
        policy: Option<Policy>,
    },
    /// Score a trained ensemble on the input.
    Evaluate {
        /// Defaults to <out-dir>/model.
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
    /// Cross-validate every model and the ensemble on all three dataset variants.
    Bench {
        /// Balance the whole dataset before folding, as in the published protocol.
        #[arg(long)]
        paper_mode: bool,
        #[arg(long)]
        folds: Option<usize>,
        /// Score on one stratified holdout of this fraction instead of k-fold CV.
        #[arg(long)]
        holdout: Option<f64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Policy {
    None,
    Smote,
    Gan,
}

impl From<Policy> for PolicyKind {
    fn from(p: Policy) -> Self {
        match p {
            Policy::None => PolicyKind::None,
            Policy::Smote => PolicyKind::Smote,
            Policy::Gan => PolicyKind::Gan,
        }
    }
}

fn build_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = &cli.input {
        cfg.input = Some(v.clone());
    }
    if let Some(v) = &cli.label_column {
        cfg.label_column = v.clone();
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.jobs {
        cfg.jobs = v;
    }
    if let Some(v) = &cli.out_dir {
        cfg.out_dir = v.clone();
    }
    match &cli.command {
        Command::Prune { threshold: Some(t) } => cfg.correlation_threshold = *t,
        Command::Balance { policy: Some(p) } | Command::Train { policy: Some(p) } => cfg.policy = (*p).into(),
        Command::Bench { paper_mode, folds, holdout } => {
            cfg.paper_mode |= *paper_mode;
            if holdout.is_some() {
                cfg.holdout_fraction = *holdout;
            }
            if let Some(k) = folds {
                cfg.folds = *k;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let cfg = build_config(cli)?;
    if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build_global()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Inspect => {
            let s = cmd_inspect(&cfg)?;
            println!("{} rows, {} features", s.rows, s.features);
            println!("{}", s.class_line());
            if !s.constant_columns.is_empty() {
                println!("constant columns: {}", s.constant_columns.join(", "));
            }
        }
        Command::Prune { .. } => {
            let r = cmd_prune(&cfg)?;
            for d in &r.dropped {
                println!("dropped {} (r = {:.4} with {})", d.dropped, d.correlation, d.kept);
            }
            println!("{} columns kept", r.remaining_names.len());
        }
        Command::Balance { .. } => {
            let s = cmd_balance(&cfg)?;
            if s.already_balanced {
                println!("classes already balanced; input written unchanged");
            }
            println!("{} -> {}", s.before.class_line(), s.after.class_line());
            println!("{} synthetic rows ({})", s.synthetic_rows, s.policy);
        }
        Command::Tune { target, n_trials, space } => {
            let best = cmd_tune(&cfg, target, *n_trials, space.as_deref())?;
            println!("best value {:.6} (trial {})", best.value, best.trial);
            println!("{}", serde_json::to_string_pretty(&best.params)?);
        }
        Command::Train { .. } => {
            let s = cmd_train(&cfg)?;
            for m in &s.members {
                println!("{:<10} weighted F1 {:.6}  weight {:.6}", m.label, m.cv.weighted_f1, m.weight);
            }
            println!("model written to {}", s.manifest.display());
        }
        Command::Evaluate { model_dir } => {
            let s = cmd_evaluate(&cfg, model_dir.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&s.report)?);
        }
        Command::Bench { .. } => match cmd_bench(&cfg) {
            Ok(report) => print!("{}", render_text(&report)),
            Err(e @ PipelineError::BenchCells { .. }) => {
                let text = std::fs::read_to_string(cfg.out_dir.join("bench.txt")).unwrap_or_default();
                print!("{text}");
                return Err(e);
            }
            Err(e) => return Err(e),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
