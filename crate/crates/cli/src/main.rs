use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use alge_cli::commands::{self, Context};
use alge_cli::config::GraphSource;
use alge_cli::{CliError, RunConfig};

/// Influence prediction with actively sampled fine-tuning, and greedy
/// influence maximization.
#[derive(Debug, Parser)]
#[command(name = "alge", version)]
struct Cli {
    /// Config file (key = value lines). Defaults apply to missing keys.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Override one config key, e.g. `--set runs=200`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Worker threads for the parallel stages (0 = all cores). Outputs do not
    /// depend on it.
    #[arg(long, default_value_t = 0, global = true)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic graph, e.g. `generate "ba n=200 m=3 seed=7" -o g.edges`.
    Generate {
        spec: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Monte Carlo influence of every node (or of the nodes in `--nodes`).
    Simulate {
        graph: PathBuf,
        /// Representative-set file restricting which nodes are simulated.
        #[arg(long)]
        nodes: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train the basic predictor on `<name>.edges` + `<name>.influence.csv` pairs.
    Pretrain {
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Select representative nodes of a graph.
    Sample {
        graph: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fine-tune a predictor on labeled nodes of a graph.
    Finetune {
        graph: PathBuf,
        params: PathBuf,
        labels: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Predict the influence of every node.
    Predict {
        graph: PathBuf,
        params: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Greedy seed selection, multi-seed spreading curve and overlap report.
    Imp {
        graph: PathBuf,
        influence: PathBuf,
        #[arg(short, long)]
        k: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Kendall tau, MSE and (with a panel directory) disputation.
    Evaluate {
        prediction: PathBuf,
        truth: PathBuf,
        /// Directory of rank tables forming the disputation panel.
        #[arg(long)]
        panel: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Every stage end to end; artifacts go to `output_dir`.
    Pipeline {
        /// Overrides `output_dir`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?,
        None => String::new(),
    };
    for kv in &cli.overrides {
        if !kv.contains('=') {
            return Err(CliError::usage(format!("--set expects KEY=VALUE, got {kv:?}")));
        }
        text.push('\n');
        text.push_str(kv);
    }
    match &cli.command {
        Command::Imp { k: Some(k), .. } => text.push_str(&format!("\nk = {k}")),
        Command::Pipeline { output: Some(dir) } => text.push_str(&format!("\noutput_dir = {}", dir.display())),
        _ => {}
    }
    RunConfig::parse(&text)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }
    let ctx = Context::new(load_config(&cli)?);
    match &cli.command {
        Command::Generate { spec, output } => commands::cmd_generate(&ctx, &GraphSource::parse_spec(spec)?, output),
        Command::Simulate { graph, nodes, output } => commands::cmd_simulate(&ctx, graph, nodes.as_deref(), output),
        Command::Pretrain { corpus, output } => commands::cmd_pretrain(&ctx, corpus, output),
        Command::Sample { graph, output } => commands::cmd_sample(&ctx, graph, output),
        Command::Finetune {
            graph,
            params,
            labels,
            output,
        } => commands::cmd_finetune(&ctx, graph, params, labels, output),
        Command::Predict { graph, params, output } => commands::cmd_predict(&ctx, graph, params, output),
        Command::Imp {
            graph,
            influence,
            output,
            ..
        } => commands::cmd_imp(&ctx, graph, influence, output),
        Command::Evaluate {
            prediction,
            truth,
            panel,
            output,
        } => commands::cmd_evaluate(&ctx, prediction, truth, panel.as_deref(), output),
        Command::Pipeline { .. } => commands::cmd_pipeline(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("alge: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
