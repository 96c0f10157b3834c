use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use colperc_core::harness::{
    self, load_config, parse_range, run_batch, run_batch_traced, with_malicious_fractions,
    BatchConfig, EpisodeRow, SummaryRow, TraceWriter,
};

/// Collective-perception swarm experiments.
#[derive(Parser)]
#[command(name = "colperc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every episode of a configuration and write CSV results.
    Run(RunArgs),
    /// Run a configuration over a range of malicious fractions.
    Sweep {
        /// Fractions as start:stop:step, stop inclusive.
        #[arg(long, value_name = "RANGE")]
        malicious: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Recompute summary, plot and significance files from episodes.csv.
    Summarize {
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Root seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(
        long,
        value_name = "DIR",
        env = "COLPERC_OUT_DIR",
        default_value = "results"
    )]
    out: PathBuf,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Also write a per-step agent trace to trace.csv.
    #[arg(long)]
    trace: bool,
}

fn load(args: &RunArgs) -> Result<BatchConfig> {
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.root_seed = seed;
        config.template.seed = seed;
    }
    Ok(config)
}

fn execute(config: &BatchConfig, args: &RunArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;
    eprintln!(
        "{}: {} episodes on {} workers",
        config.name,
        config.episode_count(),
        if args.workers == 0 {
            "all".to_string()
        } else {
            args.workers.to_string()
        }
    );
    let rows = if args.trace {
        let mut trace = TraceWriter::create(&args.out.join("trace.csv"))?;
        let rows = run_batch_traced(
            config,
            args.workers,
            Some(|t: &[harness::TraceRow]| trace.write(t).map_err(|e| e.to_string())),
        )?;
        trace.finish()?;
        rows
    } else {
        run_batch(config, args.workers)?
    };
    let summary = harness::emit(&rows, &args.out)?;
    report(&rows, &summary);
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

fn report(rows: &[EpisodeRow], summary: &[SummaryRow]) {
    println!("episodes: {}", rows.len());
    println!(
        "{:<18} {:>6} {:>10} {:<26} {:>6} {:>4} {:>9} {:>9}",
        "weighting", "w_max", "malicious", "kind", "ratio", "n", "accuracy", "minutes"
    );
    for s in summary {
        println!(
            "{:<18} {:>6} {:>10} {:<26} {:>6} {:>4} {:>9} {:>9}",
            s.weighting,
            s.w_max,
            s.malicious_fraction,
            s.kind,
            s.ratio,
            s.n,
            fmt(s.stat("pm3_1").and_then(|x| x.mean)),
            fmt(s.stat("pm3_2").and_then(|x| x.mean)),
        );
    }
}

fn summarize(dir: &Path) -> Result<()> {
    let episodes = dir.join("episodes.csv");
    if !episodes.is_file() {
        bail!("{} not found", episodes.display());
    }
    let rows = harness::read_episodes(&episodes)?;
    if rows.is_empty() {
        bail!("{} has no episodes", episodes.display());
    }
    let summary = harness::write_derived(&rows, dir)?;
    report(&rows, &summary);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => load(&args).and_then(|c| execute(&c, &args)),
        Command::Sweep { malicious, run } => load(&run).and_then(|c| {
            let fractions = parse_range(&malicious).map_err(anyhow::Error::msg)?;
            let c = with_malicious_fractions(c, fractions).map_err(anyhow::Error::msg)?;
            execute(&c, &run)
        }),
        Command::Summarize { input } => summarize(&input),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("colperc: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
