use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use morphoscape::cooptimize::cmd_coopt;
use morphoscape::report::cmd_report;
use morphoscape::sweep::cmd_sweep;
use morphoscape::train::cmd_train;
use morphoscape::{PipelineError, RunConfig, Scale};

/// Design-landscape sweep, optimizer training study and co-optimization study
/// for a two-sensor phototactic robot.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Compute learnability and interference resistance for every grid design.
    Sweep,
    /// Train sampled designs with every optimizer; correlate effort with the metrics.
    Train,
    /// Compare free-design and fixed-baseline co-optimization.
    Coopt,
    /// Collect headline numbers of a finished output directory into report.json.
    Report,
}

#[derive(Args)]
struct Common {
    /// JSON file overriding the scale defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Resolution preset.
    #[arg(long, global = true, value_parser = ["desk", "paper"])]
    scale: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reuse completed work in the output directory.
    #[arg(long, global = true)]
    resume: bool,
}

fn resolve(c: &Common) -> morphoscape::Result<RunConfig> {
    let scale = c.scale.as_deref().and_then(Scale::parse);
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path, scale)?,
        None => RunConfig::defaults(scale.unwrap_or(Scale::Desk)),
    };
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    if let Some(out) = &c.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> morphoscape::Result<()> {
    let cfg = resolve(&cli.common)?;
    let resume = cli.common.resume;
    match cli.command {
        Command::Sweep => {
            let metrics = cmd_sweep(&cfg, resume)?;
            eprintln!("sweep: {} designs -> {}", metrics.len(), cfg.out.display());
        }
        Command::Train => {
            let s = cmd_train(&cfg, resume)?;
            eprintln!("train: {} runs, {} design-method rows", s.training_rows, s.efficiency_rows);
            for c in &s.correlations {
                eprintln!("  {:<5} {:<6} r={:+.4} p={:.3e} n={}", c.metric, c.method, c.r, c.p, c.n);
            }
        }
        Command::Coopt => {
            let s = cmd_coopt(&cfg, resume)?;
            eprintln!(
                "coopt: mean final success free={:.3} fixed={:.3}, U={} p(free>fixed)={:.3e}",
                s.mean_free, s.mean_fixed, s.u, s.p_greater
            );
        }
        Command::Report => {
            let r = cmd_report(&cfg.out)?;
            println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are configuration errors; --help and --version succeed.
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let PipelineError::Compute(inner) = &e {
                for cause in inner.chain().skip(1) {
                    eprintln!("  caused by: {cause}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
