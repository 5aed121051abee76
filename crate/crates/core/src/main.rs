use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use renormlab::scenario::{execute, library::library, ScenarioConfig, ScenarioError};

#[derive(Debug, Parser)]
#[command(name = "renormlab", version, about = "Batch runner for rescaling, normality and tube scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario config and write its JSON report and CSV data.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, short)]
        verbose: bool,
    },
    /// Print the built-in expressions, curves and domains as JSON.
    List,
}

fn init_threads() -> Result<(), ScenarioError> {
    let Ok(v) = std::env::var("RENORMLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| ScenarioError::Parse(format!("RENORMLAB_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ScenarioError::Io(e.to_string()))
}

fn run(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>, verbose: bool) -> Result<(), ScenarioError> {
    init_threads()?;
    let text = std::fs::read_to_string(&config)
        .map_err(|e| ScenarioError::Parse(format!("cannot read {}: {e}", config.display())))?;
    let cfg = ScenarioConfig::parse(&text).map_err(|e| match e {
        ScenarioError::Parse(m) => ScenarioError::Parse(format!("{}: {m}", config.display())),
        other => other,
    })?;
    let out = out.or_else(|| {
        cfg.output
            .dir
            .as_ref()
            .map(|d| config.parent().unwrap_or(std::path::Path::new(".")).join(d))
    });
    if verbose {
        eprintln!("running {} scenario from {}", cfg.kind.table(), config.display());
    }
    let (outcome, written) = execute(&cfg, seed, out.as_deref())?;
    if verbose {
        for p in &written {
            eprintln!("wrote {}", p.display());
        }
    }
    println!("{}", serde_json::to_string(&outcome.status).unwrap_or_default().trim_matches('"'));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            verbose,
        } => run(config, seed, out, verbose),
        Command::List => serde_json::to_string_pretty(&library())
            .map(|s| println!("{s}"))
            .map_err(|e| ScenarioError::Io(e.to_string())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
