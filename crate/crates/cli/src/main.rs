use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use commands::{Run, RunError};
use config::RunConfig;

/// Numerical experiments on cusp maps.
#[derive(Debug, Parser)]
#[command(name = "cusplab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file with run parameters; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: RunConfig,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Map value and log-derivative on a grid.
    EvalGrid,
    Lyapunov,
    /// Integrability of log|Df| near a singular point.
    Classify,
    /// Word-count entropy over the branch partition.
    Entropy,
    /// Local dimension of the invariant or a Bernoulli measure.
    Dimension,
    /// Histogram of the invariant density.
    Density,
    /// Induced Markov map statistics by depth.
    Induce,
    /// Invariant density spread from an induced map.
    Spread,
    /// Pullbacks of an interval along a random backward orbit.
    Pullback,
    /// Bracketing series for the infinite-exponent example.
    Series,
    /// One operation over a list of alpha values, in parallel.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::EvalGrid => "eval-grid",
            Command::Lyapunov => "lyapunov",
            Command::Classify => "classify",
            Command::Entropy => "entropy",
            Command::Dimension => "dimension",
            Command::Density => "density",
            Command::Induce => "induce",
            Command::Spread => "spread",
            Command::Pullback => "pullback",
            Command::Series => "series",
            Command::Sweep => "sweep",
        }
    }
}

fn threads() -> Run<Option<usize>> {
    match std::env::var("CUSPLAB_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(RunError::Config(format!("CUSPLAB_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

fn run(cli: Cli) -> Run<()> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_toml(&text)?.overlay(&cli.flags)
        }
        None => cli.flags.clone(),
    };
    let json = match cfg.format.as_deref() {
        None | Some("csv") => false,
        Some("json") => true,
        Some(other) => return Err(RunError::Config(format!("unknown format {other:?}"))),
    };
    let table = match cli.command {
        Command::EvalGrid => commands::eval_grid(&cfg),
        Command::Lyapunov => commands::lyapunov(&cfg),
        Command::Classify => commands::classify(&cfg),
        Command::Entropy => commands::entropy(&cfg),
        Command::Dimension => commands::dimension(&cfg),
        Command::Density => commands::density(&cfg),
        Command::Induce => commands::induce(&cfg),
        Command::Spread => commands::spread(&cfg),
        Command::Pullback => commands::pullback(&cfg),
        Command::Series => commands::series(&cfg),
        Command::Sweep => commands::sweep(&cfg, threads()?),
    }?;

    let name = cli.command.name();
    let hash = cfg.hash(name);
    let sink: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(
            File::create(path).map_err(|e| RunError::Config(format!("cannot write {}: {e}", path.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    let written = if json {
        table.write_json(&mut sink, name, &hash)
    } else {
        table.write_csv(&mut sink, &hash)
    };
    written
        .and_then(|_| sink.flush())
        .map_err(|e| RunError::Numerical(format!("write failed: {e}")))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = serde_json::to_string(&e.message().replace('\n', " ")).expect("string serializes");
            eprintln!("error kind={} message={message}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
