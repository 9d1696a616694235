use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use frac_halfspace::campaigns;
use frac_halfspace::config::{Campaign, Config};
use frac_halfspace::report;
use frac_halfspace::HarnessError;

#[derive(Parser)]
#[command(name = "frac-halfspace", version, about = "Fractional half-space solver campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run campaigns. Extra `--block.key=value` arguments override the config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Campaign to run (repeatable); defaults to the config list, then all.
        #[arg(long = "campaign")]
        campaigns: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Force the canonical-order reduction.
        #[arg(long)]
        deterministic: bool,
    },
    /// Summarize a run directory into summary.json and summary.txt.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Splits `--block.key=value` overrides from the arguments clap understands.
fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<String>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for a in args {
        let key = a.strip_prefix("--").and_then(|b| b.split_once('=')).map(|(k, _)| k);
        if key.is_some_and(|k| k.contains('.')) {
            overrides.push(a[2..].to_string());
        } else {
            rest.push(a);
        }
    }
    (rest, overrides)
}

fn execute(cli: Cli, overrides: Vec<String>) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Run {
            config,
            campaigns: names,
            out,
            deterministic,
        } => {
            let mut overrides = overrides;
            if deterministic {
                overrides.push("solver.deterministic=true".into());
            }
            let config = Config::load(&config, &overrides)?;
            let chosen = names
                .iter()
                .map(|n| Campaign::parse(n))
                .collect::<Result<Vec<_>, _>>()?;
            let selection = config.selection(&chosen);
            let out = out.unwrap_or_else(|| config.output_dir.clone());
            let records = campaigns::run(config, &selection, &out)?;
            Ok(records.iter().all(|r| r.passed))
        }
        Command::Report { out } => {
            if !overrides.is_empty() {
                return Err(HarnessError::Config("report takes no overrides".into()));
            }
            let summary = report::report(&out)?;
            print!("{}", report::render_table(&summary));
            Ok(summary.status == "pass")
        }
    }
}

fn main() -> ExitCode {
    let (args, overrides) = split_overrides(std::env::args().collect());
    let cli = Cli::parse_from(args);
    match execute(cli, overrides) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
