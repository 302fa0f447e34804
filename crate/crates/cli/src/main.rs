use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sweepbec_cli::{check, presets, run, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "sweepbec", version, about = "Condensate excitation by a swept potential dip")]
struct Cli {
    /// worker threads for parallel stages (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its data and manifest.
    Run(Source),
    /// Run, then compare headline metrics with the expected ranges (exit 4 on a miss).
    Check(Source),
    /// Print the built-in presets.
    ListPresets,
    /// Print the resolved configuration as TOML.
    DumpConfig(Selection),
}

#[derive(Args)]
struct Selection {
    /// TOML configuration file
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// built-in preset name
    #[arg(long)]
    preset: Option<String>,
    /// override a key, e.g. `--set dt=5e-4` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct Source {
    #[command(flatten)]
    selection: Selection,
    /// output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn resolve(sel: &Selection) -> Result<ExperimentConfig, CliError> {
    let base = match (&sel.config, &sel.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => presets::preset(name)?,
        (None, None) => return Err(CliError::Validation(vec!["need --config or --preset".into()])),
    };
    base.with_overrides(&sel.overrides)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(vec![format!("threads: {e}")]))?;
    }
    match cli.command {
        Command::ListPresets => {
            for cfg in presets::all() {
                println!("{:<16} {:<13} {}", cfg.name, format!("{:?}", cfg.kind).to_lowercase(), cfg.citation);
            }
            Ok(())
        }
        Command::DumpConfig(sel) => {
            print!("{}", resolve(&sel)?.to_toml());
            Ok(())
        }
        Command::Run(src) => {
            let cfg = resolve(&src.selection)?;
            let manifest = run(&cfg, &src.out)?;
            for (k, v) in &manifest.metrics {
                println!("{k} = {v}");
            }
            Ok(())
        }
        Command::Check(src) => {
            let cfg = resolve(&src.selection)?;
            let manifest = run(&cfg, &src.out)?;
            let lines = check(&cfg, &manifest);
            for line in &lines {
                println!("{line}");
            }
            match lines.iter().filter(|l| !l.pass).count() {
                0 => Ok(()),
                n => Err(CliError::CheckFailed(n)),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sweepbec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
