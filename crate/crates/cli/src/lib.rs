//! Scenario runner behind the `netsense` binary.
//!
//! Each invocation reads one configuration file, runs one scenario and writes
//! CSV results, `plot.csv` and `manifest.txt` into the output directory.

pub mod config;
pub mod error;
pub mod report;
pub mod scenario;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{parse_config, parse_config_text, RunConfig, ScenarioKind};
pub use error::CliError;
pub use report::{emit_report, RunManifest};
pub use scenario::run_scenario;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "NETSENSE_OUT";

#[derive(Debug, Parser)]
#[command(name = "netsense", version, about = "Private networked quantum sensing: simulation and bound audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Verb,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// Run configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; defaults to `run.out`, then $NETSENSE_OUT, then `netsense-out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `run.trials`.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Reject unknown sections and keys.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set, num_args = 0..=1, default_missing_value = "true")]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Quantum Fisher information matrix at a parameter point.
    Qfim(CommonArgs),
    /// Privacy measures and security bounds.
    Privacy(CommonArgs),
    /// Honest parity sweep and estimator variance.
    Simulate(CommonArgs),
    /// Distinguishing advantage between the concrete and simulated systems.
    Advantage(CommonArgs),
    /// Equivalent-class search against every bound.
    Audit(CommonArgs),
    /// Composition with a verification stage.
    Compose(CommonArgs),
}

impl Verb {
    pub fn split(&self) -> (ScenarioKind, &CommonArgs) {
        match self {
            Verb::Qfim(a) => (ScenarioKind::Qfim, a),
            Verb::Privacy(a) => (ScenarioKind::Privacy, a),
            Verb::Simulate(a) => (ScenarioKind::Simulate, a),
            Verb::Advantage(a) => (ScenarioKind::Advantage, a),
            Verb::Audit(a) => (ScenarioKind::Audit, a),
            Verb::Compose(a) => (ScenarioKind::Compose, a),
        }
    }
}

fn output_dir(args: &CommonArgs, cfg: Option<&RunConfig>) -> PathBuf {
    args.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out.clone()))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("netsense-out"))
}

/// Parse, resolve and run; returns the manifest and the directory it was written to.
pub fn run_verb(verb: ScenarioKind, args: &CommonArgs) -> Result<(RunManifest, PathBuf), (CliError, Option<PathBuf>)> {
    let cfg = parse_config(&args.config, args.strict)
        .and_then(|c| c.resolve(verb, args.seed, args.trials))
        .map_err(|e| (e, None))?;
    let out = output_dir(args, Some(&cfg));
    match run_scenario(&cfg, &out) {
        Ok(mut m) => {
            m.write(&out).map_err(|e| (e, Some(out.clone())))?;
            Ok((m, out))
        }
        Err(e) => {
            let mut m = RunManifest::new(verb.name(), &cfg.hash, cfg.seed);
            m.error = Some(e.to_string());
            // The manifest records the failure; a write error here must not hide the original one.
            let _ = m.write(&out);
            Err((e, Some(out)))
        }
    }
}

/// Entry point shared by the binary and the tests. Returns the process exit status.
pub fn run(cli: &Cli) -> u8 {
    let (verb, args) = cli.command.split();
    match run_verb(verb, args) {
        Ok((m, out)) => match emit_report(&m, &out) {
            Ok(table) => {
                print!("{table}");
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Err((e, out)) => {
            eprintln!("error: {e}");
            if let Some(out) = out {
                eprintln!("manifest: {}", Path::new(&out).join("manifest.txt").display());
            }
            e.exit_code()
        }
    }
}
