use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use toml::Value;

use dpmeter::commands::{error_sweep, gen_traces, privacy_report, protocol_check};
use dpmeter::config::parse_override;
use dpmeter::{CliError, ExperimentConfig, Result};

/// Private smart-meter aggregation experiments.
///
/// Settings are layered: built-in defaults, then `--config`, then `--set`
/// overrides, then the dedicated flags.
#[derive(Debug, Parser)]
#[command(name = "dpmeter", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Monte Carlo trials.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Dotted-key override such as `sweep.sizes=[50,100]`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the synthetic trace corpus.
    GenTraces,
    /// Aggregation error per cluster size, clustering mode and alpha.
    ErrorSweep,
    /// Presence privacy and start-time inference per appliance.
    PrivacyReport,
    /// Round exactness under failures and attack probabilities.
    ProtocolCheck,
}

fn overrides(cli: &Cli) -> Result<Vec<(String, Value)>> {
    let mut out = cli.set.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>>>()?;
    if let Some(seed) = cli.seed {
        let seed = i64::try_from(seed).map_err(|_| CliError::Config("--seed must fit in 63 bits".into()))?;
        out.push(("seed".into(), Value::Integer(seed)));
    }
    if let Some(out_dir) = &cli.out {
        out.push(("out".into(), Value::String(out_dir.display().to_string())));
    }
    if let Some(trials) = cli.trials {
        let trials = i64::try_from(trials).map_err(|_| CliError::Config("--trials is too large".into()))?;
        out.push(("trials".into(), Value::Integer(trials)));
    }
    Ok(out)
}

fn note(lines: &[String]) {
    for l in lines {
        eprintln!("note: {l}");
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &overrides(cli)?)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    match cli.command {
        Command::GenTraces => {
            let s = gen_traces::run(&cfg)?;
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            println!("{} households -> {}", s.households, s.dir.display());
        }
        Command::ErrorSweep => {
            let (sweep, summary, slots) = error_sweep::run(&cfg)?;
            note(&sweep.notes);
            println!("{} rows -> {}", sweep.rows.len(), summary.display());
            println!("per-slot curves -> {}", slots.display());
        }
        Command::PrivacyReport => {
            let (report, presence, inference) = privacy_report::run(&cfg)?;
            note(&report.notes);
            println!("{} presence rows -> {}", report.presence.len(), presence.display());
            println!("{} inference rows -> {}", report.inference.len(), inference.display());
        }
        Command::ProtocolCheck => {
            let (check, paths) = protocol_check::run(&cfg)?;
            for p in &paths {
                println!("{}", p.display());
            }
            let exact = check.rounds.iter().filter(|r| r.exact()).count();
            println!("{exact}/{} rounds exact", check.rounds.len());
            let mut failed = Vec::new();
            if check.violations() > 0 {
                failed.push(format!("{} rounds without deaths did not decrypt exactly", check.violations()));
            }
            for (n, path, ok) in &check.transcripts {
                if !ok {
                    failed.push(format!("transcript for N={n} did not replay ({})", path.display()));
                }
            }
            for a in &check.attacks {
                if a.z().abs() > 3.0 {
                    failed.push(format!(
                        "attack (N={}, T={}, w={}) off its closed form by {:.2} standard errors",
                        a.case.n,
                        a.case.t,
                        a.case.w,
                        a.z()
                    ));
                }
            }
            if !failed.is_empty() {
                return Err(CliError::Check(failed.join("; ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
