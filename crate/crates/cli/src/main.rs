use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qcascade::commands::{self, emit, sibling, trace_csv, BACKEND_AGREEMENT};
use qcascade::config::{BackendChoice, ExperimentConfig};
use qcascade::validate::{self, Options};
use qcascade::CliError;
use qcascade_core::defaults;

/// Cascaded two-photon interferometers: derive coincidence formulas, sweep
/// delays, extract envelopes and reconstruct biphoton spectra.
#[derive(Parser)]
#[command(name = "qcascade", version)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Evaluation backend; overrides the configuration.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendChoice>,
    /// Output file, or directory for `figures`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reserved; no command draws random numbers yet.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the normalized coincidence formula.
    Derive {
        #[arg(long)]
        latex: bool,
    },
    /// Sample the coincidence probability along the configured sweep.
    Sweep,
    /// Sweep plus upper and lower envelopes.
    Envelope {
        /// Demodulate the sampled trace instead of using the closed form.
        #[arg(long)]
        numeric: bool,
    },
    /// Recover the sum- and difference-frequency spectra.
    Reconstruct {
        /// Read a trace CSV instead of sweeping the configuration.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Demodulate the raw trace rather than using analytic envelopes.
        #[arg(long)]
        numeric: bool,
        /// Carrier frequency for a CSV without envelope columns.
        #[arg(long, default_value_t = defaults::PUMP_FREQUENCY)]
        carrier: f64,
    },
    /// Run the invariant suite; one JSON object per line.
    Validate {
        /// Negative control: compare against a deliberately broken fixture.
        #[arg(long)]
        corrupt_fixture: bool,
        /// Delay vectors per oracle comparison.
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// Regenerate every figure dataset and plot.
    Figures,
}

fn config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    ExperimentConfig::load(path)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Derive { latex } => emit(out, commands::derive(&config(cli)?, *latex)?.as_bytes()),
        Command::Sweep => {
            let cfg = config(cli)?;
            let backend = cfg.backend(cli.backend);
            if backend == BackendChoice::Both && out.is_none() {
                return Err(CliError::Config("--backend both writes two files and needs --out".into()));
            }
            let res = commands::sweep(&cfg, backend)?;
            match (&res.analytic, &res.quadrature) {
                (Some(a), Some(q)) => {
                    let path = out.expect("checked above");
                    emit(Some(path), &trace_csv(a, None)?)?;
                    emit(Some(&sibling(path, "quadrature")), &trace_csv(q, None)?)?;
                    let delta = res.max_delta().expect("both backends ran");
                    eprintln!("max |analytic - quadrature| = {delta:.3e}");
                    if delta > BACKEND_AGREEMENT {
                        return Err(CliError::Disagreement(delta));
                    }
                    Ok(())
                }
                (Some(t), None) | (None, Some(t)) => emit(out, &trace_csv(t, None)?),
                (None, None) => unreachable!("at least one backend runs"),
            }
        }
        Command::Envelope { numeric } => {
            let (trace, env) = commands::envelope(&config(cli)?, *numeric)?;
            emit(out, &trace_csv(&trace, Some(&env))?)
        }
        Command::Reconstruct { trace, numeric, carrier } => {
            let report = match trace {
                Some(path) => commands::reconstruct_csv(path, *carrier)?,
                None => commands::reconstruct(&config(cli)?, *numeric)?,
            };
            emit(out, report.spectra_csv().as_bytes())?;
            if out.is_some() {
                print!("{}", report.summary());
            } else {
                eprint!("{}", report.summary());
            }
            Ok(())
        }
        Command::Validate { corrupt_fixture, points } => {
            let checks = validate::run(Options {
                corrupt_fixture: *corrupt_fixture,
                oracle_points: *points,
            });
            let mut text = String::new();
            for c in &checks {
                text.push_str(&c.json());
                text.push('\n');
            }
            emit(out, text.as_bytes())?;
            match checks.iter().filter(|c| !c.pass).count() {
                0 => Ok(()),
                n => Err(CliError::Validation(n)),
            }
        }
        Command::Figures => {
            let dir = out.map(PathBuf::from).unwrap_or_else(|| PathBuf::from("figures"));
            let written = commands::write_figures(&dir)?;
            eprintln!("wrote {} figure datasets to {}", written.len(), dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
