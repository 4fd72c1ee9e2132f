//! Subcommand bodies, kept free of argument parsing so tests can call them.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use qcascade_core::analytic::{asymptotic_prune, expand};
use qcascade_core::cascade::Notation;
use qcascade_core::interferogram::{
    self, envelopes_analytic, envelopes_numeric, read_csv, reconstruct_from_trace, reconstruct_spectra,
    write_csv, Backend, EnvelopePair, ReconstructedSpectra, Trace,
};
use qcascade_core::{defaults, AnalyticModel};

use crate::config::{BackendChoice, ExperimentConfig};
use crate::figures::figures;
use crate::svg::{line_plot, Series};
use crate::CliError;

/// Symmetric or antisymmetric model of the configured cascade, pruned along
/// the sweep when a threshold is set.
pub fn analytic_model(cfg: &ExperimentConfig) -> Result<AnalyticModel, CliError> {
    let js = cfg.spectrum()?;
    let model = expand(&cfg.transfer_matrix()?, js.exchange_symmetry());
    match cfg.analysis.prune_threshold {
        None => Ok(model),
        Some(thr) => {
            let spec = cfg.sweep_spec()?;
            asymptotic_prune(&model, &spec.fixed, spec.swept, &js, thr)
                .map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

pub fn derive(cfg: &ExperimentConfig, latex: bool) -> Result<String, CliError> {
    let m = analytic_model(cfg)?;
    let mut s = format!("R = {}\n", m.render(Notation::Unicode));
    let _ = writeln!(s, "terms: {}", m.len());
    if latex {
        let _ = writeln!(s, "latex: R = {}", m.render(Notation::Latex));
    }
    Ok(s)
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub analytic: Option<Trace>,
    pub quadrature: Option<Trace>,
}

impl SweepOutput {
    /// Largest pointwise difference when both backends ran.
    pub fn max_delta(&self) -> Option<f64> {
        let (a, q) = (self.analytic.as_ref()?, self.quadrature.as_ref()?);
        Some(
            a.values()
                .iter()
                .zip(q.values())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        )
    }
}

pub fn sweep(cfg: &ExperimentConfig, backend: BackendChoice) -> Result<SweepOutput, CliError> {
    let js = cfg.spectrum()?;
    let spec = cfg.sweep_spec()?;
    let mut out = SweepOutput {
        analytic: None,
        quadrature: None,
    };
    if backend != BackendChoice::Quadrature {
        let m = analytic_model(cfg)?;
        out.analytic = Some(interferogram::sweep(Backend::Analytic(&m), &js, &spec)?);
    }
    if backend != BackendChoice::Analytic {
        let tm = cfg.transfer_matrix()?;
        out.quadrature = Some(interferogram::sweep(Backend::Quadrature(&tm, cfg.grid()?), &js, &spec)?);
    }
    Ok(out)
}

/// Analytic trace with analytic envelopes, or demodulated ones.
pub fn envelope(cfg: &ExperimentConfig, numeric: bool) -> Result<(Trace, EnvelopePair), CliError> {
    let js = cfg.spectrum()?;
    let spec = cfg.sweep_spec()?;
    let m = analytic_model(cfg)?;
    let trace = interferogram::sweep(Backend::Analytic(&m), &js, &spec)?;
    let env = if numeric {
        envelopes_numeric(&trace, js.pump_frequency())?
    } else {
        envelopes_analytic(&m, &js, &spec)?
    };
    Ok((trace, env))
}

#[derive(Debug, Clone)]
pub struct ReconstructReport {
    pub spectra: ReconstructedSpectra,
    /// `(σ₊, σ₋)` of the generating spectrum when known.
    pub truth: Option<(f64, f64)>,
}

impl ReconstructReport {
    /// Relative errors of the fitted `(σ₊, σ₋)`.
    pub fn relative_errors(&self) -> Option<(f64, f64)> {
        let (sp, sm) = self.truth?;
        Some((self.spectra.sigma_plus / sp - 1.0, self.spectra.sigma_minus / sm - 1.0))
    }

    pub fn summary(&self) -> String {
        let r = &self.spectra;
        let mut s = String::new();
        match (self.truth, self.relative_errors()) {
            (Some((sp, sm)), Some((ep, em))) => {
                let _ = writeln!(s, "sigma_plus  fitted {:.6} true {sp:.6} relative_error {ep:+.3e}", r.sigma_plus);
                let _ = writeln!(s, "sigma_minus fitted {:.6} true {sm:.6} relative_error {em:+.3e}", r.sigma_minus);
            }
            _ => {
                let _ = writeln!(s, "sigma_plus  fitted {:.6}", r.sigma_plus);
                let _ = writeln!(s, "sigma_minus fitted {:.6}", r.sigma_minus);
            }
        }
        let lobes: Vec<String> = r.lobes.iter().map(|(c, h)| format!("{c:.4}:{h:.4}")).collect();
        let _ = writeln!(s, "lobes {}", lobes.join(" "));
        s
    }

    pub fn spectra_csv(&self) -> String {
        let r = &self.spectra;
        let mut s = String::from("omega,minus_intensity,plus_intensity\n");
        for k in 0..r.omega.len() {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e}",
                r.omega[k], r.minus_intensity[k], r.plus_intensity[k]
            );
        }
        s
    }
}

/// Sweeps the configured cascade and recovers both marginal widths. By
/// default the analytic envelopes feed the reconstruction; with `numeric`
/// the raw trace is demodulated instead.
pub fn reconstruct(cfg: &ExperimentConfig, numeric: bool) -> Result<ReconstructReport, CliError> {
    let js = cfg.spectrum()?;
    let spectra = if numeric {
        let m = analytic_model(cfg)?;
        let trace = interferogram::sweep(Backend::Analytic(&m), &js, &cfg.sweep_spec()?)?;
        reconstruct_from_trace(&trace, js.pump_frequency())?
    } else {
        let (_, env) = envelope(cfg, false)?;
        reconstruct_spectra(&env)?
    };
    Ok(ReconstructReport {
        spectra,
        truth: Some((js.plus().sigma(), js.minus().sigma())),
    })
}

/// Reconstruction from a trace CSV: envelope columns are used when present,
/// otherwise the trace is demodulated at `carrier`.
pub fn reconstruct_csv(path: &Path, carrier: f64) -> Result<ReconstructReport, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let (trace, env) = read_csv(BufReader::new(file))?;
    let spectra = match env {
        Some(env) => reconstruct_spectra(&env)?,
        None => reconstruct_from_trace(&trace, carrier)?,
    };
    Ok(ReconstructReport { spectra, truth: None })
}

pub fn trace_csv(trace: &Trace, env: Option<&EnvelopePair>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_csv(&mut buf, trace, env)?;
    Ok(buf)
}

/// Writes to `path`, or to standard output without one.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

/// `trace.csv` → `trace_quadrature.csv`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

/// Writes `<name>.csv` (trace plus analytic envelopes), `<name>.svg` and the
/// generating `<name>.toml` for every figure; returns the CSV paths.
pub fn write_figures(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    for fig in figures() {
        let (trace, env) = envelope(&fig.config, false)?;
        let csv = dir.join(format!("{}.csv", fig.name));
        fs::write(&csv, trace_csv(&trace, Some(&env))?).map_err(|e| CliError::io(&csv, e))?;
        let svg = line_plot(
            &fig.name,
            "delay",
            trace.taus(),
            &[
                Series { label: "R", values: trace.values(), color: "black" },
                Series { label: "upper", values: env.upper.values(), color: "darkorange" },
                Series { label: "lower", values: env.lower.values(), color: "seagreen" },
            ],
        );
        let svg_path = dir.join(format!("{}.svg", fig.name));
        fs::write(&svg_path, svg).map_err(|e| CliError::io(&svg_path, e))?;
        let toml_path = dir.join(format!("{}.toml", fig.name));
        fs::write(&toml_path, fig.config.to_toml()).map_err(|e| CliError::io(&toml_path, e))?;
        written.push(csv);
    }
    Ok(written)
}

/// Allowed backend disagreement before `sweep` fails.
pub const BACKEND_AGREEMENT: f64 = defaults::BACKEND_AGREEMENT;
