//! Experiment configuration files.
//!
//! ```toml
//! [cascade]
//! preset = "two_param_2002"
//!
//! [spectrum]
//! class = "uncorrelated"
//! symmetry = "symmetric"
//!
//! [sweep]
//! delay = "t2"
//! start = -11.0
//! stop = 11.0
//! samples = 4096
//!
//! [sweep.fixed]
//! t1 = 5.0
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use qcascade_core::cascade::{compose, Stage};
use qcascade_core::interferogram::SweepSpec;
use qcascade_core::quadrature::{GridSpec, QuadratureRule};
use qcascade_core::{
    defaults, CascadeConfig, CorrelationClass, ExchangeSymmetry, JointSpectrum, Preset, ProfileKind,
    SpectralProfile, TransferMatrix,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Analytic,
    Quadrature,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cascade: CascadeSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    /// Stage list, first stage first; `"-"` is a bare beam splitter and
    /// `"t2"` one delayed by `τ₂`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_delay: Option<String>,
    /// Number of delay parameters; defaults to the largest label used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<CorrelationClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_minus: Option<f64>,
    #[serde(default = "symmetric")]
    pub symmetry: ExchangeSymmetry,
    #[serde(default = "pump")]
    pub pump_frequency: f64,
    /// Difference-frequency profile; follows the symmetry when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minus_profile: Option<ProfileKind>,
}

fn symmetric() -> ExchangeSymmetry {
    ExchangeSymmetry::Symmetric
}

fn pump() -> f64 {
    defaults::PUMP_FREQUENCY
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            class: None,
            sigma_plus: None,
            sigma_minus: None,
            symmetry: symmetric(),
            pump_frequency: pump(),
            minus_profile: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub delay: String,
    pub start: f64,
    pub stop: f64,
    /// Defaults to eight samples per carrier period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendChoice>,
    /// Drop terms whose largest contribution along the sweep is below this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub rule: GridRule,
    pub nodes: usize,
    #[serde(default = "extent")]
    pub extent_sigmas: f64,
}

fn extent() -> f64 {
    defaults::TRAPEZOID_EXTENT_SIGMAS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridRule {
    Trapezoid,
    GaussHermite,
}

/// `t3`, `tau3`, `τ3` or `τ₃` → index 2.
pub fn parse_delay_name(name: &str) -> Result<usize, CliError> {
    let bad = || CliError::Config(format!("bad delay name {name:?}"));
    let digits: String = name
        .trim()
        .trim_start_matches("tau")
        .trim_start_matches('t')
        .trim_start_matches('τ')
        .chars()
        .map(|c| match c {
            '₀'..='₉' => char::from_digit(c as u32 - '₀' as u32, 10).unwrap(),
            _ => c,
        })
        .collect();
    let k: usize = digits.parse().map_err(|_| bad())?;
    k.checked_sub(1).ok_or_else(bad)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.cascade()?;
        cfg.spectrum()?;
        if cfg.sweep.is_some() {
            cfg.sweep_spec()?;
        }
        cfg.grid()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn cascade(&self) -> Result<CascadeConfig, CliError> {
        let c = &self.cascade;
        match (c.preset, &c.stages) {
            (Some(p), None) if c.input_delay.is_none() => {
                if c.delays.is_some_and(|n| n != p.n_delays()) {
                    return Err(CliError::Config(format!("preset {p} has {} delays", p.n_delays())));
                }
                Ok(p.config())
            }
            (None, Some(stages)) => {
                let labels = stages
                    .iter()
                    .map(|s| match s.trim() {
                        "-" | "" => Ok(None),
                        name => parse_delay_name(name).map(Some),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let input = c.input_delay.as_deref().map(parse_delay_name).transpose()?;
                let used = labels.iter().flatten().chain(input.iter()).map(|&k| k + 1).max();
                let n = c.delays.or(used).unwrap_or(1);
                CascadeConfig::new(
                    labels.into_iter().map(|delay| Stage { delay }).collect(),
                    input,
                    n,
                )
                .map_err(|e| CliError::Config(e.to_string()))
            }
            _ => Err(CliError::Config(
                "cascade needs exactly one of `preset` or `stages`".into(),
            )),
        }
    }

    pub fn transfer_matrix(&self) -> Result<TransferMatrix, CliError> {
        Ok(compose(&self.cascade()?))
    }

    pub fn spectrum(&self) -> Result<JointSpectrum, CliError> {
        let s = &self.spectrum;
        let (sp, sm) = match (s.class, s.sigma_plus, s.sigma_minus) {
            (Some(class), None, None) => class.widths(),
            (None, Some(sp), Some(sm)) => (sp, sm),
            (None, None, None) => CorrelationClass::Uncorrelated.widths(),
            _ => {
                return Err(CliError::Config(
                    "spectrum takes either `class` or both `sigma_plus` and `sigma_minus`".into(),
                ))
            }
        };
        let kind = s.minus_profile.unwrap_or(match s.symmetry {
            ExchangeSymmetry::Symmetric => ProfileKind::Gaussian,
            ExchangeSymmetry::Antisymmetric => ProfileKind::HermiteGaussian1,
        });
        let plus = SpectralProfile::gaussian(sp);
        let minus = SpectralProfile::new(kind, sm);
        let err = |e: qcascade_core::spectra::SpectrumError| CliError::Config(e.to_string());
        JointSpectrum::new(plus.map_err(err)?, minus.map_err(err)?, s.symmetry, s.pump_frequency)
            .map_err(err)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, CliError> {
        let sw = self
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [sweep] section".into()))?;
        let swept = parse_delay_name(&sw.delay)?;
        let fixed = sw
            .fixed
            .iter()
            .map(|(k, &v)| Ok((parse_delay_name(k)?, v)))
            .collect::<Result<BTreeMap<_, _>, CliError>>()?;
        let samples = sw.samples.unwrap_or_else(|| {
            SweepSpec::carrier_resolving_samples(sw.start, sw.stop, self.spectrum.pump_frequency)
        });
        let spec = SweepSpec::new(fixed, swept, sw.start, sw.stop, samples)
            .map_err(|e| CliError::Config(e.to_string()))?;
        spec.check(self.cascade()?.n_delays())
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }

    /// Explicit oracle grid, or `None` for per-sample resolving grids.
    pub fn grid(&self) -> Result<Option<GridSpec>, CliError> {
        self.analysis
            .grid
            .map(|g| {
                let rule = match g.rule {
                    GridRule::Trapezoid => QuadratureRule::Trapezoid,
                    GridRule::GaussHermite => QuadratureRule::GaussHermite,
                };
                GridSpec::new(g.nodes, g.extent_sigmas, rule).map_err(|e| CliError::Config(e.to_string()))
            })
            .transpose()
    }

    pub fn backend(&self, flag: Option<BackendChoice>) -> BackendChoice {
        flag.or(self.analysis.backend).unwrap_or(BackendChoice::Analytic)
    }

    /// Configuration of a named preset with a sweep section.
    pub fn preset_sweep(
        preset: Preset,
        class: CorrelationClass,
        spec: &SweepSpec,
    ) -> ExperimentConfig {
        ExperimentConfig {
            cascade: CascadeSection {
                preset: Some(preset),
                ..Default::default()
            },
            spectrum: SpectrumSection {
                class: Some(class),
                ..Default::default()
            },
            sweep: Some(SweepSection {
                delay: format!("t{}", spec.swept + 1),
                start: spec.start,
                stop: spec.stop,
                samples: Some(spec.samples),
                fixed: spec.fixed.iter().map(|(k, v)| (format!("t{}", k + 1), *v)).collect(),
            }),
            analysis: AnalysisSection::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_names() {
        assert_eq!(parse_delay_name("t1").unwrap(), 0);
        assert_eq!(parse_delay_name("tau3").unwrap(), 2);
        assert_eq!(parse_delay_name("τ₂").unwrap(), 1);
        assert!(parse_delay_name("t0").is_err());
        assert!(parse_delay_name("x").is_err());
    }

    #[test]
    fn preset_round_trip() {
        let text = r#"
[cascade]
preset = "two_param_2002"

[spectrum]
class = "anti_correlated"

[sweep]
delay = "t2"
start = -110.0
stop = 110.0
samples = 4096

[sweep.fixed]
t1 = 50.0
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.cascade().unwrap(), Preset::TwoParam2002.config());
        assert_eq!(cfg.spectrum().unwrap().plus().sigma(), 0.1);
        let spec = cfg.sweep_spec().unwrap();
        assert_eq!(spec.fixed[&0], 50.0);
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn explicit_stages() {
        let text = r#"
[cascade]
stages = ["-", "t1", "tau2"]

[spectrum]
sigma_plus = 1.0
sigma_minus = 2.0
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.cascade().unwrap(), Preset::TwoParam2002.config());
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "[cascade]\n",
            "[cascade]\npreset = \"homi\"\nstages = [\"t1\"]\n",
            "[cascade]\npreset = \"nope\"\n",
            "[cascade]\npreset = \"homi\"\n[spectrum]\nsigma_plus = 5.0\nsigma_minus = 1.0\n",
            "[cascade]\npreset = \"homi\"\n[spectrum]\nsymmetry = \"symmetric\"\nminus_profile = \"hermite_gaussian1\"\n",
            "[cascade]\npreset = \"homi\"\n[sweep]\ndelay = \"t2\"\nstart = 0.0\nstop = 1.0\n",
            "[cascade]\npreset = \"homi\"\nbogus = 1\n",
        ] {
            assert!(ExperimentConfig::from_toml(text).is_err(), "{text}");
        }
    }
}
