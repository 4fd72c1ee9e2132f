//! The six reference figure sweeps, each for the three correlation classes.

use std::collections::BTreeMap;

use qcascade_core::interferogram::SweepSpec;
use qcascade_core::{defaults, CorrelationClass, Preset};

use crate::config::ExperimentConfig;

pub struct Figure {
    /// `fig3a` … `fig10c`; the letter follows the class order anti-correlated,
    /// correlated, uncorrelated.
    pub name: String,
    pub config: ExperimentConfig,
}

pub const FIGURES: [(u32, Preset); 6] = [
    (3, Preset::Homi),
    (4, Preset::Noon),
    (6, Preset::TwoParam11),
    (7, Preset::TwoParam2002),
    (9, Preset::ThreeParam11),
    (10, Preset::ThreeParam2002),
];

/// Half-range of the one-delay sweeps; wide enough for the broadest class.
const SINGLE_DELAY_RANGE: f64 = 40.0;

/// Three-delay figures plot the far-separated simplification; this drops
/// the half-delay products that survive at `e^{−4.5}/4` for equal widths.
const THREE_PARAM_PRUNE: f64 = 1e-2;

fn samples(start: f64, stop: f64, floor: usize) -> usize {
    SweepSpec::carrier_resolving_samples(start, stop, defaults::PUMP_FREQUENCY).max(floor)
}

pub fn sweep_for(preset: Preset, class: CorrelationClass) -> SweepSpec {
    let (sp, sm) = class.widths();
    match preset.n_delays() {
        1 => {
            let r = SINGLE_DELAY_RANGE;
            SweepSpec::single(-r, r, samples(-r, r, 0)).expect("valid range")
        }
        2 => {
            let probe = SweepSpec::two_param_reconstruction(sp, sm, 2).expect("valid range");
            let n = samples(probe.start, probe.stop, defaults::RECONSTRUCTION_SAMPLES);
            SweepSpec::two_param_reconstruction(sp, sm, n).expect("valid range")
        }
        _ => {
            let s = 1.0 / sp;
            let fixed = BTreeMap::from([
                (0, defaults::THREE_PARAM_TAU1 * s),
                (1, defaults::THREE_PARAM_TAU2 * s),
            ]);
            let (a, b) = (-40.0 * s, 40.0 * s);
            SweepSpec::new(fixed, 2, a, b, samples(a, b, 0)).expect("valid range")
        }
    }
}

pub fn figures() -> Vec<Figure> {
    let mut out = Vec::new();
    for (number, preset) in FIGURES {
        for (class, letter) in CorrelationClass::ALL.into_iter().zip(['a', 'b', 'c']) {
            let mut config = ExperimentConfig::preset_sweep(preset, class, &sweep_for(preset, class));
            if preset.n_delays() == 3 {
                config.analysis.prune_threshold = Some(THREE_PARAM_PRUNE);
            }
            out.push(Figure {
                name: format!("fig{number}{letter}"),
                config,
            });
        }
    }
    out
}
