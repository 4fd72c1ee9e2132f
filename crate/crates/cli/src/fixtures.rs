//! Hand-transcribed reference models. Each term is
//! `(numerator, denominator, g₊ argument, g₋ argument)`.

use num_rational::Ratio;
use qcascade_core::analytic::CosTerm;
use qcascade_core::{AnalyticModel, ExchangeSymmetry, Preset};

pub type Row = (i64, i64, &'static str, &'static str);

pub const HOMI: &[Row] = &[(1, 1, "0", "0"), (-1, 1, "0", "t1")];

pub const NOON: &[Row] = &[(1, 1, "0", "0"), (1, 1, "t1", "0")];

pub const TWO_PARAM_11: &[Row] = &[
    (1, 1, "0", "0"),
    (1, 2, "t2", "t1"),
    (1, 2, "0", "t2"),
    (1, 2, "t2", "0"),
    (-1, 4, "0", "t1+t2"),
    (-1, 4, "0", "t1-t2"),
];

pub const TWO_PARAM_2002: &[Row] = &[
    (1, 1, "0", "0"),
    (-1, 2, "t1", "t2"),
    (-1, 2, "t2", "0"),
    (-1, 2, "0", "t2"),
    (1, 4, "t2+t1", "0"),
    (1, 4, "t2-t1", "0"),
];

pub const THREE_PARAM_11: &[Row] = &[
    (1, 1, "0", "0"),
    (-1, 2, "t3", "t1"),
    (-1, 4, "0", "t1+t3"),
    (-1, 4, "0", "t1-t3"),
    (-1, 4, "t3", "t2"),
    (-1, 4, "t2", "t3"),
    (1, 8, "0", "t2+t3"),
    (1, 8, "0", "t2-t3"),
    (1, 8, "t2+t3", "0"),
    (1, 8, "t2-t3", "0"),
    (1, 8, "t3", "t1+t2"),
    (1, 8, "t3", "t1-t2"),
    (1, 8, "t2+t3", "t1"),
    (1, 8, "t2-t3", "t1"),
    (-1, 16, "0", "t1+t2+t3"),
    (-1, 16, "0", "t1-t2-t3"),
    (-1, 16, "0", "t1+t2-t3"),
    (-1, 16, "0", "t1-t2+t3"),
    (-1, 8, "t2", "t1+t3"),
    (-1, 8, "t2", "t1-t3"),
    (1, 4, "t2/2", "t1-t3+t2/2"),
    (1, 4, "t2/2", "t1-t3-t2/2"),
    (-1, 4, "t2/2", "t1+t3+t2/2"),
    (-1, 4, "t2/2", "t1+t3-t2/2"),
    (1, 4, "t3-t2/2", "t1+t2/2"),
    (-1, 4, "t3-t2/2", "t1-t2/2"),
    (1, 4, "t3+t2/2", "t1-t2/2"),
    (-1, 4, "t3+t2/2", "t1+t2/2"),
];

/// Three-delay model once the fixed delays are far apart.
pub const THREE_PARAM_SIMPLIFIED: &[Row] = &[
    (1, 1, "0", "0"),
    (-1, 4, "0", "t3+t1"),
    (-1, 4, "0", "t3-t1"),
    (1, 8, "0", "t3+t2"),
    (1, 8, "t3+t2", "0"),
    (1, 8, "0", "t3-t2"),
    (1, 8, "t3-t2", "0"),
    (-1, 16, "0", "t3+t1+t2"),
    (-1, 16, "0", "t3-t1-t2"),
    (-1, 16, "0", "t3+t1-t2"),
    (-1, 16, "0", "t3-t1+t2"),
];

pub fn model(n_delays: usize, rows: &[Row]) -> AnalyticModel {
    AnalyticModel::from_terms(
        n_delays,
        ExchangeSymmetry::Symmetric,
        rows.iter().map(|&(n, d, p, m)| {
            CosTerm::parse(Ratio::new(n, d), p, m, n_delays).expect("fixture arguments parse")
        }),
    )
}

/// Reference symmetric model of a preset. The three-delay `|2002⟩` model
/// has no independent transcription and is taken as the swap of the
/// `|1,1⟩` one.
pub fn preset_model(p: Preset) -> AnalyticModel {
    let rows = match p {
        Preset::Homi => HOMI,
        Preset::Noon => NOON,
        Preset::TwoParam11 => TWO_PARAM_11,
        Preset::TwoParam2002 => TWO_PARAM_2002,
        Preset::ThreeParam11 => THREE_PARAM_11,
        Preset::ThreeParam2002 => return qcascade_core::analytic::swap_rule(&model(3, THREE_PARAM_11)),
    };
    model(p.n_delays(), rows)
}

/// Copy of a fixture with the sign of one non-constant term flipped.
pub fn corrupted(rows: &[Row]) -> Vec<Row> {
    let mut out = rows.to_vec();
    out[1].0 = -out[1].0;
    out
}
