//! Invariant suite behind `qcascade validate`.

use std::collections::BTreeMap;

use qcascade_core::analytic::{antisymmetric_equivalence_check, asymptotic_prune, expand, swap_rule};
use qcascade_core::cascade::compose;
use qcascade_core::quadrature::{integrate_r, GridSpec};
use qcascade_core::{AnalyticModel, CascadeConfig, CorrelationClass, ExchangeSymmetry, Preset};
use serde::Serialize;

use crate::fixtures;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub invariant: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(invariant: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            invariant: invariant.into(),
            pass,
            detail: detail.into(),
        }
    }

    pub fn json(&self) -> String {
        serde_json::to_string(self).expect("check serializes")
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    /// Replace the two-delay `|1,1⟩` fixture with a sign-flipped copy.
    pub corrupt_fixture: bool,
    /// Delay vectors per oracle comparison.
    pub oracle_points: usize,
}

fn sym_model(p: Preset, s: ExchangeSymmetry) -> AnalyticModel {
    expand(&compose(&p.config()), s)
}

fn compare(name: &str, got: &AnalyticModel, want: &AnalyticModel) -> Check {
    if got == want {
        Check::new(name, true, format!("{} terms", got.len()))
    } else {
        Check::new(name, false, format!("derived {got} but expected {want}"))
    }
}

pub fn formula_checks(opts: Options) -> Vec<Check> {
    let mut out = Vec::new();
    for p in [Preset::Homi, Preset::Noon, Preset::TwoParam11, Preset::TwoParam2002, Preset::ThreeParam11] {
        let want = if opts.corrupt_fixture && p == Preset::TwoParam11 {
            fixtures::model(2, &fixtures::corrupted(fixtures::TWO_PARAM_11))
        } else {
            fixtures::preset_model(p)
        };
        out.push(compare(&format!("formula.{p}"), &sym_model(p, ExchangeSymmetry::Symmetric), &want));
    }
    let full = sym_model(Preset::ThreeParam11, ExchangeSymmetry::Symmetric);
    out.push(Check::new(
        "formula.three_param_11.term_count",
        full.len() == 28,
        format!("{} terms", full.len()),
    ));
    // Fixed delays of 8 and 22 sum-frequency coherence times with the
    // difference-frequency linewidth ten times broader.
    let js = CorrelationClass::AntiCorrelated.spectrum(ExchangeSymmetry::Symmetric);
    let fixed = BTreeMap::from([(0, 80.0), (1, 220.0)]);
    match asymptotic_prune(&full, &fixed, 2, &js, 1e-6) {
        Ok(m) => out.push(compare(
            "formula.three_param_11.simplified",
            &m,
            &fixtures::model(3, fixtures::THREE_PARAM_SIMPLIFIED),
        )),
        Err(e) => out.push(Check::new("formula.three_param_11.simplified", false, e.to_string())),
    }
    out
}

/// Points of a Kronecker sequence spread over `[−10, 10]ⁿ`.
pub fn delay_points(n: usize, count: usize) -> Vec<Vec<f64>> {
    const STEPS: [f64; 3] = [0.754_877_666_246_692_7, 0.569_840_290_998_053_3, 0.438_128_552_104_368_1];
    (1..=count)
        .map(|k| {
            (0..n)
                .map(|i| {
                    let u = (0.5 + k as f64 * STEPS[i]).fract();
                    20.0 * u - 10.0
                })
                .collect()
        })
        .collect()
}

/// Largest `|analytic − quadrature|` over the given delay vectors.
pub fn oracle_gap(p: Preset, sym: ExchangeSymmetry, class: CorrelationClass, points: &[Vec<f64>]) -> f64 {
    let js = class.spectrum(sym);
    let tm = compose(&p.config());
    let m = expand(&tm, sym);
    points
        .iter()
        .map(|t| {
            let a = m.evaluate(&js, t).expect("model matches spectrum");
            let q = integrate_r(&tm, &js, t, &GridSpec::resolving(&tm, &js, t)).expect("finite integrand");
            (a - q).abs()
        })
        .fold(0.0, f64::max)
}

pub fn oracle_checks(opts: Options) -> Vec<Check> {
    let mut out = Vec::new();
    for p in Preset::ALL {
        let points = delay_points(p.n_delays(), opts.oracle_points.max(1));
        for sym in ExchangeSymmetry::BOTH {
            for class in CorrelationClass::ALL {
                let gap = oracle_gap(p, sym, class, &points);
                out.push(Check::new(
                    format!("oracle.{p}.{}.{}", sym.name(), class.name()),
                    gap <= 1e-6,
                    format!("max |analytic - quadrature| = {gap:.3e} over {} points", points.len()),
                ));
            }
        }
    }
    out
}

/// Models of `stages` beam splitters whose last `live` carry the delays,
/// against the direct and shifted presets.
pub fn parity_checks() -> Vec<Check> {
    let mut out = Vec::new();
    for (live, direct, shifted, top) in [
        (1, Preset::Homi, Preset::Noon, 6),
        (2, Preset::TwoParam11, Preset::TwoParam2002, 5),
        (3, Preset::ThreeParam11, Preset::ThreeParam2002, 6),
    ] {
        for n in live..=top {
            for sym in ExchangeSymmetry::BOTH {
                let m = expand(&compose(&CascadeConfig::trailing_delays(n, live).expect("live ≤ stages")), sym);
                let target = if (n - live) % 2 == 0 { direct } else { shifted };
                let ok = m == sym_model(target, sym);
                out.push(Check::new(
                    format!("parity.{live}_delay.{n}_stages.{}", sym.name()),
                    ok,
                    format!("matches {target}: {ok}"),
                ));
            }
        }
    }
    out
}

pub fn swap_checks() -> Vec<Check> {
    let mut out = Vec::new();
    for p in [Preset::Homi, Preset::TwoParam11, Preset::ThreeParam11] {
        let a = sym_model(p, ExchangeSymmetry::Symmetric);
        let b = sym_model(p.partner(), ExchangeSymmetry::Symmetric);
        out.push(Check::new(
            format!("swap.{p}"),
            swap_rule(&a) == b && swap_rule(&b) == a,
            format!("{p} <-> {}", p.partner()),
        ));
        let ta = compose(&p.config());
        let tb = compose(&p.partner().config());
        let same = antisymmetric_equivalence_check(&ta, &tb);
        out.push(Check::new(format!("antisymmetric.{p}"), same, format!("term-identical: {same}")));
        out.push(Check::new(
            format!("symmetric_distinct.{p}"),
            a != b,
            format!("term-identical: {}", a == b),
        ));
    }
    out
}

pub fn run(opts: Options) -> Vec<Check> {
    let mut out = formula_checks(opts);
    out.extend(oracle_checks(opts));
    out.extend(parity_checks());
    out.extend(swap_checks());
    out
}
