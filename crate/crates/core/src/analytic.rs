//! Closed-form coincidence models.
//!
//! Squaring the two-photon amplitude `Σ c·e^{−i(ω_s·a + ω_i·b)}` and
//! integrating against a factorable spectrum turns every cross term into
//! `coeff · g₊(plus·τ⃗) · g₋(minus·τ⃗)` with `plus = (Δa+Δb)/2` and
//! `minus = (Δa−Δb)/2`. Both correlation functions are even, so each
//! argument is sign-normalized on its own before terms are merged.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::cascade::{
    compose, CascadeConfig, CascadeError, DelayCombo, Notation, Preset, Rational, Stage,
    TransferMatrix,
};
use crate::spectra::{ExchangeSymmetry, JointSpectrum, ProfileKind, SpectralProfile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("model derived for {model:?} input evaluated with a {spectrum:?} spectrum")]
    SymmetryMismatch {
        model: ExchangeSymmetry,
        spectrum: ExchangeSymmetry,
    },
    #[error("expected {expected} delays, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("swept delay {swept} must be the only delay without a fixed value")]
    IncompleteFixedDelays { swept: usize },
    #[error("pruning threshold must be nonnegative, got {0}")]
    BadThreshold(f64),
}

/// `coeff · g₊(plus_arg·τ⃗) · g₋(minus_arg·τ⃗)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CosTerm {
    pub coeff: Rational,
    pub plus_arg: DelayCombo,
    pub minus_arg: DelayCombo,
}

impl CosTerm {
    pub fn new(coeff: Rational, plus_arg: DelayCombo, minus_arg: DelayCombo) -> Self {
        CosTerm {
            coeff,
            plus_arg: plus_arg.canonical().0,
            minus_arg: minus_arg.canonical().0,
        }
    }

    /// Builds a term from ASCII arguments such as `("t2", "t1-t2/2")`.
    pub fn parse(
        coeff: Rational,
        plus_arg: &str,
        minus_arg: &str,
        n_delays: usize,
    ) -> Result<Self, CascadeError> {
        Ok(CosTerm::new(
            coeff,
            DelayCombo::parse(plus_arg, n_delays)?,
            DelayCombo::parse(minus_arg, n_delays)?,
        ))
    }

    pub fn is_constant(&self) -> bool {
        self.plus_arg.is_zero() && self.minus_arg.is_zero()
    }

    pub fn has_carrier(&self) -> bool {
        !self.plus_arg.is_zero()
    }

    /// `g₊(plus·τ⃗)·g₋(minus·τ⃗)` without the coefficient.
    pub fn factor(&self, js: &JointSpectrum, taus: &[f64]) -> f64 {
        let mut v = 1.0;
        if !self.plus_arg.is_zero() {
            v *= js.g_plus(self.plus_arg.dot(taus));
        }
        if !self.minus_arg.is_zero() {
            v *= js.g_minus(self.minus_arg.dot(taus));
        }
        v
    }

    pub fn value(&self, js: &JointSpectrum, taus: &[f64]) -> f64 {
        self.coeff.to_f64().unwrap() * self.factor(js, taus)
    }

    fn key(&self) -> (DelayCombo, DelayCombo) {
        (self.plus_arg.clone(), self.minus_arg.clone())
    }
}

/// Normalized coincidence probability as a constant plus `g₊g₋` terms.
#[derive(Debug, Clone)]
pub struct AnalyticModel {
    terms: Vec<CosTerm>,
    n_delays: usize,
    symmetry: ExchangeSymmetry,
    raw_constant: Rational,
    stage_count: usize,
}

impl PartialEq for AnalyticModel {
    fn eq(&self, other: &Self) -> bool {
        self.n_delays == other.n_delays
            && self.symmetry == other.symmetry
            && self.terms == other.terms
    }
}

impl AnalyticModel {
    /// Canonicalizes, merges and sorts the given terms. Used for
    /// hand-written reference models.
    pub fn from_terms(
        n_delays: usize,
        symmetry: ExchangeSymmetry,
        terms: impl IntoIterator<Item = CosTerm>,
    ) -> Self {
        let mut merged: BTreeMap<(DelayCombo, DelayCombo), Rational> = BTreeMap::new();
        for t in terms {
            let t = CosTerm::new(t.coeff, t.plus_arg, t.minus_arg);
            *merged.entry(t.key()).or_insert_with(Rational::zero) += t.coeff;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((plus_arg, minus_arg), coeff)| CosTerm {
                coeff,
                plus_arg,
                minus_arg,
            })
            .collect();
        AnalyticModel {
            terms,
            n_delays,
            symmetry,
            raw_constant: Rational::one(),
            stage_count: 0,
        }
    }

    pub fn terms(&self) -> &[CosTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_delays(&self) -> usize {
        self.n_delays
    }

    pub fn symmetry(&self) -> ExchangeSymmetry {
        self.symmetry
    }

    pub fn constant(&self) -> Rational {
        self.terms
            .iter()
            .find(|t| t.is_constant())
            .map(|t| t.coeff)
            .unwrap_or_else(Rational::zero)
    }

    /// Raw delay-independent level of `|A⊗D + ε·B⊗C|²` (amplitudes without
    /// the beam-splitter factors) that the model was divided by.
    pub fn raw_constant(&self) -> Rational {
        self.raw_constant
    }

    /// Factor turning a normalized value into the unnormalized coincidence
    /// probability for a unit-norm spectrum: `raw_constant / 2^{2n}`.
    pub fn unnormalized_scale(&self) -> f64 {
        self.raw_constant.to_f64().unwrap() * 0.25f64.powi(self.stage_count as i32)
    }

    pub fn has_carrier(&self) -> bool {
        self.terms.iter().any(CosTerm::has_carrier)
    }

    /// True when only a constant remains, i.e. the model has no delay
    /// dependence.
    pub fn is_delay_independent(&self) -> bool {
        self.terms.iter().all(CosTerm::is_constant)
    }

    pub fn evaluate(&self, js: &JointSpectrum, taus: &[f64]) -> Result<f64, AnalyticError> {
        self.check(js, taus)?;
        Ok(self.evaluate_unchecked(js, taus))
    }

    pub(crate) fn check(&self, js: &JointSpectrum, taus: &[f64]) -> Result<(), AnalyticError> {
        if js.exchange_symmetry() != self.symmetry {
            return Err(AnalyticError::SymmetryMismatch {
                model: self.symmetry,
                spectrum: js.exchange_symmetry(),
            });
        }
        if taus.len() != self.n_delays {
            return Err(AnalyticError::DimensionMismatch {
                expected: self.n_delays,
                got: taus.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn evaluate_unchecked(&self, js: &JointSpectrum, taus: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.value(js, taus)).sum()
    }

    pub fn render(&self, notation: Notation) -> String {
        let mut out = String::new();
        for (i, t) in self.terms.iter().enumerate() {
            let neg = t.coeff.is_negative();
            let mag = t.coeff.abs();
            let (minus, plus) = match notation {
                Notation::Unicode => (" − ", " + "),
                _ => (" - ", " + "),
            };
            if i == 0 {
                if neg {
                    out.push_str(minus.trim_start());
                }
            } else {
                out.push_str(if neg { minus } else { plus });
            }
            let mut factors = Vec::new();
            if t.has_carrier() {
                factors.push(g_factor(true, &t.plus_arg, notation));
            }
            if !t.minus_arg.is_zero() {
                factors.push(g_factor(false, &t.minus_arg, notation));
            }
            let body = factors.concat();
            if factors.is_empty() || !mag.is_one() {
                out.push_str(&coefficient(mag, notation));
                if !factors.is_empty() && notation != Notation::Latex {
                    out.push('·');
                }
            }
            out.push_str(&body);
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

fn g_factor(plus: bool, arg: &DelayCombo, notation: Notation) -> String {
    let a = arg.render(notation);
    match (notation, plus) {
        (Notation::Unicode, true) => format!("g₊({a})"),
        (Notation::Unicode, false) => format!("g₋({a})"),
        (Notation::Ascii, true) => format!("g+({a})"),
        (Notation::Ascii, false) => format!("g-({a})"),
        (Notation::Latex, true) => format!("g_+({a})"),
        (Notation::Latex, false) => format!("g_-({a})"),
    }
}

fn coefficient(c: Rational, notation: Notation) -> String {
    if c.is_integer() {
        return c.numer().to_string();
    }
    match notation {
        Notation::Latex => format!("\\frac{{{}}}{{{}}}", c.numer(), c.denom()),
        _ => format!("{}/{}", c.numer(), c.denom()),
    }
}

impl fmt::Display for AnalyticModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(Notation::Unicode))
    }
}

/// Expands `|A⊗D + ε·B⊗C|²` into a normalized model.
pub fn expand(tm: &TransferMatrix, symmetry: ExchangeSymmetry) -> AnalyticModel {
    let n = tm.n_delays();
    let pair = tm.pair_amplitude(symmetry);
    let half = Ratio::new(1, 2);
    let mut merged: BTreeMap<(DelayCombo, DelayCombo), Rational> = BTreeMap::new();
    let terms: Vec<_> = pair.terms().collect();
    for &(a1, b1, c1) in &terms {
        for &(a2, b2, c2) in &terms {
            let da = a1 - a2;
            let db = b1 - b2;
            let plus = (&da + &db).scale(half).canonical().0;
            let minus = (&da - &db).scale(half).canonical().0;
            *merged.entry((plus, minus)).or_insert_with(Rational::zero) += c1 * c2;
        }
    }
    let raw_constant = pair.incoherent_weight();
    if raw_constant.is_zero() {
        merged.clear();
    }
    let mut model = AnalyticModel::from_terms(
        n,
        symmetry,
        merged
            .into_iter()
            .map(|((plus_arg, minus_arg), coeff)| CosTerm {
                coeff: coeff / raw_constant,
                plus_arg,
                minus_arg,
            }),
    );
    model.raw_constant = raw_constant;
    model.stage_count = tm.stage_count();
    model
}

/// Model of the partner input state: `g₊ ↔ g₋` and every non-constant
/// coefficient negated.
pub fn swap_rule(model: &AnalyticModel) -> AnalyticModel {
    let mut out = AnalyticModel::from_terms(
        model.n_delays,
        model.symmetry,
        model.terms.iter().map(|t| CosTerm {
            coeff: if t.is_constant() { t.coeff } else { -t.coeff },
            plus_arg: t.minus_arg.clone(),
            minus_arg: t.plus_arg.clone(),
        }),
    );
    out.raw_constant = model.raw_constant;
    out.stage_count = model.stage_count;
    out
}

/// Whether two cascades give term-identical models for an antisymmetric
/// spectrum.
pub fn antisymmetric_equivalence_check(tm_a: &TransferMatrix, tm_b: &TransferMatrix) -> bool {
    expand(tm_a, ExchangeSymmetry::Antisymmetric) == expand(tm_b, ExchangeSymmetry::Antisymmetric)
}

/// Largest `|C(s)|·e^{s²σ_eff²/2}` bound, returned as `(K, σ_eff)` with
/// `|C(s)| ≤ K·exp(−σ_eff²s²/2)`.
fn decay_bound(profile: &SpectralProfile) -> (f64, f64) {
    match profile.kind() {
        ProfileKind::Gaussian => (1.0, profile.sigma()),
        // |1−u|·e^{−u/2} ≤ K·e^{−u/4} with K = max |1−u|·e^{−u/4} = 4e^{−5/4}.
        ProfileKind::HermiteGaussian1 => {
            (4.0 * (-1.25f64).exp(), profile.sigma() / std::f64::consts::SQRT_2)
        }
    }
}

/// Upper bound of `|term|` over the whole real line of the swept delay.
fn term_bound(
    term: &CosTerm,
    fixed_taus: &[f64],
    swept: usize,
    js: &JointSpectrum,
) -> f64 {
    let (kp, sp) = decay_bound(js.plus());
    let (km, sm) = decay_bound(js.minus());
    let mut k = term.coeff.abs().to_f64().unwrap();
    if !term.plus_arg.is_zero() {
        k *= kp;
    }
    if !term.minus_arg.is_zero() {
        k *= km;
    }
    // Exponent −Q/2 with Q(t) = (a·t + b)² + (c·t + d)².
    let a = sp * term.plus_arg.coefficient(swept);
    let b = sp * term.plus_arg.dot(fixed_taus);
    let c = sm * term.minus_arg.coefficient(swept);
    let d = sm * term.minus_arg.dot(fixed_taus);
    let q_min = if a == 0.0 && c == 0.0 {
        b * b + d * d
    } else {
        (a * d - b * c).powi(2) / (a * a + c * c)
    };
    k * (-0.5 * q_min).exp()
}

/// Drops every term whose magnitude stays below `threshold` for all values
/// of the swept delay, with the others held at `fixed`.
pub fn asymptotic_prune(
    model: &AnalyticModel,
    fixed: &BTreeMap<usize, f64>,
    swept: usize,
    js: &JointSpectrum,
    threshold: f64,
) -> Result<AnalyticModel, AnalyticError> {
    if !(threshold >= 0.0) {
        return Err(AnalyticError::BadThreshold(threshold));
    }
    let complete = swept < model.n_delays
        && !fixed.contains_key(&swept)
        && (0..model.n_delays).all(|i| i == swept || fixed.contains_key(&i));
    if !complete {
        return Err(AnalyticError::IncompleteFixedDelays { swept });
    }
    let mut taus = vec![0.0; model.n_delays];
    for (&i, &v) in fixed {
        taus[i] = v;
    }
    let mut out = model.clone();
    out.terms
        .retain(|t| t.is_constant() || term_bound(t, &taus, swept, js) >= threshold);
    Ok(out)
}

/// Where the single delay of a one-parameter cascade sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// On the idler input ahead of the first beam splitter.
    Input,
    /// Ahead of beam splitter `k` (zero-based).
    Stage(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SingleDelayOutcome {
    Homi,
    Noon,
    /// No delay dependence; carries the normalized constant.
    Constant(Rational),
    Other(AnalyticModel),
}

/// Expands an `n`-stage cascade with one delay at `placement` and reports
/// which reference behaviour it reproduces.
pub fn classify_single_delay(
    stages: usize,
    placement: Placement,
    symmetry: ExchangeSymmetry,
) -> Result<SingleDelayOutcome, CascadeError> {
    let mut list = vec![Stage::plain(); stages];
    let mut input = None;
    match placement {
        Placement::Input => input = Some(0),
        Placement::Stage(k) => {
            if k >= stages {
                return Err(CascadeError::LabelOutOfRange {
                    label: k,
                    n_delays: stages,
                });
            }
            list[k] = Stage::delayed(0);
        }
    }
    let model = expand(&compose(&CascadeConfig::new(list, input, 1)?), symmetry);
    let homi = expand(&compose(&Preset::Homi.config()), symmetry);
    let noon = expand(&compose(&Preset::Noon.config()), symmetry);
    Ok(if model == homi {
        SingleDelayOutcome::Homi
    } else if model == noon {
        SingleDelayOutcome::Noon
    } else if model.is_delay_independent() {
        SingleDelayOutcome::Constant(model.constant())
    } else {
        SingleDelayOutcome::Other(model)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const SYM: ExchangeSymmetry = ExchangeSymmetry::Symmetric;

    fn q(n: i64, d: i64) -> Rational {
        Ratio::new(n, d)
    }

    fn model_of(p: Preset, s: ExchangeSymmetry) -> AnalyticModel {
        expand(&compose(&p.config()), s)
    }

    #[test]
    fn homi_renders_as_dip() {
        let m = model_of(Preset::Homi, SYM);
        assert_eq!(m.render(Notation::Unicode), "1 − g₋(τ₁)");
        assert_eq!(m.render(Notation::Latex), "1 - g_-(\\tau_1)");
        assert_eq!(m.raw_constant(), q(2, 1));
    }

    #[test]
    fn fraction_rendering() {
        let m = model_of(Preset::TwoParam2002, SYM);
        let text = m.render(Notation::Ascii);
        assert_eq!(
            text,
            "1 - 1/2·g-(t2) - 1/2·g+(t2) + 1/4·g+(t1-t2) - 1/2·g+(t1)g-(t2) + 1/4·g+(t1+t2)"
        );
        assert!(m.render(Notation::Latex).contains("\\frac{1}{4}g_+(\\tau_1+\\tau_2)"));
    }

    #[test]
    fn constant_survives_pruning() {
        let m = model_of(Preset::Homi, SYM);
        let js = JointSpectrum::gaussian(1.0, 1.0).unwrap();
        let p = asymptotic_prune(&m, &BTreeMap::new(), 0, &js, 10.0).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p.terms()[0].is_constant());
    }

    #[test]
    fn prune_rejects_partial_fixed_set() {
        let m = model_of(Preset::TwoParam11, SYM);
        let js = JointSpectrum::gaussian(1.0, 1.0).unwrap();
        assert!(asymptotic_prune(&m, &BTreeMap::new(), 1, &js, 1e-6).is_err());
        let fixed = BTreeMap::from([(1, 0.0)]);
        assert!(asymptotic_prune(&m, &fixed, 1, &js, 1e-6).is_err());
        assert!(asymptotic_prune(&m, &fixed, 0, &js, -1.0).is_err());
    }

    #[test]
    fn prune_bound_is_attained_for_gaussians() {
        // −1/4·g₋(τ₁−τ₂) with τ₁ fixed: maximum 1/4 at τ₂ = τ₁.
        let js = JointSpectrum::gaussian(1.0, 1.0).unwrap();
        let t = CosTerm::parse(q(-1, 4), "0", "t1-t2", 2).unwrap();
        assert_abs_diff_eq!(term_bound(&t, &[3.0, 0.0], 1, &js), 0.25);
        // 1/2·g₋(τ₁)g₊(τ₂): fixed τ₁ gives 1/2·e^{−τ₁²/2}.
        let t = CosTerm::parse(q(1, 2), "t2", "t1", 2).unwrap();
        assert_abs_diff_eq!(
            term_bound(&t, &[2.0, 0.0], 1, &js),
            0.5 * (-2.0f64).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn hermite_gaussian_bound_holds() {
        let p = SpectralProfile::hermite_gaussian(1.3).unwrap();
        let (k, s) = decay_bound(&p);
        for i in 0..4000 {
            let tau = i as f64 * 0.005;
            assert!(p.correlation(tau).abs() <= k * (-0.5 * s * s * tau * tau).exp() + 1e-15);
        }
    }

    #[test]
    fn evaluate_checks_inputs() {
        let m = model_of(Preset::Homi, SYM);
        let anti = JointSpectrum::with_symmetry(1.0, 1.0, ExchangeSymmetry::Antisymmetric, 20.0)
            .unwrap();
        assert!(matches!(
            m.evaluate(&anti, &[0.0]),
            Err(AnalyticError::SymmetryMismatch { .. })
        ));
        let js = JointSpectrum::gaussian(1.0, 1.0).unwrap();
        assert!(m.evaluate(&js, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn shifted_noon_delay_is_flat_but_nonzero() {
        let out = classify_single_delay(2, Placement::Stage(0), SYM).unwrap();
        assert_eq!(out, SingleDelayOutcome::Constant(q(1, 1)));
    }

    #[test]
    fn input_delay_before_single_splitter_is_homi() {
        assert_eq!(
            classify_single_delay(1, Placement::Input, SYM).unwrap(),
            SingleDelayOutcome::Homi
        );
    }
}
