//! Exact exponential-sum algebra for 50:50 beam-splitter/delay cascades.
//!
//! Each stage acts on the mode pair `(â_s, â_i)` as
//! `(1/√2)·[[1, e^{−iωτ}], [1, −e^{−iωτ}]]`. Matrix entries are sums of
//! `amplitude · e^{−iω(c·τ⃗)}` with real rational amplitudes and rational
//! delay combinations `c`. The `(1/√2)` per stage is kept out of the
//! amplitudes and applied only on numeric evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectra::{ExchangeSymmetry, JointSpectrum};

pub type Rational = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CascadeError {
    #[error("delay label {label} out of range for {n_delays} delays")]
    LabelOutOfRange { label: usize, n_delays: usize },
    #[error("a cascade needs at least one beam splitter")]
    Empty,
    #[error("expected {expected} delays, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot parse delay combination {0:?}")]
    Parse(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

fn rat(n: i64) -> Rational {
    Ratio::from_integer(n)
}

/// Rendering of delay symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Notation {
    /// `τ₁`, `τ₂`, ...
    Unicode,
    /// `t1`, `t2`, ...; accepted back by [`DelayCombo::parse`].
    Ascii,
    /// `\tau_1`, `\tau_2`, ...
    Latex,
}

fn subscript(i: usize) -> String {
    const DIGITS: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];
    i.to_string()
        .chars()
        .map(|c| DIGITS[c.to_digit(10).unwrap() as usize])
        .collect()
}

/// Linear combination `Σ cₖ·τₖ` with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DelayCombo(Vec<Rational>);

impl DelayCombo {
    pub fn zero(n_delays: usize) -> Self {
        DelayCombo(vec![Rational::zero(); n_delays])
    }

    pub fn unit(index: usize, n_delays: usize) -> Self {
        let mut v = vec![Rational::zero(); n_delays];
        v[index] = rat(1);
        DelayCombo(v)
    }

    pub fn from_coefficients(coefficients: Vec<Rational>) -> Self {
        DelayCombo(coefficients)
    }

    /// Integer coefficients, convenient for fixtures.
    pub fn from_ints(coefficients: &[i64]) -> Self {
        DelayCombo(coefficients.iter().map(|&c| rat(c)).collect())
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn scale(&self, k: Rational) -> Self {
        DelayCombo(self.0.iter().map(|c| c * k).collect())
    }

    /// Numeric value `c·τ⃗`.
    pub fn dot(&self, taus: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(taus)
            .map(|(c, t)| c.to_f64().unwrap() * t)
            .sum()
    }

    /// Coefficient of one delay, as `f64`.
    pub fn coefficient(&self, index: usize) -> f64 {
        self.0[index].to_f64().unwrap()
    }

    /// Sign-normalized copy (first nonzero coefficient positive) and whether
    /// the sign was flipped.
    pub fn canonical(&self) -> (DelayCombo, bool) {
        match self.0.iter().find(|c| !c.is_zero()) {
            Some(c) if c.is_negative() => (-self.clone(), true),
            _ => (self.clone(), false),
        }
    }

    pub fn render(&self, notation: Notation) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, c) in self.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sym = match notation {
                Notation::Unicode => format!("τ{}", subscript(i + 1)),
                Notation::Ascii => format!("t{}", i + 1),
                Notation::Latex => format!("\\tau_{}", i + 1),
            };
            let minus = match notation {
                Notation::Unicode => "−",
                _ => "-",
            };
            if c.is_negative() {
                out.push_str(minus);
            } else if !out.is_empty() {
                out.push('+');
            }
            let a = c.abs();
            if *a.numer() != 1 {
                out.push_str(&a.numer().to_string());
            }
            out.push_str(&sym);
            if *a.denom() != 1 {
                out.push('/');
                out.push_str(&a.denom().to_string());
            }
        }
        out
    }

    /// Parses strings such as `t1-t2/2+t3`, `2t1` or `0`. Both `t` and `τ`
    /// prefixes are accepted.
    pub fn parse(s: &str, n_delays: usize) -> Result<Self, CascadeError> {
        let err = || CascadeError::Parse(s.to_string());
        let cleaned: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '−' => '-',
                '₀'..='₉' => char::from_digit(c as u32 - '₀' as u32, 10).unwrap(),
                _ => c,
            })
            .collect();
        let mut out = DelayCombo::zero(n_delays);
        if cleaned == "0" {
            return Ok(out);
        }
        if cleaned.is_empty() {
            return Err(err());
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        for (i, ch) in cleaned.char_indices() {
            if (ch == '+' || ch == '-') && i > 0 {
                pieces.push(&cleaned[start..i]);
                start = i;
            }
        }
        pieces.push(&cleaned[start..]);
        for piece in pieces {
            let (sign, body) = match piece.as_bytes().first() {
                Some(b'-') => (-1, &piece[1..]),
                Some(b'+') => (1, &piece[1..]),
                _ => (1, piece),
            };
            let pos = body.find(['t', 'τ']).ok_or_else(err)?;
            let numer: i64 = if pos == 0 {
                1
            } else {
                body[..pos].parse().map_err(|_| err())?
            };
            let rest = &body[pos + body[pos..].chars().next().unwrap().len_utf8()..];
            let (idx, denom) = match rest.split_once('/') {
                Some((i, d)) => (i, d.parse::<i64>().map_err(|_| err())?),
                None => (rest, 1),
            };
            let idx: usize = idx.parse().map_err(|_| err())?;
            if idx == 0 || idx > n_delays || denom == 0 {
                return Err(err());
            }
            out.0[idx - 1] += Ratio::new(sign * numer, denom);
        }
        Ok(out)
    }
}

impl fmt::Display for DelayCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(Notation::Unicode))
    }
}

impl Add for &DelayCombo {
    type Output = DelayCombo;
    fn add(self, rhs: &DelayCombo) -> DelayCombo {
        DelayCombo(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &DelayCombo {
    type Output = DelayCombo;
    fn sub(self, rhs: &DelayCombo) -> DelayCombo {
        DelayCombo(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for DelayCombo {
    type Output = DelayCombo;
    fn neg(self) -> DelayCombo {
        DelayCombo(self.0.into_iter().map(|c| -c).collect())
    }
}

/// `Σ amplitude·e^{−iω(combo·τ⃗)}` with merged combos and no zero amplitudes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpSum {
    n_delays: usize,
    terms: BTreeMap<DelayCombo, Rational>,
}

impl ExpSum {
    pub fn zero(n_delays: usize) -> Self {
        ExpSum {
            n_delays,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(amplitude: Rational, combo: DelayCombo) -> Self {
        let mut s = ExpSum::zero(combo.len());
        s.add_term(amplitude, combo);
        s
    }

    pub fn constant(amplitude: Rational, n_delays: usize) -> Self {
        ExpSum::monomial(amplitude, DelayCombo::zero(n_delays))
    }

    pub fn add_term(&mut self, amplitude: Rational, combo: DelayCombo) {
        debug_assert_eq!(combo.len(), self.n_delays);
        let entry = self.terms.entry(combo).or_insert_with(Rational::zero);
        *entry += amplitude;
        if entry.is_zero() {
            self.terms.retain(|_, a| !a.is_zero());
        }
    }

    pub fn n_delays(&self) -> usize {
        self.n_delays
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&DelayCombo, &Rational)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, combo: &DelayCombo) -> Rational {
        self.terms.get(combo).copied().unwrap_or_else(Rational::zero)
    }

    pub fn plus(&self, other: &ExpSum) -> ExpSum {
        let mut out = self.clone();
        for (c, a) in other.terms() {
            out.add_term(*a, c.clone());
        }
        out
    }

    pub fn times(&self, other: &ExpSum) -> ExpSum {
        let mut out = ExpSum::zero(self.n_delays);
        for (c1, a1) in self.terms() {
            for (c2, a2) in other.terms() {
                out.add_term(a1 * a2, c1 + c2);
            }
        }
        out
    }

    /// `Σ a·e^{−iω(c·τ⃗)}` at one frequency.
    pub fn eval(&self, omega: f64, taus: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(c, a)| Complex64::from_polar(a.to_f64().unwrap(), -omega * c.dot(taus)))
            .sum()
    }
}

/// Raw 2×2 cascade matrix `[[A, B], [C, D]]`; the numeric matrix is
/// `2^{−stage_count/2}` times the entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferMatrix {
    pub a: ExpSum,
    pub b: ExpSum,
    pub c: ExpSum,
    pub d: ExpSum,
    stage_count: usize,
}

impl TransferMatrix {
    pub fn identity(n_delays: usize) -> Self {
        TransferMatrix {
            a: ExpSum::constant(rat(1), n_delays),
            b: ExpSum::zero(n_delays),
            c: ExpSum::zero(n_delays),
            d: ExpSum::constant(rat(1), n_delays),
            stage_count: 0,
        }
    }

    pub fn stage_count(&self) -> usize {
        self.stage_count
    }

    pub fn n_delays(&self) -> usize {
        self.a.n_delays()
    }

    /// `self · rhs`.
    pub fn times(&self, rhs: &TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            a: self.a.times(&rhs.a).plus(&self.b.times(&rhs.c)),
            b: self.a.times(&rhs.b).plus(&self.b.times(&rhs.d)),
            c: self.c.times(&rhs.a).plus(&self.d.times(&rhs.c)),
            d: self.c.times(&rhs.b).plus(&self.d.times(&rhs.d)),
            stage_count: self.stage_count + rhs.stage_count,
        }
    }

    /// `2^{−stage_count/2}`, the per-entry beam-splitter normalization.
    pub fn entry_scale(&self) -> f64 {
        0.5f64.powf(self.stage_count as f64 / 2.0)
    }

    /// `1/2^{2n}` multiplying the raw coincidence integral.
    pub fn density_prefactor(&self) -> f64 {
        0.25f64.powi(self.stage_count as i32)
    }

    /// Normalized numeric matrix with every entry evaluated at one `ω`.
    pub fn eval(&self, omega: f64, taus: &[f64]) -> [[Complex64; 2]; 2] {
        let s = self.entry_scale();
        [
            [self.a.eval(omega, taus) * s, self.b.eval(omega, taus) * s],
            [self.c.eval(omega, taus) * s, self.d.eval(omega, taus) * s],
        ]
    }

    /// Largest entry of `|M·M† − I|`.
    pub fn unitarity_defect(&self, omega: f64, taus: &[f64]) -> f64 {
        let m = self.eval(omega, taus);
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let v = m[i][0] * m[j][0].conj() + m[i][1] * m[j][1].conj();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).norm());
            }
        }
        worst
    }

    /// Two-photon amplitude `A⊗D + ε·B⊗C` as a bivariate exponential sum.
    pub fn pair_amplitude(&self, symmetry: ExchangeSymmetry) -> PairAmplitude {
        let mut terms: BTreeMap<(DelayCombo, DelayCombo), Rational> = BTreeMap::new();
        let mut push = |amp: Rational, s: &DelayCombo, i: &DelayCombo| {
            let e = terms
                .entry((s.clone(), i.clone()))
                .or_insert_with(Rational::zero);
            *e += amp;
        };
        for (ca, aa) in self.a.terms() {
            for (cd, ad) in self.d.terms() {
                push(aa * ad, ca, cd);
            }
        }
        let eps = rat(symmetry.sign());
        for (cb, ab) in self.b.terms() {
            for (cc, ac) in self.c.terms() {
                push(eps * ab * ac, cb, cc);
            }
        }
        terms.retain(|_, a| !a.is_zero());
        PairAmplitude {
            n_delays: self.n_delays(),
            terms,
        }
    }
}

/// `Σ c·e^{−i(ω_s·a + ω_i·b)}` over pairs of delay combinations `(a, b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairAmplitude {
    n_delays: usize,
    terms: BTreeMap<(DelayCombo, DelayCombo), Rational>,
}

impl PairAmplitude {
    pub fn n_delays(&self) -> usize {
        self.n_delays
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&DelayCombo, &DelayCombo, &Rational)> {
        self.terms.iter().map(|((a, b), c)| (a, b, c))
    }

    /// `Σ c²`: the delay-independent part of `|P|²`, i.e. the coincidence
    /// level once every delay is far outside the coherence time.
    pub fn incoherent_weight(&self) -> Rational {
        self.terms.values().map(|c| c * c).sum()
    }

    pub fn eval(&self, omega_s: f64, omega_i: f64, taus: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|((a, b), c)| {
                Complex64::from_polar(
                    c.to_f64().unwrap(),
                    -(omega_s * a.dot(taus) + omega_i * b.dot(taus)),
                )
            })
            .sum()
    }
}

/// One beam splitter, optionally preceded by a delay on its idler input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Stage {
    pub delay: Option<usize>,
}

impl Stage {
    pub fn plain() -> Self {
        Stage { delay: None }
    }

    pub fn delayed(label: usize) -> Self {
        Stage { delay: Some(label) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CascadeConfig {
    stages: Vec<Stage>,
    input_delay: Option<usize>,
    n_delays: usize,
}

impl CascadeConfig {
    pub fn new(
        stages: Vec<Stage>,
        input_delay: Option<usize>,
        n_delays: usize,
    ) -> Result<Self, CascadeError> {
        if stages.is_empty() {
            return Err(CascadeError::Empty);
        }
        for label in stages.iter().filter_map(|s| s.delay).chain(input_delay) {
            if label >= n_delays {
                return Err(CascadeError::LabelOutOfRange { label, n_delays });
            }
        }
        Ok(CascadeConfig {
            stages,
            input_delay,
            n_delays,
        })
    }

    /// Stage list given as delay labels, `None` for a bare beam splitter.
    pub fn from_labels(labels: &[Option<usize>], n_delays: usize) -> Result<Self, CascadeError> {
        Self::new(
            labels.iter().map(|&delay| Stage { delay }).collect(),
            None,
            n_delays,
        )
    }

    /// `stages` beam splitters whose last `live` carry the delays
    /// `τ₁..τ_live` in order; the leading ones carry none.
    pub fn trailing_delays(stages: usize, live: usize) -> Result<Self, CascadeError> {
        assert!(live <= stages, "more live delays than stages");
        let labels: Vec<Option<usize>> = (0..stages)
            .map(|k| (k + live).checked_sub(stages))
            .collect();
        Self::from_labels(&labels, live)
    }

    pub fn preset(preset: Preset) -> Self {
        let labels: &[Option<usize>] = match preset {
            Preset::Homi => &[Some(0)],
            Preset::Noon => &[None, Some(0)],
            Preset::TwoParam11 => &[Some(0), Some(1)],
            Preset::TwoParam2002 => &[None, Some(0), Some(1)],
            Preset::ThreeParam11 => &[Some(0), Some(1), Some(2)],
            Preset::ThreeParam2002 => &[None, Some(0), Some(1), Some(2)],
        };
        Self::from_labels(labels, preset.n_delays()).expect("preset labels are in range")
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn input_delay(&self) -> Option<usize> {
        self.input_delay
    }

    pub fn n_delays(&self) -> usize {
        self.n_delays
    }
}

/// The six reference topologies: HOM, N00N and the two- and three-delay
/// cascades fed with `|1,1⟩` or with the `|2,0⟩+|0,2⟩` state prepared by
/// a leading beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Homi,
    Noon,
    #[serde(rename = "two_param_11")]
    TwoParam11,
    #[serde(rename = "two_param_2002")]
    TwoParam2002,
    #[serde(rename = "three_param_11")]
    ThreeParam11,
    #[serde(rename = "three_param_2002")]
    ThreeParam2002,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Homi,
        Preset::Noon,
        Preset::TwoParam11,
        Preset::TwoParam2002,
        Preset::ThreeParam11,
        Preset::ThreeParam2002,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Homi => "homi",
            Preset::Noon => "noon",
            Preset::TwoParam11 => "two_param_11",
            Preset::TwoParam2002 => "two_param_2002",
            Preset::ThreeParam11 => "three_param_11",
            Preset::ThreeParam2002 => "three_param_2002",
        }
    }

    pub fn n_delays(self) -> usize {
        match self {
            Preset::Homi | Preset::Noon => 1,
            Preset::TwoParam11 | Preset::TwoParam2002 => 2,
            Preset::ThreeParam11 | Preset::ThreeParam2002 => 3,
        }
    }

    /// True for the topologies fed with `|1,1⟩` directly.
    pub fn is_product_input(self) -> bool {
        matches!(self, Preset::Homi | Preset::TwoParam11 | Preset::ThreeParam11)
    }

    /// The same delays with the other input state.
    pub fn partner(self) -> Preset {
        match self {
            Preset::Homi => Preset::Noon,
            Preset::Noon => Preset::Homi,
            Preset::TwoParam11 => Preset::TwoParam2002,
            Preset::TwoParam2002 => Preset::TwoParam11,
            Preset::ThreeParam11 => Preset::ThreeParam2002,
            Preset::ThreeParam2002 => Preset::ThreeParam11,
        }
    }

    pub fn config(self) -> CascadeConfig {
        CascadeConfig::preset(self)
    }
}

impl FromStr for Preset {
    type Err = CascadeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| CascadeError::UnknownPreset(s.to_string()))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Single stage `[[1, E], [1, −E]]` with `E = e^{−iωτ_label}`, or the bare
/// Hadamard-like matrix when no delay is attached.
pub fn bs_matrix(delay_label: Option<usize>, n_delays: usize) -> Result<TransferMatrix, CascadeError> {
    let e = match delay_label {
        Some(label) if label >= n_delays => {
            return Err(CascadeError::LabelOutOfRange { label, n_delays })
        }
        Some(label) => DelayCombo::unit(label, n_delays),
        None => DelayCombo::zero(n_delays),
    };
    Ok(TransferMatrix {
        a: ExpSum::constant(rat(1), n_delays),
        b: ExpSum::monomial(rat(1), e.clone()),
        c: ExpSum::constant(rat(1), n_delays),
        d: ExpSum::monomial(rat(-1), e),
        stage_count: 1,
    })
}

/// `M_n ⋯ M_1`, with the optional input delay as a phase on the idler
/// column ahead of `M_1`.
pub fn compose(config: &CascadeConfig) -> TransferMatrix {
    let n = config.n_delays();
    let mut tm = TransferMatrix::identity(n);
    if let Some(label) = config.input_delay() {
        tm.d = ExpSum::monomial(rat(1), DelayCombo::unit(label, n));
    }
    for stage in config.stages() {
        let m = bs_matrix(stage.delay, n).expect("config labels were validated");
        tm = m.times(&tm);
    }
    tm
}

/// Unscaled coincidence density
/// `|f(ω_s,ω_i)·A(ω_s)·D(ω_i) + f(ω_i,ω_s)·B(ω_s)·C(ω_i)|²` built from the
/// raw entries; multiply by [`TransferMatrix::density_prefactor`] for the
/// beam-splitter normalization.
pub fn coincidence_density(
    tm: &TransferMatrix,
    js: &JointSpectrum,
    omega_s: f64,
    omega_i: f64,
    taus: &[f64],
) -> Result<f64, CascadeError> {
    if taus.len() != tm.n_delays() {
        return Err(CascadeError::DimensionMismatch {
            expected: tm.n_delays(),
            got: taus.len(),
        });
    }
    let direct = js.jsa_at(omega_s, omega_i);
    let exchanged = js.jsa_at(omega_i, omega_s);
    let amp = direct * tm.a.eval(omega_s, taus) * tm.d.eval(omega_i, taus)
        + exchanged * tm.b.eval(omega_s, taus) * tm.c.eval(omega_i, taus);
    Ok(amp.norm_sqr())
}
