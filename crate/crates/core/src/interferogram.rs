//! Delay sweeps, envelopes, sum/difference spectral reconstruction and
//! detection of local interference structures.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::analytic::{AnalyticError, AnalyticModel};
use crate::cascade::TransferMatrix;
use crate::defaults;
use crate::quadrature::{integrate_r, GridSpec, QuadratureError};
use crate::spectra::JointSpectrum;

#[derive(Debug, Error)]
pub enum InterferogramError {
    #[error("sweep needs at least two samples")]
    TooFewSamples,
    #[error("sweep start {start} must be below stop {stop}")]
    EmptyRange { start: f64, stop: f64 },
    #[error("sweep must fix every delay except the swept one ({n_delays} delays, swept {swept})")]
    IncompleteSweep { n_delays: usize, swept: usize },
    #[error("trace columns differ in length")]
    LengthMismatch,
    #[error("trace contains a non-finite value at sample {0}")]
    NonFinite(usize),
    #[error("carrier undersampled: {per_period:.2} samples per period, need more than 4")]
    Undersampled { per_period: f64 },
    #[error("no carrier to demodulate")]
    NoCarrier,
    #[error("envelope window too short: edge value {edge:.3e} exceeds {limit:.0e}")]
    WindowTooShort { edge: f64, limit: f64 },
    #[error("too few spectral samples above the fit floor")]
    FitFailed,
    #[error("{} overlapping structures", .0.len())]
    Overlapping(Vec<Structure>),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("malformed trace CSV at line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, InterferogramError>;

/// Uniform sweep of one delay with the others held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub fixed: BTreeMap<usize, f64>,
    pub swept: usize,
    pub start: f64,
    pub stop: f64,
    pub samples: usize,
}

impl SweepSpec {
    pub fn new(
        fixed: BTreeMap<usize, f64>,
        swept: usize,
        start: f64,
        stop: f64,
        samples: usize,
    ) -> Result<Self> {
        if samples < 2 {
            return Err(InterferogramError::TooFewSamples);
        }
        if !(start < stop) {
            return Err(InterferogramError::EmptyRange { start, stop });
        }
        Ok(SweepSpec {
            fixed,
            swept,
            start,
            stop,
            samples,
        })
    }

    /// Sweep of the only delay of a one-parameter cascade.
    pub fn single(start: f64, stop: f64, samples: usize) -> Result<Self> {
        Self::new(BTreeMap::new(), 0, start, stop, samples)
    }

    /// Two-delay sweep of `τ₂` with `τ₁ = 5/σ₊`, wide enough for every
    /// Gaussian feature to decay by `e^{−18}` at the edges.
    pub fn two_param_reconstruction(sigma_plus: f64, sigma_minus: f64, samples: usize) -> Result<Self> {
        let tau1 = defaults::TWO_PARAM_TAU1 / sigma_plus;
        let half = (tau1 + 6.0 / sigma_plus).max(6.0 / sigma_minus);
        Self::new(BTreeMap::from([(0, tau1)]), 1, -half, half, samples)
    }

    /// Sample count for a carrier-resolving sweep of the given range.
    pub fn carrier_resolving_samples(start: f64, stop: f64, pump_frequency: f64) -> usize {
        let step = 2.0 * std::f64::consts::PI
            / (pump_frequency * defaults::SAMPLES_PER_CARRIER_PERIOD);
        ((stop - start) / step).ceil() as usize + 1
    }

    pub fn n_delays(&self) -> usize {
        self.fixed.len() + 1
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.samples - 1) as f64
    }

    pub fn tau(&self, k: usize) -> f64 {
        if k + 1 == self.samples {
            self.stop
        } else {
            self.start + k as f64 * self.step()
        }
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.samples).map(|k| self.tau(k)).collect()
    }

    pub fn check(&self, n_delays: usize) -> Result<()> {
        let ok = self.swept < n_delays
            && !self.fixed.contains_key(&self.swept)
            && self.fixed.len() + 1 == n_delays
            && self.fixed.keys().all(|&i| i < n_delays);
        if ok {
            Ok(())
        } else {
            Err(InterferogramError::IncompleteSweep {
                n_delays,
                swept: self.swept,
            })
        }
    }

    /// Full delay vector with the swept delay set to `t`.
    pub fn delay_vector(&self, t: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.n_delays()];
        for (&i, &x) in &self.fixed {
            v[i] = x;
        }
        v[self.swept] = t;
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub label: String,
    pub sweep: Option<SweepSpec>,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub pump_frequency: f64,
}

impl TraceMeta {
    pub fn new(label: &str, js: &JointSpectrum, sweep: Option<SweepSpec>) -> Self {
        TraceMeta {
            label: label.to_string(),
            sweep,
            sigma_plus: js.plus().sigma(),
            sigma_minus: js.minus().sigma(),
            pump_frequency: js.pump_frequency(),
        }
    }

    fn bare(label: &str) -> Self {
        TraceMeta {
            label: label.to_string(),
            sweep: None,
            sigma_plus: f64::NAN,
            sigma_minus: f64::NAN,
            pump_frequency: f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    taus: Vec<f64>,
    values: Vec<f64>,
    pub meta: TraceMeta,
}

impl Trace {
    pub fn new(taus: Vec<f64>, values: Vec<f64>, meta: TraceMeta) -> Result<Self> {
        if taus.len() != values.len() {
            return Err(InterferogramError::LengthMismatch);
        }
        if let Some(k) = taus
            .iter()
            .zip(&values)
            .position(|(t, v)| !t.is_finite() || !v.is_finite())
        {
            return Err(InterferogramError::NonFinite(k));
        }
        Ok(Trace { taus, values, meta })
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    fn step(&self) -> f64 {
        (self.taus[self.len() - 1] - self.taus[0]) / (self.len() - 1) as f64
    }

    /// Delays where `value − level` changes sign, linearly interpolated.
    pub fn crossings(&self, level: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for k in 1..self.len() {
            let (a, b) = (self.values[k - 1] - level, self.values[k] - level);
            if a == 0.0 {
                out.push(self.taus[k - 1]);
            } else if a * b < 0.0 {
                let (t0, t1) = (self.taus[k - 1], self.taus[k]);
                out.push(t0 + (t1 - t0) * a / (a - b));
            }
        }
        out
    }

    /// Width `w` of a single Gaussian-shaped deviation `h·exp(−(τ−c)²/2w²)`
    /// from `baseline`, by weighted least squares on its logarithm.
    pub fn gaussian_width(&self, baseline: f64) -> Result<f64> {
        let dev: Vec<f64> = self.values.iter().map(|v| (v - baseline).abs()).collect();
        let peak = dev.iter().cloned().fold(0.0, f64::max);
        let pts: Vec<(f64, f64)> = self
            .taus
            .iter()
            .zip(&dev)
            .filter(|(_, &d)| d > 1e-3 * peak)
            .map(|(&t, &d)| (t, d))
            .collect();
        let (_, _, curvature) = fit_log_parabola(&pts).ok_or(InterferogramError::FitFailed)?;
        Ok((-0.5 / curvature).sqrt())
    }
}

/// Fits `ln y = a + b·x + c·x²` with weights `y²`; returns `(a, b, c)`.
fn fit_log_parabola(pts: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if pts.len() < 3 {
        return None;
    }
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for &(x, y) in pts {
        let w = y * y;
        let ly = y.ln();
        let basis = [1.0, x, x * x];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += w * basis[i] * basis[j];
            }
            rhs[i] += w * basis[i] * ly;
        }
    }
    solve3(m, rhs).filter(|s| s[2] < 0.0).map(|s| (s[0], s[1], s[2]))
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| m[i][k] * x[k]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePair {
    pub upper: Trace,
    pub lower: Trace,
}

impl EnvelopePair {
    pub fn new(upper: Trace, lower: Trace) -> Result<Self> {
        if upper.taus != lower.taus {
            return Err(InterferogramError::LengthMismatch);
        }
        Ok(EnvelopePair { upper, lower })
    }

    pub fn taus(&self) -> &[f64] {
        self.upper.taus()
    }

    /// `R'₊ + R'₋`.
    pub fn sum(&self) -> Vec<f64> {
        self.upper.values.iter().zip(&self.lower.values).map(|(u, l)| u + l).collect()
    }

    /// `R'₊ − R'₋`.
    pub fn difference(&self) -> Vec<f64> {
        self.upper.values.iter().zip(&self.lower.values).map(|(u, l)| u - l).collect()
    }
}

/// Source of coincidence values for a sweep.
#[derive(Debug, Clone, Copy)]
pub enum Backend<'a> {
    Analytic(&'a AnalyticModel),
    /// Quadrature oracle; without an explicit grid each sample gets a
    /// trapezoid grid resolving its own phases.
    Quadrature(&'a TransferMatrix, Option<GridSpec>),
}

impl Backend<'_> {
    fn n_delays(&self) -> usize {
        match self {
            Backend::Analytic(m) => m.n_delays(),
            Backend::Quadrature(tm, _) => tm.n_delays(),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Backend::Analytic(_) => "analytic",
            Backend::Quadrature(..) => "quadrature",
        }
    }
}

pub fn sweep(backend: Backend<'_>, js: &JointSpectrum, spec: &SweepSpec) -> Result<Trace> {
    spec.check(backend.n_delays())?;
    if let Backend::Analytic(m) = backend {
        m.check(js, &spec.delay_vector(spec.start))?;
    }
    let taus = spec.taus();
    let values = taus
        .par_iter()
        .map(|&t| {
            let v = spec.delay_vector(t);
            match backend {
                Backend::Analytic(m) => Ok(m.evaluate_unchecked(js, &v)),
                Backend::Quadrature(tm, grid) => {
                    let g = grid.unwrap_or_else(|| GridSpec::resolving(tm, js, &v));
                    Ok(integrate_r(tm, js, &v, &g)?)
                }
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Trace::new(
        taus,
        values,
        TraceMeta::new(backend.name(), js, Some(spec.clone())),
    )
}

/// Envelopes with every carrier `cos(ω_p·x)` replaced by `±1`, the sign
/// chosen per term to maximize (upper) or minimize (lower) the value.
pub fn envelopes_analytic(
    model: &AnalyticModel,
    js: &JointSpectrum,
    spec: &SweepSpec,
) -> Result<EnvelopePair> {
    spec.check(model.n_delays())?;
    model.check(js, &spec.delay_vector(spec.start))?;
    let taus = spec.taus();
    let (upper, lower): (Vec<f64>, Vec<f64>) = taus
        .iter()
        .map(|&t| {
            let v = spec.delay_vector(t);
            let mut base = 0.0;
            let mut swing = 0.0;
            for term in model.terms() {
                let c = term.coeff.to_f64().unwrap();
                let gm = if term.minus_arg.is_zero() {
                    1.0
                } else {
                    js.g_minus(term.minus_arg.dot(&v))
                };
                if term.has_carrier() {
                    swing += (c * js.envelope_magnitude_plus(term.plus_arg.dot(&v)) * gm).abs();
                } else {
                    base += c * gm;
                }
            }
            (base + swing, base - swing)
        })
        .unzip();
    let meta = TraceMeta::new("analytic-envelope", js, Some(spec.clone()));
    EnvelopePair::new(
        Trace::new(taus.clone(), upper, meta.clone())?,
        Trace::new(taus, lower, meta)?,
    )
}

fn fft(data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(data.len())
    } else {
        planner.plan_fft_forward(data.len())
    };
    plan.process(data);
}

/// Angular frequency of FFT bin `k` for `n` samples spaced `dt`.
fn bin_frequency(k: usize, n: usize, dt: f64) -> f64 {
    let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * std::f64::consts::PI * kk / (n as f64 * dt)
}

/// Blackman-windowed sinc low-pass with cutoff `cutoff` (angular), unit DC
/// gain, `2·half + 1` taps.
fn lowpass_kernel(cutoff: f64, dt: f64, half: usize) -> Vec<f64> {
    let m = half as f64;
    let mut h: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let k = i as f64 - m;
            let sinc = if k == 0.0 {
                cutoff * dt / std::f64::consts::PI
            } else {
                (cutoff * dt * k).sin() / (std::f64::consts::PI * k)
            };
            let x = std::f64::consts::PI * (k + m) / m;
            let w = 0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Convolution with the taps renormalized where the kernel hangs over the
/// ends of the record.
fn filter(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    let half = h.len() / 2;
    let n = x.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut w = 0.0;
            for j in lo..=hi {
                let tap = h[j + half - i];
                acc += x[j] * tap;
                w += tap;
            }
            acc / w
        })
        .collect()
}

/// Delay span on each side of a sample that the demodulation filter reads:
/// eight carrier periods, which keeps the transition band well inside
/// `(0, ω_p)`. Closer to the ends of a record the output is less reliable.
pub fn filter_half_width(carrier_freq: f64) -> f64 {
    8.0 * 2.0 * std::f64::consts::PI / carrier_freq
}

/// Splits a uniformly sampled trace at `|ν| = ω_p/2` with a windowed-sinc
/// low-pass: the baseband is the envelope midline, and the carrier band,
/// shifted down by `ω_p` and low-passed, gives the half-width.
pub fn envelopes_numeric(trace: &Trace, carrier_freq: f64) -> Result<EnvelopePair> {
    let (mid, carrier) = demodulate(trace, carrier_freq)?;
    let mag: Vec<f64> = carrier.iter().map(|c| 2.0 * c.norm()).collect();
    let upper = mid.iter().zip(&mag).map(|(m, a)| m + a).collect();
    let lower = mid.iter().zip(&mag).map(|(m, a)| m - a).collect();
    let mut meta = trace.meta.clone();
    meta.label = format!("{}-demodulated", trace.meta.label);
    EnvelopePair::new(
        Trace::new(trace.taus.clone(), upper, meta.clone())?,
        Trace::new(trace.taus.clone(), lower, meta)?,
    )
}

/// Baseband midline and complex carrier amplitude `c` of a trace, so that
/// `x(τ) ≈ mid(τ) + 2·Re(c(τ)·e^{iω_pτ})`.
fn demodulate(trace: &Trace, carrier_freq: f64) -> Result<(Vec<f64>, Vec<Complex64>)> {
    if trace.len() < 2 {
        return Err(InterferogramError::TooFewSamples);
    }
    let dt = trace.step();
    let per_period = 2.0 * std::f64::consts::PI / (carrier_freq * dt);
    if !(per_period > 4.0) {
        return Err(InterferogramError::Undersampled { per_period });
    }
    let half = ((filter_half_width(carrier_freq) / dt).ceil() as usize).min(trace.len());
    let h = lowpass_kernel(0.5 * carrier_freq, dt, half);
    let x: Vec<Complex64> = trace.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mid: Vec<f64> = filter(&x, &h).iter().map(|c| c.re).collect();
    let shifted: Vec<Complex64> = trace
        .taus
        .iter()
        .zip(&x)
        .zip(&mid)
        .map(|((&t, &v), &m)| (v - m) * Complex64::from_polar(1.0, -carrier_freq * t))
        .collect();
    Ok((mid, filter(&shifted, &h)))
}

/// Spectra recovered from an envelope pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedSpectra {
    /// Non-negative angular frequencies; both intensities are even.
    pub omega: Vec<f64>,
    /// `|f₋(Ω₋)|²`, peak normalized.
    pub minus_intensity: Vec<f64>,
    /// `|f₊(Ω₊)|²`, peak normalized, with the satellite modulation divided
    /// out; `NaN` where the modulation is too small to invert.
    pub plus_intensity: Vec<f64>,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    /// `(center, height)` of the lobes found in `R'₊ − R'₋`.
    pub lobes: Vec<(f64, f64)>,
}

/// Real part of the phase-corrected, zero-padded DFT of `x(τ)` at
/// non-negative frequencies.
fn cosine_transform(taus: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let dt = (taus[n - 1] - taus[0]) / (n - 1) as f64;
    let m = n * defaults::RECONSTRUCTION_ZERO_PAD;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (b, &v) in buf.iter_mut().zip(x) {
        *b = Complex64::new(v, 0.0);
    }
    fft(&mut buf, false);
    let t0 = taus[0];
    (0..=m / 2)
        .map(|k| {
            let w = bin_frequency(k, m, dt);
            let v = buf[k] * Complex64::from_polar(dt, -w * t0);
            (w, v.re)
        })
        .unzip()
}

/// Phase-corrected, zero-padded DFT of a complex `z(τ)` at non-negative
/// frequencies.
fn complex_transform(taus: &[f64], z: &[Complex64]) -> Vec<Complex64> {
    let n = z.len();
    let dt = (taus[n - 1] - taus[0]) / (n - 1) as f64;
    let m = n * defaults::RECONSTRUCTION_ZERO_PAD;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    buf[..n].copy_from_slice(z);
    fft(&mut buf, false);
    (0..=m / 2)
        .map(|k| buf[k] * Complex64::from_polar(dt, -bin_frequency(k, m, dt) * taus[0]))
        .collect()
}

/// Local maxima of a non-negative sampled curve above `floor`, refined by
/// parabolic interpolation.
fn lobes(taus: &[f64], y: &[f64], floor: f64) -> Vec<(f64, f64)> {
    let dt = taus[1] - taus[0];
    (1..y.len() - 1)
        .filter(|&k| y[k] > floor && y[k] >= y[k - 1] && y[k] > y[k + 1])
        .map(|k| {
            let (a, b, c) = (y[k - 1], y[k], y[k + 1]);
            let den = a - 2.0 * b + c;
            let off = if den != 0.0 { 0.5 * (a - c) / den } else { 0.0 };
            (taus[k] + off * dt, b - 0.25 * (a - c) * off)
        })
        .collect()
}

/// Fourier reconstruction of both marginal spectra.
///
/// `2 − (R'₊ + R'₋)` is a single Gaussian in the difference-frequency
/// correlation. `R'₊ − R'₋` is a set of identical sum-frequency lobes at
/// centers `pⱼ` with heights `hⱼ`, whose transform is the sum-frequency
/// intensity times `Σ hⱼ·cos(Ω·pⱼ)`; that factor is divided out where it is
/// not small. Widths come from weighted log-parabola fits.
pub fn reconstruct_spectra(env: &EnvelopePair) -> Result<ReconstructedSpectra> {
    let taus = env.taus();
    let n = taus.len();
    if n < 8 {
        return Err(InterferogramError::TooFewSamples);
    }
    let diff = env.difference();
    let minus_signal: Vec<f64> = env.sum().iter().map(|s| 2.0 - s).collect();
    let peak_plus = diff.iter().cloned().fold(0.0, f64::max);
    if peak_plus <= 1e-9 {
        return Err(InterferogramError::NoCarrier);
    }
    let limit = defaults::RECONSTRUCTION_EDGE_TOLERANCE;
    for s in [&diff, &minus_signal] {
        let edge = s[0].abs().max(s[n - 1].abs());
        if edge > limit {
            return Err(InterferogramError::WindowTooShort { edge, limit });
        }
    }

    let found = lobes(taus, &diff, 1e-2 * peak_plus);
    let (omega, minus_ft) = cosine_transform(taus, &minus_signal);
    let (_, plus_ft) = cosine_transform(taus, &diff);

    let modulation: Vec<f64> = omega
        .iter()
        .map(|&w| found.iter().map(|&(p, h)| h * (w * p).cos()).sum())
        .collect();
    let mod_peak = modulation.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    let plus_raw: Vec<f64> = plus_ft
        .iter()
        .zip(&modulation)
        .map(|(s, m)| if m.abs() >= 0.2 * mod_peak { s / m } else { f64::NAN })
        .collect();

    finish(omega, &minus_ft, &plus_raw, found)
}

/// Fourier reconstruction straight from a raw trace.
///
/// The trace is demodulated into its midline and complex carrier amplitude.
/// `2 − 2·mid` is the difference-frequency signal as in
/// [`reconstruct_spectra`]. The carrier amplitude keeps the phase of each
/// sum-frequency lobe, so lobes that overlap combine as phasors and the
/// modulation divided out is `Σ aⱼ·e^{−iΩpⱼ}` with complex lobe amplitudes.
pub fn reconstruct_from_trace(trace: &Trace, carrier_freq: f64) -> Result<ReconstructedSpectra> {
    let n = trace.len();
    if n < 8 {
        return Err(InterferogramError::TooFewSamples);
    }
    let (mid, carrier) = demodulate(trace, carrier_freq)?;
    let z: Vec<Complex64> = carrier.iter().map(|c| 2.0 * c).collect();
    let mag: Vec<f64> = z.iter().map(|c| c.norm()).collect();
    let minus_signal: Vec<f64> = mid.iter().map(|m| 2.0 - 2.0 * m).collect();
    let peak_plus = mag.iter().cloned().fold(0.0, f64::max);
    if peak_plus <= 1e-9 {
        return Err(InterferogramError::NoCarrier);
    }
    let limit = defaults::RECONSTRUCTION_EDGE_TOLERANCE;
    for s in [&mag, &minus_signal] {
        let edge = s[0].abs().max(s[n - 1].abs());
        if edge > limit {
            return Err(InterferogramError::WindowTooShort { edge, limit });
        }
    }

    let taus = trace.taus();
    let dt = trace.step();
    let found = lobes(taus, &mag, 1e-2 * peak_plus);
    let amplitudes: Vec<(f64, Complex64)> = found
        .iter()
        .map(|&(p, h)| {
            let x = ((p - taus[0]) / dt).clamp(0.0, (n - 1) as f64);
            let k = (x.floor() as usize).min(n - 2);
            let f = x - k as f64;
            let at = z[k] * (1.0 - f) + z[k + 1] * f;
            (p, Complex64::from_polar(h, at.arg()))
        })
        .collect();
    let (omega, minus_ft) = cosine_transform(taus, &minus_signal);
    let plus_ft = complex_transform(taus, &z);
    let modulation: Vec<Complex64> = omega
        .iter()
        .map(|&w| {
            amplitudes
                .iter()
                .map(|&(p, a)| a * Complex64::from_polar(1.0, -w * p))
                .sum()
        })
        .collect();
    let mod_peak = modulation.iter().fold(0.0f64, |a, m| a.max(m.norm()));
    let plus_raw: Vec<f64> = plus_ft
        .iter()
        .zip(&modulation)
        .map(|(s, m)| {
            if m.norm() >= 0.2 * mod_peak {
                (s * m.conj()).re / m.norm_sqr()
            } else {
                f64::NAN
            }
        })
        .collect();
    finish(omega, &minus_ft, &plus_raw, found)
}

fn finish(
    omega: Vec<f64>,
    minus_ft: &[f64],
    plus_raw: &[f64],
    found: Vec<(f64, f64)>,
) -> Result<ReconstructedSpectra> {
    let (sigma_minus, amp_minus) = fit_gaussian_spectrum(&omega, minus_ft)?;
    let (sigma_plus, amp_plus) = fit_gaussian_spectrum(&omega, plus_raw)?;
    Ok(ReconstructedSpectra {
        minus_intensity: minus_ft.iter().map(|v| v / amp_minus).collect(),
        plus_intensity: plus_raw.iter().map(|v| v / amp_plus).collect(),
        omega,
        sigma_minus,
        sigma_plus,
        lobes: found,
    })
}

/// Width and peak of `A·exp(−Ω²/2σ²)` through the finite samples above
/// `1e-3` of the peak.
fn fit_gaussian_spectrum(w: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let peak = y.iter().filter(|v| v.is_finite()).cloned().fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = w
        .iter()
        .zip(y)
        .filter(|(_, &v)| v.is_finite() && v > 1e-3 * peak)
        .map(|(&w, &v)| (w * w, v))
        .collect();
    let (a, b) = fit_log_line(&pts).ok_or(InterferogramError::FitFailed)?;
    Ok(((-0.5 / b).sqrt(), a.exp()))
}

/// Fits `ln y = a + b·x` with weights `y²`; returns `(a, b)` with `b < 0`.
fn fit_log_line(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 3 {
        return None;
    }
    let (mut sw, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pts {
        let w = y * y;
        let ly = y.ln();
        sw += w;
        sx += w * x;
        sxx += w * x * x;
        sy += w * ly;
        sxy += w * x * ly;
    }
    let det = sw * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return None;
    }
    let b = (sw * sxy - sx * sy) / det;
    let a = (sy - b * sx) / sw;
    (b < 0.0).then_some((a, b))
}

/// A local interference structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    pub center: f64,
    pub visibility: f64,
    pub start: f64,
    pub stop: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectOptions {
    /// Absolute deviation threshold; defaults to
    /// `max(3·median|dev|, 5e-3·baseline)`.
    pub threshold: Option<f64>,
    /// Sub-threshold gaps up to this length inside one structure are bridged
    /// (carrier nodes).
    pub merge_gap: f64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            threshold: None,
            merge_gap: 0.5,
        }
    }
}

/// Structures in a raw trace; visibility is the largest `|R − baseline|`
/// over the structure divided by the baseline.
pub fn detect_structures(trace: &Trace, baseline: f64) -> Result<Vec<Structure>> {
    detect_structures_with(trace, baseline, DetectOptions::default())
}

pub fn detect_structures_with(
    trace: &Trace,
    baseline: f64,
    opts: DetectOptions,
) -> Result<Vec<Structure>> {
    let dev: Vec<f64> = trace.values.iter().map(|v| (v - baseline).abs()).collect();
    find_structures(&trace.taus, &dev, baseline, opts)
}

/// Structures from an envelope pair: the deviation at each delay is the
/// larger of the midline offset `|(R'₊+R'₋)/2 − baseline|` and the half
/// swing `(R'₊−R'₋)/2`, so carrier fringes count by their amplitude rather
/// than their peak-to-peak excursion.
pub fn detect_structures_envelope(env: &EnvelopePair, baseline: f64) -> Result<Vec<Structure>> {
    let dev: Vec<f64> = env
        .upper
        .values
        .iter()
        .zip(&env.lower.values)
        .map(|(u, l)| (0.5 * (u + l) - baseline).abs().max(0.5 * (u - l)))
        .collect();
    find_structures(env.taus(), &dev, baseline, DetectOptions::default())
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn find_structures(
    taus: &[f64],
    dev: &[f64],
    baseline: f64,
    opts: DetectOptions,
) -> Result<Vec<Structure>> {
    let n = taus.len();
    if n < 3 {
        return Ok(Vec::new());
    }
    let threshold = opts
        .threshold
        .unwrap_or_else(|| (3.0 * median(dev)).max(5e-3 * baseline.abs()));
    let mut regions: Vec<(usize, usize)> = Vec::new();
    let mut k = 0;
    while k < n {
        if dev[k] > threshold {
            let s = k;
            while k < n && dev[k] > threshold {
                k += 1;
            }
            let e = k - 1;
            match regions.last_mut() {
                Some(last) if taus[s] - taus[last.1] <= opts.merge_gap => last.1 = e,
                _ => regions.push((s, e)),
            }
        } else {
            k += 1;
        }
    }

    let dt = (taus[n - 1] - taus[0]) / (n - 1) as f64;
    let half_window = ((0.5 * opts.merge_gap / dt).round() as usize).max(1);
    let scale = if baseline != 0.0 { baseline.abs() } else { 1.0 };
    let mut out = Vec::with_capacity(regions.len());
    let mut overlapping = false;
    for &(s, e) in &regions {
        let mut wsum = 0.0;
        let mut tsum = 0.0;
        let mut peak: f64 = 0.0;
        for i in s..=e {
            wsum += dev[i];
            tsum += dev[i] * taus[i];
            peak = peak.max(dev[i]);
        }
        // Running maximum over a carrier-scale window, then look for a
        // valley deeper than half of the lower neighbouring peak.
        let smooth: Vec<f64> = (s..=e)
            .map(|i| {
                let lo = i.saturating_sub(half_window).max(s);
                let hi = (i + half_window).min(e);
                dev[lo..=hi].iter().cloned().fold(0.0, f64::max)
            })
            .collect();
        overlapping |= has_separate_peaks(&smooth);
        out.push(Structure {
            center: tsum / wsum,
            visibility: peak / scale,
            start: taus[s],
            stop: taus[e],
        });
    }
    if overlapping {
        Err(InterferogramError::Overlapping(out))
    } else {
        Ok(out)
    }
}

fn has_separate_peaks(y: &[f64]) -> bool {
    let mut runs: Vec<f64> = Vec::new();
    for &v in y {
        if runs.last() != Some(&v) {
            runs.push(v);
        }
    }
    let peaks: Vec<usize> = (0..runs.len())
        .filter(|&i| {
            (i == 0 || runs[i] > runs[i - 1]) && (i + 1 == runs.len() || runs[i] > runs[i + 1])
        })
        .collect();
    peaks.windows(2).any(|w| {
        let valley = runs[w[0]..=w[1]].iter().cloned().fold(f64::INFINITY, f64::min);
        valley < 0.5 * runs[w[0]].min(runs[w[1]])
    })
}

/// Writes `tau,value[,upper,lower]` rows with 17 significant digits.
pub fn write_csv<W: Write>(out: &mut W, trace: &Trace, env: Option<&EnvelopePair>) -> Result<()> {
    match env {
        Some(e) => {
            if e.taus() != trace.taus() {
                return Err(InterferogramError::LengthMismatch);
            }
            writeln!(out, "tau,value,upper,lower")?;
            for k in 0..trace.len() {
                writeln!(
                    out,
                    "{:.16e},{:.16e},{:.16e},{:.16e}",
                    trace.taus[k], trace.values[k], e.upper.values[k], e.lower.values[k]
                )?;
            }
        }
        None => {
            writeln!(out, "tau,value")?;
            for k in 0..trace.len() {
                writeln!(out, "{:.16e},{:.16e}", trace.taus[k], trace.values[k])?;
            }
        }
    }
    Ok(())
}

/// Reads a trace CSV written by [`write_csv`].
pub fn read_csv<R: BufRead>(input: R) -> Result<(Trace, Option<EnvelopePair>)> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| InterferogramError::Csv {
            line: 1,
            reason: "empty file".into(),
        })?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let with_env = match cols.as_slice() {
        ["tau", "value"] => false,
        ["tau", "value", "upper", "lower"] => true,
        _ => {
            return Err(InterferogramError::Csv {
                line: 1,
                reason: format!("unexpected header {header:?}"),
            })
        }
    };
    let width = if with_env { 4 } else { 2 };
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); width];
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != width {
            return Err(InterferogramError::Csv {
                line: i + 2,
                reason: format!("expected {width} fields"),
            });
        }
        for (c, f) in columns.iter_mut().zip(fields) {
            c.push(f.parse().map_err(|_| InterferogramError::Csv {
                line: i + 2,
                reason: format!("bad number {f:?}"),
            })?);
        }
    }
    let taus = columns[0].clone();
    let trace = Trace::new(taus.clone(), columns[1].clone(), TraceMeta::bare("csv"))?;
    let env = if with_env {
        Some(EnvelopePair::new(
            Trace::new(taus.clone(), columns[2].clone(), TraceMeta::bare("csv-upper"))?,
            Trace::new(taus, columns[3].clone(), TraceMeta::bare("csv-lower"))?,
        )?)
    } else {
        None
    };
    Ok((trace, env))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn synthetic(values: impl Fn(f64) -> f64, start: f64, stop: f64, n: usize) -> Trace {
        let spec = SweepSpec::single(start, stop, n).unwrap();
        let taus = spec.taus();
        let vals = taus.iter().map(|&t| values(t)).collect();
        Trace::new(taus, vals, TraceMeta::bare("synthetic")).unwrap()
    }

    #[test]
    fn sweep_spec_validation() {
        assert!(SweepSpec::single(0.0, 1.0, 1).is_err());
        assert!(SweepSpec::single(1.0, 1.0, 10).is_err());
        let s = SweepSpec::single(-1.0, 1.0, 5).unwrap();
        assert_eq!(s.taus(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(s.check(2).is_err());
        assert!(s.check(1).is_ok());
    }

    #[test]
    fn pure_cosine_envelope() {
        let wp = 20.0;
        let t = synthetic(|t| 1.0 + (wp * t).cos(), -20.0, 20.0, 4096);
        let env = envelopes_numeric(&t, wp).unwrap();
        // Samples within one filter half-length of either end see a
        // truncated kernel and are excluded.
        let edge = (filter_half_width(wp) / t.step()).ceil() as usize;
        let worst = (edge..t.len() - edge)
            .map(|k| (env.upper.values()[k] - 2.0).abs().max(env.lower.values()[k].abs()))
            .fold(0.0, f64::max);
        assert!(worst < 0.01, "ripple {worst}");
    }

    #[test]
    fn undersampled_carrier_rejected() {
        let t = synthetic(|t| (20.0 * t).cos(), 0.0, 100.0, 500);
        assert!(matches!(
            envelopes_numeric(&t, 20.0),
            Err(InterferogramError::Undersampled { .. })
        ));
    }

    #[test]
    fn gaussian_width_fit() {
        let t = synthetic(|t| 1.0 - (-(t - 0.3f64).powi(2) / (2.0 * 0.7 * 0.7)).exp(), -8.0, 8.0, 801);
        assert_abs_diff_eq!(t.gaussian_width(1.0).unwrap(), 0.7, epsilon = 1e-9);
    }

    #[test]
    fn structures_of_separated_gaussians() {
        let g = |t: f64, c: f64| (-(t - c) * (t - c) / 2.0).exp();
        let t = synthetic(|t| 1.0 - 0.25 * g(t, -10.0) + 0.1 * g(t, 12.0), -30.0, 30.0, 6001);
        let s = detect_structures(&t, 1.0).unwrap();
        assert_eq!(s.len(), 2);
        assert_abs_diff_eq!(s[0].center, -10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s[0].visibility, 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(s[1].center, 12.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s[1].visibility, 0.1, epsilon = 1e-9);
    }

    #[test]
    fn overlapping_structures_reported() {
        let g = |t: f64, c: f64| (-(t - c) * (t - c) / 2.0).exp();
        let t = synthetic(|t| 1.0 - 0.25 * g(t, -2.5) - 0.25 * g(t, 2.5), -20.0, 20.0, 4001);
        assert!(matches!(
            detect_structures(&t, 1.0),
            Err(InterferogramError::Overlapping(v)) if v.len() == 1
        ));
    }

    #[test]
    fn csv_round_trip() {
        let t = synthetic(|t| t.sin() + 1.0 / 3.0, -1.0, 1.0, 33);
        let env = EnvelopePair::new(t.clone(), t.clone()).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &t, Some(&env)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("tau,value,upper,lower\n"));
        let (back, back_env) = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values(), t.values());
        assert_eq!(back.taus(), t.taus());
        assert_eq!(back_env.unwrap().upper.values(), t.values());
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(read_csv("tau,x\n1,2\n".as_bytes()).is_err());
        assert!(read_csv("tau,value\n1,abc\n".as_bytes()).is_err());
    }
}
