//! Brute-force oracle: tensor-product quadrature of the coincidence density
//! over `(Ω₊, Ω₋)`.

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use thiserror::Error;

use crate::cascade::{ExpSum, TransferMatrix};
use crate::defaults;
use crate::spectra::{JointSpectrum, SpectralProfile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("grid needs at least 32 nodes per axis, got {0}")]
    TooFewNodes(usize),
    #[error("trapezoid window must extend at least 5 linewidths, got {0}")]
    WindowTooNarrow(f64),
    #[error("expected {expected} delays, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("integrand is not finite; the spectrum is malformed")]
    NonFinite,
    #[error("a convergence report needs at least two grids")]
    TooFewGrids,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuadratureRule {
    Trapezoid,
    GaussHermite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    nodes_per_axis: usize,
    extent_sigmas: f64,
    rule: QuadratureRule,
}

impl GridSpec {
    pub fn new(
        nodes_per_axis: usize,
        extent_sigmas: f64,
        rule: QuadratureRule,
    ) -> Result<Self, QuadratureError> {
        if nodes_per_axis < 32 {
            return Err(QuadratureError::TooFewNodes(nodes_per_axis));
        }
        if rule == QuadratureRule::Trapezoid && !(extent_sigmas >= 5.0) {
            return Err(QuadratureError::WindowTooNarrow(extent_sigmas));
        }
        Ok(GridSpec {
            nodes_per_axis,
            extent_sigmas,
            rule,
        })
    }

    pub fn gauss_hermite(nodes: usize) -> Result<Self, QuadratureError> {
        Self::new(nodes, 0.0, QuadratureRule::GaussHermite)
    }

    pub fn trapezoid(nodes: usize, extent_sigmas: f64) -> Result<Self, QuadratureError> {
        Self::new(nodes, extent_sigmas, QuadratureRule::Trapezoid)
    }

    /// Trapezoid grid fine enough for the fastest phase the density can
    /// carry at these delays.
    ///
    /// The density is a Gaussian times a trigonometric polynomial in each
    /// axis. With step `h` the trapezoid aliasing error behaves like
    /// `exp(−σ²(2π/h − K)²/2)` for top frequency `K`; requiring
    /// `σ(2π/h − K) ≥ 10` and a window of `E = 8` linewidths gives
    /// `N − 1 ≥ E(σK + 10)/π`.
    pub fn resolving(tm: &TransferMatrix, js: &JointSpectrum, taus: &[f64]) -> Self {
        let (kp, km) = phase_bandwidth(tm, taus);
        let e = defaults::TRAPEZOID_EXTENT_SIGMAS;
        let need = |sigma: f64, k: f64| (e * (sigma * k + 10.0) / std::f64::consts::PI).ceil() as usize + 1;
        let n = need(js.plus().sigma(), kp)
            .max(need(js.minus().sigma(), km))
            .max(64);
        GridSpec::trapezoid(n, e).expect("resolving grid is valid")
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn extent_sigmas(&self) -> f64 {
        self.extent_sigmas
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    /// Nodes and weights for one axis. Gauss-Hermite weights are returned
    /// as `w·e^{x²}` so any intensity can be multiplied in directly.
    fn axis(&self, sigma: f64) -> Vec<(f64, f64)> {
        match self.rule {
            QuadratureRule::Trapezoid => {
                let n = self.nodes_per_axis;
                let half = self.extent_sigmas * sigma;
                let h = 2.0 * half / (n - 1) as f64;
                (0..n)
                    .map(|k| {
                        let w = if k == 0 || k == n - 1 { 0.5 * h } else { h };
                        (-half + k as f64 * h, w)
                    })
                    .collect()
            }
            QuadratureRule::GaussHermite => {
                let scale = std::f64::consts::SQRT_2 * sigma;
                gauss_hermite(self.nodes_per_axis)
                    .into_iter()
                    .map(|(x, ln_w)| (scale * x, (ln_w + x * x).exp() * scale))
                    .collect()
            }
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::gauss_hermite(defaults::GAUSS_HERMITE_NODES).expect("default grid is valid")
    }
}

/// Rule-independent fallback grid.
pub fn fallback_grid() -> GridSpec {
    GridSpec::trapezoid(defaults::TRAPEZOID_NODES, defaults::TRAPEZOID_EXTENT_SIGMAS)
        .expect("fallback grid is valid")
}

/// Largest phase rates of `|A⊗D + B⊗C|²` in `Ω₊` and `Ω₋` at these delays.
fn phase_bandwidth(tm: &TransferMatrix, taus: &[f64]) -> (f64, f64) {
    let pairs: Vec<(f64, f64)> = [(&tm.a, &tm.d), (&tm.b, &tm.c)]
        .into_iter()
        .flat_map(|(x, y)| {
            let ys: Vec<f64> = y.terms().map(|(c, _)| c.dot(taus)).collect();
            x.terms()
                .flat_map(move |(c, _)| {
                    let s = c.dot(taus);
                    ys.clone().into_iter().map(move |i| (s, i))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let (mut kp, mut km) = (0.0f64, 0.0f64);
    for &(s1, i1) in &pairs {
        for &(s2, i2) in &pairs {
            let (ds, di) = (s1 - s2, i1 - i2);
            kp = kp.max(((ds + di) / 2.0).abs());
            km = km.max(((ds - di) / 2.0).abs());
        }
    }
    (kp, km)
}

/// Gauss-Hermite nodes and log-weights for weight `e^{−x²}`, found by
/// Newton iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let nf = n as f64;
    let mut roots = vec![0.0f64; n];
    let mut out = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * roots[0],
            3 => 1.91 * z - 0.91 * roots[1],
            _ => 2.0 * z - roots[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let step = p1 / pp;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        roots[i] = z;
        let ln_w = std::f64::consts::LN_2 - 2.0 * pp.abs().ln();
        out[i] = (z, ln_w);
        out[n - 1 - i] = (-z, ln_w);
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Compensated (Neumaier) accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// One matrix entry with its phases split along the two axes:
/// `X(ω) = Σ α·e^{−iωT}` and `ω = ω_p/2 + Ω₊/2 ± Ω₋/2`.
struct FactoredEntry {
    carrier: Vec<Complex64>,
    plus: Vec<Vec<Complex64>>,
    minus: Vec<Vec<Complex64>>,
}

impl FactoredEntry {
    fn new(
        x: &ExpSum,
        taus: &[f64],
        wp: f64,
        plus_nodes: &[f64],
        minus_nodes: &[f64],
        minus_sign: f64,
    ) -> Self {
        let mut carrier = Vec::new();
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for (c, a) in x.terms() {
            let t = c.dot(taus);
            carrier.push(Complex64::from_polar(a.to_f64().unwrap(), -0.5 * wp * t));
            plus.push(
                plus_nodes
                    .iter()
                    .map(|&o| Complex64::from_polar(1.0, -0.5 * o * t))
                    .collect(),
            );
            minus.push(
                minus_nodes
                    .iter()
                    .map(|&o| Complex64::from_polar(1.0, -0.5 * minus_sign * o * t))
                    .collect(),
            );
        }
        FactoredEntry {
            carrier,
            plus,
            minus,
        }
    }

    /// Per-term row factors for a fixed `Ω₊` node.
    fn row(&self, i: usize) -> Vec<Complex64> {
        self.carrier
            .iter()
            .zip(&self.plus)
            .map(|(c, p)| c * p[i])
            .collect()
    }

    fn at(row: &[Complex64], minus: &[Vec<Complex64>], j: usize) -> Complex64 {
        row.iter().zip(minus).map(|(r, m)| r * m[j]).sum()
    }
}

/// Normalized coincidence probability by direct integration of
/// `|f(ω_s,ω_i)A(ω_s)D(ω_i) + f(ω_i,ω_s)B(ω_s)C(ω_i)|²`.
///
/// The result is divided by `∫|f|²` and by the delay-independent weight of
/// the pair amplitude, so a cascade whose delays are all far outside the
/// coherence time reads 1. A pair amplitude that cancels identically gives 0.
pub fn integrate_r(
    tm: &TransferMatrix,
    js: &JointSpectrum,
    taus: &[f64],
    grid: &GridSpec,
) -> Result<f64, QuadratureError> {
    if taus.len() != tm.n_delays() {
        return Err(QuadratureError::DimensionMismatch {
            expected: tm.n_delays(),
            got: taus.len(),
        });
    }
    let weight = tm
        .pair_amplitude(js.exchange_symmetry())
        .incoherent_weight()
        .to_f64()
        .unwrap();
    if weight == 0.0 {
        return Ok(0.0);
    }
    let px = grid.axis(js.plus().sigma());
    let mx = grid.axis(js.minus().sigma());
    let plus_nodes: Vec<f64> = px.iter().map(|p| p.0).collect();
    let minus_nodes: Vec<f64> = mx.iter().map(|p| p.0).collect();
    let wp = js.pump_frequency();
    let a = FactoredEntry::new(&tm.a, taus, wp, &plus_nodes, &minus_nodes, 1.0);
    let b = FactoredEntry::new(&tm.b, taus, wp, &plus_nodes, &minus_nodes, 1.0);
    let c = FactoredEntry::new(&tm.c, taus, wp, &plus_nodes, &minus_nodes, -1.0);
    let d = FactoredEntry::new(&tm.d, taus, wp, &plus_nodes, &minus_nodes, -1.0);

    let rows: Vec<(f64, f64)> = px
        .par_iter()
        .enumerate()
        .map(|(i, &(op, wpl))| {
            let (ra, rb, rc, rd) = (a.row(i), b.row(i), c.row(i), d.row(i));
            let mut num = Neumaier::default();
            let mut den = Neumaier::default();
            for (j, &(om, wmi)) in mx.iter().enumerate() {
                let f = js.jsa_value(op, om);
                let f_swapped = js.jsa_value(op, -om);
                let amp = f
                    * FactoredEntry::at(&ra, &a.minus, j)
                    * FactoredEntry::at(&rd, &d.minus, j)
                    + f_swapped
                        * FactoredEntry::at(&rb, &b.minus, j)
                        * FactoredEntry::at(&rc, &c.minus, j);
                let w = wpl * wmi;
                num.add(w * amp.norm_sqr());
                den.add(w * f.norm_sqr());
            }
            (num.total(), den.total())
        })
        .collect();
    let mut num = Neumaier::default();
    let mut den = Neumaier::default();
    for (n, d) in rows {
        num.add(n);
        den.add(d);
    }
    let value = num.total() / den.total() / weight;
    if !value.is_finite() {
        return Err(QuadratureError::NonFinite);
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub grid: GridSpec,
    pub value: f64,
    /// Change from the previous grid; `None` for the first.
    pub delta: Option<f64>,
}

pub fn convergence_report(
    tm: &TransferMatrix,
    js: &JointSpectrum,
    taus: &[f64],
    grids: &[GridSpec],
) -> Result<Vec<ConvergenceRow>, QuadratureError> {
    if grids.len() < 2 {
        return Err(QuadratureError::TooFewGrids);
    }
    let mut out: Vec<ConvergenceRow> = Vec::with_capacity(grids.len());
    for g in grids {
        let value = integrate_r(tm, js, taus, g)?;
        let delta = out.last().map(|prev| (value - prev.value).abs());
        out.push(ConvergenceRow {
            grid: *g,
            value,
            delta,
        });
    }
    Ok(out)
}

/// Numeric `∫F(Ω)cos((carrier+Ω)τ)dΩ / ∫F(Ω)dΩ` on a trapezoid grid.
/// With `carrier = 0` this is the carrier-free correlation function.
pub fn correlation_by_quadrature(
    profile: &SpectralProfile,
    carrier: f64,
    tau: f64,
    extent_sigmas: f64,
    nodes: usize,
) -> f64 {
    let half = extent_sigmas * profile.sigma();
    let h = 2.0 * half / (nodes - 1) as f64;
    let mut num = Neumaier::default();
    let mut den = Neumaier::default();
    for k in 0..nodes {
        let o = -half + k as f64 * h;
        let w = if k == 0 || k == nodes - 1 { 0.5 } else { 1.0 };
        let f = profile.intensity(o);
        num.add(w * f * ((carrier + o) * tau).cos());
        den.add(w * f);
    }
    num.total() / den.total()
}
