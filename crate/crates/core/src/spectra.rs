//! Factorable joint spectral amplitudes in collective coordinates.
//!
//! A biphoton spectrum is modelled as `f(ω_s, ω_i) = f₊(Ω₊)·f₋(Ω₋)` with
//! `Ω₊ = ω_s + ω_i − ω_p` and `Ω₋ = ω_s − ω_i`. Every closed-form
//! coincidence model in this crate is a combination of the two normalized
//! correlation functions `g₊` and `g₋` built from the marginal intensities
//! `F(Ω) = |f(Ω)|²`.
//!
//! Frequencies are dimensionless. Delays are in the reciprocal unit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::defaults;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("linewidth must be finite and positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("{symmetry:?} exchange symmetry requires an {required} difference-frequency amplitude")]
    SymmetryMismatch {
        symmetry: ExchangeSymmetry,
        required: &'static str,
    },
    #[error(
        "pump frequency {pump} is below {ratio} x the widest linewidth {widest}; \
         the full-line frequency integrals are not valid"
    )]
    PumpTooLow { pump: f64, widest: f64, ratio: f64 },
}

/// Shape of a marginal spectral amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `exp(−Ω²/4σ²)`, even.
    Gaussian,
    /// `Ω·exp(−Ω²/4σ²)`, the lowest odd Hermite-Gaussian.
    HermiteGaussian1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralProfile {
    kind: ProfileKind,
    sigma: f64,
}

impl SpectralProfile {
    pub fn new(kind: ProfileKind, sigma: f64) -> Result<Self, SpectrumError> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(SpectrumError::NonPositiveWidth(sigma));
        }
        Ok(Self { kind, sigma })
    }

    pub fn gaussian(sigma: f64) -> Result<Self, SpectrumError> {
        Self::new(ProfileKind::Gaussian, sigma)
    }

    pub fn hermite_gaussian(sigma: f64) -> Result<Self, SpectrumError> {
        Self::new(ProfileKind::HermiteGaussian1, sigma)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// True when the amplitude is odd in its argument.
    pub fn is_odd(&self) -> bool {
        matches!(self.kind, ProfileKind::HermiteGaussian1)
    }

    pub fn amplitude(&self, omega: f64) -> f64 {
        let gauss = (-omega * omega / (4.0 * self.sigma * self.sigma)).exp();
        match self.kind {
            ProfileKind::Gaussian => gauss,
            ProfileKind::HermiteGaussian1 => omega * gauss,
        }
    }

    /// `F(Ω) = |f(Ω)|²`.
    pub fn intensity(&self, omega: f64) -> f64 {
        let a = self.amplitude(omega);
        a * a
    }

    /// Ratio of the intensity to the Gaussian weight `exp(−Ω²/2σ²)`; this is
    /// the polynomial factor left over for Gauss-Hermite integration.
    pub fn intensity_over_gaussian_weight(&self, omega: f64) -> f64 {
        match self.kind {
            ProfileKind::Gaussian => 1.0,
            ProfileKind::HermiteGaussian1 => omega * omega,
        }
    }

    /// Carrier-free normalized Fourier transform of the intensity,
    /// `G(τ)/G(0)`. Real because every supported intensity is even.
    pub fn correlation(&self, tau: f64) -> f64 {
        let s2t2 = self.sigma * self.sigma * tau * tau;
        let gauss = (-0.5 * s2t2).exp();
        match self.kind {
            ProfileKind::Gaussian => gauss,
            // FT of Ω²·exp(−Ω²/2σ²) is −d²/dτ² of the Gaussian transform.
            ProfileKind::HermiteGaussian1 => (1.0 - s2t2) * gauss,
        }
    }

    /// Smallest Gaussian decay bound `|correlation(τ)| ≤ envelope_bound(τ)`.
    pub fn correlation_bound(&self, tau: f64) -> f64 {
        self.correlation(tau).abs()
    }
}

/// Behaviour of the amplitude under exchange of signal and idler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeSymmetry {
    Symmetric,
    Antisymmetric,
}

impl ExchangeSymmetry {
    pub fn sign(self) -> i64 {
        match self {
            ExchangeSymmetry::Symmetric => 1,
            ExchangeSymmetry::Antisymmetric => -1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExchangeSymmetry::Symmetric => "symmetric",
            ExchangeSymmetry::Antisymmetric => "antisymmetric",
        }
    }

    pub const BOTH: [ExchangeSymmetry; 2] =
        [ExchangeSymmetry::Symmetric, ExchangeSymmetry::Antisymmetric];
}

/// Frequency correlation of a biphoton, fixed by the ratio `σ₊/σ₋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationClass {
    AntiCorrelated,
    Correlated,
    Uncorrelated,
}

impl CorrelationClass {
    pub const ALL: [CorrelationClass; 3] = [
        CorrelationClass::AntiCorrelated,
        CorrelationClass::Correlated,
        CorrelationClass::Uncorrelated,
    ];

    pub fn from_widths(sigma_plus: f64, sigma_minus: f64) -> Self {
        let ratio = sigma_plus / sigma_minus;
        if (ratio - 1.0).abs() <= 1e-9 {
            CorrelationClass::Uncorrelated
        } else if ratio < 1.0 {
            CorrelationClass::AntiCorrelated
        } else {
            CorrelationClass::Correlated
        }
    }

    /// `σ₊/σ₋` of the three reference resources: 0.1, 10 and 1.
    pub fn ratio(self) -> f64 {
        match self {
            CorrelationClass::AntiCorrelated => 0.1,
            CorrelationClass::Correlated => 10.0,
            CorrelationClass::Uncorrelated => 1.0,
        }
    }

    /// Reference `(σ₊, σ₋)` with the broader marginal set to one.
    ///
    /// With this scaling the anti-correlated and uncorrelated resources share
    /// `σ₋` (identical HOM dips), the correlated and uncorrelated ones share
    /// `σ₊` (identical N00N fringes), and the default pump stays ten
    /// linewidths above every marginal.
    pub fn widths(self) -> (f64, f64) {
        match self {
            CorrelationClass::AntiCorrelated => (0.1, 1.0),
            CorrelationClass::Correlated => (1.0, 0.1),
            CorrelationClass::Uncorrelated => (1.0, 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CorrelationClass::AntiCorrelated => "anticorrelated",
            CorrelationClass::Correlated => "correlated",
            CorrelationClass::Uncorrelated => "uncorrelated",
        }
    }

    /// Gaussian spectrum of this class for the requested exchange symmetry.
    /// The antisymmetric variant uses a first Hermite-Gaussian difference
    /// amplitude with the same `σ₋`.
    pub fn spectrum(self, symmetry: ExchangeSymmetry) -> JointSpectrum {
        let (sp, sm) = self.widths();
        JointSpectrum::with_symmetry(sp, sm, symmetry, defaults::PUMP_FREQUENCY)
            .expect("reference widths satisfy the spectrum invariants")
    }
}

/// `f₊(Ω₊)·f₋(Ω₋)` plus the pump frequency that places the carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSpectrum {
    plus: SpectralProfile,
    minus: SpectralProfile,
    exchange_symmetry: ExchangeSymmetry,
    pump_frequency: f64,
}

impl JointSpectrum {
    pub fn new(
        plus: SpectralProfile,
        minus: SpectralProfile,
        exchange_symmetry: ExchangeSymmetry,
        pump_frequency: f64,
    ) -> Result<Self, SpectrumError> {
        match (exchange_symmetry, minus.is_odd()) {
            (ExchangeSymmetry::Symmetric, true) => {
                return Err(SpectrumError::SymmetryMismatch {
                    symmetry: exchange_symmetry,
                    required: "even",
                })
            }
            (ExchangeSymmetry::Antisymmetric, false) => {
                return Err(SpectrumError::SymmetryMismatch {
                    symmetry: exchange_symmetry,
                    required: "odd",
                })
            }
            _ => {}
        }
        let widest = plus.sigma().max(minus.sigma());
        let ratio = defaults::PUMP_TO_LINEWIDTH_MIN;
        if !(pump_frequency.is_finite() && pump_frequency >= ratio * widest) {
            return Err(SpectrumError::PumpTooLow {
                pump: pump_frequency,
                widest,
                ratio,
            });
        }
        Ok(Self {
            plus,
            minus,
            exchange_symmetry,
            pump_frequency,
        })
    }

    /// Symmetric Gaussian ⊗ Gaussian spectrum at the default pump frequency.
    pub fn gaussian(sigma_plus: f64, sigma_minus: f64) -> Result<Self, SpectrumError> {
        Self::with_symmetry(
            sigma_plus,
            sigma_minus,
            ExchangeSymmetry::Symmetric,
            defaults::PUMP_FREQUENCY,
        )
    }

    /// Gaussian sum amplitude; the difference amplitude is Gaussian for the
    /// symmetric case and first Hermite-Gaussian for the antisymmetric one.
    pub fn with_symmetry(
        sigma_plus: f64,
        sigma_minus: f64,
        symmetry: ExchangeSymmetry,
        pump_frequency: f64,
    ) -> Result<Self, SpectrumError> {
        let minus_kind = match symmetry {
            ExchangeSymmetry::Symmetric => ProfileKind::Gaussian,
            ExchangeSymmetry::Antisymmetric => ProfileKind::HermiteGaussian1,
        };
        Self::new(
            SpectralProfile::gaussian(sigma_plus)?,
            SpectralProfile::new(minus_kind, sigma_minus)?,
            symmetry,
            pump_frequency,
        )
    }

    pub fn plus(&self) -> &SpectralProfile {
        &self.plus
    }

    pub fn minus(&self) -> &SpectralProfile {
        &self.minus
    }

    pub fn exchange_symmetry(&self) -> ExchangeSymmetry {
        self.exchange_symmetry
    }

    pub fn pump_frequency(&self) -> f64 {
        self.pump_frequency
    }

    pub fn correlation_class(&self) -> CorrelationClass {
        CorrelationClass::from_widths(self.plus.sigma(), self.minus.sigma())
    }

    /// `f₊(Ω₊)·f₋(Ω₋)`.
    pub fn jsa_value(&self, omega_plus: f64, omega_minus: f64) -> Complex64 {
        Complex64::new(
            self.plus.amplitude(omega_plus) * self.minus.amplitude(omega_minus),
            0.0,
        )
    }

    /// Amplitude at absolute signal/idler frequencies.
    pub fn jsa_at(&self, omega_s: f64, omega_i: f64) -> Complex64 {
        self.jsa_value(omega_s + omega_i - self.pump_frequency, omega_s - omega_i)
    }

    pub fn g_minus(&self, tau: f64) -> f64 {
        self.minus.correlation(tau)
    }

    /// Sum-frequency correlation including the pump carrier,
    /// `cos(ω_p τ)·G₊(τ)/G₊(0)`.
    pub fn g_plus(&self, tau: f64) -> f64 {
        (self.pump_frequency * tau).cos() * self.plus.correlation(tau)
    }

    /// `|G₊(τ)/G₊(0)|`, the carrier-free magnitude bounding `g_plus`.
    pub fn envelope_magnitude_plus(&self, tau: f64) -> f64 {
        self.plus.correlation_bound(tau)
    }

    /// A copy with the pump moved; used to check carrier independence.
    pub fn with_pump(&self, pump_frequency: f64) -> Result<Self, SpectrumError> {
        Self::new(self.plus, self.minus, self.exchange_symmetry, pump_frequency)
    }
}
