//! Cascaded two-photon interferometers: beam-splitter/delay algebra,
//! closed-form coincidence models, a quadrature oracle and interferogram
//! analysis.

pub mod analytic;
pub mod cascade;
pub mod defaults;
pub mod interferogram;
pub mod quadrature;
pub mod spectra;

pub use analytic::{AnalyticModel, CosTerm};
pub use cascade::{CascadeConfig, DelayCombo, ExpSum, Preset, Stage, TransferMatrix};
pub use quadrature::{GridSpec, QuadratureRule};
pub use spectra::{CorrelationClass, ExchangeSymmetry, JointSpectrum, ProfileKind, SpectralProfile};
