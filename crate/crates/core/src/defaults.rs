//! Shared numerical defaults. Frequencies are in units of the reference
//! linewidth and delays in its inverse.

/// Pump (carrier) angular frequency.
pub const PUMP_FREQUENCY: f64 = 20.0;

/// Smallest admissible `ω_p / max(σ₊, σ₋)`.
pub const PUMP_TO_LINEWIDTH_MIN: f64 = 10.0;

/// Gauss-Hermite nodes per axis for the default oracle grid.
pub const GAUSS_HERMITE_NODES: usize = 80;

/// Trapezoid fallback grid.
pub const TRAPEZOID_NODES: usize = 512;
pub const TRAPEZOID_EXTENT_SIGMAS: f64 = 8.0;

/// Minimum samples per carrier period for default sweeps.
pub const SAMPLES_PER_CARRIER_PERIOD: f64 = 8.0;

/// Disagreement allowed between the analytic and quadrature backends.
pub const BACKEND_AGREEMENT: f64 = 1e-5;

/// Samples in a reconstruction sweep.
pub const RECONSTRUCTION_SAMPLES: usize = 4096;

/// Relative size of the DFT after zero padding in spectral reconstruction.
pub const RECONSTRUCTION_ZERO_PAD: usize = 4;

/// Largest edge value of an envelope window accepted for reconstruction.
pub const RECONSTRUCTION_EDGE_TOLERANCE: f64 = 1e-3;

/// Delay of the first fixed stage in two-delay figure sweeps.
pub const TWO_PARAM_TAU1: f64 = 5.0;

/// Fixed delays in three-delay figure sweeps.
pub const THREE_PARAM_TAU1: f64 = 8.0;
pub const THREE_PARAM_TAU2: f64 = 22.0;
