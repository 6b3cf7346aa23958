//! Linear Gaussian measurement analysis for cavity optomechanics.
//!
//! A model is a drift matrix, input couplings and an input covariance. From
//! these the crate builds the frequency-domain scattering matrix, the output
//! covariance and the figures of merit of a continuous measurement: the
//! conditional variance of the signal given the meter, the signal and meter
//! transfer coefficients, and the resulting regime.

pub mod error;
pub mod floquet;
pub mod gaussian;
pub mod levitation;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod optimizer;
pub mod par;
pub mod pulsed;
pub mod quadrature;

pub use error::{Error, Result};
pub use gaussian::{BathSpec, LinearModel, ModeKind, ModeLayout, ScatteringMatrix};
pub use metrics::{evaluate, Conditioning, MeasurementFigures, Regime};
pub use nalgebra;
