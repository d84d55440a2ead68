//! Simulation, estimation and error metrics for autoregressive Hilbertian
//! processes of order one, ARH(1), on `L²((a, b))`.
//!
//! Everything is carried in the coefficient space of a fixed sine basis.
//! Curve-level views are reconstructed on a quadrature grid when a method
//! needs them.

pub mod componentwise;
pub mod empirical;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod predictor;
pub mod scenario;
pub mod simulate;
pub mod smoothing;
pub mod wavelet;

pub use error::{ArhError, Result};
pub use grid::{inner_product, project, reconstruct, sine_basis, BasisSystem, Curve, Grid};
pub use scenario::{validate, Regime, ScenarioOperators, ScenarioSpec};
pub use simulate::{simulate, CoeffSeries};
