//! Stationary moving-average sequences and weight sequences.
//!
//! A stationary centered Gaussian sequence is described by its two-sided
//! moving-average coefficients, `U_k = sum_m a_m X_{k-m}` with i.i.d.
//! standard normal innovations. [`MaSpec`] holds a parametric or explicit
//! description of `(a_m)`; [`MaSpec::materialize`] turns it into a finite
//! [`CoefficientWindow`] with a certified bound on the discarded l2 mass.

mod density;
mod spec;
mod weights;

pub use density::{density_amplitude, DensityGrid};
pub use spec::{materialize, CoefficientWindow, MaSpec};
pub use weights::WeightSequence;
