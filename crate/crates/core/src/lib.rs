//! Eigenvalue asymptotics and small-deviation probabilities for weighted
//! stationary Gaussian sequences.
//!
//! For `Z_k = d_k U_k`, with `U_k = sum_m a_m X_{k-m}` a moving average of
//! i.i.d. standard normals and power-law weights `d_k ~ d(sgn k) |k|^{-p}`,
//! the crate computes:
//!
//! * the Karhunen-Loeve eigenvalues of a finite section of `cov(Z)`
//!   ([`operator`]), and fits of the decay `lambda_n ~ C n^{-2p}`;
//! * the constants `B_p`, `C` and `Delta_mu` ([`theory`]);
//! * `ln P(sum_k Z_k^2 <= eps^2)` by closed forms, saddlepoint, tilted
//!   Monte Carlo and direct simulation ([`smallball`]).
//!
//! ```
//! use smalldev::{MaSpec, WeightSequence, TheoryConstants};
//!
//! let window = MaSpec::Iid { a0: 1.0 }.materialize(1e-12).unwrap();
//! let w = WeightSequence::symmetric(1.0).unwrap();
//! let t = TheoryConstants::compute(&window, &w, 1e-10).unwrap();
//! assert!((t.c - 4.0).abs() < 1e-12);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigen;
pub mod error;
pub mod model;
pub mod numeric;
pub mod operator;
pub mod rng;
pub mod smallball;
pub mod theory;

pub use error::{Error, Result};
pub use model::{density_amplitude, CoefficientWindow, DensityGrid, MaSpec, WeightSequence};
pub use operator::{DecayFit, FitWindow, Parity, Spectrum, TruncatedOperator};
pub use smallball::{McConfig, Method, SaddleOrder, SmallDevEstimate};
pub use theory::{QuadratureMeta, TheoryConstants};
