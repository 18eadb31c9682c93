//! Shared inputs for the criterion benches.

use smalldev::{CoefficientWindow, MaSpec, TruncatedOperator, WeightSequence};

pub fn ar1_window() -> CoefficientWindow {
    MaSpec::Ar1 { rho: 0.5, scale: 1.0 }.materialize(1e-12).expect("valid AR(1)")
}

pub fn harmonic_weights() -> WeightSequence {
    WeightSequence::symmetric(1.0).expect("p = 1 is valid")
}

pub fn ar1_operator(half_rows: usize) -> TruncatedOperator {
    TruncatedOperator::build(&ar1_window(), &harmonic_weights(), half_rows).expect("within memory budget")
}

/// `lambda_n = 4 / n^2`, an idealized spectrum for the small-ball kernels.
pub fn power_spectrum(len: usize) -> Vec<f64> {
    (1..=len).map(|n| 4.0 / (n as f64).powi(2)).collect()
}
