use std::f64::consts::TAU;

use serde::Serialize;

use super::CoefficientWindow;
use crate::error::{Error, Result};
use crate::numeric::{gcd, is_power_of_two};

/// Values of `|a(x)|`, `a(x) = sum_m a_m e^{imx}`, on the grid `x_j = 2 pi j / n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid {
    pub grid_size: usize,
    pub amplitudes: Vec<f64>,
}

impl DensityGrid {
    /// Node `x_j`.
    pub fn node(&self, j: usize) -> f64 {
        TAU * j as f64 / self.grid_size as f64
    }

    /// Periodic trapezoid estimate of `(1/2pi) int_0^{2pi} f(|a(x)|) dx`.
    pub fn mean_of<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        crate::numeric::compensated_sum(self.amplitudes.iter().map(|&a| f(a)))
            / self.grid_size as f64
    }
}

/// Evaluates `|a(x_j)|` by direct trigonometric summation.
///
/// The global phase `e^{i offset x}` is dropped (it does not change the
/// modulus), and every angle is formed from the reduced fraction `r/n`, so
/// nodes shared between a grid and its refinement get bit-identical values.
pub fn density_amplitude(window: &CoefficientWindow, grid_size: usize) -> Result<DensityGrid> {
    if !is_power_of_two(grid_size) {
        return Err(Error::Grid(format!("grid size {grid_size} is not a power of two")));
    }
    if grid_size < 2 * window.len() {
        return Err(Error::Grid(format!(
            "grid size {grid_size} is smaller than twice the window length {}",
            window.len()
        )));
    }
    let twiddles: Vec<(f64, f64)> = (0..grid_size)
        .map(|r| {
            let g = gcd(r, grid_size);
            let angle = TAU * (r / g) as f64 / (grid_size / g) as f64;
            (angle.cos(), angle.sin())
        })
        .collect();
    let mask = grid_size - 1;
    let amplitudes = (0..grid_size)
        .map(|j| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &a) in window.coeffs.iter().enumerate() {
                let (c, s) = twiddles[(i * j) & mask];
                re += a * c;
                im += a * s;
            }
            re.hypot(im)
        })
        .collect();
    Ok(DensityGrid { grid_size, amplitudes })
}
