//! Closed-form constants of the eigenvalue and small-deviation asymptotics.
//!
//! For weights `d_k ~ d(sgn k) |k|^{-p}` and symbol `a(x) = sum_m a_m e^{imx}`,
//!
//! ```text
//! Delta = (1/2pi) int_0^{2pi} |a(x)|^{1/p} dx * (d_-^{1/p} + d_+^{1/p})
//! C     = Delta^{2p}                      (lambda_n ~ C n^{-2p})
//! B_p   = (2p-1)/2 * (pi / (2p sin(pi/(2p))))^{2p/(2p-1)}
//! ln P(sum d_k^2 U_k^2 <= eps^2) ~ -B_p (C / eps^2)^{1/(2p-1)}
//! ```
//!
//! The mean of `|a|^{1/p}` is computed with the periodic trapezoid rule on
//! dyadic grids, doubling until the relative change drops below `rel_tol`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{density_amplitude, CoefficientWindow, MaSpec, WeightSequence};

/// Default relative tolerance for the symbol quadrature.
pub const DEFAULT_QUAD_REL_TOL: f64 = 1e-10;

/// Largest trapezoid grid tried before reporting non-convergence.
pub const MAX_QUAD_GRID: usize = 1 << 24;

const MIN_QUAD_GRID: usize = 64;

/// Grid size and last observed relative change of a quadrature run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureMeta {
    pub grid_size: usize,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryConstants {
    pub p: f64,
    pub b_p: f64,
    pub c: f64,
    pub delta_mu: f64,
    /// Exponent `2/(2p-1)` of `1/eps` in the log small-deviation rate.
    pub sd_exponent: f64,
    pub quadrature_grid: usize,
    pub quadrature_rel_err: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl TheoryConstants {
    /// Evaluates every constant for the given window and weights.
    pub fn compute(window: &CoefficientWindow, w: &WeightSequence, rel_tol: f64) -> Result<Self> {
        let p = w.p();
        let b_p = constant_bp(p)?;
        let (mean, meta) = symbol_mean(window, p, rel_tol)?;
        let delta_mu = mean * side_factor(w);
        let c = delta_mu.powf(2.0 * p);
        let mut warnings = Vec::new();
        if p < 1.0 {
            warnings.push(format!(
                "p = {p} < 1: the asymptotics additionally require (a_m) in l_r for some r < 2"
            ));
        }
        if !w.is_homogeneous() {
            warnings.push("weight overrides are ignored by the asymptotic constants".into());
        }
        Ok(Self {
            p,
            b_p,
            c,
            delta_mu,
            sd_exponent: 2.0 / (2.0 * p - 1.0),
            quadrature_grid: meta.grid_size,
            quadrature_rel_err: meta.rel_err,
            warnings,
        })
    }

    /// Like [`TheoryConstants::compute`], but drops the `l_r` warning when the
    /// model family certifies it.
    pub fn for_model(spec: &MaSpec, window: &CoefficientWindow, w: &WeightSequence, rel_tol: f64) -> Result<Self> {
        let mut out = Self::compute(window, w, rel_tol)?;
        if spec.certifies_lr_below_two() {
            out.warnings.retain(|m| !m.contains("l_r"));
        }
        Ok(out)
    }

    pub fn predicted_eigenvalue(&self, n: usize) -> f64 {
        predicted_eigenvalue(n, self.c, self.p)
    }

    pub fn predicted_log_smalldev(&self, eps: f64) -> f64 {
        predicted_log_smalldev(self.p, self.c, eps)
    }
}

/// `B_p = ((2p-1)/2) (pi / (2p sin(pi/(2p))))^{2p/(2p-1)}` for `p > 1/2`.
pub fn constant_bp(p: f64) -> Result<f64> {
    if !(p > 0.5) || !p.is_finite() {
        return Err(Error::Domain(format!("B_p is defined for p > 1/2, got {p}")));
    }
    let two_p = 2.0 * p;
    let base = PI / (two_p * (PI / two_p).sin());
    Ok((two_p - 1.0) / 2.0 * base.powf(two_p / (two_p - 1.0)))
}

/// `C = ((1/2pi) int |a|^{1/p})^{2p} (d_-^{1/p} + d_+^{1/p})^{2p}`.
pub fn constant_c(window: &CoefficientWindow, w: &WeightSequence, rel_tol: f64) -> Result<(f64, QuadratureMeta)> {
    let p = w.p();
    let (mean, meta) = symbol_mean(window, p, rel_tol)?;
    Ok((mean.powf(2.0 * p) * side_factor(w).powf(2.0 * p), meta))
}

/// `Delta_mu = (1/2pi) int |a|^{1/p} dx (d_-^{1/p} + d_+^{1/p})`, with `mu = 1/p`.
pub fn delta_mu(window: &CoefficientWindow, w: &WeightSequence, rel_tol: f64) -> Result<(f64, QuadratureMeta)> {
    let (mean, meta) = symbol_mean(window, w.p(), rel_tol)?;
    Ok((mean * side_factor(w), meta))
}

pub fn predicted_eigenvalue(n: usize, c: f64, p: f64) -> f64 {
    c * (n as f64).powf(-2.0 * p)
}

/// `-B_p (C / eps^2)^{1/(2p-1)}`.
pub fn predicted_log_smalldev(p: f64, c: f64, eps: f64) -> f64 {
    let b_p = constant_bp(p).unwrap_or(f64::NAN);
    -b_p * (c / (eps * eps)).powf(1.0 / (2.0 * p - 1.0))
}

fn side_factor(w: &WeightSequence) -> f64 {
    let mu = 1.0 / w.p();
    w.d_minus().powf(mu) + w.d_plus().powf(mu)
}

/// `(1/2pi) int_0^{2pi} |a(x)|^{1/p} dx` by refined periodic trapezoid sums.
pub fn symbol_mean(window: &CoefficientWindow, p: f64, rel_tol: f64) -> Result<(f64, QuadratureMeta)> {
    symbol_mean_with_budget(window, p, rel_tol, MAX_QUAD_GRID)
}

/// [`symbol_mean`] with an explicit largest grid size.
pub fn symbol_mean_with_budget(
    window: &CoefficientWindow,
    p: f64,
    rel_tol: f64,
    max_grid: usize,
) -> Result<(f64, QuadratureMeta)> {
    if !(rel_tol > 0.0) {
        return Err(Error::Domain(format!("quadrature tolerance must be positive, got {rel_tol}")));
    }
    if !(p > 0.5) {
        return Err(Error::Domain(format!("weight exponent must satisfy p > 1/2, got {p}")));
    }
    let mu = 1.0 / p;
    let mut grid = MIN_QUAD_GRID.max((2 * window.len()).next_power_of_two());
    let mut prev = density_amplitude(window, grid)?.mean_of(|a| a.powf(mu));
    let mut change = f64::INFINITY;
    let mut doublings = 0;
    while grid < max_grid {
        grid *= 2;
        doublings += 1;
        let next = density_amplitude(window, grid)?.mean_of(|a| a.powf(mu));
        change = if next == 0.0 { (next - prev).abs() } else { ((next - prev) / next).abs() };
        prev = next;
        if change <= rel_tol {
            return Ok((prev, QuadratureMeta { grid_size: grid, rel_err: change }));
        }
    }
    Err(Error::Numeric {
        what: format!("symbol quadrature did not reach relative tolerance {rel_tol:e}"),
        achieved: change,
        iterations: doublings,
    })
}
