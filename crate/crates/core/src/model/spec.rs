use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Moving-average description of a stationary Gaussian sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaSpec {
    /// `a_0` only: an i.i.d. sequence with standard deviation `|a0|`.
    Iid { a0: f64 },
    /// Causal AR(1): `a_m = scale * rho^m` for `m >= 0`.
    Ar1 { rho: f64, scale: f64 },
    /// Finitely many coefficients, `coeffs[i] = a_{offset + i}`.
    FiniteMa { coeffs: Vec<f64>, offset: i64 },
    /// `a_m = scale * rho^|m|` for all `m`.
    TwoSidedGeometric { rho: f64, scale: f64 },
    /// Explicit coefficient list, `coeffs[i] = a_{offset + i}`.
    Explicit { coeffs: Vec<f64>, offset: i64 },
}

/// Finite window of moving-average coefficients.
///
/// `coeffs[i]` is `a_{offset + i}`; every coefficient outside the window is
/// treated as zero, and `tail_mass` bounds the sum of their squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientWindow {
    pub coeffs: Vec<f64>,
    pub offset: i64,
    pub tail_mass: f64,
}

impl MaSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64, name: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::Model(format!("{name} must be finite, got {x}")))
            }
        };
        match self {
            MaSpec::Iid { a0 } => {
                finite(*a0, "a0")?;
                if *a0 == 0.0 {
                    return Err(Error::Model("i.i.d. coefficient a0 is zero".into()));
                }
            }
            MaSpec::Ar1 { rho, scale } => {
                finite(*rho, "rho")?;
                finite(*scale, "scale")?;
                if rho.abs() >= 1.0 {
                    return Err(Error::Model(format!(
                        "AR(1) coefficient must satisfy |rho| < 1, got {rho}"
                    )));
                }
                if *scale == 0.0 {
                    return Err(Error::Model("AR(1) scale is zero".into()));
                }
            }
            MaSpec::TwoSidedGeometric { rho, scale } => {
                finite(*rho, "rho")?;
                finite(*scale, "scale")?;
                if !(*rho > 0.0 && *rho < 1.0) {
                    return Err(Error::Model(format!(
                        "two-sided geometric decay must satisfy 0 < rho < 1, got {rho}"
                    )));
                }
                if *scale == 0.0 {
                    return Err(Error::Model("two-sided geometric scale is zero".into()));
                }
            }
            MaSpec::FiniteMa { coeffs, .. } | MaSpec::Explicit { coeffs, .. } => {
                if coeffs.is_empty() {
                    return Err(Error::Model("coefficient list is empty".into()));
                }
                for (i, c) in coeffs.iter().enumerate() {
                    finite(*c, &format!("coeffs[{i}]"))?;
                }
                if coeffs.iter().all(|c| *c == 0.0) {
                    return Err(Error::Model("all coefficients are zero".into()));
                }
            }
        }
        Ok(())
    }

    /// Truncates the coefficient sequence so that the discarded l2 mass is at
    /// most `tol`. Finite specs are returned exactly.
    pub fn materialize(&self, tol: f64) -> Result<CoefficientWindow> {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::Domain(format!("window tolerance must be positive, got {tol}")));
        }
        self.validate()?;
        let window = match self {
            MaSpec::Iid { a0 } => CoefficientWindow {
                coeffs: vec![*a0],
                offset: 0,
                tail_mass: 0.0,
            },
            MaSpec::FiniteMa { coeffs, offset } | MaSpec::Explicit { coeffs, offset } => {
                CoefficientWindow {
                    coeffs: coeffs.clone(),
                    offset: *offset,
                    tail_mass: 0.0,
                }
            }
            MaSpec::Ar1 { rho, scale } => {
                // sum_{m > L} scale^2 rho^{2m} = scale^2 rho^{2(L+1)} / (1 - rho^2)
                let (last, tail) = geometric_cutoff(*rho, *scale, tol, 1.0)?;
                CoefficientWindow {
                    coeffs: (0..=last).map(|m| scale * rho.powi(m as i32)).collect(),
                    offset: 0,
                    tail_mass: tail,
                }
            }
            MaSpec::TwoSidedGeometric { rho, scale } => {
                let (last, tail) = geometric_cutoff(*rho, *scale, tol, 2.0)?;
                let half = last as i64;
                CoefficientWindow {
                    coeffs: (-half..=half)
                        .map(|m| scale * rho.powi(m.unsigned_abs() as i32))
                        .collect(),
                    offset: -half,
                    tail_mass: tail,
                }
            }
        };
        Ok(window)
    }

    /// Whether `(a_m)` is certified to lie in some `l_r` with `r < 2`.
    ///
    /// Every supported family is finite or geometrically decaying, so this
    /// holds for all valid specs.
    pub fn certifies_lr_below_two(&self) -> bool {
        self.validate().is_ok()
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match self {
            MaSpec::Iid { a0 } => format!("iid(a0={a0})"),
            MaSpec::Ar1 { rho, scale } => format!("ar1(rho={rho}, scale={scale})"),
            MaSpec::FiniteMa { coeffs, offset } => {
                format!("finite_ma(len={}, offset={offset})", coeffs.len())
            }
            MaSpec::TwoSidedGeometric { rho, scale } => {
                format!("two_sided_geometric(rho={rho}, scale={scale})")
            }
            MaSpec::Explicit { coeffs, offset } => {
                format!("explicit(len={}, offset={offset})", coeffs.len())
            }
        }
    }
}

/// Smallest `L` with `sides * scale^2 rho^{2(L+1)} / (1 - rho^2) <= tol`.
fn geometric_cutoff(rho: f64, scale: f64, tol: f64, sides: f64) -> Result<(usize, f64)> {
    let r2 = rho * rho;
    let tail_after = |last: usize| sides * scale * scale * r2.powi(last as i32 + 1) / (1.0 - r2);
    if r2 == 0.0 {
        return Ok((0, 0.0));
    }
    // Closed-form starting guess, then step to the exact smallest integer.
    let guess = ((tol * (1.0 - r2) / (sides * scale * scale)).ln() / r2.ln() - 1.0)
        .ceil()
        .max(0.0);
    if !guess.is_finite() || guess > 1e7 {
        return Err(Error::Model(format!(
            "geometric window for rho={rho} at tol={tol:e} is too long"
        )));
    }
    let mut last = guess as usize;
    while last > 0 && tail_after(last - 1) <= tol {
        last -= 1;
    }
    while tail_after(last) > tol {
        last += 1;
    }
    Ok((last, tail_after(last)))
}

impl CoefficientWindow {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Index of the last coefficient in the window.
    pub fn last_index(&self) -> i64 {
        self.offset + self.coeffs.len() as i64 - 1
    }

    /// `a_m`, zero outside the window.
    pub fn coeff(&self, m: i64) -> f64 {
        let i = m - self.offset;
        if i < 0 {
            return 0.0;
        }
        self.coeffs.get(i as usize).copied().unwrap_or(0.0)
    }

    /// Largest `|m|` with `a_m` inside the window.
    pub fn half_width(&self) -> usize {
        self.offset.unsigned_abs().max(self.last_index().unsigned_abs()) as usize
    }

    /// Lag-`lag` autocovariance `sum_m a_m a_{m+lag}` of the windowed sequence.
    pub fn autocovariance(&self, lag: i64) -> f64 {
        let n = self.coeffs.len();
        let shift = lag.unsigned_abs() as usize;
        if shift >= n {
            return 0.0;
        }
        // Symmetric in lag; always sum in the same order so that +lag and -lag agree bitwise.
        compensated_sum((0..n - shift).map(|i| self.coeffs[i] * self.coeffs[i + shift]))
    }

    /// Window with every coefficient multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            offset: self.offset,
            tail_mass: self.tail_mass * c * c,
        }
    }

    /// Window of the reversed sequence `a_{-m}`.
    pub fn reversed(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().rev().copied().collect(),
            offset: -self.last_index(),
            tail_mass: self.tail_mass,
        }
    }

    /// Window of the shifted sequence `a_{m-h}`.
    pub fn shifted(&self, h: i64) -> Self {
        Self {
            coeffs: self.coeffs.clone(),
            offset: self.offset + h,
            tail_mass: self.tail_mass,
        }
    }

    /// Two-column CSV `index,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,value")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            writeln!(out, "{},{}", self.offset + i as i64, c)?;
        }
        Ok(())
    }
}

/// Free-function form of [`MaSpec::materialize`].
pub fn materialize(spec: &MaSpec, tol: f64) -> Result<CoefficientWindow> {
    spec.materialize(tol)
}
