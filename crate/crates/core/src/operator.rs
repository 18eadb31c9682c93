//! The truncated operator `M = D A` and its Karhunen-Loeve spectrum.
//!
//! Rows are indexed by `k in -N..=N` and carry the weight `d_k`; columns are
//! indexed by `j in -(N+L)..=(N+L)` where `L` is the half-width of the
//! coefficient window, so every nonzero `a_{k-j}` of a kept row is present.
//! The eigenvalues of `M M^T` are then exactly the eigenvalues of the
//! covariance of `(d_k U_k)_{|k| <= N}`.

use std::io::Write;

use serde::Serialize;

use crate::eigen::SymmetricMatrix;
use crate::error::{Error, Result};
use crate::model::{CoefficientWindow, WeightSequence};
use crate::numeric::{compensated_sum, sorted_quantile};
use crate::smallball::CondensedSpectrum;

/// Default memory budget for the dense operator and its Gram matrix.
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

/// Eigenvalues below this fraction of the largest one are set to zero.
pub const CLAMP_RELATIVE: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    half_rows: usize,
    pad: usize,
    weights: Vec<f64>,
    window: CoefficientWindow,
    entries: Vec<f64>,
}

impl TruncatedOperator {
    /// Builds `M` with `entry(k, j) = d_k a_{k-j}` under the default memory budget.
    pub fn build(window: &CoefficientWindow, w: &WeightSequence, half_rows: usize) -> Result<Self> {
        Self::build_with_budget(window, w, half_rows, DEFAULT_MEMORY_BUDGET)
    }

    pub fn build_with_budget(
        window: &CoefficientWindow,
        w: &WeightSequence,
        half_rows: usize,
        budget_bytes: u64,
    ) -> Result<Self> {
        if half_rows == 0 {
            return Err(Error::Domain("truncation N must be at least 1".into()));
        }
        let pad = window.half_width();
        let rows = 2 * half_rows as u64 + 1;
        let cols = 2 * (half_rows + pad) as u64 + 1;
        // The operator itself plus the Gram matrix handed to the eigensolver.
        let needed = 8 * (rows * cols + rows * rows);
        if needed > budget_bytes {
            return Err(Error::Resource { needed, budget: budget_bytes });
        }
        let (rows, cols) = (rows as usize, cols as usize);
        let n = half_rows as i64;
        let weights: Vec<f64> = (-n..=n).map(|k| w.weight_at(k)).collect();
        let mut entries = vec![0.0; rows * cols];
        for (r, &d) in weights.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let k = r as i64 - n;
            for (i, &a) in window.coeffs.iter().enumerate() {
                // a_m sits at column j = k - m.
                let m = window.offset + i as i64;
                let c = (k - m + n + pad as i64) as usize;
                entries[r * cols + c] = d * a;
            }
        }
        Ok(Self { half_rows, pad, weights, window: window.clone(), entries })
    }

    /// Truncation level `N`.
    pub fn half_rows(&self) -> usize {
        self.half_rows
    }

    /// Column padding `L`.
    pub fn pad(&self) -> usize {
        self.pad
    }

    pub fn rows(&self) -> usize {
        2 * self.half_rows + 1
    }

    pub fn cols(&self) -> usize {
        2 * (self.half_rows + self.pad) + 1
    }

    /// Entry for row index `k` and column index `j` (both centered at zero).
    pub fn entry(&self, k: i64, j: i64) -> f64 {
        let n = self.half_rows as i64;
        let r = k + n;
        let c = j + n + self.pad as i64;
        if r < 0 || c < 0 || r as usize >= self.rows() || c as usize >= self.cols() {
            return 0.0;
        }
        self.entries[r as usize * self.cols() + c as usize]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let cols = self.cols();
        &self.entries[r * cols..(r + 1) * cols]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn frobenius_sq(&self) -> f64 {
        compensated_sum(self.entries.iter().map(|x| x * x))
    }

    /// `M M^T`, using the band structure: rows further apart than the window
    /// length share no nonzero column.
    pub fn gram(&self) -> SymmetricMatrix {
        let rows = self.rows();
        let cols = self.cols();
        let n = self.half_rows as i64;
        let pad = self.pad as i64;
        let first = self.window.offset;
        let last = self.window.last_index();
        let band = self.window.len();
        let mut g = SymmetricMatrix::zeros(rows);
        for r in 0..rows {
            if self.weights[r] == 0.0 {
                continue;
            }
            let k = r as i64 - n;
            let row_k = &self.entries[r * cols..(r + 1) * cols];
            for s in r.saturating_sub(band - 1)..=r {
                if self.weights[s] == 0.0 {
                    continue;
                }
                let l = s as i64 - n;
                let row_l = &self.entries[s * cols..(s + 1) * cols];
                // Shared nonzero columns: j in [k - last, l - first].
                let lo = (k - last + n + pad) as usize;
                let hi = (l - first + n + pad) as usize;
                if lo > hi {
                    continue;
                }
                let dot: f64 = row_k[lo..=hi].iter().zip(&row_l[lo..=hi]).map(|(x, y)| x * y).sum();
                g.set(r, s, dot);
            }
        }
        g
    }

    /// Eigenvalues of `M M^T`, i.e. squared singular values of `M`.
    pub fn spectrum(&self) -> Result<Spectrum> {
        let mut eigenvalues = self.gram().eigenvalues()?;
        let top = eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
        for v in eigenvalues.iter_mut() {
            if *v < CLAMP_RELATIVE * top || *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(Spectrum {
            eigenvalues,
            half_rows: self.half_rows,
            pad: self.pad,
            tail_mass: self.window.tail_mass,
        })
    }
}

/// Nonincreasing Karhunen-Loeve eigenvalues of the truncated covariance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub half_rows: usize,
    pub pad: usize,
    pub tail_mass: f64,
}

/// Which indices of the fit window enter the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    #[default]
    All,
    Even,
    Odd,
}

/// Index range `[lo, hi]` (1-based, inclusive) used to estimate the decay constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FitWindow {
    pub lo: usize,
    pub hi: usize,
    pub parity: Parity,
}

impl FitWindow {
    pub fn new(lo: usize, hi: usize) -> Self {
        Self { lo, hi, parity: Parity::All }
    }

    pub fn with_parity(self, parity: Parity) -> Self {
        Self { parity, ..self }
    }

    /// `[N/10, 2N/5]`: clear of both the pre-asymptotic head and the
    /// truncation-biased tail.
    pub fn default_for(half_rows: usize) -> Self {
        let lo = (half_rows / 10).max(1);
        let hi = (2 * half_rows / 5).max(lo + 1);
        Self::new(lo, hi)
    }
}

/// Estimate of `C` in `lambda_n ~ C n^{-2p}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub c_hat: f64,
    /// Interquartile range of `lambda_n n^{2p}` over the window.
    pub dispersion: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
    pub window: FitWindow,
    pub points: usize,
    /// Set when the window reaches into the upper half of the spectrum,
    /// where truncation bias dominates.
    pub near_truncation_edge: bool,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `lambda_n` with 1-based `n`.
    pub fn lambda(&self, n: usize) -> f64 {
        self.eigenvalues[n - 1]
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.eigenvalues.iter().copied())
    }

    /// `#{n : sqrt(lambda_n) >= s}`.
    pub fn counting_function(&self, s: f64) -> usize {
        self.eigenvalues.partition_point(|&v| v.sqrt() >= s)
    }

    /// Median of `lambda_n n^{2p}` over the window, with its interquartile range.
    pub fn fit_decay_constant(&self, p: f64, window: FitWindow) -> Result<DecayFit> {
        if window.lo < 1 || window.lo >= window.hi {
            return Err(Error::Domain(format!(
                "fit window [{}, {}] must satisfy 1 <= lo < hi",
                window.lo, window.hi
            )));
        }
        if window.hi > self.len() {
            return Err(Error::Domain(format!(
                "fit window upper end {} exceeds spectrum length {}",
                window.hi,
                self.len()
            )));
        }
        let mut scaled: Vec<f64> = (window.lo..=window.hi)
            .filter(|n| match window.parity {
                Parity::All => true,
                Parity::Even => n % 2 == 0,
                Parity::Odd => n % 2 == 1,
            })
            .map(|n| self.lambda(n) * (n as f64).powf(2.0 * p))
            .collect();
        if scaled.is_empty() {
            return Err(Error::Domain("fit window selects no indices".into()));
        }
        scaled.sort_by(f64::total_cmp);
        let q1 = sorted_quantile(&scaled, 0.25);
        let q3 = sorted_quantile(&scaled, 0.75);
        Ok(DecayFit {
            c_hat: sorted_quantile(&scaled, 0.5),
            dispersion: q3 - q1,
            lower_quartile: q1,
            upper_quartile: q3,
            window,
            points: scaled.len(),
            near_truncation_edge: window.hi > self.half_rows,
        })
    }

    /// `s^{1/p} N(s)` at `s = sqrt(lambda_n)`; tends to `C^{1/(2p)}`.
    pub fn counting_scaled(&self, p: f64, n: usize) -> f64 {
        let s = self.lambda(n).sqrt();
        s.powf(1.0 / p) * self.counting_function(s) as f64
    }

    /// CSV with columns `n,lambda_n,lambda_n_scaled` (`lambda_n n^{2p}`).
    pub fn write_csv<W: Write>(&self, p: f64, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,lambda_n,lambda_n_scaled")?;
        for (i, &v) in self.eigenvalues.iter().enumerate() {
            let n = i + 1;
            writeln!(out, "{},{:e},{:e}", n, v, v * (n as f64).powf(2.0 * p))?;
        }
        Ok(())
    }

    /// CSV with columns `s,count` for the given levels.
    pub fn write_counting_csv<W: Write>(&self, levels: &[f64], mut out: W) -> std::io::Result<()> {
        writeln!(out, "s,count")?;
        for &s in levels {
            writeln!(out, "{:e},{}", s, self.counting_function(s))?;
        }
        Ok(())
    }

    /// The first `keep` eigenvalues followed by the power law `C n^{-2p}`.
    ///
    /// The truncated operator loses every eigenvalue past `2N+1`, and the
    /// top of the kept range is biased low by the truncation. At levels where
    /// the small-deviation saddle point sits near or beyond that index, the
    /// truncated spectrum alone badly underestimates `|ln P|`.
    pub fn power_tail_completion(&self, keep: usize, c: f64, p: f64) -> CondensedSpectrum {
        CondensedSpectrum::with_power_tail(&self.eigenvalues[..keep.min(self.len())], c, p)
    }
}

/// Free-function form of [`TruncatedOperator::build`].
pub fn build(window: &CoefficientWindow, w: &WeightSequence, half_rows: usize) -> Result<TruncatedOperator> {
    TruncatedOperator::build(window, w, half_rows)
}
