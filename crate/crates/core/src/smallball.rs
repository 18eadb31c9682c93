//! Probabilities `P(Q <= eps^2)` for Gaussian quadratic forms
//! `Q = sum_n lambda_n xi_n^2`.
//!
//! Four routes are provided: closed forms for one or two equal eigenvalues,
//! the saddlepoint (Legendre dual of the log-Laplace transform), importance
//! sampling tilted at the saddle point, and direct simulation of the weighted
//! moving-average sequence itself.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CoefficientWindow, MaSpec, WeightSequence};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::rng::{with_workers, StreamFactory, CHUNK};

/// Minimum Monte Carlo sample count.
pub const MIN_SAMPLES: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Saddlepoint,
    TiltedMc,
    DirectSim,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Saddlepoint => "saddlepoint",
            Method::TiltedMc => "tilted_mc",
            Method::DirectSim => "direct_sim",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SaddleOrder {
    Leading,
    #[default]
    Corrected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallDevEstimate {
    pub eps: f64,
    pub log_prob: f64,
    pub method: Method,
    /// Standard error of `log_prob` (Monte Carlo only).
    pub std_err: Option<f64>,
    pub saddle_t: Option<f64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
}

impl SmallDevEstimate {
    pub fn prob(&self) -> f64 {
        self.log_prob.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    /// Worker threads; `None` defers to the environment or rayon's default.
    pub workers: Option<usize>,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self { samples, seed, workers: None }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        Self { workers: Some(workers), ..self }
    }

    fn check(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::Domain(format!(
                "Monte Carlo needs at least {MIN_SAMPLES} samples, got {}",
                self.samples
            )));
        }
        Ok(())
    }
}

/// Eigenvalues with optional (real) multiplicities.
#[derive(Debug, Clone, Copy)]
struct Terms<'a> {
    values: &'a [f64],
    mult: Option<&'a [f64]>,
}

impl<'a> Terms<'a> {
    fn plain(values: &'a [f64]) -> Self {
        Self { values, mult: None }
    }

    fn sum<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        match self.mult {
            None => compensated_sum(self.values.iter().map(|&l| f(l))),
            Some(m) => compensated_sum(self.values.iter().zip(m).map(|(&l, &k)| k * f(l))),
        }
    }

    fn log_laplace(&self, t: f64) -> f64 {
        -0.5 * self.sum(|l| (2.0 * t * l).ln_1p())
    }

    /// `-L'(t) = sum lambda_n / (1 + 2 t lambda_n)`.
    fn mean_under_tilt(&self, t: f64) -> f64 {
        self.sum(|l| l / (1.0 + 2.0 * t * l))
    }

    /// `L''(t) = sum 2 lambda_n^2 / (1 + 2 t lambda_n)^2`.
    fn curvature(&self, t: f64) -> f64 {
        self.sum(|l| {
            let q = l / (1.0 + 2.0 * t * l);
            2.0 * q * q
        })
    }

    fn check_regime(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Domain(format!("eps must be positive, got {eps}")));
        }
        if self.values.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::Domain("eigenvalues must be finite and nonnegative".into()));
        }
        let total = self.sum(|l| l);
        let eps_sq = eps * eps;
        if eps_sq >= total {
            return Err(Error::Regime { eps_sq, total });
        }
        Ok(eps_sq)
    }

    fn saddle_point(&self, eps: f64) -> Result<f64> {
        let eps_sq = self.check_regime(eps)?;
        let g = |u: f64| self.mean_under_tilt(u.exp()) - eps_sq;

        let (mut lo, mut hi) = (0.0_f64, 0.0_f64);
        if g(0.0) > 0.0 {
            while g(hi) > 0.0 {
                lo = hi;
                hi += 2.0;
                if hi > 700.0 {
                    return Err(Error::Numeric {
                        what: "saddle point above exp(700)".into(),
                        achieved: g(hi),
                        iterations: 350,
                    });
                }
            }
        } else {
            while g(lo) <= 0.0 {
                hi = lo;
                lo -= 2.0;
                if lo < -700.0 {
                    return Err(Error::Numeric {
                        what: "saddle point below exp(-700)".into(),
                        achieved: g(lo),
                        iterations: 350,
                    });
                }
            }
        }
        let mut iterations = 0;
        while hi - lo > 1e-14 * hi.abs().max(1.0) && iterations < 200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        let mut t = (0.5 * (lo + hi)).exp();
        let mut residual = self.mean_under_tilt(t) - eps_sq;
        for _ in 0..4 {
            if residual.abs() <= 1e-13 * eps_sq {
                break;
            }
            let next = t + residual / self.curvature(t);
            if !(next > 0.0) {
                break;
            }
            let r = self.mean_under_tilt(next) - eps_sq;
            if r.abs() >= residual.abs() {
                break;
            }
            t = next;
            residual = r;
        }
        if residual.abs() > 1e-12 * eps_sq {
            return Err(Error::Numeric {
                what: "saddle equation residual above 1e-12 eps^2".into(),
                achieved: residual.abs() / eps_sq,
                iterations,
            });
        }
        Ok(t)
    }

    fn saddlepoint_log_prob(&self, eps: f64, order: SaddleOrder) -> Result<SmallDevEstimate> {
        let t = self.saddle_point(eps)?;
        let leading = (t * eps * eps + self.log_laplace(t)).min(0.0);
        let log_prob = match order {
            SaddleOrder::Leading => leading,
            SaddleOrder::Corrected => {
                let v = self.curvature(t);
                (leading - 0.5 * (2.0 * std::f64::consts::PI * t * t * v).ln()).min(0.0)
            }
        };
        Ok(SmallDevEstimate {
            eps,
            log_prob,
            method: Method::Saddlepoint,
            std_err: None,
            saddle_t: Some(t),
            samples: None,
            seed: None,
        })
    }
}

/// `L(t) = ln E e^{-tQ} = -(1/2) sum ln(1 + 2 t lambda_n)`.
pub fn log_laplace(lambdas: &[f64], t: f64) -> f64 {
    Terms::plain(lambdas).log_laplace(t)
}

/// Solves `sum lambda_n / (1 + 2 t lambda_n) = eps^2` for `t > 0`.
///
/// Bisection on `ln t`, followed by Newton polishing in `t`. The residual at
/// the returned point is at most `1e-12 eps^2`.
pub fn saddle_point(lambdas: &[f64], eps: f64) -> Result<f64> {
    Terms::plain(lambdas).saddle_point(eps)
}

/// Saddlepoint estimate of `ln P(Q <= eps^2)`.
///
/// Leading order is `t* eps^2 + L(t*)`. The corrected form also subtracts
/// the Gaussian-window term `(1/2) ln(2 pi t*^2 L''(t*))`, capped so the
/// estimate stays `<= 0`.
pub fn saddlepoint_log_prob(lambdas: &[f64], eps: f64, order: SaddleOrder) -> Result<SmallDevEstimate> {
    Terms::plain(lambdas).saddlepoint_log_prob(eps, order)
}

/// Spectrum stored as distinct values with multiplicities.
///
/// Used to attach a power-law tail `C n^{-2p}` to a computed head: the tail
/// is grouped into geometrically growing index blocks, each represented by
/// its midpoint value times its length, out to `n = 10^12`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CondensedSpectrum {
    pub values: Vec<f64>,
    pub multiplicities: Vec<f64>,
}

impl CondensedSpectrum {
    /// Relative growth of tail blocks.
    const BLOCK_RATIO: f64 = 1.005;
    const TAIL_END: f64 = 1e12;

    /// `head` followed by `c n^{-2p}` for `n > head.len()`.
    pub fn with_power_tail(head: &[f64], c: f64, p: f64) -> Self {
        let mut values = head.to_vec();
        let mut multiplicities = vec![1.0; head.len()];
        let mut start = head.len() as f64 + 1.0;
        while start < Self::TAIL_END {
            let end = (start * Self::BLOCK_RATIO).floor().max(start + 1.0);
            // Block holds integers start..end (exclusive end).
            let len = end - start;
            let mid = start + (len - 1.0) / 2.0;
            values.push(c * mid.powf(-2.0 * p));
            multiplicities.push(len);
            start = end;
        }
        Self { values, multiplicities }
    }

    fn terms(&self) -> Terms<'_> {
        Terms { values: &self.values, mult: Some(&self.multiplicities) }
    }

    pub fn total(&self) -> f64 {
        self.terms().sum(|l| l)
    }

    pub fn log_laplace(&self, t: f64) -> f64 {
        self.terms().log_laplace(t)
    }

    pub fn saddle_point(&self, eps: f64) -> Result<f64> {
        self.terms().saddle_point(eps)
    }

    pub fn saddlepoint_log_prob(&self, eps: f64, order: SaddleOrder) -> Result<SmallDevEstimate> {
        self.terms().saddlepoint_log_prob(eps, order)
    }
}

/// Closed forms for `[lambda]` (chi-square with one degree of freedom) and
/// `[lambda, lambda]` (exponential).
pub fn exact_small_case_log_prob(lambdas: &[f64], eps: f64) -> Result<SmallDevEstimate> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let log_prob = match lambdas {
        [l] if *l > 0.0 => libm::erf(eps / (2.0 * l).sqrt()).ln(),
        [a, b] if a == b && *a > 0.0 => (-(-eps * eps / (2.0 * a)).exp_m1()).ln(),
        _ => {
            return Err(Error::Unsupported(format!(
                "closed form needs [lambda] or [lambda, lambda] with lambda > 0, got {} values",
                lambdas.len()
            )))
        }
    };
    Ok(SmallDevEstimate {
        eps,
        log_prob,
        method: Method::Exact,
        std_err: None,
        saddle_t: None,
        samples: None,
        seed: None,
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct ChunkStats {
    sum: f64,
    sum_sq: f64,
    hits: u64,
}

/// Runs `per_sample` over all sample indices in fixed chunks and reduces the
/// chunk statistics in index order.
fn run_chunks<F>(cfg: &McConfig, per_sample: F) -> ChunkStats
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Option<f64> + Sync,
{
    let streams = StreamFactory::new(cfg.seed);
    let chunks = cfg.samples.div_ceil(CHUNK);
    let partials: Vec<ChunkStats> = with_workers(cfg.workers, || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK;
                let end = (start + CHUNK).min(cfg.samples);
                let mut sum = CompensatedSum::new();
                let mut sum_sq = CompensatedSum::new();
                let mut hits = 0;
                for i in start..end {
                    let mut rng = streams.stream(i);
                    if let Some(w) = per_sample(&mut rng) {
                        sum.add(w);
                        sum_sq.add(w * w);
                        hits += 1;
                    }
                }
                ChunkStats { sum: sum.value(), sum_sq: sum_sq.value(), hits }
            })
            .collect()
    });
    let mut sum = CompensatedSum::new();
    let mut sum_sq = CompensatedSum::new();
    let mut hits = 0;
    for p in &partials {
        sum.add(p.sum);
        sum_sq.add(p.sum_sq);
        hits += p.hits;
    }
    ChunkStats { sum: sum.value(), sum_sq: sum_sq.value(), hits }
}

/// Importance sampling under the law tilted by `e^{-t* Q}`.
///
/// Under the tilt each `xi_n` has variance `1 / (1 + 2 t* lambda_n)` and
/// `P = e^{L(t*)} E_tilt[e^{t* Q} 1{Q <= eps^2}]`. Weights are accumulated as
/// `e^{t*(Q - eps^2)} <= 1` to stay in range.
pub fn tilted_mc_log_prob(lambdas: &[f64], eps: f64, cfg: &McConfig) -> Result<SmallDevEstimate> {
    cfg.check()?;
    // At or above the total mass the saddle equation has no positive root and
    // the best tilt in the family is no tilt at all.
    let t = match saddle_point(lambdas, eps) {
        Ok(t) => t,
        Err(Error::Regime { .. }) => 0.0,
        Err(e) => return Err(e),
    };
    let eps_sq = eps * eps;
    let tilted: Vec<f64> = lambdas.iter().map(|&l| l / (1.0 + 2.0 * t * l)).collect();
    let stats = run_chunks(cfg, |rng| {
        let mut q = 0.0;
        for &c in &tilted {
            let z: f64 = rng.sample(StandardNormal);
            q += c * z * z;
        }
        (q <= eps_sq).then(|| (t * (q - eps_sq)).exp())
    });
    if stats.hits == 0 || stats.sum <= 0.0 {
        return Err(Error::Estimate(format!(
            "no tilted sample fell below eps^2 = {eps_sq:e}; increase the sample count"
        )));
    }
    let n = cfg.samples as f64;
    let mean = stats.sum / n;
    let var = (stats.sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    let std_err = var.sqrt() / (n.sqrt() * mean);
    Ok(SmallDevEstimate {
        eps,
        log_prob: (log_laplace(lambdas, t) + t * eps_sq + mean.ln()).min(0.0),
        method: Method::TiltedMc,
        std_err: Some(std_err),
        saddle_t: (t > 0.0).then_some(t),
        samples: Some(cfg.samples),
        seed: Some(cfg.seed),
    })
}

/// Direct simulation of `Q_N = sum_{|k| <= N} d_k^2 U_k^2` with
/// `U_k = sum_m a_m X_{k-m}` and i.i.d. standard normal `X_j`.
pub fn direct_sim_log_prob_window(
    window: &CoefficientWindow,
    w: &WeightSequence,
    half_rows: usize,
    eps: f64,
    cfg: &McConfig,
) -> Result<SmallDevEstimate> {
    cfg.check()?;
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    if half_rows == 0 {
        return Err(Error::Domain("truncation N must be at least 1".into()));
    }
    let n = half_rows as i64;
    let first = window.offset;
    let last = window.last_index();
    // Innovations X_j for j in [-N - last, N - first].
    let j_min = -n - last;
    let innovations = (2 * n + last - first + 1) as usize;
    let rows: Vec<(usize, f64)> = (-n..=n)
        .filter_map(|k| {
            let d = w.weight_at(k);
            // X index of the term a_{last} X_{k - last}.
            (d != 0.0).then(|| ((k - last - j_min) as usize, d * d))
        })
        .collect();
    // Coefficients ordered by ascending innovation index.
    let taps: Vec<f64> = window.coeffs.iter().rev().copied().collect();
    let eps_sq = eps * eps;
    let stats = run_chunks(cfg, |rng| {
        let x: Vec<f64> = (0..innovations).map(|_| rng.sample(StandardNormal)).collect();
        let mut q = 0.0;
        for &(start, d_sq) in &rows {
            let u: f64 = taps.iter().zip(&x[start..start + taps.len()]).map(|(a, x)| a * x).sum();
            q += d_sq * u * u;
        }
        (q <= eps_sq).then_some(1.0)
    });
    if stats.hits == 0 {
        return Err(Error::Estimate(format!(
            "no simulated path satisfied Q_N <= {eps_sq:e}; use tilted_mc on the spectrum instead"
        )));
    }
    let total = cfg.samples as f64;
    let p_hat = stats.hits as f64 / total;
    Ok(SmallDevEstimate {
        eps,
        log_prob: p_hat.ln(),
        method: Method::DirectSim,
        std_err: Some(((1.0 - p_hat) / (total * p_hat)).sqrt()),
        saddle_t: None,
        samples: Some(cfg.samples),
        seed: Some(cfg.seed),
    })
}

/// [`direct_sim_log_prob_window`] on the window materialized at `window_tol`.
pub fn direct_sim_log_prob(
    spec: &MaSpec,
    w: &WeightSequence,
    half_rows: usize,
    eps: f64,
    cfg: &McConfig,
    window_tol: f64,
) -> Result<SmallDevEstimate> {
    let window = spec.materialize(window_tol)?;
    direct_sim_log_prob_window(&window, w, half_rows, eps, cfg)
}
