//! The four commands and the data they produce.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use smalldev::numeric::compensated_sum;
use smalldev::smallball::{
    direct_sim_log_prob_window, saddlepoint_log_prob, tilted_mc_log_prob,
};
use smalldev::theory::constant_c;
use smalldev::{
    CoefficientWindow, DecayFit, FitWindow, MaSpec, McConfig, Method, SaddleOrder, SmallDevEstimate, Spectrum,
    TheoryConstants, TruncatedOperator,
};

use crate::config::{RatioBasis, RunConfig};
use crate::error::{CliError, Stage};
use crate::output::OutputDir;

pub const GAP_TOLERANCE: f64 = 0.05;
pub const RATIO_BAND: f64 = 0.15;
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
pub const TRACE_TOLERANCE: f64 = 1e-10;
pub const SADDLE_RESIDUAL_TOLERANCE: f64 = 1e-12;
pub const CROSS_ENGINE_SIGMAS: f64 = 3.0;
/// Dependence counts as visible when the two constants differ by more than
/// this many combined quadrature tolerances.
pub const DEPENDENCE_FACTOR: f64 = 5.0;

/// Output of the `theory` command.
#[derive(Debug, Clone, Serialize)]
pub struct TheoryOutput {
    pub model: String,
    pub window_len: usize,
    pub window_offset: i64,
    pub window_tail_mass: f64,
    /// `Var U_0`, the lag-zero autocovariance of the windowed model.
    pub variance: f64,
    pub constants: TheoryConstants,
    /// `|C - Delta^{2p}| / C`.
    pub identity_rel_err: f64,
}

pub(crate) struct Prepared {
    pub window: CoefficientWindow,
    pub theory: TheoryOutput,
}

pub(crate) fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    let window = cfg.model.materialize(cfg.window_tol).map_err(CliError::stage(Stage::Theory))?;
    let constants = TheoryConstants::for_model(&cfg.model, &window, &cfg.weights, cfg.quad_rel_tol)
        .map_err(CliError::stage(Stage::Theory))?;
    let identity_rel_err = (constants.c - constants.delta_mu.powf(2.0 * constants.p)).abs() / constants.c;
    let theory = TheoryOutput {
        model: cfg.model.label(),
        window_len: window.len(),
        window_offset: window.offset,
        window_tail_mass: window.tail_mass,
        variance: window.autocovariance(0),
        constants,
        identity_rel_err,
    };
    Ok(Prepared { window, theory })
}

/// `theory`: constants with quadrature metadata, written to `constants.json`.
pub fn cmd_theory(cfg: &RunConfig) -> Result<TheoryOutput, CliError> {
    let out = OutputDir::create(&cfg.output_dir)?;
    let prepared = prepare(cfg)?;
    out.write_json("constants.json", &prepared.theory)?;
    Ok(prepared.theory)
}

/// Fit summary for one truncation.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumFit {
    pub n: usize,
    pub eigenvalues: usize,
    pub c_hat: f64,
    pub dispersion: f64,
    pub fit_lo: usize,
    pub fit_hi: usize,
    pub fit_points: usize,
    pub near_truncation_edge: bool,
    pub c_theory: f64,
    /// `|c_hat / c_theory - 1|`.
    pub gap: f64,
    pub trace: f64,
    pub frobenius_sq: f64,
    pub trace_rel_err: f64,
}

/// Output of the `spectrum` command.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumOutput {
    pub fits: Vec<SpectrumFit>,
    /// Whether the gap sequence is nonincreasing in N.
    pub gap_monotone: bool,
    #[serde(skip)]
    pub spectra: Vec<Spectrum>,
}

fn fit_one(window: &CoefficientWindow, cfg: &RunConfig, c_theory: f64, n: usize) -> smalldev::Result<(SpectrumFit, Spectrum)> {
    let op = TruncatedOperator::build(window, &cfg.weights, n)?;
    let frobenius_sq = op.frobenius_sq();
    let spectrum = op.spectrum()?;
    drop(op);
    let fit: DecayFit = spectrum.fit_decay_constant(cfg.weights.p(), FitWindow::default_for(n))?;
    let trace = spectrum.total();
    let summary = SpectrumFit {
        n,
        eigenvalues: spectrum.len(),
        c_hat: fit.c_hat,
        dispersion: fit.dispersion,
        fit_lo: fit.window.lo,
        fit_hi: fit.window.hi,
        fit_points: fit.points,
        near_truncation_edge: fit.near_truncation_edge,
        c_theory,
        gap: (fit.c_hat / c_theory - 1.0).abs(),
        trace,
        frobenius_sq,
        trace_rel_err: if frobenius_sq > 0.0 { (trace - frobenius_sq).abs() / frobenius_sq } else { 0.0 },
    };
    Ok((summary, spectrum))
}

pub(crate) fn compute_spectra(cfg: &RunConfig, prepared: &Prepared, out: &OutputDir) -> Result<SpectrumOutput, CliError> {
    cfg.require_n_list()?;
    let c = prepared.theory.constants.c;
    let results: Vec<_> = cfg
        .n_list
        .par_iter()
        .map(|&n| fit_one(&prepared.window, cfg, c, n))
        .collect();
    let mut fits = Vec::new();
    let mut spectra = Vec::new();
    for result in results {
        let (fit, spectrum) = result.map_err(CliError::stage(Stage::Spectrum))?;
        out.write_with(&format!("spectrum_N{}.csv", fit.n), |buf| spectrum.write_csv(cfg.weights.p(), buf))?;
        fits.push(fit);
        spectra.push(spectrum);
    }
    let gap_monotone = fits.windows(2).all(|f| f[1].gap <= f[0].gap + 1e-12);
    let output = SpectrumOutput { fits, gap_monotone, spectra };
    out.write_json("spectrum_fits.json", &output)?;
    Ok(output)
}

/// `spectrum`: eigenvalue tables per N plus the fit summary.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<SpectrumOutput, CliError> {
    cfg.require_n_list()?;
    let out = OutputDir::create(&cfg.output_dir)?;
    let prepared = prepare(cfg)?;
    compute_spectra(cfg, &prepared, &out)
}

/// Which eigenvalue sequence a row was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Truncated,
    TailCompleted,
    /// Direct simulation of the truncated model, no spectrum involved.
    Model,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::Truncated => "truncated",
            Basis::TailCompleted => "tail_completed",
            Basis::Model => "model",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// `eps^2` is at or above the total mass; the row is skipped.
    Regime,
}

/// One small-ball estimate with the prediction it is compared to.
#[derive(Debug, Clone, Serialize)]
pub struct SmallBallRow {
    pub eps: f64,
    pub method: Method,
    pub basis: Basis,
    pub status: RowStatus,
    pub log_prob: Option<f64>,
    pub std_err: Option<f64>,
    pub saddle_t: Option<f64>,
    /// `|sum lambda/(1 + 2 t lambda) - eps^2| / eps^2` at the saddle point.
    pub saddle_residual: Option<f64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub predicted_log_prob: f64,
    /// `log_prob / predicted_log_prob`.
    pub ratio: Option<f64>,
}

impl SmallBallRow {
    fn regime(eps: f64, method: Method, basis: Basis, predicted: f64) -> Self {
        Self {
            eps,
            method,
            basis,
            status: RowStatus::Regime,
            log_prob: None,
            std_err: None,
            saddle_t: None,
            saddle_residual: None,
            samples: None,
            seed: None,
            predicted_log_prob: predicted,
            ratio: None,
        }
    }

    fn from_estimate(est: SmallDevEstimate, basis: Basis, predicted: f64, residual: Option<f64>) -> Self {
        Self {
            eps: est.eps,
            method: est.method,
            basis,
            status: RowStatus::Ok,
            log_prob: Some(est.log_prob),
            std_err: est.std_err,
            saddle_t: est.saddle_t,
            saddle_residual: residual,
            samples: est.samples,
            seed: est.seed,
            predicted_log_prob: predicted,
            ratio: Some(est.log_prob / predicted),
        }
    }
}

/// Output of the `smallball` command.
#[derive(Debug, Clone, Serialize)]
pub struct SmallBallOutput {
    /// Truncation N of the spectrum and of the direct simulation.
    pub n: usize,
    pub total_mass: f64,
    /// Computed eigenvalues kept before the power-law tail.
    pub tail_keep: usize,
    pub rows: Vec<SmallBallRow>,
}

fn residual(values: &[f64], mult: Option<&[f64]>, t: f64, eps: f64) -> f64 {
    let eps_sq = eps * eps;
    let mean = compensated_sum(values.iter().enumerate().map(|(i, &l)| {
        let m = mult.map_or(1.0, |m| m[i]);
        m * l / (1.0 + 2.0 * t * l)
    }));
    (mean - eps_sq).abs() / eps_sq
}

#[derive(Clone, Copy)]
struct Cell {
    eps: f64,
    method: Method,
    basis: Basis,
}

pub(crate) fn compute_smallball(
    cfg: &RunConfig,
    prepared: &Prepared,
    spectrum: &Spectrum,
    out: &OutputDir,
) -> Result<SmallBallOutput, CliError> {
    cfg.require_eps_grid()?;
    let p = cfg.weights.p();
    let n = spectrum.half_rows;
    let theory = &prepared.theory.constants;
    let tail_keep = FitWindow::default_for(n).hi.min(spectrum.len());
    let completed = spectrum.power_tail_completion(tail_keep, theory.c, p);
    let total = spectrum.total();

    let mut cells = Vec::new();
    for &eps in &cfg.eps_grid {
        for &method in &cfg.methods {
            let basis = if method == Method::DirectSim { Basis::Model } else { Basis::Truncated };
            cells.push(Cell { eps, method, basis });
            if method == Method::Saddlepoint {
                cells.push(Cell { eps, method, basis: Basis::TailCompleted });
            }
        }
    }
    let mc = McConfig::new(cfg.samples, cfg.seed);
    let run_cell = |cell: &Cell| -> smalldev::Result<SmallBallRow> {
        let predicted = theory.predicted_log_smalldev(cell.eps);
        let mass = if cell.basis == Basis::TailCompleted { completed.total() } else { total };
        if cell.eps * cell.eps >= mass {
            return Ok(SmallBallRow::regime(cell.eps, cell.method, cell.basis, predicted));
        }
        let row = match (cell.method, cell.basis) {
            (Method::Saddlepoint, Basis::TailCompleted) => {
                let est = completed.saddlepoint_log_prob(cell.eps, SaddleOrder::Corrected)?;
                let res = est
                    .saddle_t
                    .map(|t| residual(&completed.values, Some(&completed.multiplicities), t, cell.eps));
                SmallBallRow::from_estimate(est, cell.basis, predicted, res)
            }
            (Method::Saddlepoint, _) => {
                let est = saddlepoint_log_prob(&spectrum.eigenvalues, cell.eps, SaddleOrder::Corrected)?;
                let res = est.saddle_t.map(|t| residual(&spectrum.eigenvalues, None, t, cell.eps));
                SmallBallRow::from_estimate(est, cell.basis, predicted, res)
            }
            (Method::TiltedMc, _) => {
                let est = tilted_mc_log_prob(&spectrum.eigenvalues, cell.eps, &mc)?;
                let res = est.saddle_t.map(|t| residual(&spectrum.eigenvalues, None, t, cell.eps));
                SmallBallRow::from_estimate(est, cell.basis, predicted, res)
            }
            (Method::DirectSim, _) => {
                let est = direct_sim_log_prob_window(&prepared.window, &cfg.weights, n, cell.eps, &mc)?;
                SmallBallRow::from_estimate(est, cell.basis, predicted, None)
            }
            (Method::Exact, _) => unreachable!("exact is not selectable"),
        };
        Ok(row)
    };
    let results: Vec<_> = cells.par_iter().map(run_cell).collect();
    let rows = results
        .into_iter()
        .collect::<smalldev::Result<Vec<_>>>()
        .map_err(CliError::stage(Stage::Smallball))?;
    let output = SmallBallOutput { n, total_mass: total, tail_keep, rows };
    out.write_with("smallball.csv", |buf| write_smallball_csv(&output.rows, buf))?;
    Ok(output)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn write_smallball_csv<W: Write>(rows: &[SmallBallRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "eps,method,basis,status,log_prob,std_err,saddle_t,saddle_residual,samples,seed,predicted_log_prob,ratio")?;
    for r in rows {
        writeln!(
            out,
            "{:e},{},{},{},{},{},{},{},{},{},{:e},{}",
            r.eps,
            r.method.as_str(),
            r.basis.as_str(),
            match r.status {
                RowStatus::Ok => "ok",
                RowStatus::Regime => "regime",
            },
            opt(r.log_prob),
            opt(r.std_err),
            opt(r.saddle_t),
            opt(r.saddle_residual),
            r.samples.map(|s| s.to_string()).unwrap_or_default(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.predicted_log_prob,
            opt(r.ratio),
        )?;
    }
    Ok(())
}

/// `smallball`: estimates on the largest truncation in `run.n_list`.
pub fn cmd_smallball(cfg: &RunConfig) -> Result<SmallBallOutput, CliError> {
    cfg.require_n_list()?;
    cfg.require_eps_grid()?;
    let out = OutputDir::create(&cfg.output_dir)?;
    let prepared = prepare(cfg)?;
    let n = *cfg.n_list.last().expect("nonempty");
    let spectrum = fit_one(&prepared.window, cfg, prepared.theory.constants.c, n)
        .map_err(CliError::stage(Stage::Spectrum))?
        .1;
    compute_smallball(cfg, &prepared, &spectrum, &out)
}

/// Theory constant of the model against the i.i.d. model with the same
/// variance and weights.
#[derive(Debug, Clone, Serialize)]
pub struct DependenceComparison {
    pub model: String,
    pub variance: f64,
    pub c_model: f64,
    pub c_iid: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    /// `rel_tol * (c_model + c_iid)`.
    pub combined_tolerance: f64,
    /// Difference exceeds the combined tolerance by the dependence factor.
    pub distinguishable: bool,
}

pub(crate) fn dependence_comparison(cfg: &RunConfig, prepared: &Prepared) -> Result<DependenceComparison, CliError> {
    let variance = prepared.theory.variance;
    let iid = MaSpec::Iid { a0: variance.sqrt() }
        .materialize(cfg.window_tol)
        .map_err(CliError::stage(Stage::Theory))?;
    let (c_iid, meta) = constant_c(&iid, &cfg.weights.homogeneous(), cfg.quad_rel_tol).map_err(CliError::stage(Stage::Theory))?;
    let c_model = prepared.theory.constants.c;
    let abs_diff = (c_model - c_iid).abs();
    let combined_tolerance = (cfg.quad_rel_tol.max(meta.rel_err) * (c_model + c_iid)).max(f64::EPSILON * c_model);
    Ok(DependenceComparison {
        model: prepared.theory.model.clone(),
        variance,
        c_model,
        c_iid,
        abs_diff,
        rel_diff: abs_diff / c_iid,
        combined_tolerance,
        distinguishable: abs_diff > DEPENDENCE_FACTOR * combined_tolerance,
    })
}

/// Per-eps view of the small-ball rows.
#[derive(Debug, Clone, Serialize)]
pub struct RatioRow {
    pub eps: f64,
    pub predicted_log_prob: f64,
    pub saddlepoint_truncated: Option<f64>,
    pub saddlepoint_tail_completed: Option<f64>,
    pub ratio_truncated: Option<f64>,
    pub ratio_tail_completed: Option<f64>,
    pub tilted_mc: Option<f64>,
    pub tilted_mc_std_err: Option<f64>,
    pub direct_sim: Option<f64>,
    pub direct_sim_std_err: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Flag {
    pub name: &'static str,
    pub rule: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub samples: u64,
    pub version: &'static str,
}

/// Output of the `verify` command, also written as `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub theory: TheoryOutput,
    pub spectrum_fits: Vec<SpectrumFit>,
    pub gap_monotone: bool,
    pub ratio_basis: RatioBasis,
    pub smallball_n: usize,
    pub tail_keep: usize,
    pub ratios: Vec<RatioRow>,
    pub rows: Vec<SmallBallRow>,
    pub dependence: DependenceComparison,
    pub flags: Vec<Flag>,
    pub passed: bool,
    pub provenance: Provenance,
}

fn find(rows: &[SmallBallRow], eps: f64, method: Method, basis: Basis) -> Option<&SmallBallRow> {
    rows.iter()
        .find(|r| r.eps == eps && r.method == method && r.basis == basis && r.status == RowStatus::Ok)
}

fn ratio_rows(cfg: &RunConfig, rows: &[SmallBallRow], theory: &TheoryConstants) -> Vec<RatioRow> {
    cfg.eps_grid
        .iter()
        .map(|&eps| {
            let trunc = find(rows, eps, Method::Saddlepoint, Basis::Truncated);
            let tail = find(rows, eps, Method::Saddlepoint, Basis::TailCompleted);
            let mc = find(rows, eps, Method::TiltedMc, Basis::Truncated);
            let sim = find(rows, eps, Method::DirectSim, Basis::Model);
            RatioRow {
                eps,
                predicted_log_prob: theory.predicted_log_smalldev(eps),
                saddlepoint_truncated: trunc.and_then(|r| r.log_prob),
                saddlepoint_tail_completed: tail.and_then(|r| r.log_prob),
                ratio_truncated: trunc.and_then(|r| r.ratio),
                ratio_tail_completed: tail.and_then(|r| r.ratio),
                tilted_mc: mc.and_then(|r| r.log_prob),
                tilted_mc_std_err: mc.and_then(|r| r.std_err),
                direct_sim: sim.and_then(|r| r.log_prob),
                direct_sim_std_err: sim.and_then(|r| r.std_err),
            }
        })
        .collect()
}

fn flags(
    cfg: &RunConfig,
    theory: &TheoryOutput,
    fits: &[SpectrumFit],
    ratios: &[RatioRow],
    rows: &[SmallBallRow],
) -> Vec<Flag> {
    let mut flags = Vec::new();
    flags.push(Flag {
        name: "identity",
        rule: "C equals Delta^(2p)".into(),
        passed: theory.identity_rel_err <= IDENTITY_TOLERANCE,
        value: theory.identity_rel_err,
        threshold: IDENTITY_TOLERANCE,
        detail: format!("C = {:e}, Delta = {:e}", theory.constants.c, theory.constants.delta_mu),
    });

    let worst_trace = fits.iter().map(|f| f.trace_rel_err).fold(0.0, f64::max);
    flags.push(Flag {
        name: "trace_identity",
        rule: "sum of eigenvalues equals the squared Frobenius norm of the operator".into(),
        passed: worst_trace <= TRACE_TOLERANCE,
        value: worst_trace,
        threshold: TRACE_TOLERANCE,
        detail: format!("{} truncations", fits.len()),
    });

    let last = fits.last().expect("verify requires N values");
    flags.push(Flag {
        name: "spectrum_gap",
        rule: "|C_hat / C - 1| at the largest N".into(),
        passed: last.gap <= GAP_TOLERANCE,
        value: last.gap,
        threshold: GAP_TOLERANCE,
        detail: format!("N = {}, C_hat = {:e}, C = {:e}, window [{}, {}]", last.n, last.c_hat, last.c_theory, last.fit_lo, last.fit_hi),
    });

    let pick = |r: &RatioRow| match cfg.ratio_basis {
        RatioBasis::Truncated => r.ratio_truncated,
        RatioBasis::TailCompleted => r.ratio_tail_completed,
    };
    let usable: Vec<(f64, f64)> = ratios.iter().filter_map(|r| pick(r).map(|x| (r.eps, x))).collect();
    let basis = match cfg.ratio_basis {
        RatioBasis::Truncated => "truncated",
        RatioBasis::TailCompleted => "tail_completed",
    };
    if cfg.methods.contains(&Method::Saddlepoint) {
        let dist: Vec<f64> = usable.iter().map(|&(_, r)| (r - 1.0).abs()).collect();
        let monotone = dist.len() >= 2 && dist.windows(2).all(|d| d[1] <= d[0]);
        let worst_step = dist.windows(2).map(|d| d[1] - d[0]).fold(f64::NEG_INFINITY, f64::max);
        flags.push(Flag {
            name: "ratio_trend",
            rule: "|R(eps) - 1| nonincreasing as eps decreases".into(),
            passed: monotone,
            value: if dist.len() >= 2 { worst_step } else { f64::NAN },
            threshold: 0.0,
            detail: format!("basis {basis}, {} usable rows, R = {:?}", usable.len(), usable.iter().map(|u| u.1).collect::<Vec<_>>()),
        });
        let (eps_min, r_min) = usable.last().copied().unwrap_or((f64::NAN, f64::NAN));
        let band = (r_min - 1.0).abs();
        flags.push(Flag {
            name: "ratio_band",
            rule: "|R(eps) - 1| at the smallest usable eps".into(),
            passed: band <= RATIO_BAND,
            value: band,
            threshold: RATIO_BAND,
            detail: format!("basis {basis}, eps = {eps_min:e}"),
        });
    }

    let residuals: Vec<f64> = rows.iter().filter_map(|r| r.saddle_residual).collect();
    if !residuals.is_empty() {
        let worst = residuals.iter().copied().fold(0.0, f64::max);
        flags.push(Flag {
            name: "saddle_residual",
            rule: "relative residual of the saddle equation".into(),
            passed: worst <= SADDLE_RESIDUAL_TOLERANCE,
            value: worst,
            threshold: SADDLE_RESIDUAL_TOLERANCE,
            detail: format!("{} saddle points", residuals.len()),
        });
    }

    if cfg.methods.contains(&Method::TiltedMc) && cfg.methods.contains(&Method::DirectSim) {
        let mut worst = 0.0f64;
        let mut compared = 0;
        for r in ratios {
            if let (Some(a), Some(sa), Some(b), Some(sb)) = (r.tilted_mc, r.tilted_mc_std_err, r.direct_sim, r.direct_sim_std_err) {
                worst = worst.max((a - b).abs() / sa.hypot(sb));
                compared += 1;
            }
        }
        flags.push(Flag {
            name: "cross_engine",
            rule: "tilted sampling on the spectrum agrees with direct simulation of the model".into(),
            passed: compared > 0 && worst <= CROSS_ENGINE_SIGMAS,
            value: worst,
            threshold: CROSS_ENGINE_SIGMAS,
            detail: format!("{compared} eps values, worst z-score"),
        });
    }
    flags
}

fn write_plots(out: &OutputDir, p: f64, fits: &[SpectrumFit], spectra: &[Spectrum], ratios: &[RatioRow]) -> Result<(), CliError> {
    out.write_with("plots/scaled_spectrum.dat", |buf| {
        for (i, (fit, spectrum)) in fits.iter().zip(spectra).enumerate() {
            if i > 0 {
                buf.write_all(b"\n\n")?;
            }
            writeln!(buf, "# N = {}\n# n lambda_n*n^(2p) C", fit.n)?;
            for (k, &l) in spectrum.eigenvalues.iter().enumerate() {
                let n = (k + 1) as f64;
                writeln!(buf, "{} {:e} {:e}", k + 1, l * n.powf(2.0 * p), fit.c_theory)?;
            }
        }
        Ok(())
    })?;
    out.write_with("plots/ratio.dat", |buf| {
        writeln!(buf, "# eps R_truncated R_tail_completed")?;
        let cell = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_else(|| "NaN".into());
        for r in ratios {
            writeln!(buf, "{:e} {} {}", r.eps, cell(r.ratio_truncated), cell(r.ratio_tail_completed))?;
        }
        Ok(())
    })?;
    Ok(())
}

/// `verify`: theory, spectra and small-ball estimates checked against each
/// other. Artifacts of completed stages stay on disk if a later stage fails.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerificationReport, CliError> {
    if cfg.n_list.len() < 2 {
        return Err(CliError::Usage("verify needs at least two values in run.n_list".into()));
    }
    if cfg.eps_grid.len() < 3 {
        return Err(CliError::Usage("verify needs at least three values in run.eps_grid".into()));
    }
    let out = OutputDir::create(&cfg.output_dir)?;
    let prepared = prepare(cfg)?;
    out.write_json("constants.json", &prepared.theory)?;
    let dependence = dependence_comparison(cfg, &prepared)?;

    let spectra = compute_spectra(cfg, &prepared, &out)?;
    let largest = spectra.spectra.last().expect("at least two spectra");
    let small = compute_smallball(cfg, &prepared, largest, &out)?;

    let ratios = ratio_rows(cfg, &small.rows, &prepared.theory.constants);
    let flags = flags(cfg, &prepared.theory, &spectra.fits, &ratios, &small.rows);
    write_plots(&out, cfg.weights.p(), &spectra.fits, &spectra.spectra, &ratios)?;
    let report = VerificationReport {
        theory: prepared.theory,
        spectrum_fits: spectra.fits,
        gap_monotone: spectra.gap_monotone,
        ratio_basis: cfg.ratio_basis,
        smallball_n: small.n,
        tail_keep: small.tail_keep,
        ratios,
        rows: small.rows,
        dependence,
        passed: flags.iter().all(|f| f.passed),
        flags,
        provenance: Provenance {
            config_hash: cfg.hash(),
            seed: cfg.seed,
            samples: cfg.samples,
            version: env!("CARGO_PKG_VERSION"),
        },
    };
    out.write_json("report.json", &report)?;
    Ok(report)
}
