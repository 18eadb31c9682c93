//! Plain-text summaries printed by the binary.

use std::fmt::Write;

use crate::pipeline::{RowStatus, SmallBallOutput, SpectrumOutput, TheoryOutput, VerificationReport};

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into())
}

pub fn theory(t: &TheoryOutput) -> String {
    let c = &t.constants;
    let mut s = String::new();
    let _ = writeln!(s, "model      {}", t.model);
    let _ = writeln!(s, "window     {} coefficients from index {}, tail mass {:.3e}", t.window_len, t.window_offset, t.window_tail_mass);
    let _ = writeln!(s, "p          {}", c.p);
    let _ = writeln!(s, "B_p        {:.15}", c.b_p);
    let _ = writeln!(s, "C          {:.15}", c.c);
    let _ = writeln!(s, "Delta_mu   {:.15}", c.delta_mu);
    let _ = writeln!(s, "exponent   {}", c.sd_exponent);
    let _ = writeln!(s, "quadrature grid {}, rel err {:.3e}", c.quadrature_grid, c.quadrature_rel_err);
    for w in &c.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

pub fn spectrum(out: &SpectrumOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>8} {:>14} {:>12} {:>12} {:>12}", "N", "C_hat", "dispersion", "C", "gap");
    for f in &out.fits {
        let edge = if f.near_truncation_edge { "  (near edge)" } else { "" };
        let _ = writeln!(s, "{:>8} {:>14.8} {:>12.3e} {:>12.8} {:>12.3e}{edge}", f.n, f.c_hat, f.dispersion, f.c_theory, f.gap);
    }
    let _ = writeln!(s, "gap nonincreasing in N: {}", out.gap_monotone);
    s
}

pub fn smallball(out: &SmallBallOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "N = {}, total mass {:.6}", out.n, out.total_mass);
    let _ = writeln!(s, "{:>10} {:>12} {:>15} {:>12} {:>10} {:>12} {:>9}", "eps", "method", "basis", "ln P", "se", "predicted", "ratio");
    for r in &out.rows {
        if r.status == RowStatus::Regime {
            let _ = writeln!(s, "{:>10.4e} {:>12} {:>15} regime: eps^2 >= total mass, skipped", r.eps, r.method.as_str(), r.basis.as_str());
            continue;
        }
        let _ = writeln!(
            s,
            "{:>10.4e} {:>12} {:>15} {:>12} {:>10} {:>12.6} {:>9}",
            r.eps,
            r.method.as_str(),
            r.basis.as_str(),
            cell(r.log_prob),
            r.std_err.map(|x| format!("{x:.2e}")).unwrap_or_else(|| "-".into()),
            r.predicted_log_prob,
            cell(r.ratio)
        );
    }
    s
}

pub fn verify(r: &VerificationReport) -> String {
    let mut s = theory(&r.theory);
    s.push('\n');
    s.push_str(&spectrum(&crate::pipeline::SpectrumOutput {
        fits: r.spectrum_fits.clone(),
        gap_monotone: r.gap_monotone,
        spectra: Vec::new(),
    }));
    let _ = writeln!(s, "\nsmall-ball ratios at N = {}", r.smallball_n);
    let _ = writeln!(s, "{:>10} {:>12} {:>12} {:>10} {:>12} {:>10}", "eps", "predicted", "ln P trunc", "R trunc", "ln P tail", "R tail");
    for row in &r.ratios {
        let _ = writeln!(
            s,
            "{:>10.4e} {:>12.6} {:>12} {:>10} {:>12} {:>10}",
            row.eps,
            row.predicted_log_prob,
            cell(row.saddlepoint_truncated),
            cell(row.ratio_truncated),
            cell(row.saddlepoint_tail_completed),
            cell(row.ratio_tail_completed)
        );
    }
    let d = &r.dependence;
    let _ = writeln!(s, "\ndependence: C({}) = {:.10}, C(iid, same variance) = {:.10}, rel diff {:.3e}", d.model, d.c_model, d.c_iid, d.rel_diff);
    let _ = writeln!(s, "\nflags:");
    for f in &r.flags {
        let mark = if f.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "  [{mark}] {:<16} value {:.3e} threshold {:.3e}  {}", f.name, f.value, f.threshold, f.detail);
    }
    let _ = writeln!(s, "config hash {}", r.provenance.config_hash);
    s
}
