//! Certificate report rendering: a machine-readable `key: value` header
//! block followed by the per-trajectory ledger.

use std::fmt::Write as _;

use heli_core::stability::{BoundednessReport, Certificate, ConvergenceReport};

pub struct CertifyOutcome {
    pub scenario: String,
    pub cert: Certificate,
    pub boundedness: BoundednessReport,
    pub convergence: Vec<ConvergenceReport>,
    pub sweep_count: usize,
    pub sweep_seed: u64,
    pub horizon_s: f64,
}

pub fn render(outcome: &CertifyOutcome) -> String {
    let mut s = String::with_capacity(16 * 1024);
    let c = &outcome.cert;
    let _ = writeln!(s, "report: stability-certificate");
    let _ = writeln!(s, "scenario: {}", outcome.scenario);
    for (i, ev) in c.eigenvalues.iter().enumerate() {
        let _ = writeln!(s, "eigenvalue_{}: {:+.12e} {:+.12e}i", i + 1, ev.re, ev.im);
    }
    let _ = writeln!(s, "beta: {:.12e}", c.beta);
    let _ = writeln!(s, "kappa: {:.12e}", c.kappa);
    let _ = writeln!(s, "lambda1: {:.12e}", c.lambda1);
    let _ = writeln!(s, "gamma: {:.12e}", c.gamma);
    let _ = writeln!(s, "z0_max: {:.12e}", c.z0_max);
    let _ = writeln!(s, "z0_norm: {:.12e}", c.z0_norm);
    let _ = writeln!(s, "decomposition_residual: {:.3e}", c.decomp_residual);
    let _ = writeln!(
        s,
        "self_consistency_gap: {:.3e}",
        c.self_consistency_lhs() - c.gamma
    );
    let _ = writeln!(s, "sweep_count: {}", outcome.sweep_count);
    let _ = writeln!(s, "sweep_seed: {}", outcome.sweep_seed);
    let _ = writeln!(s, "sweep_horizon_s: {}", outcome.horizon_s);
    let worst_margin = outcome
        .boundedness
        .trajectories
        .iter()
        .map(|t| t.margin)
        .fold(0.0f64, f64::max);
    let _ = writeln!(
        s,
        "boundedness: {}",
        if outcome.boundedness.pass {
            "pass"
        } else {
            "fail"
        }
    );
    let _ = writeln!(s, "boundedness_worst_margin: {worst_margin:.6}");
    let _ = writeln!(s, "boundedness_rejected: {}", outcome.boundedness.rejected);
    let conv_pass = outcome.convergence.iter().all(|r| r.pass);
    let worst_rate = outcome
        .convergence
        .iter()
        .map(|r| (r.fitted_rate - c.lambda1).abs() / c.lambda1.abs())
        .fold(0.0f64, f64::max);
    let _ = writeln!(
        s,
        "convergence: {}",
        if conv_pass { "pass" } else { "fail" }
    );
    let _ = writeln!(s, "convergence_worst_rate_deviation: {worst_rate:.4}");
    let _ = writeln!(
        s,
        "zero_start_bound: trivially satisfied (max norm 0 <= gamma)"
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "# trajectory ledger: index, |Z(0)|, max |Z(t)|, margin, verdict"
    );
    for (i, t) in outcome.boundedness.trajectories.iter().enumerate() {
        let conv = outcome
            .convergence
            .get(i)
            .map(|r| if r.pass { "converges" } else { "diverges" })
            .unwrap_or("-");
        let _ = writeln!(
            s,
            "traj {:03}: z0 {:.6e}  max {:.6e}  margin {:.6}  {}  {}",
            i + 1,
            t.z0_norm,
            t.max_norm,
            t.margin,
            if t.pass { "inside" } else { "OUTSIDE" },
            conv,
        );
    }
    s
}
