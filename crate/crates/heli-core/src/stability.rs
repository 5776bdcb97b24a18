//! Executable boundedness and convergence certificates for the refined
//! closed-loop model `z' = A z + C + N(z)`.
//!
//! With `A` diagonalizable as `M Sigma M^-1` and every eigenvalue in the
//! open left half plane, the variation-of-constants solution gives
//!
//! `||Z(t)|| <= beta ||Z(0)|| + beta kappa gamma^2 / |lambda1|`
//!
//! where `beta = ||M|| ||M^-1||`, `kappa` bounds the quadratic residual
//! (`||N(z)|| <= kappa ||z||^2` for small `||z||`), and `lambda1` is the
//! slowest eigenvalue. A state bound `gamma` exists whenever the implied
//! quadratic inequality has a real root, which caps the admissible initial
//! norm at `z0_max = |lambda1| / (4 beta^2 kappa)`. The verification
//! routines here check those bounds against simulated trajectories and
//! check convergence through the Cauchy difference `||Z(t+t0) - Z(t)||`.

use num_complex::Complex64;
use thiserror::Error;

use crate::design::GainPreset;
use crate::heli::{GainConvention, HeliParams};
use crate::linalg::{eigenvalues, CMat, LinalgError, RMat};
use crate::sim::SimTrace;

/// Relative residual allowed for an accepted eigendecomposition.
pub const DECOMP_RESIDUAL_TOL: f64 = 1e-8;
/// Minimum pairwise eigenvalue gap before A is treated as defective.
pub const EIGEN_GAP_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum CertError {
    #[error("certificate requires diagonalizable A; perturb gains (eigenvalue gap {0:.3e} < {EIGEN_GAP_TOL:.0e})")]
    NearDefective(f64),
    #[error("eigendecomposition residual {0:.3e} exceeds {DECOMP_RESIDUAL_TOL:.0e} relative")]
    ResidualTooLarge(f64),
    #[error("A is not stable: eigenvalue {0} has nonnegative real part")]
    Unstable(Complex64),
    #[error("inverse iteration failed to produce an eigenvector for {0}")]
    EigenvectorFailure(Complex64),
    #[error("trace too short: need at least {need} samples covering the horizon, got {got}")]
    TraceTooShort { need: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Eigenstructure of the refined state matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    /// Eigenvalues sorted by descending real part.
    pub values: Vec<Complex64>,
    /// Columns are unit eigenvectors, ordered like `values`.
    pub m: CMat,
    pub m_inv: CMat,
    /// Relative spectral-norm residual of `A - M Sigma M^-1`.
    pub residual: f64,
}

/// Diagonalizes a real square matrix: eigenvalues by shifted QR,
/// eigenvectors by inverse iteration, inverse by Gauss-Jordan.
///
/// Fails if the spectrum is too clustered to trust the eigenvector basis
/// (near-defective) or if the reconstruction residual exceeds
/// `1e-8 * ||A||`.
pub fn eigen_decompose(a: &RMat) -> Result<EigenDecomp, CertError> {
    let n = a.n;
    let mut values = eigenvalues(a)?;
    values.sort_by(|x, y| {
        y.re.partial_cmp(&x.re)
            .unwrap()
            .then(y.im.partial_cmp(&x.im).unwrap())
    });

    let mut min_gap = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min_gap = min_gap.min((values[i] - values[j]).norm());
        }
    }
    if min_gap < EIGEN_GAP_TOL {
        return Err(CertError::NearDefective(min_gap));
    }

    let ac = a.to_complex();
    let a_norm = a.spectral_norm().max(1e-300);
    let mut m = CMat::zeros(n);
    for (col, &lambda) in values.iter().enumerate() {
        let v =
            inverse_iteration(&ac, lambda, a_norm).ok_or(CertError::EigenvectorFailure(lambda))?;
        for (row, &c) in v.iter().enumerate() {
            m[(row, col)] = c;
        }
    }
    let m_inv = m.inverse().map_err(|_| CertError::NearDefective(min_gap))?;

    let sigma = CMat::scale_diag(&values);
    let recon = m.matmul(&sigma).matmul(&m_inv);
    let residual = ac.sub(&recon).spectral_norm() / a_norm;
    if residual > DECOMP_RESIDUAL_TOL {
        return Err(CertError::ResidualTooLarge(residual));
    }

    Ok(EigenDecomp {
        values,
        m,
        m_inv,
        residual,
    })
}

/// Inverse iteration on `(A - (lambda + eps) I)` from a deterministic
/// start vector; a few solves reach machine precision when `lambda` is an
/// isolated eigenvalue. Returns a unit vector with its largest component
/// rotated to the positive real axis so the basis is reproducible.
fn inverse_iteration(a: &CMat, lambda: Complex64, a_norm: f64) -> Option<Vec<Complex64>> {
    let n = a.n;
    let eps = Complex64::new(1e-10 * a_norm, 1e-10 * a_norm);
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] -= lambda + eps;
    }
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0, 0.3 + i as f64 * 0.17))
        .collect();
    normalize(&mut v);
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for _ in 0..8 {
        let mut w = shifted.solve(&v).ok()?;
        normalize(&mut w);
        // residual ||A w - lambda w||
        let aw = a.matvec(&w);
        let res: f64 = aw
            .iter()
            .zip(&w)
            .map(|(x, y)| (x - lambda * y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let better = best.as_ref().is_none_or(|(r, _)| res < *r);
        if better {
            best = Some((res, w.clone()));
        }
        if res <= 1e-12 * a_norm {
            break;
        }
        v = w;
    }
    let (res, mut w) = best?;
    if res > 1e-6 * a_norm {
        return None;
    }
    // canonical phase: largest component real positive
    let (idx, _) = w
        .iter()
        .enumerate()
        .max_by(|(_, x), (_, y)| x.norm().partial_cmp(&y.norm()).unwrap())?;
    let phase = w[idx] / w[idx].norm();
    for c in w.iter_mut() {
        *c /= phase;
    }
    Some(w)
}

fn normalize(v: &mut [Complex64]) {
    let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for c in v.iter_mut() {
            *c /= n;
        }
    }
}

/// `beta = ||M||_2 ||M^-1||_2`, the conditioning of the eigenvector basis.
/// Always >= 1; equals 1 exactly when M is unitary.
pub fn beta(decomp: &EigenDecomp) -> f64 {
    decomp.m.spectral_norm() * decomp.m_inv.spectral_norm()
}

/// Quadratic residual bound constant:
///
/// `kappa^2 = (a1 mgl/2 + 2 a1 ml^2 th_d + a1 ml^2 th_d^2)^2
///          + (3 a2 ml^2 + 2 a2 ml^2 th_d + a2 ml^2 th_d^2)^2`
pub fn kappa(p: &HeliParams, theta_d: f64) -> f64 {
    let ml2 = p.m * p.l * p.l;
    let a1 = p.alpha1();
    let a2 = p.alpha2();
    let pitch = a1 * p.mgl() / 2.0 + 2.0 * a1 * ml2 * theta_d + a1 * ml2 * theta_d * theta_d;
    let yaw = 3.0 * a2 * ml2 + 2.0 * a2 * ml2 * theta_d + a2 * ml2 * theta_d * theta_d;
    (pitch * pitch + yaw * yaw).sqrt()
}

/// Result of solving the self-consistency inequality
/// `beta z0 + beta kappa gamma^2 / |lambda1| <= gamma` for gamma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSolution {
    /// Smallest gamma satisfying the inequality.
    Feasible { gamma: f64, z0_max: f64 },
    /// No real root: the initial norm exceeds `z0_max`.
    Infeasible { z0_max: f64 },
}

/// Solves for the smallest state-norm bound:
/// `gamma = |lambda1| (1 - sqrt(1 - 4 beta^2 kappa z0 / |lambda1|)) / (2 beta kappa)`,
/// infeasible when the discriminant goes negative; either way reports
/// `z0_max = |lambda1| / (4 beta^2 kappa)`.
pub fn solve_gamma(beta: f64, kappa: f64, lambda1_abs: f64, z0_norm: f64) -> GammaSolution {
    let z0_max = lambda1_abs / (4.0 * beta * beta * kappa);
    let disc = 1.0 - 4.0 * beta * beta * kappa * z0_norm / lambda1_abs;
    if disc < 0.0 {
        GammaSolution::Infeasible { z0_max }
    } else {
        GammaSolution::Feasible {
            gamma: lambda1_abs * (1.0 - disc.sqrt()) / (2.0 * beta * kappa),
            z0_max,
        }
    }
}

/// The assembled certificate constants.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub eigenvalues: Vec<Complex64>,
    pub beta: f64,
    pub kappa: f64,
    /// Real part of the slowest (largest real part) eigenvalue; negative.
    pub lambda1: f64,
    /// State-norm bound for trajectories started at `z0_norm`.
    pub gamma: f64,
    /// Largest admissible initial norm.
    pub z0_max: f64,
    /// Initial norm the gamma bound was solved for.
    pub z0_norm: f64,
    pub decomp_residual: f64,
}

impl Certificate {
    /// Builds the certificate for the refined closed loop at `theta_d`.
    /// `z0_norm` picks the initial-norm budget; `None` uses the largest
    /// admissible one (`z0_max`, where the bound degenerates to equality).
    pub fn build(
        p: &HeliParams,
        gains: &GainPreset,
        theta_d: f64,
        convention: GainConvention,
        z0_norm: Option<f64>,
    ) -> Result<Self, CertError> {
        let a = crate::heli::refined_linear_a(p, gains, theta_d, convention);
        let decomp = eigen_decompose(&RMat::from_array6(&a))?;
        if let Some(bad) = decomp.values.iter().find(|l| l.re >= 0.0) {
            return Err(CertError::Unstable(*bad));
        }
        let beta_v = beta(&decomp);
        let kappa_v = kappa(p, theta_d);
        let lambda1 = decomp.values[0].re; // sorted by descending real part
        let z0_max = lambda1.abs() / (4.0 * beta_v * beta_v * kappa_v);
        let z0 = z0_norm.unwrap_or(z0_max).min(z0_max);
        let gamma = match solve_gamma(beta_v, kappa_v, lambda1.abs(), z0) {
            GammaSolution::Feasible { gamma, .. } => gamma,
            // z0 clamped to z0_max above; rounding can still tip the
            // discriminant, in which case the bound is the vertex value
            GammaSolution::Infeasible { .. } => lambda1.abs() / (2.0 * beta_v * kappa_v),
        };
        Ok(Self {
            eigenvalues: decomp.values,
            beta: beta_v,
            kappa: kappa_v,
            lambda1,
            gamma,
            z0_max,
            z0_norm: z0,
            decomp_residual: decomp.residual,
        })
    }

    /// Left-hand side of the self-consistency inequality at this
    /// certificate's constants; must not exceed `gamma` (plus rounding).
    pub fn self_consistency_lhs(&self) -> f64 {
        self.beta * self.z0_norm
            + self.beta * self.kappa * self.gamma * self.gamma / self.lambda1.abs()
    }
}

/// Outcome of checking one trajectory against the gamma bound.
#[derive(Debug, Clone)]
pub struct TrajectoryReport {
    pub z0_norm: f64,
    pub max_norm: f64,
    /// `max_norm / gamma`; below 1 means the bound held.
    pub margin: f64,
    pub pass: bool,
}

/// Per-trajectory and aggregate boundedness results.
#[derive(Debug, Clone)]
pub struct BoundednessReport {
    pub trajectories: Vec<TrajectoryReport>,
    pub rejected: usize,
    pub pass: bool,
}

/// Checks `max_t ||Z(t)|| <= gamma` for every trajectory whose initial
/// norm is admissible; trajectories violating `||Z(0)|| <= z0_max` are
/// rejected inputs, not failures.
pub fn verify_boundedness(cert: &Certificate, traces: &[SimTrace]) -> BoundednessReport {
    let mut rejected = 0usize;
    let reports: Vec<TrajectoryReport> = traces
        .iter()
        .filter_map(|trace| {
            let z0 = trace.z_norm(0);
            if z0 > cert.z0_max * (1.0 + 1e-12) {
                rejected += 1;
                return None;
            }
            let max_norm = (0..trace.len())
                .map(|i| trace.z_norm(i))
                .fold(0.0f64, f64::max);
            let margin = max_norm / cert.gamma;
            Some(TrajectoryReport {
                z0_norm: z0,
                max_norm,
                margin,
                pass: max_norm <= cert.gamma,
            })
        })
        .collect();
    let pass = !reports.is_empty() && reports.iter().all(|r| r.pass);
    BoundednessReport {
        trajectories: reports,
        rejected,
        pass,
    }
}

/// Convergence check results over the Cauchy difference
/// `d(t2) = ||Z(t2 + t0) - Z(t2)||`.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// (t2, d) samples on the evaluation grid.
    pub d: Vec<(f64, f64)>,
    /// Least-squares decay rate of `ln d` over the clean window (negative).
    pub fitted_rate: f64,
    /// Envelope constant: smallest C with `d(t2) <= C exp(lambda_max t2)`
    /// over the clean window.
    pub envelope_c: f64,
    pub final_d: f64,
    /// Envelope of d over successive windows is strictly decreasing.
    pub monotone: bool,
    pub pass: bool,
}

/// Verifies the Cauchy-difference convergence argument on a trace.
///
/// `d(t2)` is evaluated on the trace grid for `t2` in `[0, horizon - t0]`.
/// The check window excludes the floating-point noise floor (estimated
/// from the largest state norm); within it the report requires the
/// 5-second-window envelope of `d` to decrease monotonically and the final
/// in-window `d` to sit below `1e-4`, and fits `ln d` for the decay rate,
/// which the certificate's `lambda_max` should match.
pub fn verify_convergence(
    trace: &SimTrace,
    t0: f64,
    horizon: f64,
    lambda_max: f64,
) -> Result<ConvergenceReport, CertError> {
    let dt = trace.dt();
    let lag = (t0 / dt).round() as usize;
    let need = (horizon / dt).round() as usize + 1;
    if trace.len() < need || lag == 0 || lag >= trace.len() {
        return Err(CertError::TraceTooShort {
            need,
            got: trace.len(),
        });
    }

    let count = trace.len() - lag;
    let mut d = Vec::with_capacity(count);
    let mut max_state = 0.0f64;
    for i in 0..count {
        let mut acc = 0.0;
        for k in 0..6 {
            let diff = trace.z(i + lag)[k] - trace.z(i)[k];
            acc += diff * diff;
        }
        d.push((i as f64 * dt, acc.sqrt()));
        max_state = max_state.max(trace.z_norm(i));
    }

    // everything below this is integrator roundoff, not dynamics: nine
    // decades under the peak difference, floored at accumulated epsilon
    let d_peak = d.iter().map(|&(_, v)| v).fold(0.0f64, f64::max);
    let noise_floor = (1e-9 * d_peak).max(1e3 * f64::EPSILON * max_state.max(f64::MIN_POSITIVE));
    let clean_end = d
        .iter()
        .position(|&(_, v)| v <= noise_floor)
        .unwrap_or(d.len());
    let clean = &d[..clean_end.max(2)];

    // 5 s window envelope must decrease once past the initial transient
    let win = (5.0 / dt).round().max(1.0) as usize;
    let sup: Vec<f64> = clean
        .chunks(win)
        .map(|c| c.iter().map(|&(_, v)| v).fold(0.0f64, f64::max))
        .collect();
    let monotone = sup.windows(2).all(|w| w[1] < w[0]) && sup.len() >= 2;

    // log-linear fit over the clean window, skipping the first window
    // where fast modes still contribute
    let fit_from = win.min(clean.len() / 4);
    let pts: Vec<(f64, f64)> = clean[fit_from..]
        .iter()
        .filter(|&&(_, v)| v > 0.0)
        .map(|&(t, v)| (t, v.ln()))
        .collect();
    let fitted_rate = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    } else {
        0.0
    };

    let envelope_c = clean
        .iter()
        .map(|&(t, v)| v / (lambda_max * t).exp())
        .fold(0.0f64, f64::max);

    let final_d = clean.last().map(|&(_, v)| v).unwrap_or(0.0);
    let converged_to_floor = clean_end < d.len();
    let pass = monotone && (final_d < 1e-4 || converged_to_floor) && fitted_rate < 0.0;

    Ok(ConvergenceReport {
        d,
        fitted_rate,
        envelope_c,
        final_d,
        monotone,
        pass,
    })
}

/// Deterministic random states on spheres inside the admissible ball:
/// isotropic directions (Box-Muller) scaled to radii spread over
/// `[0.1, 1.0] * radius`.
pub fn sample_initial_states(seed: u64, count: usize, radius: f64) -> Vec<crate::heli::StateZ> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let gauss = move |rng: &mut rand_chacha::ChaCha8Rng| {
        let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.random_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    (0..count)
        .map(|k| {
            let mut dir = [0.0; 6];
            loop {
                for d in &mut dir {
                    *d = gauss(&mut rng);
                }
                let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n > 1e-6 {
                    for d in &mut dir {
                        *d /= n;
                    }
                    break;
                }
            }
            let frac = 0.1 + 0.9 * (k as f64 + 0.5) / count as f64;
            for d in &mut dir {
                *d *= radius * frac;
            }
            crate::heli::StateZ(dir)
        })
        .collect()
}

/// Simulates the ideal continuous closed-loop small-angle system from a
/// full error-state initial condition.
pub fn simulate_certificate_trajectory(
    params: &HeliParams,
    gains: &GainPreset,
    theta_d: f64,
    z0: &crate::heli::StateZ,
    dt: f64,
    t_end: f64,
) -> Result<SimTrace, crate::sim::SimError> {
    let mut cfg = crate::sim::RuntimeConfig::ideal_small_angle(dt, t_end);
    cfg.theta_d = theta_d;
    cfg.theta0 = z0.0[2] + theta_d;
    cfg.psi0 = z0.0[3];
    cfg.theta_dot0 = z0.0[4];
    cfg.psi_dot0 = z0.0[5];
    cfg.integ0 = (z0.0[0], z0.0[1]);
    crate::sim::run(params, gains, &cfg, &crate::sim::DisturbanceSignal::none())
}

/// Simulates `count` trajectories started inside the certificate's
/// admissible ball (in parallel when the `parallel` feature is on) and
/// checks every one against the gamma bound.
#[allow(clippy::too_many_arguments)]
pub fn boundedness_sweep(
    params: &HeliParams,
    gains: &GainPreset,
    theta_d: f64,
    cert: &Certificate,
    count: usize,
    seed: u64,
    dt: f64,
    t_end: f64,
) -> Result<(Vec<SimTrace>, BoundednessReport), crate::sim::SimError> {
    let starts = sample_initial_states(seed, count, cert.z0_max);
    let results = crate::exec::map_slice(&starts, |z0| {
        simulate_certificate_trajectory(params, gains, theta_d, z0, dt, t_end)
    });
    let mut traces = Vec::with_capacity(results.len());
    for r in results {
        traces.push(r?);
    }
    let report = verify_boundedness(cert, &traces);
    Ok((traces, report))
}
