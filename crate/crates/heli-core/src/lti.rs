//! General nth-order LTI plant, the integrator-plus-derivatives control law,
//! and the closed-loop characteristic algebra.
//!
//! The plant is `x^(n) + sum a_i x^(i-1) = u + T` with disturbance `T`, and
//! the controller `u = b0 * integral(y) + sum b_i y^(i-1)` with `y = x_d - x`.
//! Closing the loop shifts every coefficient by one power and lands the
//! integral gain on the constant term, so the closed-loop denominator is
//! `s^(n+1) + sum (a_i + b_i) s^i + b0` -- plain coefficient addition, which
//! this module keeps exact.

use thiserror::Error;

use crate::poly::{is_hurwitz, poly_roots, CharPoly, PolyError};

#[derive(Debug, Error)]
pub enum LtiError {
    #[error("plant order {plant} does not match gain count {gains}")]
    OrderMismatch { plant: usize, gains: usize },
    #[error("plant order must be >= 1")]
    EmptyPlant,
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("final value theorem inapplicable: closed loop is not Hurwitz")]
    NotHurwitz,
    #[error("final value theorem inapplicable: integral gain b0 is zero")]
    ZeroIntegralGain,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Monic nth-order plant: coefficients `a[i-1]` multiply `x^(i-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantCoeffs {
    a: Vec<f64>,
}

impl PlantCoeffs {
    pub fn new(a: Vec<f64>) -> Result<Self, LtiError> {
        if a.is_empty() {
            return Err(LtiError::EmptyPlant);
        }
        if a.iter().any(|c| !c.is_finite()) {
            return Err(LtiError::NonFinite);
        }
        Ok(Self { a })
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }
}

/// Controller gains: integral gain `b0` plus per-derivative gains
/// `b[0] = b_1` (proportional) through `b[n-1] = b_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    pub b0: f64,
    b: Vec<f64>,
}

impl ControllerGains {
    pub fn new(b0: f64, b: Vec<f64>) -> Result<Self, LtiError> {
        if !b0.is_finite() || b.iter().any(|c| !c.is_finite()) {
            return Err(LtiError::NonFinite);
        }
        Ok(Self { b0, b })
    }

    pub fn order(&self) -> usize {
        self.b.len()
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }
}

/// Closed-loop denominator `s^(n+1) + sum (a_i + b_i) s^i + b0`.
///
/// Pure addition, no rounding: the coefficient identity used by the
/// pole-placement round trip is exact.
pub fn closed_loop_charpoly(
    plant: &PlantCoeffs,
    gains: &ControllerGains,
) -> Result<CharPoly, LtiError> {
    let n = plant.order();
    if gains.order() != n {
        return Err(LtiError::OrderMismatch {
            plant: n,
            gains: gains.order(),
        });
    }
    let mut coeffs = Vec::with_capacity(n + 2);
    coeffs.push(gains.b0);
    for i in 0..n {
        coeffs.push(plant.a[i] + gains.b[i]);
    }
    coeffs.push(1.0);
    Ok(CharPoly::new(coeffs)?)
}

/// Analytic steady-state output for a unit step disturbance with setpoint
/// `x_d`. By the final value theorem the `1/s` of the disturbance cancels
/// against the integrator and the limit is `b0 * x_d / b0 = x_d`; the
/// theorem only applies when the closed loop is Hurwitz.
pub fn step_disturbance_final_value(
    plant: &PlantCoeffs,
    gains: &ControllerGains,
    x_d: f64,
) -> Result<f64, LtiError> {
    if gains.b0 == 0.0 {
        return Err(LtiError::ZeroIntegralGain);
    }
    let p = closed_loop_charpoly(plant, gains)?;
    if !is_hurwitz(&p)? {
        return Err(LtiError::NotHurwitz);
    }
    // lim_{s->0} s * (1 + b0 x_d / s) / p(s) = b0 x_d / p(0)
    Ok(gains.b0 * x_d / p.coeff(0))
}

/// Slowest closed-loop mode: the root with the largest (least negative)
/// real part.
pub fn slowest_mode(p: &CharPoly) -> Result<f64, LtiError> {
    let roots = poly_roots(p)?;
    Ok(roots.iter().map(|r| r.re).fold(f64::NEG_INFINITY, f64::max))
}

const MAX_LOOP_ORDER: usize = 7;

/// Time-domain simulation of the closed loop under a torque-style additive
/// disturbance `T(t)` at the plant input, starting from rest.
///
/// State layout: `[q, x, x', ..., x^(n-1)]` with `q` the error integral.
/// The control law is evaluated inside every Runge-Kutta stage, so the
/// integration sees the true continuous closed loop (order-4 accurate).
/// Returns the output trajectory sampled every `dt`.
pub fn simulate_step_disturbance(
    plant: &PlantCoeffs,
    gains: &ControllerGains,
    x_d: f64,
    disturbance: impl Fn(f64) -> f64,
    dt: f64,
    t_end: f64,
) -> Result<Vec<(f64, f64)>, LtiError> {
    let n = plant.order();
    if gains.order() != n {
        return Err(LtiError::OrderMismatch {
            plant: n,
            gains: gains.order(),
        });
    }
    assert!(n <= MAX_LOOP_ORDER, "loop order capped at {MAX_LOOP_ORDER}");
    let dim = n + 1;

    let deriv = |t: f64, s: &[f64; MAX_LOOP_ORDER + 1]| -> [f64; MAX_LOOP_ORDER + 1] {
        let mut ds = [0.0; MAX_LOOP_ORDER + 1];
        // q' = y = x_d - x
        ds[0] = x_d - s[1];
        ds[1..n].copy_from_slice(&s[2..n + 1]);
        // u = b0 q + b1 (x_d - x) - sum_{i>=2} b_i x^(i-1)   (x_d constant)
        let mut u = gains.b0 * s[0] + gains.b[0] * (x_d - s[1]);
        for (i, si) in s.iter().enumerate().take(n + 1).skip(2) {
            u -= gains.b[i - 1] * si;
        }
        let mut acc = u + disturbance(t);
        for (i, si) in s.iter().enumerate().take(n + 1).skip(1) {
            acc -= plant.a[i - 1] * si;
        }
        ds[n] = acc;
        ds
    };

    let steps = (t_end / dt).round() as usize;
    let mut s = [0.0; MAX_LOOP_ORDER + 1];
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, s[1]));
    for k in 0..steps {
        let t = k as f64 * dt;
        let k1 = deriv(t, &s);
        let mut s2 = s;
        for i in 0..dim {
            s2[i] += 0.5 * dt * k1[i];
        }
        let k2 = deriv(t + 0.5 * dt, &s2);
        let mut s3 = s;
        for i in 0..dim {
            s3[i] += 0.5 * dt * k2[i];
        }
        let k3 = deriv(t + 0.5 * dt, &s3);
        let mut s4 = s;
        for i in 0..dim {
            s4[i] += dt * k3[i];
        }
        let k4 = deriv(t + dt, &s4);
        for i in 0..dim {
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(((k + 1) as f64 * dt, s[1]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_loop_coefficients_add() {
        let plant = PlantCoeffs::new(vec![2.0, 3.0]).unwrap();
        let gains = ControllerGains::new(1.0, vec![2.0, 1.0]).unwrap();
        let p = closed_loop_charpoly(&plant, &gains).unwrap();
        assert_eq!(p.coeffs(), &[1.0, 4.0, 4.0, 1.0]);
    }

    #[test]
    fn zero_gain_identity() {
        let plant = PlantCoeffs::new(vec![0.0]).unwrap();
        let gains = ControllerGains::new(0.0, vec![0.0]).unwrap();
        let p = closed_loop_charpoly(&plant, &gains).unwrap();
        assert_eq!(p.coeffs(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn known_root_placement() {
        // oracle: (s+1)(s+2)(s+3) expanded
        let plant = PlantCoeffs::new(vec![0.0, 0.0]).unwrap();
        let gains = ControllerGains::new(6.0, vec![11.0, 6.0]).unwrap();
        let p = closed_loop_charpoly(&plant, &gains).unwrap();
        assert_eq!(p.coeffs(), &[6.0, 11.0, 6.0, 1.0]);
        let roots = poly_roots(&p).unwrap();
        for (r, want) in roots.iter().zip([-3.0, -2.0, -1.0]) {
            assert!((r.re - want).abs() < 1e-9);
        }
    }

    #[test]
    fn order_mismatch_rejected() {
        let plant = PlantCoeffs::new(vec![1.0, 2.0]).unwrap();
        let gains = ControllerGains::new(1.0, vec![1.0]).unwrap();
        assert!(matches!(
            closed_loop_charpoly(&plant, &gains),
            Err(LtiError::OrderMismatch { plant: 2, gains: 1 })
        ));
    }

    #[test]
    fn final_value_is_setpoint() {
        let plant = PlantCoeffs::new(vec![0.0, 0.0]).unwrap();
        let gains = ControllerGains::new(6.0, vec![11.0, 6.0]).unwrap();
        assert_eq!(
            step_disturbance_final_value(&plant, &gains, 0.0).unwrap(),
            0.0
        );
        let fv = step_disturbance_final_value(&plant, &gains, 1.0).unwrap();
        assert!((fv - 1.0).abs() < 1e-15);
        let fv = step_disturbance_final_value(&plant, &gains, 0.1745).unwrap();
        assert!((fv - 0.1745).abs() < 1e-15);
    }

    #[test]
    fn final_value_requires_hurwitz() {
        // b0 < 0 puts a sign change in the coefficients: unstable
        let plant = PlantCoeffs::new(vec![0.0, 0.0]).unwrap();
        let gains = ControllerGains::new(-6.0, vec![11.0, 6.0]).unwrap();
        assert!(matches!(
            step_disturbance_final_value(&plant, &gains, 1.0),
            Err(LtiError::NotHurwitz)
        ));
        let gains = ControllerGains::new(0.0, vec![11.0, 6.0]).unwrap();
        assert!(matches!(
            step_disturbance_final_value(&plant, &gains, 1.0),
            Err(LtiError::ZeroIntegralGain)
        ));
    }

    #[test]
    fn simulated_step_matches_final_value() {
        let plant = PlantCoeffs::new(vec![0.0, 0.0]).unwrap();
        let gains = ControllerGains::new(6.0, vec![11.0, 6.0]).unwrap();
        let traj = simulate_step_disturbance(&plant, &gains, 0.25, |_| 1.0, 1e-3, 25.0).unwrap();
        let (_, x_end) = *traj.last().unwrap();
        assert!((x_end - 0.25).abs() < 1e-6, "x_end = {x_end}");
    }

    #[test]
    fn integral_necessity_on_fixed_plant() {
        // b0 = 0 with a constant disturbance leaves a bias (Remark on the
        // necessity of the integrator): steady-state x solves
        // a1 x = b1 (x_d - x) + T.
        let plant = PlantCoeffs::new(vec![2.0, 3.0]).unwrap();
        let gains = ControllerGains::new(0.0, vec![10.0, 5.0]).unwrap();
        let traj = simulate_step_disturbance(&plant, &gains, 0.3, |_| 1.0, 1e-3, 40.0).unwrap();
        let (_, x_end) = *traj.last().unwrap();
        let expected = (10.0 * 0.3 + 1.0) / (2.0 + 10.0);
        assert!((x_end - expected).abs() < 1e-6);
        assert!(
            (x_end - 0.3).abs() > 1e-6,
            "error must not vanish without b0"
        );
    }
}
