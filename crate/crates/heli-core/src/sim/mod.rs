//! Deterministic fixed-step closed-loop simulator.
//!
//! Reproduces the experimental loop: the plant advances by classical
//! fourth-order Runge-Kutta at `dt` while a sampled controller reads
//! encoder-quantized angles, estimates rates through a second-order
//! derivative filter, applies the integrator-plus-PD law with gravity
//! feedforward and back-calculation anti-windup, and saturates in the
//! voltage domain. Identical inputs produce bit-identical traces.
//!
//! A continuous-controller mode drops the discrete blocks and evaluates
//! the ideal control law inside every integration stage; that is the
//! configuration the stability certificates are stated for, and it is the
//! one that exhibits clean fourth-order grid convergence.

mod signal;
mod trace;

pub use signal::{
    apply_saturation, make_piecewise_disturbance, quantize_encoder, AffineMap, AxisSignal,
    BackCalcIntegrator, DerivativeFilter, DisturbanceKind, DisturbanceSignal, SaturationResult,
};
pub use trace::{disturbance_from_csv, ClampEvent, SimTrace, TraceRow, CSV_HEADER};

use thiserror::Error;

use crate::design::GainPreset;
use crate::heli::{
    self, feedforward_torque, full_accelerations, small_angle_accelerations, total_energy,
    GainConvention, HeliError, HeliParams, HeliState, Torques,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid runtime configuration: {0}")]
    InvalidConfig(String),
    #[error("derivative filter needs wc*dt < 0.5, got wc = {wc}, dt = {dt}")]
    FilterSampling { wc: f64, dt: f64 },
    #[error("simulation diverged at t = {t:.6} s")]
    Diverged { t: f64 },
    #[error(transparent)]
    Heli(#[from] HeliError),
}

/// Which plant model the loop integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Model {
    /// Full nonlinear Euler-Lagrange dynamics.
    #[default]
    Full,
    /// Second-order small-angle truncation.
    SmallAngle,
    /// The linear part `z' = A z + C` of the refined decomposition
    /// (controller embedded in A; continuous mode only).
    RefinedLinear,
}

/// Controller realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControllerMode {
    /// Sampled at `ctrl_every * dt` with zero-order hold, quantization,
    /// filtering, and anti-windup as configured.
    #[default]
    Sampled,
    /// Ideal continuous law evaluated inside each integration stage.
    /// Incompatible with quantization, filtering, and anti-windup.
    Continuous,
}

/// Derivative-filter parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub zeta: f64,
    /// Cut-off in rad/s. The published loop uses "40 pi": read here as
    /// 40*pi rad/s (about 20 Hz); the literal 40 pi Hz reading is
    /// selectable by passing 80*pi^2.
    pub wc: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            zeta: 0.85,
            wc: 40.0 * std::f64::consts::PI,
        }
    }
}

/// Full runtime configuration. `Default` reproduces the published
/// experiment: 30 s from theta = -40.5 deg, psi = 0 toward
/// (0 deg, 10 deg), 1 kHz loop, +/-24 V and +/-15 V limits, encoder
/// resolutions 2 pi/4096 and 2 pi/8192.
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Desired pitch/yaw, rad.
    pub theta_d: f64,
    pub psi_d: f64,
    /// Initial plant state.
    pub theta0: f64,
    pub psi0: f64,
    pub theta_dot0: f64,
    pub psi_dot0: f64,
    /// Initial integrator states (z1, z2); the experiment starts them at 0.
    pub integ0: (f64, f64),
    pub model: Model,
    pub controller: ControllerMode,
    /// Rate-estimate filter; `None` feeds exact rates to the controller.
    pub filter: Option<FilterConfig>,
    /// Back-calculation reset time; `None` disables anti-windup.
    pub antiwindup_reset_s: Option<f64>,
    pub v_limit_pitch: f64,
    pub v_limit_yaw: f64,
    /// Temporary pitch voltage limit `(until_s, limit)` for soft-start
    /// experiments.
    pub startup_limit_pitch: Option<(f64, f64)>,
    /// Encoder resolution rad/count; `None` disables quantization.
    pub enc_res_pitch: Option<f64>,
    pub enc_res_yaw: Option<f64>,
    /// Apply voltage-domain saturation.
    pub saturation: bool,
    /// Gravity feedforward on the pitch channel.
    pub gravity_bias: bool,
    pub map_pitch: AffineMap,
    pub map_yaw: AffineMap,
    pub gain_convention: GainConvention,
    /// Controller decimation: update every this many plant steps.
    pub ctrl_every: usize,
    /// Pitch travel stops `(lower, upper)` rad; contact zeroes the inward
    /// rate. `None` removes the stops.
    pub travel_limits: Option<(f64, f64)>,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 30.0,
            theta_d: 0.0,
            psi_d: 10f64.to_radians(),
            theta0: (-40.5f64).to_radians(),
            psi0: 0.0,
            theta_dot0: 0.0,
            psi_dot0: 0.0,
            integ0: (0.0, 0.0),
            model: Model::Full,
            controller: ControllerMode::Sampled,
            filter: Some(FilterConfig::default()),
            antiwindup_reset_s: Some(1.0),
            v_limit_pitch: 24.0,
            v_limit_yaw: 15.0,
            startup_limit_pitch: None,
            enc_res_pitch: Some(2.0 * std::f64::consts::PI / 4096.0),
            enc_res_yaw: Some(2.0 * std::f64::consts::PI / 8192.0),
            saturation: true,
            gravity_bias: true,
            map_pitch: AffineMap::default(),
            map_yaw: AffineMap::default(),
            gain_convention: GainConvention::Torque,
            ctrl_every: 1,
            travel_limits: Some(((-40.5f64).to_radians(), 35f64.to_radians())),
        }
    }
}

impl RuntimeConfig {
    /// Ideal continuous-loop configuration used by the stability
    /// certificates: no quantization, no filtering, no saturation, no
    /// travel stops, small-angle plant.
    pub fn ideal_small_angle(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            theta_d: 0.0,
            psi_d: 0.0,
            theta0: 0.0,
            psi0: 0.0,
            model: Model::SmallAngle,
            controller: ControllerMode::Continuous,
            filter: None,
            antiwindup_reset_s: None,
            enc_res_pitch: None,
            enc_res_yaw: None,
            saturation: false,
            startup_limit_pitch: None,
            travel_limits: None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.dt.is_nan() || self.dt <= 0.0 || self.t_end.is_nan() || self.t_end <= self.dt {
            return bad(format!(
                "need 0 < dt < t_end, got dt={}, t_end={}",
                self.dt, self.t_end
            ));
        }
        if [self.v_limit_pitch, self.v_limit_yaw]
            .iter()
            .any(|v| v.is_nan() || *v <= 0.0)
        {
            return bad("voltage limits must be positive".into());
        }
        for res in [self.enc_res_pitch, self.enc_res_yaw].into_iter().flatten() {
            if res.is_nan() || res <= 0.0 {
                return bad(format!("encoder resolution must be positive, got {res}"));
            }
        }
        if self.ctrl_every == 0 {
            return bad("ctrl_every must be >= 1".into());
        }
        if let Some((lo, hi)) = self.travel_limits {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return bad(format!(
                    "travel limits must satisfy lower < upper, got ({lo}, {hi})"
                ));
            }
        }
        if let Some((until, limit)) = self.startup_limit_pitch {
            if until.is_nan() || until < 0.0 || limit.is_nan() || limit <= 0.0 {
                return bad("startup limit needs until >= 0 and limit > 0".into());
            }
        }
        if self.controller == ControllerMode::Continuous {
            if self.filter.is_some()
                || self.enc_res_pitch.is_some()
                || self.enc_res_yaw.is_some()
                || self.antiwindup_reset_s.is_some()
                || self.ctrl_every != 1
            {
                return bad(
                    "continuous controller excludes filtering, quantization, anti-windup, and decimation"
                        .into(),
                );
            }
        } else if self.model == Model::RefinedLinear {
            return bad(
                "the refined linear model embeds the controller; use continuous mode".into(),
            );
        }
        let mut state = [
            self.theta0,
            self.psi0,
            self.theta_dot0,
            self.psi_dot0,
            self.integ0.0,
            self.integ0.1,
            self.theta_d,
            self.psi_d,
        ];
        state[6] = self.theta_d;
        if state.iter().any(|v| !v.is_finite()) {
            return bad("initial conditions and setpoints must be finite".into());
        }
        Ok(())
    }

    fn pitch_limit_at(&self, t: f64) -> f64 {
        match self.startup_limit_pitch {
            Some((until, limit)) if t < until => limit,
            _ => self.v_limit_pitch,
        }
    }
}

const DIVERGENCE_LIMIT: f64 = 1e6;

/// Runs the closed loop and captures the trace (one row per `dt`,
/// inclusive of t = 0 and t = t_end).
pub fn run(
    params: &HeliParams,
    gains: &GainPreset,
    cfg: &RuntimeConfig,
    dist: &DisturbanceSignal,
) -> Result<SimTrace, SimError> {
    cfg.validate()?;
    dist.validate()?;
    let torque_gains = heli::torque_domain_gains(params, gains, cfg.gain_convention);
    match cfg.controller {
        ControllerMode::Sampled => run_sampled(params, &torque_gains, cfg, dist),
        ControllerMode::Continuous => run_continuous(params, &torque_gains, cfg, dist),
    }
}

fn accelerations(
    model: Model,
    p: &HeliParams,
    s: &HeliState,
    u: &Torques,
) -> Result<(f64, f64), HeliError> {
    match model {
        Model::Full => full_accelerations(p, s, u),
        Model::SmallAngle => small_angle_accelerations(p, s, u),
        Model::RefinedLinear => unreachable!("refined linear runs in z coordinates"),
    }
}

struct StepOutcome {
    clamped_lower: bool,
    clamped_upper: bool,
}

/// RK4 step of the plant with torques held constant; applies travel stops.
fn plant_step(
    model: Model,
    p: &HeliParams,
    state: &mut HeliState,
    u: &Torques,
    dt: f64,
    travel: Option<(f64, f64)>,
) -> Result<StepOutcome, HeliError> {
    let f = |s: &HeliState| -> Result<[f64; 4], HeliError> {
        let (tdd, pdd) = accelerations(model, p, s, u)?;
        Ok([s.theta_dot, s.psi_dot, tdd, pdd])
    };
    let y = [state.theta, state.psi, state.theta_dot, state.psi_dot];
    let k1 = f(state)?;
    let mk = |k: &[f64; 4], h: f64| HeliState {
        theta: y[0] + h * k[0],
        psi: y[1] + h * k[1],
        theta_dot: y[2] + h * k[2],
        psi_dot: y[3] + h * k[3],
    };
    let k2 = f(&mk(&k1, 0.5 * dt))?;
    let k3 = f(&mk(&k2, 0.5 * dt))?;
    let k4 = f(&mk(&k3, dt))?;
    state.theta = y[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    state.psi = y[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    state.theta_dot = y[2] + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]);
    state.psi_dot = y[3] + dt / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]);

    let mut out = StepOutcome {
        clamped_lower: false,
        clamped_upper: false,
    };
    if let Some((lo, hi)) = travel {
        if state.theta < lo {
            state.theta = lo;
            if state.theta_dot < 0.0 {
                state.theta_dot = 0.0;
            }
            out.clamped_lower = true;
        } else if state.theta > hi {
            state.theta = hi;
            if state.theta_dot > 0.0 {
                state.theta_dot = 0.0;
            }
            out.clamped_upper = true;
        }
    }
    Ok(out)
}

fn check_divergence(state: &HeliState, t: f64) -> Result<(), SimError> {
    if !state.is_finite()
        || state.theta.abs() > DIVERGENCE_LIMIT
        || state.psi.abs() > DIVERGENCE_LIMIT
        || state.theta_dot.abs() > DIVERGENCE_LIMIT
        || state.psi_dot.abs() > DIVERGENCE_LIMIT
    {
        return Err(SimError::Diverged { t });
    }
    Ok(())
}

fn run_sampled(
    params: &HeliParams,
    gains: &GainPreset,
    cfg: &RuntimeConfig,
    dist: &DisturbanceSignal,
) -> Result<SimTrace, SimError> {
    let (k1, k2, k3) = gains.pitch;
    let (k4, k5, k6) = gains.yaw;
    let bias = if cfg.gravity_bias {
        feedforward_torque(params, cfg.theta_d)
    } else {
        0.0
    };
    let dt = cfg.dt;
    let ctrl_dt = dt * cfg.ctrl_every as f64;
    let steps = (cfg.t_end / dt).round() as usize;

    let mut state = HeliState {
        theta: cfg.theta0,
        psi: cfg.psi0,
        theta_dot: cfg.theta_dot0,
        psi_dot: cfg.psi_dot0,
    };
    let measure = |s: &HeliState| -> (f64, f64) {
        (
            cfg.enc_res_pitch
                .map_or(s.theta, |r| quantize_encoder(s.theta, r)),
            cfg.enc_res_yaw
                .map_or(s.psi, |r| quantize_encoder(s.psi, r)),
        )
    };
    let (m0_p, m0_y) = measure(&state);
    let mut filt = match cfg.filter {
        Some(f) => Some((
            DerivativeFilter::with_initial_input(f.zeta, f.wc, ctrl_dt, m0_p)?,
            DerivativeFilter::with_initial_input(f.zeta, f.wc, ctrl_dt, m0_y)?,
        )),
        None => None,
    };

    // integral torque contributions; state carries -k * z_integral
    let mut integ_p = BackCalcIntegrator::new(cfg.antiwindup_reset_s)?;
    let mut integ_y = BackCalcIntegrator::new(cfg.antiwindup_reset_s)?;
    integ_p.set_state(-k1 * cfg.integ0.0);
    integ_y.set_state(-k4 * cfg.integ0.1);
    // plain error integrals, reported when a zero gain makes the torque
    // state uninformative
    let (mut plain_z1, mut plain_z2) = cfg.integ0;

    let mut trace = SimTrace::new(dt);
    let mut held = Torques::default();
    let mut held_v = (0.0, 0.0);
    let mut held_z = [
        cfg.integ0.0,
        cfg.integ0.1,
        m0_p - cfg.theta_d,
        m0_y - cfg.psi_d,
        0.0,
        0.0,
    ];
    let mut was_clamped = false;

    for k in 0..=steps {
        let t = k as f64 * dt;
        let d = dist.value_at(t, dt);
        let (theta_m, psi_m) = measure(&state);

        if k % cfg.ctrl_every == 0 && k < steps {
            let z3 = theta_m - cfg.theta_d;
            let z4 = psi_m - cfg.psi_d;
            let (z5, z6) = match &mut filt {
                Some((fp, fy)) => (fp.step(theta_m), fy.step(psi_m)),
                None => (state.theta_dot, state.psi_dot),
            };
            let cmd_p = bias + integ_p.state() - k2 * z3 - k3 * z5;
            let cmd_y = integ_y.state() - k5 * z4 - k6 * z6;
            let (eff_p, eff_y, v_p, v_y) = if cfg.saturation {
                let sp = apply_saturation(cmd_p, &cfg.map_pitch, cfg.pitch_limit_at(t));
                let sy = apply_saturation(cmd_y, &cfg.map_yaw, cfg.v_limit_yaw);
                (
                    sp.torque_effective,
                    sy.torque_effective,
                    sp.voltage,
                    sy.voltage,
                )
            } else {
                (
                    cmd_p,
                    cmd_y,
                    cfg.map_pitch.to_voltage(cmd_p),
                    cfg.map_yaw.to_voltage(cmd_y),
                )
            };
            // record the controller state that produced this command, then
            // advance the integrators for the next tick
            held = Torques {
                pitch: eff_p,
                yaw: eff_y,
            };
            held_v = (v_p, v_y);
            let z1 = if k1.abs() > f64::MIN_POSITIVE {
                -integ_p.state() / k1
            } else {
                plain_z1
            };
            let z2 = if k4.abs() > f64::MIN_POSITIVE {
                -integ_y.state() / k4
            } else {
                plain_z2
            };
            held_z = [z1, z2, z3, z4, z5, z6];
            integ_p.advance(-k1 * z3, cmd_p, eff_p, ctrl_dt);
            integ_y.advance(-k4 * z4, cmd_y, eff_y, ctrl_dt);
            plain_z1 += ctrl_dt * z3;
            plain_z2 += ctrl_dt * z4;
        }

        trace.push(TraceRow {
            t,
            theta: state.theta,
            psi: state.psi,
            theta_dot: state.theta_dot,
            psi_dot: state.psi_dot,
            theta_meas: theta_m,
            psi_meas: psi_m,
            z: held_z,
            torque_pitch: held.pitch,
            torque_yaw: held.yaw,
            v_pitch: held_v.0,
            v_yaw: held_v.1,
            dist_pitch: d.0,
            dist_yaw: d.1,
            energy: total_energy(params, &state),
        });

        if k == steps {
            break;
        }
        let applied = Torques {
            pitch: held.pitch + d.0,
            yaw: held.yaw + d.1,
        };
        let outcome = plant_step(
            cfg.model,
            params,
            &mut state,
            &applied,
            dt,
            cfg.travel_limits,
        )?;
        let clamped = outcome.clamped_lower || outcome.clamped_upper;
        if clamped && !was_clamped {
            trace.clamp_events.push(ClampEvent {
                t: t + dt,
                upper: outcome.clamped_upper,
            });
        }
        was_clamped = clamped;
        check_divergence(&state, t + dt)?;
    }
    Ok(trace)
}

fn run_continuous(
    params: &HeliParams,
    gains: &GainPreset,
    cfg: &RuntimeConfig,
    dist: &DisturbanceSignal,
) -> Result<SimTrace, SimError> {
    let (k1, k2, k3) = gains.pitch;
    let (k4, k5, k6) = gains.yaw;
    let bias = if cfg.gravity_bias {
        feedforward_torque(params, cfg.theta_d)
    } else {
        0.0
    };
    let dt = cfg.dt;
    let steps = (cfg.t_end / dt).round() as usize;

    // state z = (z1, z2, z3, z4, z5, z6)
    let mut z = [
        cfg.integ0.0,
        cfg.integ0.1,
        cfg.theta0 - cfg.theta_d,
        cfg.psi0 - cfg.psi_d,
        cfg.theta_dot0,
        cfg.psi_dot0,
    ];

    let refined = matches!(cfg.model, Model::RefinedLinear);
    let a_mat = heli::refined_linear_a(params, gains, cfg.theta_d, cfg.gain_convention);
    let c_vec = heli::constant_bias_vector(params, cfg.theta_d);

    let control = |z: &[f64; 6]| -> Torques {
        Torques {
            pitch: bias - k1 * z[0] - k2 * z[2] - k3 * z[4],
            yaw: -k4 * z[1] - k5 * z[3] - k6 * z[5],
        }
    };
    let effective = |u: Torques, t: f64| -> (Torques, f64, f64) {
        if cfg.saturation {
            let sp = apply_saturation(u.pitch, &cfg.map_pitch, cfg.pitch_limit_at(t));
            let sy = apply_saturation(u.yaw, &cfg.map_yaw, cfg.v_limit_yaw);
            (
                Torques {
                    pitch: sp.torque_effective,
                    yaw: sy.torque_effective,
                },
                sp.voltage,
                sy.voltage,
            )
        } else {
            (
                u,
                cfg.map_pitch.to_voltage(u.pitch),
                cfg.map_yaw.to_voltage(u.yaw),
            )
        }
    };

    let deriv = |z: &[f64; 6], d: (f64, f64), t: f64| -> Result<[f64; 6], SimError> {
        if refined {
            let mut dz = [0.0; 6];
            for i in 0..6 {
                dz[i] = c_vec[i];
                for j in 0..6 {
                    dz[i] += a_mat[i][j] * z[j];
                }
            }
            // gravity feedforward and disturbance enter as torques
            dz[4] += params.alpha1() * (bias + d.0);
            dz[5] += params.alpha2() * d.1;
            Ok(dz)
        } else {
            let (u_raw, _, _) = (control(z), 0.0, 0.0);
            let (u, _, _) = effective(u_raw, t);
            let s = HeliState {
                theta: z[2] + cfg.theta_d,
                psi: z[3] + cfg.psi_d,
                theta_dot: z[4],
                psi_dot: z[5],
            };
            let applied = Torques {
                pitch: u.pitch + d.0,
                yaw: u.yaw + d.1,
            };
            let (tdd, pdd) = accelerations(cfg.model, params, &s, &applied)?;
            Ok([z[2], z[3], z[4], z[5], tdd, pdd])
        }
    };

    let mut trace = SimTrace::new(dt);
    let mut was_clamped = false;
    for k in 0..=steps {
        let t = k as f64 * dt;
        let d = dist.value_at(t, dt);
        let state = HeliState {
            theta: z[2] + cfg.theta_d,
            psi: z[3] + cfg.psi_d,
            theta_dot: z[4],
            psi_dot: z[5],
        };
        let (u, v_p, v_y) = effective(control(&z), t);
        trace.push(TraceRow {
            t,
            theta: state.theta,
            psi: state.psi,
            theta_dot: state.theta_dot,
            psi_dot: state.psi_dot,
            theta_meas: state.theta,
            psi_meas: state.psi,
            z,
            torque_pitch: u.pitch,
            torque_yaw: u.yaw,
            v_pitch: v_p,
            v_yaw: v_y,
            dist_pitch: d.0,
            dist_yaw: d.1,
            energy: total_energy(params, &state),
        });
        if k == steps {
            break;
        }

        let k1v = deriv(&z, d, t)?;
        let mut z2v = z;
        for i in 0..6 {
            z2v[i] += 0.5 * dt * k1v[i];
        }
        let k2v = deriv(&z2v, d, t)?;
        let mut z3v = z;
        for i in 0..6 {
            z3v[i] += 0.5 * dt * k2v[i];
        }
        let k3v = deriv(&z3v, d, t)?;
        let mut z4v = z;
        for i in 0..6 {
            z4v[i] += dt * k3v[i];
        }
        let k4v = deriv(&z4v, d, t)?;
        for i in 0..6 {
            z[i] += dt / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }

        if let Some((lo, hi)) = cfg.travel_limits {
            let theta = z[2] + cfg.theta_d;
            let mut clamped_upper = false;
            let mut clamped = false;
            if theta < lo {
                z[2] = lo - cfg.theta_d;
                if z[4] < 0.0 {
                    z[4] = 0.0;
                }
                clamped = true;
            } else if theta > hi {
                z[2] = hi - cfg.theta_d;
                if z[4] > 0.0 {
                    z[4] = 0.0;
                }
                clamped = true;
                clamped_upper = true;
            }
            if clamped && !was_clamped {
                trace.clamp_events.push(ClampEvent {
                    t: t + dt,
                    upper: clamped_upper,
                });
            }
            was_clamped = clamped;
        }
        let probe = HeliState {
            theta: z[2] + cfg.theta_d,
            psi: z[3] + cfg.psi_d,
            theta_dot: z[4],
            psi_dot: z[5],
        };
        check_divergence(&probe, t + dt)?;
        if z.iter()
            .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
        {
            return Err(SimError::Diverged { t: t + dt });
        }
    }
    Ok(trace)
}
