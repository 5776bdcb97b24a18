//! Controller-side signal blocks: derivative filter, back-calculation
//! anti-windup integrator, encoder quantization, torque/voltage mapping,
//! and disturbance signals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;

/// Discrete derivative-plus-lowpass filter
/// `H(s) = wc^2 s / (s^2 + 2 zeta wc s + wc^2)`
/// realized by the bilinear transform (direct form II transposed).
///
/// DC gain is zero (constant inputs produce zero) and the ramp steady
/// state recovers the slope exactly.
#[derive(Debug, Clone)]
pub struct DerivativeFilter {
    b0: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    s1: f64,
    s2: f64,
}

impl DerivativeFilter {
    /// `wc * dt` must stay below 0.5 for the discretization to be
    /// meaningful; violating that is a configuration error.
    pub fn new(zeta: f64, wc: f64, dt: f64) -> Result<Self, SimError> {
        if [zeta, wc, dt].iter().any(|v| v.is_nan() || *v <= 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "filter needs positive zeta/wc/dt, got zeta={zeta}, wc={wc}, dt={dt}"
            )));
        }
        if wc * dt >= 0.5 {
            return Err(SimError::FilterSampling { wc, dt });
        }
        let k = 2.0 / dt;
        let a0 = k * k + 2.0 * zeta * wc * k + wc * wc;
        Ok(Self {
            b0: wc * wc * k / a0,
            b2: -wc * wc * k / a0,
            a1: (2.0 * wc * wc - 2.0 * k * k) / a0,
            a2: (k * k - 2.0 * zeta * wc * k + wc * wc) / a0,
            s1: 0.0,
            s2: 0.0,
        })
    }

    /// Pre-charges the state so a constant input `x0` yields zero output
    /// from the first sample (no synthetic derivative kick at start-up).
    pub fn with_initial_input(zeta: f64, wc: f64, dt: f64, x0: f64) -> Result<Self, SimError> {
        let mut f = Self::new(zeta, wc, dt)?;
        f.s1 = -f.b0 * x0;
        f.s2 = -f.b0 * x0;
        Ok(f)
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.s1;
        self.s1 = -self.a1 * y + self.s2; // b1 = 0
        self.s2 = self.b2 * x - self.a2 * y;
        y
    }
}

/// Back-calculation anti-windup integrator. The state lives in the same
/// units as the command (torque here): unsaturated it is the plain Euler
/// integral of its input; under saturation the command discrepancy bleeds
/// the state back at rate `1/Tt`.
#[derive(Debug, Clone)]
pub struct BackCalcIntegrator {
    state: f64,
    /// Integral reset time; `None` disables back-calculation.
    tt: Option<f64>,
}

impl BackCalcIntegrator {
    pub fn new(tt: Option<f64>) -> Result<Self, SimError> {
        if let Some(t) = tt {
            if t.is_nan() || t <= 0.0 {
                return Err(SimError::InvalidConfig(format!(
                    "anti-windup reset time must be positive, got {t}"
                )));
            }
        }
        Ok(Self { state: 0.0, tt })
    }

    pub fn state(&self) -> f64 {
        self.state
    }

    pub fn set_state(&mut self, s: f64) {
        self.state = s;
    }

    /// Advances by `dt * (input + (u_sat - u_cmd) / Tt)`.
    pub fn advance(&mut self, input: f64, u_cmd: f64, u_sat: f64, dt: f64) {
        let back = match self.tt {
            Some(tt) => (u_sat - u_cmd) / tt,
            None => 0.0,
        };
        self.state += dt * (input + back);
    }
}

/// Rounds an angle to the encoder lattice, half counts away from zero.
pub fn quantize_encoder(angle: f64, resolution: f64) -> f64 {
    debug_assert!(resolution > 0.0);
    resolution * (angle / resolution).round()
}

/// Affine torque-to-voltage map `v = gain * torque + offset`.
///
/// Defaults to identity; the true motor constants belong to the hardware
/// datasheet and must be configured explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub gain: f64,
    pub offset: f64,
}

impl Default for AffineMap {
    fn default() -> Self {
        Self {
            gain: 1.0,
            offset: 0.0,
        }
    }
}

impl AffineMap {
    pub fn new(gain: f64, offset: f64) -> Result<Self, SimError> {
        if gain == 0.0 || !gain.is_finite() || !offset.is_finite() {
            return Err(SimError::InvalidConfig(format!(
                "torque/voltage map needs finite nonzero gain, got gain={gain}, offset={offset}"
            )));
        }
        Ok(Self { gain, offset })
    }

    pub fn to_voltage(&self, torque: f64) -> f64 {
        self.gain * torque + self.offset
    }

    pub fn to_torque(&self, voltage: f64) -> f64 {
        (voltage - self.offset) / self.gain
    }
}

/// Voltage-domain saturation of a torque command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationResult {
    pub voltage: f64,
    pub torque_effective: f64,
    pub saturated: bool,
}

/// Maps the commanded torque to voltage, clamps at `±v_limit`, and maps
/// back, so the loop sees the torque the hardware can actually deliver.
pub fn apply_saturation(torque: f64, map: &AffineMap, v_limit: f64) -> SaturationResult {
    let v = map.to_voltage(torque);
    let clamped = v.clamp(-v_limit, v_limit);
    SaturationResult {
        voltage: clamped,
        torque_effective: if clamped == v {
            torque
        } else {
            map.to_torque(clamped)
        },
        saturated: clamped != v,
    }
}

/// Disturbance torque signal, per axis step tables.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum DisturbanceKind {
    #[default]
    None,
    /// Hold each breakpoint value until the next breakpoint.
    PiecewiseConstant,
    /// Same table semantics as `PiecewiseConstant`; named separately for
    /// single-step scenarios.
    Step,
    /// Each breakpoint is an impulse of the given area, applied over one
    /// integration step.
    ImpulseTrain,
}

/// One axis: breakpoints `(t, value)`, strictly increasing in `t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AxisSignal {
    pub breakpoints: Vec<(f64, f64)>,
}

impl AxisSignal {
    pub fn validate(&self) -> Result<(), SimError> {
        for w in self.breakpoints.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(SimError::InvalidConfig(format!(
                    "disturbance breakpoints must be strictly increasing, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        if self
            .breakpoints
            .iter()
            .any(|(t, v)| !t.is_finite() || !v.is_finite())
        {
            return Err(SimError::InvalidConfig(
                "disturbance breakpoints must be finite".into(),
            ));
        }
        Ok(())
    }

    fn held_value(&self, t: f64) -> f64 {
        let mut v = 0.0;
        for &(bt, bv) in &self.breakpoints {
            if bt <= t {
                v = bv;
            } else {
                break;
            }
        }
        v
    }

    fn impulse_value(&self, t: f64, dt: f64) -> f64 {
        for &(bt, area) in &self.breakpoints {
            if t >= bt && t < bt + dt {
                return area / dt;
            }
        }
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisturbanceSignal {
    pub kind: DisturbanceKind,
    pub pitch: AxisSignal,
    pub yaw: AxisSignal,
    /// Seed recorded for reproducibility when the table was generated.
    pub seed: Option<u64>,
}

impl DisturbanceSignal {
    pub fn none() -> Self {
        Self::default()
    }

    /// Constant torque step on both axes from `t_on`.
    pub fn step_at(t_on: f64, pitch: f64, yaw: f64) -> Self {
        Self {
            kind: DisturbanceKind::Step,
            pitch: AxisSignal {
                breakpoints: vec![(t_on, pitch)],
            },
            yaw: AxisSignal {
                breakpoints: vec![(t_on, yaw)],
            },
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.pitch.validate()?;
        self.yaw.validate()
    }

    /// Torque pair at time `t`; `dt` sizes impulse realization.
    pub fn value_at(&self, t: f64, dt: f64) -> (f64, f64) {
        match self.kind {
            DisturbanceKind::None => (0.0, 0.0),
            DisturbanceKind::PiecewiseConstant | DisturbanceKind::Step => {
                (self.pitch.held_value(t), self.yaw.held_value(t))
            }
            DisturbanceKind::ImpulseTrain => (
                self.pitch.impulse_value(t, dt),
                self.yaw.impulse_value(t, dt),
            ),
        }
    }
}

/// Uniform random piecewise-constant disturbance: levels in
/// `[-amplitude, +amplitude]` held for `dwell` seconds, deterministic per
/// seed (applied to the pitch axis; yaw gets an independent sequence from
/// the same stream).
pub fn make_piecewise_disturbance(
    seed: u64,
    dwell: f64,
    amplitude: f64,
    t_end: f64,
) -> Result<DisturbanceSignal, SimError> {
    if dwell.is_nan() || dwell <= 0.0 {
        return Err(SimError::InvalidConfig(format!(
            "dwell must be positive, got {dwell}"
        )));
    }
    let levels = (t_end / dwell).ceil().max(1.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let v = if amplitude == 0.0 {
                    0.0
                } else {
                    rng.random_range(-amplitude..=amplitude)
                };
                (k as f64 * dwell, v)
            })
            .collect()
    };
    Ok(DisturbanceSignal {
        kind: DisturbanceKind::PiecewiseConstant,
        pitch: AxisSignal {
            breakpoints: draw(levels),
        },
        yaw: AxisSignal {
            breakpoints: draw(levels),
        },
        seed: Some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_kills_constants() {
        let mut f =
            DerivativeFilter::with_initial_input(0.85, 40.0 * std::f64::consts::PI, 1e-3, 5.0)
                .unwrap();
        for _ in 0..2000 {
            let y = f.step(5.0);
            assert!(y.abs() < 1e-12, "constant input must produce zero, got {y}");
        }
    }

    #[test]
    fn filter_recovers_ramp_slope() {
        let zeta = 0.85;
        let wc = 40.0 * std::f64::consts::PI;
        let dt = 1e-3;
        let mut f = DerivativeFilter::new(zeta, wc, dt).unwrap();
        let slope = 2.0;
        let settle = (5.0 / (zeta * wc) / dt) as usize;
        let mut y = 0.0;
        for k in 0..4 * settle {
            y = f.step(slope * k as f64 * dt);
        }
        assert!((y - slope).abs() < 0.01 * slope, "slope estimate {y}");
    }

    #[test]
    fn filter_approximates_derivative_of_slow_sine() {
        // well below the cut-off, H(jw) ~ jw: gain w, phase lead 90 deg
        let wc = 40.0 * std::f64::consts::PI;
        let dt = 1e-4;
        let omega = wc / 100.0;
        let amp = 0.3;
        let mut f = DerivativeFilter::new(0.85, wc, dt).unwrap();
        let period = 2.0 * std::f64::consts::PI / omega;
        let steps = (4.0 * period / dt) as usize;
        // project the settled output onto sin/cos of the drive frequency
        let mut s_coef = 0.0;
        let mut c_coef = 0.0;
        let mut count = 0usize;
        for k in 0..steps {
            let t = k as f64 * dt;
            let y = f.step(amp * (omega * t).sin());
            if t > 3.0 * period {
                s_coef += y * (omega * t).sin();
                c_coef += y * (omega * t).cos();
                count += 1;
            }
        }
        let half = count as f64 / 2.0;
        let (a_sin, a_cos) = (s_coef / half, c_coef / half);
        let gain = (a_sin * a_sin + a_cos * a_cos).sqrt() / amp;
        let phase = a_cos.atan2(a_sin);
        assert!(
            (gain - omega).abs() < 0.03 * omega,
            "gain {gain} vs {omega}"
        );
        assert!(
            (phase - std::f64::consts::FRAC_PI_2).abs() < 0.05,
            "phase {phase} vs pi/2"
        );
    }

    #[test]
    fn filter_rejects_bad_sampling() {
        assert!(matches!(
            DerivativeFilter::new(0.85, 80.0 * std::f64::consts::PI.powi(2), 1e-3),
            Err(SimError::FilterSampling { .. })
        ));
    }

    #[test]
    fn integrator_plain_when_unsaturated() {
        let mut i = BackCalcIntegrator::new(Some(1.0)).unwrap();
        let dt = 1e-3;
        let mut reference = 0.0;
        for k in 0..1000 {
            let e = (k as f64 * 0.01).sin();
            i.advance(e, 0.3, 0.3, dt);
            reference += dt * e;
        }
        assert!((i.state() - reference).abs() < 1e-12);
    }

    #[test]
    fn integrator_converges_under_hard_saturation() {
        // constant error, command = state + p, saturated at u_sat:
        // fixed point state* = Tt * e + (u_sat - p)
        let tt = 1.0;
        let e = 0.4;
        let p = 2.0;
        let u_sat = 1.0;
        let mut i = BackCalcIntegrator::new(Some(tt)).unwrap();
        let dt = 1e-3;
        for _ in 0..40_000 {
            let u_cmd = i.state() + p;
            i.advance(e, u_cmd, u_sat, dt);
        }
        let fixed_point = tt * e + (u_sat - p);
        assert!(
            (i.state() - fixed_point).abs() < 1e-9,
            "state {} vs fixed point {fixed_point}",
            i.state()
        );
        // without back-calculation the same input grows without bound
        let mut w = BackCalcIntegrator::new(None).unwrap();
        for _ in 0..40_000 {
            let u_cmd = w.state() + p;
            w.advance(e, u_cmd, u_sat, dt);
        }
        assert!(w.state() > 10.0 * fixed_point.abs());
    }

    #[test]
    fn quantize_examples() {
        let res = 2.0 * std::f64::consts::PI / 4096.0;
        assert_eq!(quantize_encoder(0.0, res), 0.0);
        // 0.0007 rad is 0.456 counts: rounds to zero
        assert_eq!(quantize_encoder(0.0007, res), 0.0);
        // lattice points are fixed points
        for k in [-3i32, 1, 7] {
            let x = res * k as f64;
            assert_eq!(quantize_encoder(x, res), x);
        }
        // half counts round away from zero
        assert_eq!(quantize_encoder(1.5 * res, res), 2.0 * res);
        assert_eq!(quantize_encoder(-1.5 * res, res), -2.0 * res);
    }

    #[test]
    fn saturation_algebra() {
        let map = AffineMap::default();
        let r = apply_saturation(10.0, &map, 24.0);
        assert_eq!(
            (r.voltage, r.torque_effective, r.saturated),
            (10.0, 10.0, false)
        );
        let r = apply_saturation(30.0, &map, 24.0);
        assert_eq!(
            (r.voltage, r.torque_effective, r.saturated),
            (24.0, 24.0, true)
        );
        // gain 12 V per N m: 2.5 N m wants 30 V, clamps to 24 V = 2.0 N m
        let map = AffineMap::new(12.0, 0.0).unwrap();
        let r = apply_saturation(2.5, &map, 24.0);
        assert_eq!(
            (r.voltage, r.torque_effective, r.saturated),
            (24.0, 2.0, true)
        );
    }

    #[test]
    fn piecewise_disturbance_deterministic() {
        let a = make_piecewise_disturbance(42, 2.0, 0.5, 10.0).unwrap();
        let b = make_piecewise_disturbance(42, 2.0, 0.5, 10.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.pitch.breakpoints.len(), 5);
        assert!(a.pitch.breakpoints.iter().all(|(_, v)| v.abs() <= 0.5));
        let c = make_piecewise_disturbance(43, 2.0, 0.5, 10.0).unwrap();
        assert_ne!(a, c);
        let z = make_piecewise_disturbance(1, 2.0, 0.0, 10.0).unwrap();
        assert!(z.pitch.breakpoints.iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn step_table_lookup() {
        let d = DisturbanceSignal {
            kind: DisturbanceKind::PiecewiseConstant,
            pitch: AxisSignal {
                breakpoints: vec![(1.0, 0.2), (3.0, -0.1)],
            },
            yaw: AxisSignal::default(),
            seed: None,
        };
        assert_eq!(d.value_at(0.5, 1e-3), (0.0, 0.0));
        assert_eq!(d.value_at(1.0, 1e-3), (0.2, 0.0));
        assert_eq!(d.value_at(2.9, 1e-3), (0.2, 0.0));
        assert_eq!(d.value_at(3.5, 1e-3), (-0.1, 0.0));
    }

    #[test]
    fn impulse_train_area() {
        let d = DisturbanceSignal {
            kind: DisturbanceKind::ImpulseTrain,
            pitch: AxisSignal {
                breakpoints: vec![(1.0, 0.05)],
            },
            yaw: AxisSignal::default(),
            seed: None,
        };
        let dt = 1e-3;
        assert_eq!(d.value_at(1.0, dt).0, 0.05 / dt);
        assert_eq!(d.value_at(1.0 + dt, dt).0, 0.0);
        assert_eq!(d.value_at(0.999, dt).0, 0.0);
    }

    #[test]
    fn nonincreasing_breakpoints_rejected() {
        let d = DisturbanceSignal {
            kind: DisturbanceKind::Step,
            pitch: AxisSignal {
                breakpoints: vec![(1.0, 0.2), (1.0, 0.3)],
            },
            yaw: AxisSignal::default(),
            seed: None,
        };
        assert!(d.validate().is_err());
    }
}
