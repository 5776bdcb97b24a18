//! Simulation traces and their CSV form.
//!
//! The CSV layout is part of the crate's external contract: header row
//! with unit-suffixed column names, time first, one row per step, every
//! value printed with 17 significant digits ('.' decimal separator, '\n'
//! line endings) so identical runs produce identical bytes.

use std::io::{BufRead, Write};
use std::path::Path;

use super::signal::{AxisSignal, DisturbanceKind, DisturbanceSignal};
use super::SimError;

pub const CSV_HEADER: &str = "t_s,theta_rad,psi_rad,theta_dot_rad_per_s,psi_dot_rad_per_s,\
theta_meas_rad,psi_meas_rad,z1_rad_s,z2_rad_s,z3_rad,z4_rad,z5_rad_per_s,z6_rad_per_s,\
torque_pitch_n_m,torque_yaw_n_m,v_pitch_v,v_yaw_v,dist_pitch_n_m,dist_yaw_n_m,energy_j";

/// One sample of the closed-loop state and controller internals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub theta: f64,
    pub psi: f64,
    pub theta_dot: f64,
    pub psi_dot: f64,
    pub theta_meas: f64,
    pub psi_meas: f64,
    /// Controller-facing error states (z5/z6 are the rate estimates the
    /// controller actually used, filtered when filtering is on).
    pub z: [f64; 6],
    pub torque_pitch: f64,
    pub torque_yaw: f64,
    pub v_pitch: f64,
    pub v_yaw: f64,
    pub dist_pitch: f64,
    pub dist_yaw: f64,
    pub energy: f64,
}

/// Travel-limit contact event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampEvent {
    pub t: f64,
    /// True for the upper stop, false for the lower.
    pub upper: bool,
}

/// Uniform-grid simulation trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    dt: f64,
    rows: Vec<TraceRow>,
    pub clamp_events: Vec<ClampEvent>,
}

impl SimTrace {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            rows: Vec::new(),
            clamp_events: Vec::new(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &TraceRow {
        &self.rows[i]
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("trace has at least one row")
    }

    pub fn z(&self, i: usize) -> &[f64; 6] {
        &self.rows[i].z
    }

    pub fn z_norm(&self, i: usize) -> f64 {
        self.rows[i].z.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Index of the first row at or after time `t`.
    pub fn index_at(&self, t: f64) -> usize {
        ((t / self.dt).ceil() as usize).min(self.rows.len().saturating_sub(1))
    }

    /// Largest absolute pitch/yaw voltage over the run.
    pub fn voltage_peaks(&self) -> (f64, f64) {
        self.rows.iter().fold((0.0f64, 0.0f64), |(p, y), r| {
            (p.max(r.v_pitch.abs()), y.max(r.v_yaw.abs()))
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(CSV_HEADER.as_bytes())?;
        w.write_all(b"\n")?;
        let mut line = String::with_capacity(520);
        for r in &self.rows {
            line.clear();
            for (i, v) in [
                r.t,
                r.theta,
                r.psi,
                r.theta_dot,
                r.psi_dot,
                r.theta_meas,
                r.psi_meas,
                r.z[0],
                r.z[1],
                r.z[2],
                r.z[3],
                r.z[4],
                r.z[5],
                r.torque_pitch,
                r.torque_yaw,
                r.v_pitch,
                r.v_yaw,
                r.dist_pitch,
                r.dist_yaw,
                r.energy,
            ]
            .into_iter()
            .enumerate()
            {
                if i > 0 {
                    line.push(',');
                }
                format_value(&mut line, v);
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    pub fn save_csv(&self, path: &Path) -> std::io::Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// 17 significant digits, enough to round-trip any f64 bit pattern.
fn format_value(out: &mut String, v: f64) {
    use std::fmt::Write;
    write!(out, "{v:.16e}").expect("formatting f64 cannot fail");
}

/// Reads a `(t, value)` step table from CSV text. Lines starting with `#`
/// and a single header line of non-numeric fields are skipped; values
/// apply to the pitch axis unless a third column names the axis
/// (`pitch`/`yaw`).
pub fn disturbance_from_csv<R: BufRead>(reader: R) -> Result<DisturbanceSignal, SimError> {
    let mut pitch = Vec::new();
    let mut yaw = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| SimError::InvalidConfig(format!("read error: {e}")))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(SimError::InvalidConfig(format!(
                "line {}: expected `t,value[,axis]`, got `{trimmed}`",
                lineno + 1
            )));
        }
        let t: f64 = match fields[0].parse() {
            Ok(v) => v,
            Err(_) if lineno == 0 => continue, // header row
            Err(e) => {
                return Err(SimError::InvalidConfig(format!(
                    "line {}: bad time `{}`: {e}",
                    lineno + 1,
                    fields[0]
                )))
            }
        };
        let v: f64 = fields[1].parse().map_err(|e| {
            SimError::InvalidConfig(format!(
                "line {}: bad value `{}`: {e}",
                lineno + 1,
                fields[1]
            ))
        })?;
        match fields.get(2).copied() {
            None | Some("pitch") => pitch.push((t, v)),
            Some("yaw") => yaw.push((t, v)),
            Some(other) => {
                return Err(SimError::InvalidConfig(format!(
                    "line {}: unknown axis `{other}`",
                    lineno + 1
                )))
            }
        }
    }
    let sig = DisturbanceSignal {
        kind: DisturbanceKind::Step,
        pitch: AxisSignal { breakpoints: pitch },
        yaw: AxisSignal { breakpoints: yaw },
        seed: None,
    };
    sig.validate()?;
    Ok(sig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64) -> TraceRow {
        TraceRow {
            t,
            theta: 0.1 * t,
            psi: -0.2,
            theta_dot: 1.0 / 3.0,
            psi_dot: 0.0,
            theta_meas: 0.1 * t,
            psi_meas: -0.2,
            z: [0.0, 1e-17, 2.0, -3.0, f64::MIN_POSITIVE, 0.5],
            torque_pitch: 1.962,
            torque_yaw: 0.0,
            v_pitch: 1.962,
            v_yaw: 0.0,
            dist_pitch: 0.0,
            dist_yaw: 0.0,
            energy: 0.981,
        }
    }

    #[test]
    fn csv_round_trips_bits() {
        let mut tr = SimTrace::new(1e-3);
        tr.push(row(0.0));
        tr.push(row(1e-3));
        let text = tr.to_csv_string();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let first = lines.next().unwrap();
        let fields: Vec<f64> = first.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields[3], 1.0 / 3.0);
        assert_eq!(fields[8], 1e-17);
        assert_eq!(fields[11], f64::MIN_POSITIVE);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn csv_bytes_deterministic() {
        let mut tr = SimTrace::new(1e-3);
        for k in 0..100 {
            tr.push(row(k as f64 * 1e-3));
        }
        assert_eq!(tr.to_csv_string(), tr.to_csv_string());
    }

    #[test]
    fn disturbance_csv_import() {
        let text = "t,value,axis\n0.0,0.1\n2.0,-0.2,pitch\n1.0,0.05,yaw\n";
        let d = disturbance_from_csv(std::io::Cursor::new(text)).unwrap();
        assert_eq!(d.pitch.breakpoints, vec![(0.0, 0.1), (2.0, -0.2)]);
        assert_eq!(d.yaw.breakpoints, vec![(1.0, 0.05)]);
        assert_eq!(d.value_at(2.5, 1e-3), (-0.2, 0.05));
    }

    #[test]
    fn disturbance_csv_rejects_garbage() {
        assert!(disturbance_from_csv(std::io::Cursor::new("0.0\n")).is_err());
        assert!(disturbance_from_csv(std::io::Cursor::new("t,v\n1.0,abc\n")).is_err());
        assert!(disturbance_from_csv(std::io::Cursor::new("1.0,0.1,roll\n")).is_err());
    }
}
