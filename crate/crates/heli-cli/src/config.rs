//! Line-based `key = value` scenario configuration.
//!
//! A file holds zero or more scenarios; each `[scenario]` header starts a
//! new one and the following `[params]`, `[gains]`, `[runtime]`,
//! `[disturbance]`, and `[outputs]` sections fill it in. Keys are strict:
//! anything unrecognized is a schema error with its line number. Angles
//! are radians unless the key carries a `_deg` suffix.

use std::path::{Path, PathBuf};

use heli_core::design::GainPreset;
use heli_core::heli::{GainConvention, HeliParams};
use heli_core::sim::{
    disturbance_from_csv, make_piecewise_disturbance, AxisSignal, ControllerMode, DisturbanceKind,
    DisturbanceSignal, FilterConfig, Model, RuntimeConfig,
};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct Outputs {
    pub trace_csv: bool,
    pub plots: bool,
    pub certificate: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            trace_csv: true,
            plots: true,
            certificate: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub params: HeliParams,
    pub params_defaulted: bool,
    pub map_defaulted: bool,
    pub gains: GainPreset,
    pub runtime: RuntimeConfig,
    pub disturbance: DisturbanceSignal,
    pub outputs: Outputs,
}

/// Everything needed to assemble one scenario, accumulated line by line.
#[derive(Debug, Clone)]
struct Builder {
    name: String,
    header_line: usize,
    params: [Option<f64>; 7], // jp jy m l bp by g
    params_preset: bool,
    gains: Option<GainPreset>,
    explicit_k: [Option<f64>; 6],
    runtime: RuntimeConfig,
    map_touched: bool,
    dist_kind: Option<String>,
    dist_t_on: f64,
    dist_pitch: f64,
    dist_yaw: f64,
    dist_seed: u64,
    dist_dwell: f64,
    dist_amplitude: f64,
    dist_file: Option<PathBuf>,
    outputs: Outputs,
}

impl Builder {
    fn new(name: String, header_line: usize) -> Self {
        Self {
            name,
            header_line,
            params: [None; 7],
            params_preset: false,
            gains: None,
            explicit_k: [None; 6],
            runtime: RuntimeConfig::default(),
            map_touched: false,
            dist_kind: None,
            dist_t_on: 0.0,
            dist_pitch: 0.0,
            dist_yaw: 0.0,
            dist_seed: 0,
            dist_dwell: 1.0,
            dist_amplitude: 0.0,
            dist_file: None,
            outputs: Outputs::default(),
        }
    }

    fn finish(self, file: &Path, seed_override: Option<u64>) -> Result<Scenario, CliError> {
        let schema = |line: usize, msg: String| CliError::Schema {
            file: file.to_path_buf(),
            line,
            msg,
        };
        let params_defaulted = !self.params_preset && self.params.iter().all(Option::is_none);
        let params = if self.params.iter().all(Option::is_none) {
            HeliParams::plausible_rig()
        } else if self.params.iter().all(Option::is_some) {
            let v = self.params.map(Option::unwrap);
            HeliParams::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6])
                .map_err(|e| schema(self.header_line, format!("invalid [params]: {e}")))?
        } else {
            return Err(schema(
                self.header_line,
                "partial [params]: give all of jp, jy, m, l, bp, by, g (or none, or preset = plausible_rig)"
                    .into(),
            ));
        };
        let gains = if let Some(g) = self.gains {
            if self.explicit_k.iter().any(Option::is_some) {
                return Err(schema(
                    self.header_line,
                    "give either a gains preset or explicit k1..k6, not both".into(),
                ));
            }
            g
        } else if self.explicit_k.iter().all(Option::is_some) {
            let k = self.explicit_k.map(Option::unwrap);
            GainPreset::custom((k[0], k[1], k[2]), (k[3], k[4], k[5]))
        } else if self.explicit_k.iter().any(Option::is_some) {
            return Err(schema(
                self.header_line,
                "partial [gains]: all of k1..k6 are required".into(),
            ));
        } else {
            heli_core::design::paper_gain_preset()
        };

        let dist = match self.dist_kind.as_deref() {
            None | Some("none") => DisturbanceSignal::none(),
            Some("step") => DisturbanceSignal::step_at(self.dist_t_on, self.dist_pitch, self.dist_yaw),
            Some("impulse_train") => DisturbanceSignal {
                kind: DisturbanceKind::ImpulseTrain,
                pitch: AxisSignal { breakpoints: vec![(self.dist_t_on, self.dist_pitch)] },
                yaw: AxisSignal { breakpoints: vec![(self.dist_t_on, self.dist_yaw)] },
                seed: None,
            },
            Some("piecewise") => {
                let seed = seed_override.unwrap_or(self.dist_seed);
                make_piecewise_disturbance(seed, self.dist_dwell, self.dist_amplitude, self.runtime.t_end)
                    .map_err(|e| schema(self.header_line, format!("disturbance: {e}")))?
            }
            Some("csv") => {
                let path = self.dist_file.ok_or_else(|| {
                    schema(self.header_line, "disturbance kind csv needs `file = <path>`".into())
                })?;
                let resolved = if path.is_relative() {
                    file.parent().unwrap_or(Path::new(".")).join(&path)
                } else {
                    path
                };
                let f = std::fs::File::open(&resolved).map_err(|e| {
                    schema(self.header_line, format!("cannot open {}: {e}", resolved.display()))
                })?;
                disturbance_from_csv(std::io::BufReader::new(f))
                    .map_err(|e| schema(self.header_line, format!("{}: {e}", resolved.display())))?
            }
            Some(other) => {
                return Err(schema(
                    self.header_line,
                    format!("unknown disturbance kind `{other}` (none, step, impulse_train, piecewise, csv)"),
                ))
            }
        };
        dist.validate()
            .map_err(|e| schema(self.header_line, format!("disturbance: {e}")))?;

        self.runtime
            .validate()
            .map_err(|e| schema(self.header_line, format!("{e}")))?;

        Ok(Scenario {
            name: self.name,
            params,
            params_defaulted,
            map_defaulted: !self.map_touched,
            gains,
            runtime: self.runtime,
            disturbance: dist,
            outputs: self.outputs,
        })
    }
}

fn parse_f64(file: &Path, line: usize, key: &str, value: &str) -> Result<f64, CliError> {
    value.parse().map_err(|e| CliError::Schema {
        file: file.to_path_buf(),
        line,
        msg: format!("{key}: expected a number, got `{value}` ({e})"),
    })
}

fn parse_bool(file: &Path, line: usize, key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(CliError::Schema {
            file: file.to_path_buf(),
            line,
            msg: format!("{key}: expected true/false, got `{value}`"),
        }),
    }
}

/// Parses a config file into scenarios. `seed_override` replaces the seed
/// of generated (piecewise) disturbances.
pub fn parse_config(path: &Path, seed_override: Option<u64>) -> Result<Vec<Scenario>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Schema {
        file: path.to_path_buf(),
        line: 0,
        msg: format!("cannot read config: {e}"),
    })?;
    parse_config_text(&text, path, seed_override)
}

pub fn parse_config_text(
    text: &str,
    path: &Path,
    seed_override: Option<u64>,
) -> Result<Vec<Scenario>, CliError> {
    let schema = |line: usize, msg: String| CliError::Schema {
        file: path.to_path_buf(),
        line,
        msg,
    };

    let mut scenarios: Vec<Scenario> = Vec::new();
    let mut current: Option<Builder> = None;
    let mut section = String::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }

        if let Some(header) = line.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| schema(lineno, format!("unterminated section header `{line}`")))?
                .trim();
            if header == "scenario" {
                if let Some(b) = current.take() {
                    scenarios.push(b.finish(path, seed_override)?);
                }
                current = Some(Builder::new(
                    format!("scenario{}", scenarios.len() + 1),
                    lineno,
                ));
                section = "scenario".into();
            } else {
                if current.is_none() {
                    return Err(schema(
                        lineno,
                        format!("section [{header}] before any [scenario]"),
                    ));
                }
                match header {
                    "params" | "gains" | "runtime" | "disturbance" | "outputs" => {
                        section = header.into();
                    }
                    other => return Err(schema(lineno, format!("unknown section [{other}]"))),
                }
            }
            continue;
        }

        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| schema(lineno, format!("expected `key = value`, got `{line}`")))?;
        let b = current
            .as_mut()
            .ok_or_else(|| schema(lineno, "key before any [scenario]".into()))?;

        match (section.as_str(), key) {
            ("scenario", "name") => b.name = value.to_string(),
            ("params", "preset") => match value {
                "plausible_rig" => {
                    let p = HeliParams::plausible_rig();
                    b.params = [
                        Some(p.jp),
                        Some(p.jy),
                        Some(p.m),
                        Some(p.l),
                        Some(p.bp),
                        Some(p.by),
                        Some(p.g),
                    ];
                    b.params_preset = true;
                }
                other => return Err(schema(lineno, format!("unknown params preset `{other}`"))),
            },
            ("params", "jp") => b.params[0] = Some(parse_f64(path, lineno, key, value)?),
            ("params", "jy") => b.params[1] = Some(parse_f64(path, lineno, key, value)?),
            ("params", "m") => b.params[2] = Some(parse_f64(path, lineno, key, value)?),
            ("params", "l") => b.params[3] = Some(parse_f64(path, lineno, key, value)?),
            ("params", "bp") => b.params[4] = Some(parse_f64(path, lineno, key, value)?),
            ("params", "by") => b.params[5] = Some(parse_f64(path, lineno, key, value)?),
            ("params", "g") => b.params[6] = Some(parse_f64(path, lineno, key, value)?),
            ("gains", "preset") => {
                b.gains = Some(
                    GainPreset::by_name(value)
                        .ok_or_else(|| schema(lineno, format!("unknown gains preset `{value}`")))?,
                )
            }
            ("gains", "k1") => b.explicit_k[0] = Some(parse_f64(path, lineno, key, value)?),
            ("gains", "k2") => b.explicit_k[1] = Some(parse_f64(path, lineno, key, value)?),
            ("gains", "k3") => b.explicit_k[2] = Some(parse_f64(path, lineno, key, value)?),
            ("gains", "k4") => b.explicit_k[3] = Some(parse_f64(path, lineno, key, value)?),
            ("gains", "k5") => b.explicit_k[4] = Some(parse_f64(path, lineno, key, value)?),
            ("gains", "k6") => b.explicit_k[5] = Some(parse_f64(path, lineno, key, value)?),
            ("gains", "convention") | ("runtime", "gain_convention") => {
                b.runtime.gain_convention = match value {
                    "torque" => GainConvention::Torque,
                    "prescaled" => GainConvention::Prescaled,
                    other => {
                        return Err(schema(
                            lineno,
                            format!("gain convention must be torque or prescaled, got `{other}`"),
                        ))
                    }
                }
            }
            ("runtime", "dt") => b.runtime.dt = parse_f64(path, lineno, key, value)?,
            ("runtime", "t_end") => b.runtime.t_end = parse_f64(path, lineno, key, value)?,
            ("runtime", "theta_d") => b.runtime.theta_d = parse_f64(path, lineno, key, value)?,
            ("runtime", "psi_d") => b.runtime.psi_d = parse_f64(path, lineno, key, value)?,
            ("runtime", "theta0") => b.runtime.theta0 = parse_f64(path, lineno, key, value)?,
            ("runtime", "psi0") => b.runtime.psi0 = parse_f64(path, lineno, key, value)?,
            ("runtime", "theta_d_deg") => {
                b.runtime.theta_d = parse_f64(path, lineno, key, value)?.to_radians()
            }
            ("runtime", "psi_d_deg") => {
                b.runtime.psi_d = parse_f64(path, lineno, key, value)?.to_radians()
            }
            ("runtime", "theta0_deg") => {
                b.runtime.theta0 = parse_f64(path, lineno, key, value)?.to_radians()
            }
            ("runtime", "psi0_deg") => {
                b.runtime.psi0 = parse_f64(path, lineno, key, value)?.to_radians()
            }
            ("runtime", "theta_dot0") => {
                b.runtime.theta_dot0 = parse_f64(path, lineno, key, value)?
            }
            ("runtime", "psi_dot0") => b.runtime.psi_dot0 = parse_f64(path, lineno, key, value)?,
            ("runtime", "model") => {
                b.runtime.model =
                    match value {
                        "full" => Model::Full,
                        "small_angle" => Model::SmallAngle,
                        "refined_linear" => Model::RefinedLinear,
                        other => return Err(schema(
                            lineno,
                            format!(
                                "model must be full, small_angle, or refined_linear, got `{other}`"
                            ),
                        )),
                    }
            }
            ("runtime", "controller") => {
                b.runtime.controller = match value {
                    "sampled" => ControllerMode::Sampled,
                    "continuous" => {
                        b.runtime.filter = None;
                        b.runtime.enc_res_pitch = None;
                        b.runtime.enc_res_yaw = None;
                        b.runtime.antiwindup_reset_s = None;
                        ControllerMode::Continuous
                    }
                    other => {
                        return Err(schema(
                            lineno,
                            format!("controller must be sampled or continuous, got `{other}`"),
                        ))
                    }
                }
            }
            ("runtime", "filter") => {
                if parse_bool(path, lineno, key, value)? {
                    if b.runtime.filter.is_none() {
                        b.runtime.filter = Some(FilterConfig::default());
                    }
                } else {
                    b.runtime.filter = None;
                }
            }
            ("runtime", "filter_zeta") => {
                let f = b.runtime.filter.get_or_insert_with(FilterConfig::default);
                f.zeta = parse_f64(path, lineno, key, value)?;
            }
            ("runtime", "filter_wc") => {
                let f = b.runtime.filter.get_or_insert_with(FilterConfig::default);
                f.wc = parse_f64(path, lineno, key, value)?;
            }
            ("runtime", "antiwindup_reset_s") => {
                let v = parse_f64(path, lineno, key, value)?;
                b.runtime.antiwindup_reset_s = if v.is_finite() && v > 0.0 {
                    Some(v)
                } else {
                    None
                };
            }
            ("runtime", "antiwindup") => {
                if !parse_bool(path, lineno, key, value)? {
                    b.runtime.antiwindup_reset_s = None;
                }
            }
            ("runtime", "v_limit_pitch") => {
                b.runtime.v_limit_pitch = parse_f64(path, lineno, key, value)?
            }
            ("runtime", "v_limit_yaw") => {
                b.runtime.v_limit_yaw = parse_f64(path, lineno, key, value)?
            }
            ("runtime", "enc_res_pitch") => {
                let v = parse_f64(path, lineno, key, value)?;
                b.runtime.enc_res_pitch = if v > 0.0 { Some(v) } else { None };
            }
            ("runtime", "enc_res_yaw") => {
                let v = parse_f64(path, lineno, key, value)?;
                b.runtime.enc_res_yaw = if v > 0.0 { Some(v) } else { None };
            }
            ("runtime", "quantization") => {
                if !parse_bool(path, lineno, key, value)? {
                    b.runtime.enc_res_pitch = None;
                    b.runtime.enc_res_yaw = None;
                }
            }
            ("runtime", "saturation") => {
                b.runtime.saturation = parse_bool(path, lineno, key, value)?
            }
            ("runtime", "gravity_bias") => {
                b.runtime.gravity_bias = parse_bool(path, lineno, key, value)?
            }
            ("runtime", "map_gain_pitch") => {
                b.runtime.map_pitch.gain = parse_f64(path, lineno, key, value)?;
                b.map_touched = true;
            }
            ("runtime", "map_offset_pitch") => {
                b.runtime.map_pitch.offset = parse_f64(path, lineno, key, value)?;
                b.map_touched = true;
            }
            ("runtime", "map_gain_yaw") => {
                b.runtime.map_yaw.gain = parse_f64(path, lineno, key, value)?;
                b.map_touched = true;
            }
            ("runtime", "map_offset_yaw") => {
                b.runtime.map_yaw.offset = parse_f64(path, lineno, key, value)?;
                b.map_touched = true;
            }
            ("runtime", "ctrl_every") => {
                b.runtime.ctrl_every = parse_f64(path, lineno, key, value)? as usize
            }
            ("runtime", "travel_lower_deg") => {
                let lo = parse_f64(path, lineno, key, value)?.to_radians();
                let hi = b.runtime.travel_limits.map_or(35f64.to_radians(), |t| t.1);
                b.runtime.travel_limits = Some((lo, hi));
            }
            ("runtime", "travel_upper_deg") => {
                let hi = parse_f64(path, lineno, key, value)?.to_radians();
                let lo = b
                    .runtime
                    .travel_limits
                    .map_or((-40.5f64).to_radians(), |t| t.0);
                b.runtime.travel_limits = Some((lo, hi));
            }
            ("runtime", "travel_limits") => {
                if !parse_bool(path, lineno, key, value)? {
                    b.runtime.travel_limits = None;
                }
            }
            ("disturbance", "kind") => b.dist_kind = Some(value.to_string()),
            ("disturbance", "t_on") => b.dist_t_on = parse_f64(path, lineno, key, value)?,
            ("disturbance", "pitch") => b.dist_pitch = parse_f64(path, lineno, key, value)?,
            ("disturbance", "yaw") => b.dist_yaw = parse_f64(path, lineno, key, value)?,
            ("disturbance", "seed") => {
                b.dist_seed = value.parse().map_err(|e| {
                    schema(
                        lineno,
                        format!("seed: expected an integer, got `{value}` ({e})"),
                    )
                })?
            }
            ("disturbance", "dwell") => b.dist_dwell = parse_f64(path, lineno, key, value)?,
            ("disturbance", "amplitude") => b.dist_amplitude = parse_f64(path, lineno, key, value)?,
            ("disturbance", "file") => b.dist_file = Some(PathBuf::from(value)),
            ("outputs", "trace_csv") => b.outputs.trace_csv = parse_bool(path, lineno, key, value)?,
            ("outputs", "plots") => b.outputs.plots = parse_bool(path, lineno, key, value)?,
            ("outputs", "certificate") => {
                b.outputs.certificate = parse_bool(path, lineno, key, value)?
            }
            (sec, key) => {
                return Err(schema(
                    lineno,
                    format!("unknown key `{key}` in section [{sec}]"),
                ))
            }
        }
    }
    if let Some(b) = current.take() {
        scenarios.push(b.finish(path, seed_override)?);
    }

    // unique names within the batch
    for i in 0..scenarios.len() {
        for j in i + 1..scenarios.len() {
            if scenarios[i].name == scenarios[j].name {
                return Err(schema(
                    0,
                    format!("duplicate scenario name `{}`", scenarios[i].name),
                ));
            }
        }
    }
    Ok(scenarios)
}
