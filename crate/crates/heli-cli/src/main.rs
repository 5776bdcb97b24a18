//! `helictl`: scenario simulation, gain design, and stability certificates
//! for the 2-DOF helicopter toolkit.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 simulation
//! divergence, 4 unstable closed loop in `certify`.

mod config;
mod report;
mod svg;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use heli_core::design::{
    damping_from_overshoot, desired_charpoly, gains_from_desired, natural_frequency, PerfSpec,
    SettlingBand,
};
use heli_core::exec;
use heli_core::lti::PlantCoeffs;
use heli_core::sim::{self, SimError};
use heli_core::stability::{boundedness_sweep, verify_convergence, CertError, Certificate};

use config::{parse_config, Scenario};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{file}:{line}: {msg}")]
    Schema {
        file: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error("scenario `{scenario}`: simulation diverged at t = {t:.6} s")]
    Diverged { scenario: String, t: f64 },
    #[error("scenario `{scenario}`: closed loop unstable; offending eigenvalues: {eigenvalues}")]
    Unstable {
        scenario: String,
        eigenvalues: String,
    },
    #[error("scenario `{scenario}`: {source}")]
    Sim { scenario: String, source: SimError },
    #[error("scenario `{scenario}`: {source}")]
    Cert { scenario: String, source: CertError },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Usage(_) => 2,
            CliError::Diverged { .. } => 3,
            CliError::Unstable { .. } => 4,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "helictl",
    about = "Controller synthesis and closed-loop simulation for a 2-DOF helicopter",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario in a config file and emit trace/plot artifacts.
    Simulate {
        /// Scenario configuration file.
        config: PathBuf,
        /// Output directory (one subdirectory per scenario).
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the seed of generated disturbances.
        #[arg(long)]
        seed: Option<u64>,
        /// Which artifacts to write.
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
    },
    /// Solve controller gains from second-order performance targets.
    Design(DesignArgs),
    /// Build and verify the stability certificate for each scenario.
    Certify {
        /// Scenario configuration file.
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Seed for the verification sweep.
        #[arg(long, default_value_t = 0xACCE)]
        seed: u64,
        /// Trajectories in the verification sweep.
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Sweep horizon in seconds.
        #[arg(long, default_value_t = 60.0)]
        horizon: f64,
    },
}

#[derive(Args)]
struct DesignArgs {
    /// Peak overshoot as a fraction in (0, 1).
    #[arg(long)]
    overshoot: f64,
    /// Settling time in seconds.
    #[arg(long)]
    settling: f64,
    /// Settling band criterion.
    #[arg(long, value_parser = ["2", "5"], default_value = "2")]
    band: String,
    /// Plant coefficients a_1..a_n (comma separated); enables gain solving.
    #[arg(long, value_delimiter = ',')]
    plant: Option<Vec<f64>>,
    /// Extra real poles beyond the dominant pair.
    #[arg(long, default_value_t = 0)]
    extra_poles: usize,
    /// How far left the extra poles sit, as a multiple of zeta*wn.
    #[arg(long, default_value_t = 5.0)]
    ratio: f64,
    /// Print a config snippet with the solved gains.
    #[arg(long)]
    emit_config: bool,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            config,
            out,
            seed,
            format,
        } => cmd_simulate(&config, &out, seed, format),
        Command::Design(args) => cmd_design(&args),
        Command::Certify {
            config,
            out,
            seed,
            runs,
            horizon,
        } => cmd_certify(&config, &out, seed, runs, horizon),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn warn_defaults(s: &Scenario) {
    if s.params_defaulted {
        eprintln!(
            "warning: scenario `{}` has no [params]; using the built-in plausible-rig set \
             (NOT measured hardware values)",
            s.name
        );
    }
    if s.map_defaulted {
        eprintln!(
            "warning: scenario `{}` uses the identity torque/voltage map (1 V per N m); \
             set map_gain_* / map_offset_* for a physical rig",
            s.name
        );
    }
}

fn cmd_simulate(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    format: Format,
) -> Result<(), CliError> {
    let scenarios = parse_config(config, seed)?;
    if scenarios.is_empty() {
        return Ok(());
    }
    for s in &scenarios {
        warn_defaults(s);
    }
    let results: Vec<Result<String, CliError>> = exec::map_slice(&scenarios, |s| {
        run_scenario(s, out, format).map(|()| s.name.clone())
    });
    for r in results {
        let name = r?;
        println!("scenario {name}: ok");
    }
    Ok(())
}

fn run_scenario(s: &Scenario, out: &Path, format: Format) -> Result<(), CliError> {
    let trace = sim::run(&s.params, &s.gains, &s.runtime, &s.disturbance).map_err(|e| match e {
        SimError::Diverged { t } => CliError::Diverged {
            scenario: s.name.clone(),
            t,
        },
        other => CliError::Sim {
            scenario: s.name.clone(),
            source: other,
        },
    })?;
    let dir = out.join(&s.name);
    std::fs::create_dir_all(&dir)?;

    let want_csv = matches!(format, Format::Csv | Format::Both) && s.outputs.trace_csv;
    let want_svg = matches!(format, Format::Svg | Format::Both) && s.outputs.plots;

    if want_csv {
        trace.save_csv(&dir.join("trace.csv"))?;
    }
    if want_svg {
        let t_deg = |sel: fn(&sim::TraceRow) -> f64| -> Vec<(f64, f64)> {
            trace
                .rows()
                .iter()
                .map(|r| (r.t, sel(r).to_degrees()))
                .collect()
        };
        svg::Plot {
            title: format!("{}: pitch angle", s.name),
            x_label: "t (s)".into(),
            y_label: "pitch (deg)".into(),
            series: vec![svg::Series {
                name: "pitch".into(),
                points: t_deg(|r| r.theta),
            }],
            ref_lines: vec![svg::RefLine {
                y: s.runtime.theta_d.to_degrees(),
                label: "pitch target".into(),
            }],
        }
        .save(&dir.join("pitch.svg"))?;
        svg::Plot {
            title: format!("{}: yaw angle", s.name),
            x_label: "t (s)".into(),
            y_label: "yaw (deg)".into(),
            series: vec![svg::Series {
                name: "yaw".into(),
                points: t_deg(|r| r.psi),
            }],
            ref_lines: vec![svg::RefLine {
                y: s.runtime.psi_d.to_degrees(),
                label: "yaw target".into(),
            }],
        }
        .save(&dir.join("yaw.svg"))?;
        svg::Plot {
            title: format!("{}: motor voltages", s.name),
            x_label: "t (s)".into(),
            y_label: "voltage (V)".into(),
            series: vec![
                svg::Series {
                    name: "pitch motor".into(),
                    points: trace.rows().iter().map(|r| (r.t, r.v_pitch)).collect(),
                },
                svg::Series {
                    name: "yaw motor".into(),
                    points: trace.rows().iter().map(|r| (r.t, r.v_yaw)).collect(),
                },
            ],
            ref_lines: vec![
                svg::RefLine {
                    y: s.runtime.v_limit_pitch,
                    label: "pitch limit".into(),
                },
                svg::RefLine {
                    y: -s.runtime.v_limit_pitch,
                    label: String::new(),
                },
            ],
        }
        .save(&dir.join("voltages.svg"))?;
    }
    Ok(())
}

fn cmd_design(args: &DesignArgs) -> Result<(), CliError> {
    let band = if args.band == "5" {
        SettlingBand::FivePercent
    } else {
        SettlingBand::TwoPercent
    };
    let spec = PerfSpec::new(args.overshoot, args.settling, band, args.ratio)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let zeta = damping_from_overshoot(spec.overshoot_fraction)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let wn = natural_frequency(zeta, &spec).map_err(|e| CliError::Usage(e.to_string()))?;

    println!("zeta: {zeta:.6}");
    println!("wn_rad_per_s: {wn:.6}");

    let (extra, desired) = match &args.plant {
        Some(a) => {
            // pole count must line up: plant order n needs degree n+1
            let n = a.len();
            if n + 1 < 2 {
                return Err(CliError::Usage("plant order must be >= 1".into()));
            }
            let extra = n + 1 - 2;
            if extra != args.extra_poles && args.extra_poles != 0 {
                eprintln!(
                    "note: plant order {n} fixes extra poles at {extra}; ignoring --extra-poles"
                );
            }
            (
                extra,
                desired_charpoly(zeta, wn, extra, args.ratio)
                    .map_err(|e| CliError::Usage(e.to_string()))?,
            )
        }
        None => (
            args.extra_poles,
            desired_charpoly(zeta, wn, args.extra_poles, args.ratio)
                .map_err(|e| CliError::Usage(e.to_string()))?,
        ),
    };
    println!("extra_poles: {extra}");
    println!("desired: {desired}");
    println!("desired_coeffs_ascending: {:?}", desired.coeffs());

    if let Some(a) = &args.plant {
        let plant = PlantCoeffs::new(a.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
        let gains =
            gains_from_desired(&plant, &desired).map_err(|e| CliError::Usage(e.to_string()))?;
        println!("b0: {:.6}", gains.b0);
        println!("b: {:?}", gains.b());
        if args.emit_config {
            println!();
            println!("# config snippet: b0 is the integral gain, b covers");
            println!("# proportional and derivative terms in ascending order");
            println!("[gains]");
            println!("# b0 = {:.6}", gains.b0);
            for (i, b) in gains.b().iter().enumerate() {
                println!("# b{} = {b:.6}", i + 1);
            }
        }
    }
    Ok(())
}

fn cmd_certify(
    config: &Path,
    out: &Path,
    seed: u64,
    runs: usize,
    horizon: f64,
) -> Result<(), CliError> {
    let scenarios = parse_config(config, None)?;
    if scenarios.is_empty() {
        return Ok(());
    }
    for s in &scenarios {
        let cert = Certificate::build(
            &s.params,
            &s.gains,
            s.runtime.theta_d,
            s.runtime.gain_convention,
            None,
        )
        .map_err(|e| match e {
            CertError::Unstable(ev) => CliError::Unstable {
                scenario: s.name.clone(),
                eigenvalues: format!("{ev}"),
            },
            other => CliError::Cert {
                scenario: s.name.clone(),
                source: other,
            },
        })?;

        let (traces, boundedness) = boundedness_sweep(
            &s.params,
            &s.gains,
            s.runtime.theta_d,
            &cert,
            runs,
            seed,
            s.runtime.dt,
            horizon,
        )
        .map_err(|e| CliError::Sim {
            scenario: s.name.clone(),
            source: e,
        })?;
        let convergence: Vec<_> = traces
            .iter()
            .map(|t| verify_convergence(t, 5.0, horizon, cert.lambda1))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Cert {
                scenario: s.name.clone(),
                source: e,
            })?;

        let outcome = report::CertifyOutcome {
            scenario: s.name.clone(),
            cert,
            boundedness,
            convergence,
            sweep_count: runs,
            sweep_seed: seed,
            horizon_s: horizon,
        };
        let dir = out.join(&s.name);
        std::fs::create_dir_all(&dir)?;
        let text = report::render(&outcome);
        std::fs::write(dir.join("certificate.txt"), &text)?;
        let verdict = if outcome.boundedness.pass && outcome.convergence.iter().all(|c| c.pass) {
            "pass"
        } else {
            "FAIL"
        };
        println!("scenario {}: certificate {verdict}", s.name);
    }
    Ok(())
}
