//! Controller synthesis and simulation for integrator-plus-derivatives
//! state feedback, with a full nonlinear 2-DOF helicopter testbed.
//!
//! The crate splits into:
//!
//! - [`poly`] / [`lti`]: monic polynomial algebra, root finding, the
//!   closed-loop characteristic identity and final-value results for the
//!   general nth-order plant;
//! - [`design`]: overshoot/settling-time pole placement and the published
//!   helicopter gain preset;
//! - [`heli`]: full and small-angle helicopter dynamics, the refined linear
//!   state matrix, its constant bias and quadratic residual;
//! - [`stability`]: executable boundedness and convergence certificates
//!   (eigenstructure, beta/kappa/gamma constants, trajectory verification);
//! - [`sim`]: the deterministic fixed-step closed-loop runtime with
//!   derivative filtering, anti-windup, saturation, encoder quantization,
//!   disturbance injection, and CSV trace capture.
//!
//! Trajectory sweeps and Monte-Carlo verification parallelize through
//! [`exec`] when the `parallel` feature (default) is enabled; disabling the
//! feature yields a dependency-free sequential build with identical
//! results.

pub mod design;
pub mod exec;
pub mod heli;
pub mod linalg;
pub mod lti;
pub mod poly;
pub mod sim;
pub mod stability;

pub use design::{GainPreset, PerfSpec, SettlingBand};
pub use heli::{GainConvention, HeliParams, HeliState, StateZ, Torques};
pub use lti::{ControllerGains, PlantCoeffs};
pub use poly::CharPoly;
