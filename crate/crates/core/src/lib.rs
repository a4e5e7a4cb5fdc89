//! Simulation and control library for a quadrotor whose two hinged arms fold
//! passively against torsional springs when pushed by the environment.
//!
//! The crate is organized around the physical pipeline:
//!
//! - [`so3`] — rotation algebra (hat/vee maps, attitude errors, manifold integration)
//! - [`morphology`] — hinge angles to center of gravity, inertia tensor, arm geometry
//! - [`allocation`] — control allocation matrix, singularity monitoring, motor mixing
//! - [`dynamics`] — rigid-body equations of motion with morphology-dependent inertia
//! - [`control`] — cascaded position/attitude controllers and the yaw admittance filter
//! - [`environment`] — wall geometry and penalty contact forces
//! - [`scenario`] — TOML scenario configuration
//! - [`sim`] — simulation loop, trajectory logging, verification reports

pub mod allocation;
pub mod control;
pub mod dynamics;
pub mod environment;
pub mod morphology;
pub mod scenario;
pub mod sim;
pub mod so3;

pub use allocation::{AllocationError, AllocationMatrix, ControlInput, MotorThrusts};
pub use control::{AdmittanceState, AttitudeGains, PositionGains, Setpoint};
pub use dynamics::{DynamicsError, ExternalWrench, VehicleState};
pub use environment::{ContactParams, ContactReport, WallPlane};
pub use morphology::{ArmGeometry, HingeState, MorphParams};
pub use scenario::{ConfigError, ScenarioConfig};
pub use sim::{RunOutput, RunSummary, TrajectoryRecord};
pub use so3::Rotation;

/// Standard gravity [m/s²]; the inertial third axis points along gravity,
/// so hover altitude setpoints are negative.
pub const GRAVITY: f64 = 9.81;
