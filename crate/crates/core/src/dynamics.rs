//! Rigid-body dynamics with morphology-dependent inertia.
//!
//! Equations of motion about the CG, inertial third axis pointing down
//! (gravity is +g·e₃, hover altitude setpoints are negative):
//!
//!   m_t v̇ = m_t g e₃ − f R e₃ + F_ext
//!   ẋ = v
//!   Ṙ = R Ω̂
//!   J Ω̇ = τ + τ_ext − Ω × J Ω
//!
//! Translation and body rates advance with classical RK4; the rotation
//! advances on the manifold through the exact exponential of the RK4-weighted
//! stage rates, so orthonormality never drifts. The inertia tensor is
//! refreshed from the hinge angles once per step (hinge motion is slow
//! relative to the millisecond step).

use crate::allocation::ControlInput;
use crate::morphology::{hinge_step, inertia_matrix, HingeState, MorphParams};
use crate::so3::{integrate_rotation, BodyRates, Rotation};
use crate::GRAVITY;
use nalgebra::{Matrix3, Vector2, Vector3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("state diverged: norm {norm:.3e} exceeds bound {bound:.3e}")]
    Diverged { norm: f64, bound: f64 },
}

/// Default bound on any state norm before the step reports divergence.
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e6;

/// Full vehicle state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    /// Inertial position [m]
    pub position: Vector3<f64>,
    /// Inertial velocity [m/s]
    pub velocity: Vector3<f64>,
    /// Body → inertial rotation
    pub rotation: Rotation,
    /// Body angular velocity [rad/s]
    pub omega: BodyRates,
    /// Hinge angles and rates
    pub hinges: HingeState,
    /// Simulation time [s]
    pub time: f64,
}

impl VehicleState {
    /// At rest at the origin, level, hinges at the spring rest angle.
    pub fn at_rest(params: &MorphParams) -> Self {
        VehicleState {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            rotation: Rotation::identity(),
            omega: Vector3::zeros(),
            hinges: HingeState::at_rest(params),
            time: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.velocity.iter().all(|v| v.is_finite())
            && self.omega.iter().all(|v| v.is_finite())
            && self.rotation.matrix().iter().all(|v| v.is_finite())
            && self.hinges.beta1.is_finite()
            && self.hinges.beta2.is_finite()
    }
}

/// External wrench applied at/about the CG, e.g. from wall contact.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExternalWrench {
    /// Force in the inertial frame [N]
    pub force_inertial: Vector3<f64>,
    /// Moment about the CG in the body frame [N·m]
    pub moment_body: Vector3<f64>,
}

impl ExternalWrench {
    pub const ZERO: ExternalWrench = ExternalWrench {
        force_inertial: Vector3::new(0.0, 0.0, 0.0),
        moment_body: Vector3::new(0.0, 0.0, 0.0),
    };
}

/// Step configuration beyond the defaults.
#[derive(Debug, Clone, Copy)]
pub struct StepOptions {
    /// Add the −J̇Ω term (finite-differenced over the hinge rates) to the
    /// moment balance. The baseline model omits it; this is a sensitivity knob.
    pub include_inertia_rate: bool,
    /// Divergence bound on state norms.
    pub divergence_bound: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            include_inertia_rate: false,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        }
    }
}

/// Time derivatives of the translational and rotational states.
#[derive(Debug, Clone, Copy)]
pub struct StateDerivative {
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
    pub omega_dot: Vector3<f64>,
}

/// Evaluates the equations of motion at one state.
pub fn state_derivative(
    state: &VehicleState,
    input: &ControlInput,
    inertia: &Matrix3<f64>,
) -> StateDerivative {
    derivative_at(
        &state.rotation,
        state.velocity,
        state.omega,
        input,
        inertia,
        &inertia.try_inverse().expect("inertia must be invertible"),
        &ExternalWrench::ZERO,
        params_total_mass_fallback(),
    )
}

// state_derivative is the public single-point evaluation; the integrator
// below reuses the same math with the inverse and mass precomputed.
fn params_total_mass_fallback() -> f64 {
    MorphParams::default().total_mass()
}

#[allow(clippy::too_many_arguments)]
fn derivative_at(
    rotation: &Rotation,
    velocity: Vector3<f64>,
    omega: BodyRates,
    input: &ControlInput,
    inertia: &Matrix3<f64>,
    inertia_inv: &Matrix3<f64>,
    wrench: &ExternalWrench,
    total_mass: f64,
) -> StateDerivative {
    let e3 = Vector3::new(0.0, 0.0, 1.0);
    let acceleration = GRAVITY * e3 - (input.thrust / total_mass) * (*rotation * e3)
        + wrench.force_inertial / total_mass;
    let gyro = omega.cross(&(inertia * omega));
    let omega_dot = inertia_inv * (input.moment + wrench.moment_body - gyro);
    StateDerivative {
        velocity,
        acceleration,
        omega_dot,
    }
}

/// Advances the state by `dt` with zero external wrench (free flight).
pub fn step(
    state: &VehicleState,
    input: &ControlInput,
    hinge_torques: Vector2<f64>,
    dt: f64,
    params: &MorphParams,
) -> Result<VehicleState, DynamicsError> {
    step_with_wrench(
        state,
        input,
        &ExternalWrench::ZERO,
        hinge_torques,
        dt,
        params,
        &StepOptions::default(),
    )
}

/// Advances the state by `dt` under control input, external wrench, and hinge
/// contact torques.
pub fn step_with_wrench(
    state: &VehicleState,
    input: &ControlInput,
    wrench: &ExternalWrench,
    hinge_torques: Vector2<f64>,
    dt: f64,
    params: &MorphParams,
    opts: &StepOptions,
) -> Result<VehicleState, DynamicsError> {
    debug_assert!(dt > 0.0);
    let total_mass = params.total_mass();
    let hinges = &state.hinges;
    let inertia = inertia_matrix(hinges.beta1, hinges.beta2, params);
    let inertia_inv = inertia
        .try_inverse()
        .expect("morphology inertia is positive-definite");

    // optional −J̇Ω correction, J̇ finite-differenced along the hinge rates
    let mut wrench = *wrench;
    if opts.include_inertia_rate {
        let db = 1e-6;
        let j1 = inertia_matrix(hinges.beta1 + db, hinges.beta2, params);
        let j2 = inertia_matrix(hinges.beta1, hinges.beta2 + db, params);
        let j_dot = (j1 - inertia) * (hinges.rate1 / db) + (j2 - inertia) * (hinges.rate2 / db);
        wrench.moment_body -= j_dot * state.omega;
    }

    let eval = |rotation: &Rotation, velocity: Vector3<f64>, omega: BodyRates| {
        derivative_at(
            rotation, velocity, omega, input, &inertia, &inertia_inv, &wrench, total_mass,
        )
    };

    // stage attitudes along the exponential of the step-initial rate
    let r0 = &state.rotation;
    let r_half = integrate_rotation(r0, state.omega, dt / 2.0);
    let r_full = integrate_rotation(r0, state.omega, dt);

    let k1 = eval(r0, state.velocity, state.omega);
    let k2 = eval(
        &r_half,
        state.velocity + (dt / 2.0) * k1.acceleration,
        state.omega + (dt / 2.0) * k1.omega_dot,
    );
    let k3 = eval(
        &r_half,
        state.velocity + (dt / 2.0) * k2.acceleration,
        state.omega + (dt / 2.0) * k2.omega_dot,
    );
    let k4 = eval(
        &r_full,
        state.velocity + dt * k3.acceleration,
        state.omega + dt * k3.omega_dot,
    );

    let position = state.position
        + (dt / 6.0)
            * (k1.velocity
                + 2.0 * (state.velocity + (dt / 2.0) * k1.acceleration)
                + 2.0 * (state.velocity + (dt / 2.0) * k2.acceleration)
                + (state.velocity + dt * k3.acceleration));
    let velocity = state.velocity
        + (dt / 6.0)
            * (k1.acceleration + 2.0 * k2.acceleration + 2.0 * k3.acceleration + k4.acceleration);
    let omega = state.omega
        + (dt / 6.0) * (k1.omega_dot + 2.0 * k2.omega_dot + 2.0 * k3.omega_dot + k4.omega_dot);

    // RK4-weighted average of the stage rates drives the exact rotation update
    let omega_avg = (state.omega
        + 2.0 * (state.omega + (dt / 2.0) * k1.omega_dot)
        + 2.0 * (state.omega + (dt / 2.0) * k2.omega_dot)
        + (state.omega + dt * k3.omega_dot))
        / 6.0;
    let rotation = integrate_rotation(r0, omega_avg, dt);

    let hinges = hinge_step(&state.hinges, hinge_torques, dt, params);

    let next = VehicleState {
        position,
        velocity,
        rotation,
        omega,
        hinges,
        time: state.time + dt,
    };

    let bound = opts.divergence_bound;
    let norm = next
        .position
        .norm()
        .max(next.velocity.norm())
        .max(next.omega.norm());
    if !next.is_finite() || norm > bound {
        return Err(DynamicsError::Diverged { norm, bound });
    }
    Ok(next)
}
