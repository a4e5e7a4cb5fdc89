//! Morphology model: hinge angles → center of gravity, inertia tensor, and
//! per-arm geometry for control allocation, plus the spring-loaded hinge ODE.
//!
//! The vehicle is lumped as a solid center sphere (mass M, radius R_s) and four
//! point masses m at arm length l. Motors 1 and 3 sit rigidly at ±l on the q₁
//! axis; arms 2 and 4 hinge about the vertical at the sphere boundary, making
//! angles β₁, β₂ with the negative q₁ axis, their motors offset h along q₃:
//!
//!   p₁ = ( l,          0,          0)
//!   p₂ = (−l cos β₁,  −l sin β₁,   h)
//!   p₃ = (−l,          0,          0)
//!   p₄ = (−l cos β₂,   l sin β₂,   h)

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Spring deflection limit either side of the rest angle [rad] (±120°).
pub const DEFLECTION_LIMIT: f64 = 120.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Error, PartialEq)]
pub enum MorphError {
    #[error("morphology parameter out of range: {0}")]
    InvalidParameter(&'static str),
}

/// Lumped-mass and geometry constants of the vehicle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorphParams {
    /// Center sphere mass M [kg]
    pub center_mass: f64,
    /// Per-arm point mass m [kg]
    pub arm_mass: f64,
    /// Sphere radius R_s [m]
    pub sphere_radius: f64,
    /// Arm length l from sphere center to motor [m]
    pub arm_length: f64,
    /// Height offset h of motors 2 and 4 along q₃ [m]
    pub motor_height: f64,
    /// Torsional spring constant k_τ [N·m/rad]
    pub spring_constant: f64,
    /// Spring rest angle β_eq [rad]
    pub rest_angle: f64,
    /// Hinge viscous damping [N·m·s/rad]
    pub hinge_damping: f64,
    /// Mechanical fold stop: arms cannot come closer than this angle to the
    /// q₁ axis on either side [rad]. Encodes the folded-width limit of the
    /// airframe (guards meet at ~0.28 m total width).
    pub fold_stop: f64,
    /// Propeller yaw drag-to-thrust moment coefficient c_τ [m]
    pub yaw_torque_coeff: f64,
    /// Per-motor thrust floor [N]
    pub thrust_min: f64,
    /// Per-motor thrust ceiling [N]
    pub thrust_max: f64,
}

impl Default for MorphParams {
    /// Reference vehicle: 710 g center, 95 g arms, 10 cm sphere, 12.5 cm arms,
    /// motors 2/4 offset −3 cm, 0.21 N·m/rad springs at 90° rest.
    fn default() -> Self {
        MorphParams {
            center_mass: 0.710,
            arm_mass: 0.095,
            sphere_radius: 0.05,
            arm_length: 0.125,
            motor_height: -0.03,
            spring_constant: 0.21,
            rest_angle: std::f64::consts::FRAC_PI_2,
            hinge_damping: 0.02,
            fold_stop: 0.48f64.asin(),
            yaw_torque_coeff: 0.016,
            thrust_min: 0.0,
            thrust_max: 10.0,
        }
    }
}

impl MorphParams {
    pub fn validate(&self) -> Result<(), MorphError> {
        if !(self.center_mass > 0.0) {
            return Err(MorphError::InvalidParameter("center_mass must be > 0"));
        }
        if !(self.arm_mass > 0.0) {
            return Err(MorphError::InvalidParameter("arm_mass must be > 0"));
        }
        if !(self.sphere_radius > 0.0) {
            return Err(MorphError::InvalidParameter("sphere_radius must be > 0"));
        }
        if !(self.arm_length > 0.0) {
            return Err(MorphError::InvalidParameter("arm_length must be > 0"));
        }
        if !(self.spring_constant > 0.0) {
            return Err(MorphError::InvalidParameter("spring_constant must be > 0"));
        }
        if !(self.rest_angle > 0.0 && self.rest_angle <= std::f64::consts::PI) {
            return Err(MorphError::InvalidParameter("rest_angle must be in (0, π]"));
        }
        if !(self.hinge_damping >= 0.0) {
            return Err(MorphError::InvalidParameter("hinge_damping must be ≥ 0"));
        }
        if !(self.thrust_max > self.thrust_min && self.thrust_min >= 0.0) {
            return Err(MorphError::InvalidParameter(
                "thrust limits must satisfy max > min ≥ 0",
            ));
        }
        Ok(())
    }

    /// Total mass m_t = M + 4m [kg], invariant under morphing.
    pub fn total_mass(&self) -> f64 {
        self.center_mass + 4.0 * self.arm_mass
    }

    /// Mass ratio C = m / (M + 4m).
    pub fn mass_ratio(&self) -> f64 {
        self.arm_mass / self.total_mass()
    }

    /// Hinge angle range after intersecting the spring deflection limit with
    /// the mechanical fold stop.
    pub fn hinge_range(&self) -> (f64, f64) {
        let lo = (self.rest_angle - DEFLECTION_LIMIT).max(self.fold_stop);
        let hi = (self.rest_angle + DEFLECTION_LIMIT).min(std::f64::consts::PI - self.fold_stop);
        (lo, hi)
    }

    /// Motor positions in the sphere-centered q-frame for hinge angles (β₁, β₂).
    pub fn motor_positions(&self, beta1: f64, beta2: f64) -> [Vector3<f64>; 4] {
        let l = self.arm_length;
        let h = self.motor_height;
        [
            Vector3::new(l, 0.0, 0.0),
            Vector3::new(-l * beta1.cos(), -l * beta1.sin(), h),
            Vector3::new(-l, 0.0, 0.0),
            Vector3::new(-l * beta2.cos(), l * beta2.sin(), h),
        ]
    }
}

/// Hinge angles and rates of arms 2 and 4, measured from the negative q₁ axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HingeState {
    pub beta1: f64,
    pub beta2: f64,
    pub rate1: f64,
    pub rate2: f64,
}

impl HingeState {
    pub fn at_rest(params: &MorphParams) -> Self {
        HingeState {
            beta1: params.rest_angle,
            beta2: params.rest_angle,
            rate1: 0.0,
            rate2: 0.0,
        }
    }
}

/// Center of gravity in the q-frame, with named components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgPosition {
    /// q₁ component [m]
    pub x: f64,
    /// q₂ component [m]
    pub y: f64,
    /// q₃ component [m]
    pub z: f64,
}

impl CgPosition {
    /// As a vector in (q₁, q₂, q₃) order.
    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }
}

/// CG as a function of the hinge angles:
///
///   cg_y = −C l (sin β₁ − sin β₂),  cg_x = −C l (cos β₁ + cos β₂),  cg_z = 2 C h
///
/// with C = m/(M + 4m).
pub fn center_of_gravity(beta1: f64, beta2: f64, params: &MorphParams) -> CgPosition {
    let c = params.mass_ratio();
    let l = params.arm_length;
    CgPosition {
        x: -c * l * (beta1.cos() + beta2.cos()),
        y: -c * l * (beta1.sin() - beta2.sin()),
        z: 2.0 * c * params.motor_height,
    }
}

/// Inertia tensor about the CG from the expanded per-term formulation.
///
/// Diagonal terms follow the expanded table entries directly; the products of
/// inertia are assembled with the inertia-tensor sign (J_ab = −Σ mᵢ aᵢbᵢ) so
/// the result is the tensor that enters JΩ̇ = τ − Ω × JΩ.
pub fn inertia_matrix(beta1: f64, beta2: f64, params: &MorphParams) -> Matrix3<f64> {
    let m = params.arm_mass;
    let big_m = params.center_mass;
    let l = params.arm_length;
    let h = params.motor_height;
    let r_s = params.sphere_radius;
    let cg = center_of_gravity(beta1, beta2, params);
    let (cx, cy, cz) = (cg.x, cg.y, cg.z);
    let sphere = 0.4 * big_m * r_s * r_s;

    let sq = |v: f64| v * v;
    let (s1, c1) = beta1.sin_cos();
    let (s2, c2) = beta2.sin_cos();

    let jxx = sphere
        + big_m * (sq(cy) + sq(cz))
        + 2.0 * m * (sq(cy) + sq(cz))
        + m * (sq(-l * s1 - cy) + sq(h - cz))
        + m * (sq(l * s2 - cy) + sq(h - cz));

    let jyy = sphere
        + big_m * (sq(cx) + sq(cz))
        + m * (sq(l - cx) + sq(cz))
        + m * (sq(-l - cx) + sq(cz))
        + m * (sq(-l * c1 - cx) + sq(h - cz))
        + m * (sq(-l * c2 - cx) + sq(h - cz));

    let jzz = sphere
        + big_m * (sq(cx) + sq(cy))
        + m * (sq(cy) + sq(l - cx))
        + m * (sq(cy) + sq(-l - cx))
        + m * (sq(-l * s1 - cy) + sq(-l * c1 - cx))
        + m * (sq(l * s2 - cy) + sq(-l * c2 - cx));

    // Products of inertia Σ mᵢ aᵢbᵢ about the CG; tensor entries are their
    // negatives. Motors 1 and 3 sit at (±l − cx, −cy, −cz).
    let pxy = big_m * cy * cx
        + m * (-cy) * (l - cx)
        + m * (-cy) * (-l - cx)
        + m * (-l * s1 - cy) * (-l * c1 - cx)
        + m * (l * s2 - cy) * (-l * c2 - cx);

    let pyz = big_m * cy * cz
        + 2.0 * m * cy * cz
        + m * (-l * s1 - cy) * (h - cz)
        + m * (l * s2 - cy) * (h - cz);

    let pzx = big_m * cx * cz
        - m * (l - cx) * cz
        - m * (-l - cx) * cz
        + m * (-l * c1 - cx) * (h - cz)
        + m * (-l * c2 - cx) * (h - cz);

    Matrix3::new(
        jxx, -pxy, -pzx, //
        -pxy, jyy, -pyz, //
        -pzx, -pyz, jzz,
    )
}

/// First-principles inertia tensor, independent of the expanded algebra in
/// [`inertia_matrix`]: mass-weighted CG, then Σ mₖ(|dₖ|²I − dₖdₖᵀ) over the
/// point masses plus the sphere's (2/5)M R_s² I shifted by the parallel-axis
/// theorem.
pub fn inertia_oracle(beta1: f64, beta2: f64, params: &MorphParams) -> Matrix3<f64> {
    let positions = params.motor_positions(beta1, beta2);
    let m = params.arm_mass;
    let big_m = params.center_mass;

    let mut weighted = Vector3::zeros();
    for p in &positions {
        weighted += m * p;
    }
    let cg = weighted / params.total_mass();

    let point = |mass: f64, d: Vector3<f64>| -> Matrix3<f64> {
        mass * (d.norm_squared() * Matrix3::identity() - d * d.transpose())
    };

    let r_s = params.sphere_radius;
    let mut j = 0.4 * big_m * r_s * r_s * Matrix3::identity();
    j += point(big_m, -cg);
    for p in &positions {
        j += point(m, p - cg);
    }
    j
}

/// Per-arm geometry used by control allocation, in the CG-origin body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmGeometry {
    /// Motor positions relative to the CG (q₁, q₂, q₃ order) [m]
    pub motor_positions: [Vector3<f64>; 4],
    /// In-plane distance from each motor to the CG's vertical axis [m]
    pub radius: [f64; 4],
    /// Arm azimuth γᵢ chosen so (cos γᵢ, sin γᵢ) = −(dᵢ₁, dᵢ₂)/rᵢ, which makes
    /// the allocation rows rᵢ sin γᵢ / −rᵢ cos γᵢ equal the cross-product
    /// moments of the thrust forces [rad]
    pub gamma: [f64; 4],
    /// Set when any rᵢ < 1e-4 m: the allocation matrix will be near-singular.
    pub near_singular: bool,
}

/// Builds [`ArmGeometry`] for the given hinge angles.
pub fn arm_geometry(beta1: f64, beta2: f64, params: &MorphParams) -> ArmGeometry {
    let cg = center_of_gravity(beta1, beta2, params).vector();
    let positions = params.motor_positions(beta1, beta2);
    let mut motor_positions = [Vector3::zeros(); 4];
    let mut radius = [0.0; 4];
    let mut gamma = [0.0; 4];
    let mut near_singular = false;
    for i in 0..4 {
        let d = positions[i] - cg;
        motor_positions[i] = d;
        radius[i] = d.x.hypot(d.y);
        gamma[i] = (-d.y).atan2(-d.x);
        if radius[i] < 1e-4 {
            near_singular = true;
        }
    }
    ArmGeometry {
        motor_positions,
        radius,
        gamma,
        near_singular,
    }
}

/// Advances the hinge ODE one step of RK4 per arm:
///
///   I_arm β̈ᵢ = −k_τ(βᵢ − β_eq) − c β̇ᵢ + τ_ext,ᵢ,   I_arm = m l²
///
/// then clamps to the hinge range with velocity zeroing at the stops.
pub fn hinge_step(
    state: &HingeState,
    external_torques: Vector2<f64>,
    dt: f64,
    params: &MorphParams,
) -> HingeState {
    debug_assert!(dt > 0.0);
    let inertia = params.arm_mass * params.arm_length * params.arm_length;
    let (lo, hi) = params.hinge_range();

    let advance = |beta: f64, rate: f64, torque: f64| -> (f64, f64) {
        let accel = |b: f64, bd: f64| {
            (-params.spring_constant * (b - params.rest_angle) - params.hinge_damping * bd
                + torque)
                / inertia
        };
        let (k1b, k1r) = (rate, accel(beta, rate));
        let (k2b, k2r) = (rate + 0.5 * dt * k1r, accel(beta + 0.5 * dt * k1b, rate + 0.5 * dt * k1r));
        let (k3b, k3r) = (rate + 0.5 * dt * k2r, accel(beta + 0.5 * dt * k2b, rate + 0.5 * dt * k2r));
        let (k4b, k4r) = (rate + dt * k3r, accel(beta + dt * k3b, rate + dt * k3r));
        let mut b = beta + dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        let mut r = rate + dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
        if b < lo {
            b = lo;
            r = 0.0;
        } else if b > hi {
            b = hi;
            r = 0.0;
        }
        (b, r)
    };

    let (beta1, rate1) = advance(state.beta1, state.rate1, external_torques.x);
    let (beta2, rate2) = advance(state.beta2, state.rate2, external_torques.y);
    HingeState {
        beta1,
        beta2,
        rate1,
        rate2,
    }
}
