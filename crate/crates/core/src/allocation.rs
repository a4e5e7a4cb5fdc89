//! Control allocation: maps total thrust and body moments to the four motor
//! thrusts through the geometry-dependent 4×4 allocation matrix
//!
//!   [f, τ₁, τ₂, τ₃]ᵀ = A · [f₁, f₂, f₃, f₄]ᵀ
//!
//!   A = ⎡ 1        1        1        1      ⎤
//!       ⎢ r₁sγ₁    r₂sγ₂    r₃sγ₃    r₄sγ₄  ⎥
//!       ⎢ −r₁cγ₁   −r₂cγ₂   −r₃cγ₃   −r₄cγ₄ ⎥
//!       ⎣ −c_τ     c_τ      −c_τ     c_τ    ⎦
//!
//! Folding the hinged arms toward the rear arm drives det A toward zero and
//! with it the ability to command all three moments independently, so the
//! determinant is monitored and the solve refuses to run below a threshold.

use crate::morphology::{ArmGeometry, MorphParams};
use nalgebra::{Matrix4, Vector3, Vector4};
use thiserror::Error;

/// Default singularity threshold on |det A| (determinant units ~ N·m³ scale).
pub const DEFAULT_DET_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum AllocationError {
    #[error("allocation matrix is singular: |det| = {det:.3e} < {epsilon:.3e}")]
    SingularAllocation { det: f64, epsilon: f64 },
}

/// Commanded total thrust [N] and body moments [N·m].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    pub thrust: f64,
    pub moment: Vector3<f64>,
}

impl ControlInput {
    pub fn new(thrust: f64, moment: Vector3<f64>) -> Self {
        ControlInput { thrust, moment }
    }

    fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.thrust, self.moment.x, self.moment.y, self.moment.z)
    }
}

/// Individual motor thrusts after saturation, with the saturation report.
#[derive(Debug, Clone, PartialEq)]
pub struct MotorThrusts {
    /// Clamped thrusts f₁..f₄ [N]
    pub thrusts: [f64; 4],
    /// True when any motor hit a limit
    pub saturated: bool,
    /// Largest per-motor clamp magnitude |f_raw − f_clamped| [N]
    pub clamp_residual: f64,
}

impl MotorThrusts {
    pub fn total(&self) -> f64 {
        self.thrusts.iter().sum()
    }
}

/// The 4×4 allocation matrix with its cached determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationMatrix {
    matrix: Matrix4<f64>,
    det: f64,
}

impl AllocationMatrix {
    /// Assembles the matrix from arm geometry; the determinant is computed
    /// once from the closed form and cached.
    pub fn new(geom: &ArmGeometry, yaw_coeff: f64) -> Self {
        let r = &geom.radius;
        let g = &geom.gamma;
        let c = yaw_coeff;
        #[rustfmt::skip]
        let matrix = Matrix4::new(
            1.0,                  1.0,                  1.0,                  1.0,
            r[0] * g[0].sin(),    r[1] * g[1].sin(),    r[2] * g[2].sin(),    r[3] * g[3].sin(),
            -r[0] * g[0].cos(),   -r[1] * g[1].cos(),   -r[2] * g[2].cos(),   -r[3] * g[3].cos(),
            -c,                   c,                    -c,                   c,
        );
        AllocationMatrix {
            matrix,
            det: closed_form_determinant(geom, yaw_coeff),
        }
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    pub fn determinant(&self) -> f64 {
        self.det
    }

    /// Wrench (f, τ) produced by the given motor thrusts.
    pub fn wrench(&self, thrusts: &[f64; 4]) -> ControlInput {
        let v = self.matrix * Vector4::from_column_slice(thrusts);
        ControlInput {
            thrust: v[0],
            moment: Vector3::new(v[1], v[2], v[3]),
        }
    }
}

/// Closed-form determinant of the allocation matrix:
///
///   det A = 2c_τ (r₁r₂ sin(γ₂−γ₁) + r₂r₃ sin(γ₃−γ₂)
///                 + r₃r₄ sin(γ₄−γ₃) + r₁r₄ sin(γ₁−γ₄))
///
/// obtained by cofactor expansion along the yaw row; it vanishes whenever the
/// in-plane motor layout degenerates (e.g. three arms at one azimuth).
pub fn closed_form_determinant(geom: &ArmGeometry, yaw_coeff: f64) -> f64 {
    let r = &geom.radius;
    let g = &geom.gamma;
    2.0 * yaw_coeff
        * (r[0] * r[1] * (g[1] - g[0]).sin()
            + r[1] * r[2] * (g[2] - g[1]).sin()
            + r[2] * r[3] * (g[3] - g[2]).sin()
            + r[0] * r[3] * (g[0] - g[3]).sin())
}

/// Solves A·f = (f, τ) by LU with partial pivoting, then clamps each motor to
/// the configured thrust band.
///
/// Fails with [`AllocationError::SingularAllocation`] when |det A| < `epsilon`
/// — the caller must not trust the output near the singularity.
pub fn allocate(
    input: &ControlInput,
    cam: &AllocationMatrix,
    limits: &MorphParams,
    epsilon: f64,
) -> Result<MotorThrusts, AllocationError> {
    if cam.det.abs() < epsilon {
        return Err(AllocationError::SingularAllocation {
            det: cam.det,
            epsilon,
        });
    }
    let raw = cam
        .matrix
        .lu()
        .solve(&input.as_vector())
        .expect("determinant above threshold but LU failed");
    let mut thrusts = [0.0; 4];
    let mut clamp_residual: f64 = 0.0;
    for i in 0..4 {
        thrusts[i] = raw[i].clamp(limits.thrust_min, limits.thrust_max);
        clamp_residual = clamp_residual.max((raw[i] - thrusts[i]).abs());
    }
    Ok(MotorThrusts {
        thrusts,
        saturated: clamp_residual > 0.0,
        clamp_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphology::{arm_geometry, MorphParams};
    use crate::GRAVITY;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::FRAC_PI_2;

    fn params() -> MorphParams {
        MorphParams::default()
    }

    #[test]
    fn row_structure() {
        let p = params();
        let cam = AllocationMatrix::new(&arm_geometry(1.1, 2.0, &p), p.yaw_torque_coeff);
        let m = cam.matrix();
        let row1: f64 = (0..4).map(|j| m[(0, j)]).sum();
        let row4: f64 = (0..4).map(|j| m[(3, j)]).sum();
        assert_relative_eq!(row1, 4.0, epsilon = 1e-15);
        assert_relative_eq!(row4, 0.0, epsilon = 1e-15);
        assert_eq!(m[(3, 0)], -p.yaw_torque_coeff);
        assert_eq!(m[(3, 1)], p.yaw_torque_coeff);
    }

    #[test]
    fn plus_configuration_matches_hand_assembled_mixer() {
        // with massless arms the CG sits at the center and the matrix reduces
        // to the textbook plus-quad mixer with lever l
        let mut p = params();
        p.arm_mass = 1e-15;
        let l = p.arm_length;
        let c = p.yaw_torque_coeff;
        let cam = AllocationMatrix::new(&arm_geometry(FRAC_PI_2, FRAC_PI_2, &p), c);
        #[rustfmt::skip]
        let expected = Matrix4::new(
            1.0, 1.0, 1.0, 1.0,
            0.0, l,   0.0, -l,
            l,   0.0, -l,  0.0,
            -c,  c,   -c,  c,
        );
        assert_relative_eq!(cam.matrix(), &expected, epsilon = 1e-9);
    }

    #[test]
    fn wrench_matches_first_principles_moments() {
        // A·f must equal Σ dᵢ × (0,0,−fᵢ) plus the alternating yaw drag terms
        let p = params();
        let mut rng = StdRng::seed_from_u64(30);
        for _ in 0..300 {
            let b1 = rng.gen_range(0.4..2.7);
            let b2 = rng.gen_range(0.4..2.7);
            let geom = arm_geometry(b1, b2, &p);
            let cam = AllocationMatrix::new(&geom, p.yaw_torque_coeff);
            let f = [
                rng.gen_range(0.0..8.0),
                rng.gen_range(0.0..8.0),
                rng.gen_range(0.0..8.0),
                rng.gen_range(0.0..8.0),
            ];
            let wrench = cam.wrench(&f);
            let mut tau = Vector3::zeros();
            for i in 0..4 {
                tau += geom.motor_positions[i].cross(&Vector3::new(0.0, 0.0, -f[i]));
            }
            tau.z += p.yaw_torque_coeff * (-f[0] + f[1] - f[2] + f[3]);
            assert_relative_eq!(wrench.thrust, f.iter().sum::<f64>(), epsilon = 1e-12);
            assert_relative_eq!(wrench.moment, tau, epsilon = 1e-10);
        }
    }

    #[test]
    fn determinant_plus_configuration() {
        // in-plane CG offset vanishes at 90°/90°, so every rᵢ = l and the
        // closed form gives −8 c_τ l² (numeric determinant agrees)
        let p = params();
        let geom = arm_geometry(FRAC_PI_2, FRAC_PI_2, &p);
        let det = closed_form_determinant(&geom, p.yaw_torque_coeff);
        let l2 = p.arm_length * p.arm_length;
        assert_relative_eq!(det, -8.0 * p.yaw_torque_coeff * l2, epsilon = 1e-15);
        assert_relative_eq!(det, -0.002, epsilon = 1e-15);
        let cam = AllocationMatrix::new(&geom, p.yaw_torque_coeff);
        assert_relative_eq!(cam.matrix().determinant(), det, epsilon = 1e-12);
    }

    #[test]
    fn determinant_closed_form_equals_numeric() {
        let p = params();
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..1000 {
            let b1 = rng.gen_range(0.05..3.1);
            let b2 = rng.gen_range(0.05..3.1);
            let geom = arm_geometry(b1, b2, &p);
            let closed = closed_form_determinant(&geom, p.yaw_torque_coeff);
            let numeric = AllocationMatrix::new(&geom, p.yaw_torque_coeff)
                .matrix()
                .determinant();
            assert!(
                (closed - numeric).abs() <= 1e-9 * closed.abs().max(1e-6),
                "closed {closed} vs numeric {numeric} at ({b1}, {b2})"
            );
        }
    }

    #[test]
    fn determinant_vanishes_when_rear_arms_coincide() {
        // arms 2, 3, 4 at the same in-plane location (β₁ = β₂ = 0)
        let p = params();
        let geom = arm_geometry(0.0, 0.0, &p);
        assert!(closed_form_determinant(&geom, p.yaw_torque_coeff).abs() < 1e-12);
    }

    #[test]
    fn determinant_is_symmetric_under_hinge_swap() {
        // swapping β₁ ↔ β₂ mirrors the geometry about q₁; the mirror flips
        // both one column pair and the roll row, leaving det unchanged
        let p = params();
        let mut rng = StdRng::seed_from_u64(32);
        for _ in 0..100 {
            let b1 = rng.gen_range(0.3..2.8);
            let b2 = rng.gen_range(0.3..2.8);
            let d1 = closed_form_determinant(&arm_geometry(b1, b2, &p), p.yaw_torque_coeff);
            let d2 = closed_form_determinant(&arm_geometry(b2, b1, &p), p.yaw_torque_coeff);
            assert_relative_eq!(d1, d2, epsilon = 1e-12);
        }
    }

    #[test]
    fn hover_allocation_splits_evenly() {
        let p = params();
        let cam = AllocationMatrix::new(&arm_geometry(FRAC_PI_2, FRAC_PI_2, &p), p.yaw_torque_coeff);
        let hover = ControlInput::new(p.total_mass() * GRAVITY, Vector3::zeros());
        let out = allocate(&hover, &cam, &p, DEFAULT_DET_EPSILON).unwrap();
        for f in out.thrusts {
            assert_relative_eq!(f, 2.673225, epsilon = 1e-9);
        }
        assert!(!out.saturated);
    }

    #[test]
    fn zero_input_gives_zero_thrusts() {
        let p = params();
        let cam = AllocationMatrix::new(&arm_geometry(FRAC_PI_2, FRAC_PI_2, &p), p.yaw_torque_coeff);
        let out = allocate(&ControlInput::new(0.0, Vector3::zeros()), &cam, &p, 1e-9).unwrap();
        for f in out.thrusts {
            assert!(f.abs() < 1e-12);
        }
    }

    #[test]
    fn allocation_round_trip() {
        let p = params();
        let mut rng = StdRng::seed_from_u64(33);
        for _ in 0..300 {
            let b1 = rng.gen_range(0.5..2.6);
            let b2 = rng.gen_range(0.5..2.6);
            let cam = AllocationMatrix::new(&arm_geometry(b1, b2, &p), p.yaw_torque_coeff);
            let input = ControlInput::new(
                rng.gen_range(4.0..16.0),
                Vector3::new(
                    rng.gen_range(-0.15..0.15),
                    rng.gen_range(-0.15..0.15),
                    rng.gen_range(-0.05..0.05),
                ),
            );
            let out = allocate(&input, &cam, &p, DEFAULT_DET_EPSILON).unwrap();
            if out.saturated {
                continue;
            }
            let back = cam.wrench(&out.thrusts);
            assert_relative_eq!(back.thrust, input.thrust, epsilon = 1e-9);
            assert_relative_eq!(back.moment, input.moment, epsilon = 1e-9);
            assert_relative_eq!(out.total(), input.thrust, epsilon = 1e-9);
        }
    }

    #[test]
    fn singular_geometry_is_rejected() {
        let p = params();
        let cam = AllocationMatrix::new(&arm_geometry(0.0, 0.0, &p), p.yaw_torque_coeff);
        let hover = ControlInput::new(10.0, Vector3::zeros());
        assert!(matches!(
            allocate(&hover, &cam, &p, DEFAULT_DET_EPSILON),
            Err(AllocationError::SingularAllocation { .. })
        ));
    }

    #[test]
    fn saturation_is_reported_and_clamped() {
        let p = params();
        let cam = AllocationMatrix::new(&arm_geometry(FRAC_PI_2, FRAC_PI_2, &p), p.yaw_torque_coeff);
        let out = allocate(
            &ControlInput::new(100.0, Vector3::new(2.0, 0.0, 0.0)),
            &cam,
            &p,
            DEFAULT_DET_EPSILON,
        )
        .unwrap();
        assert!(out.saturated);
        assert!(out.clamp_residual > 0.0);
        for f in out.thrusts {
            assert!((p.thrust_min..=p.thrust_max).contains(&f));
        }
    }
}
