//! Rotation algebra on SO(3).
//!
//! Everything downstream works in rotation matrices (body → inertial), so this
//! module provides the hat/vee pair, the attitude error functions of the
//! geometric controller, and drift-free integration of Ṙ = RΩ̂ via the
//! closed-form Rodrigues exponential.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Body angular velocity [rad/s], expressed in the body frame.
pub type BodyRates = Vector3<f64>;

/// Frobenius-norm tolerance for orthonormality and skew-symmetry checks.
pub const ROTATION_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum So3Error {
    #[error("matrix is not a rotation: ‖RᵀR − I‖ = {defect:.3e}")]
    NotOrthonormal { defect: f64 },
    #[error("matrix is not a rotation: det = {det:.6}")]
    WrongHandedness { det: f64 },
    #[error("matrix is not skew-symmetric: ‖S + Sᵀ‖ = {defect:.3e}")]
    NotSkew { defect: f64 },
}

/// A rotation matrix R ∈ SO(3), body frame → inertial frame.
///
/// Construction is validated (RᵀR = I and det R = +1 within [`ROTATION_TOL`]);
/// products and transposes of valid rotations stay valid, so they skip the check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Validates and wraps a raw matrix.
    pub fn try_new(m: Matrix3<f64>) -> Result<Self, So3Error> {
        let defect = (m.transpose() * m - Matrix3::identity()).norm();
        if defect > ROTATION_TOL {
            return Err(So3Error::NotOrthonormal { defect });
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(So3Error::WrongHandedness { det });
        }
        Ok(Rotation(m))
    }

    /// Rotation by `angle` about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n < 1e-15 {
            return Rotation::identity();
        }
        Rotation(rodrigues(axis * (angle / n)))
    }

    /// Builds a rotation from three orthonormal column vectors, validated.
    pub fn from_columns(
        b1: Vector3<f64>,
        b2: Vector3<f64>,
        b3: Vector3<f64>,
    ) -> Result<Self, So3Error> {
        Rotation::try_new(Matrix3::from_columns(&[b1, b2, b3]))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    /// i-th column (the i-th body axis in inertial coordinates).
    pub fn column(&self, i: usize) -> Vector3<f64> {
        self.0.column(i).into()
    }

    /// ‖RᵀR − I‖_F, used by invariant checks.
    pub fn orthonormality_defect(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).norm()
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl std::ops::Mul<Vector3<f64>> for Rotation {
    type Output = Vector3<f64>;
    fn mul(self, v: Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }
}

/// Hat map: the skew-symmetric matrix S with S·y = v × y for all y.
pub fn hat(v: Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Vee map, inverse of [`hat`]. Rejects input whose skew defect exceeds
/// [`ROTATION_TOL`] — that signals numerical corruption upstream.
pub fn vee(s: Matrix3<f64>) -> Result<Vector3<f64>, So3Error> {
    let defect = (s + s.transpose()).norm();
    if defect > ROTATION_TOL {
        return Err(So3Error::NotSkew { defect });
    }
    Ok(Vector3::new(s[(2, 1)], s[(0, 2)], s[(1, 0)]))
}

/// Attitude tracking error e_R = ½(R_dᵀR − RᵀR_d)∨.
pub fn attitude_error(r: &Rotation, r_d: &Rotation) -> Vector3<f64> {
    // The argument of ∨ is exactly skew in floating point (M − Mᵀ), so the
    // components are read off directly.
    let m = r_d.matrix().transpose() * r.matrix();
    let s = m - m.transpose();
    0.5 * Vector3::new(s[(2, 1)], s[(0, 2)], s[(1, 0)])
}

/// Rate tracking error e_Ω = Ω − RᵀR_dΩ_d.
pub fn rate_error(omega: BodyRates, r: &Rotation, r_d: &Rotation, omega_d: BodyRates) -> BodyRates {
    omega - r.matrix().transpose() * r_d.matrix() * omega_d
}

/// Attitude error function Ψ(R, R_d) = ½ tr[I − R_dᵀR] ∈ [0, 2].
pub fn error_function(r: &Rotation, r_d: &Rotation) -> f64 {
    0.5 * (Matrix3::identity() - r_d.matrix().transpose() * r.matrix()).trace()
}

/// Advances Ṙ = RΩ̂ by one step with Ω held constant: R·exp(dt·Ω̂).
///
/// The exponential is exact, so the output stays on SO(3) with no drift to
/// renormalize away.
pub fn integrate_rotation(r: &Rotation, omega: BodyRates, dt: f64) -> Rotation {
    Rotation(r.0 * rodrigues(omega * dt))
}

/// Rodrigues formula for exp(ŵ), with series fallbacks near θ = 0.
fn rodrigues(w: Vector3<f64>) -> Matrix3<f64> {
    let theta2 = w.norm_squared();
    let k = hat(w);
    let (a, b) = if theta2 < 1e-8 {
        // sin θ / θ and (1 − cos θ)/θ² to O(θ⁴)
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Matrix3::identity() + a * k + b * (k * k)
}
