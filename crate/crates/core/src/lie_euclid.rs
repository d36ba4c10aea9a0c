//! The Euclidean group E(3), its Lie algebra se(3) and the dual se(3)*.
//!
//! Group elements use the lower-triangular homogeneous layout
//!
//! ```text
//! [ 1  0 ]
//! [ x  S ]
//! ```
//!
//! acting on column vectors `(1, p)`. Lie algebra elements ("motors") embed as
//! `[[0, 0], [u, hat(phi)]]`, so the first row of every algebra matrix is zero.
//! Dual elements ("co-motors") pair with motors through `f·u + m·phi`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix4, Vector3};
use thiserror::Error;

/// Accepted deviation of `SᵀS` from the identity for externally supplied frames.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
/// Drift above this is removed by polar projection.
pub const REORTHONORMALIZE_TOL: f64 = 1e-12;
/// `log_se3` refuses rotation angles at or above `π - LOG_BRANCH_MARGIN`.
pub const LOG_BRANCH_MARGIN: f64 = 1e-9;
const SMALL_ANGLE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("frame is not orthogonal: |SᵀS - I| = {defect:e}")]
    NonOrthogonal { defect: f64 },
    #[error("rotation angle {angle} is outside the principal branch of log")]
    LogBranch { angle: f64 },
    #[error("log is undefined for improper frames (det S = -1)")]
    ImproperFrame,
}

/// Skew-symmetric matrix with `hat(phi) * w = phi × w`.
pub fn hat(phi: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(
        0.0, -phi.z, phi.y, //
        phi.z, 0.0, -phi.x, //
        -phi.y, phi.x, 0.0,
    )
}

/// Axial vector of a skew-symmetric matrix. Only the lower triangle is read;
/// use [`vee_antisym`] for matrices that may carry symmetric noise.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Axial vector of the antisymmetric part of `m`.
pub fn vee_antisym(m: &Matrix3<f64>) -> Vector3<f64> {
    0.5 * Vector3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    )
}

/// Max-entry deviation of `SᵀS` from the identity.
pub fn orthogonality_defect(s: &Matrix3<f64>) -> f64 {
    (s.transpose() * s - Matrix3::identity()).amax()
}

/// Nearest orthogonal matrix in the Frobenius norm (polar factor).
pub fn polar_project(s: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = s.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    u * v_t
}

/// Element of se(3): infinitesimal translation `u` and axial rotation `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Motor {
    pub u: Vector3<f64>,
    pub phi: Vector3<f64>,
}

/// Element of se(3)*: force part `f` and moment part `m`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoMotor {
    pub f: Vector3<f64>,
    pub m: Vector3<f64>,
}

macro_rules! six_vector_ops {
    ($ty:ident, $a:ident, $b:ident) => {
        impl $ty {
            pub fn new($a: Vector3<f64>, $b: Vector3<f64>) -> Self {
                Self { $a, $b }
            }

            pub fn zero() -> Self {
                Self { $a: Vector3::zeros(), $b: Vector3::zeros() }
            }

            pub fn from_array(v: [f64; 6]) -> Self {
                Self {
                    $a: Vector3::new(v[0], v[1], v[2]),
                    $b: Vector3::new(v[3], v[4], v[5]),
                }
            }

            pub fn to_array(&self) -> [f64; 6] {
                [self.$a.x, self.$a.y, self.$a.z, self.$b.x, self.$b.y, self.$b.z]
            }

            /// Unit basis element `k` in 0..6 (translational slots first).
            pub fn basis(k: usize) -> Self {
                let mut v = [0.0; 6];
                v[k] = 1.0;
                Self::from_array(v)
            }

            pub fn amax(&self) -> f64 {
                self.$a.amax().max(self.$b.amax())
            }
        }

        impl Add for $ty {
            type Output = Self;
            fn add(self, o: Self) -> Self {
                Self { $a: self.$a + o.$a, $b: self.$b + o.$b }
            }
        }

        impl AddAssign for $ty {
            fn add_assign(&mut self, o: Self) {
                self.$a += o.$a;
                self.$b += o.$b;
            }
        }

        impl Sub for $ty {
            type Output = Self;
            fn sub(self, o: Self) -> Self {
                Self { $a: self.$a - o.$a, $b: self.$b - o.$b }
            }
        }

        impl Neg for $ty {
            type Output = Self;
            fn neg(self) -> Self {
                Self { $a: -self.$a, $b: -self.$b }
            }
        }

        impl Mul<f64> for $ty {
            type Output = Self;
            fn mul(self, s: f64) -> Self {
                Self { $a: self.$a * s, $b: self.$b * s }
            }
        }
    };
}

six_vector_ops!(Motor, u, phi);
six_vector_ops!(CoMotor, f, m);

impl Motor {
    /// Generator of translations along axis `i` (`v_i`).
    pub fn translation_generator(i: usize) -> Self {
        Self::basis(i)
    }

    /// Generator of rotations about axis `i` (`r_i`).
    pub fn rotation_generator(i: usize) -> Self {
        Self::basis(3 + i)
    }

    /// 4×4 embedding `[[0, 0], [u, hat(phi)]]`.
    pub fn to_matrix4(&self) -> Matrix4<f64> {
        MotorMatrix::from(*self).to_matrix4()
    }
}

impl CoMotor {
    /// Dual basis element `v*_i`.
    pub fn force_dual(i: usize) -> Self {
        Self::basis(i)
    }

    /// Dual basis element `r*_i`.
    pub fn moment_dual(i: usize) -> Self {
        Self::basis(3 + i)
    }
}

/// Natural pairing `⟨μ, w⟩ = f·u + m·phi`.
pub fn pair(mu: &CoMotor, w: &Motor) -> f64 {
    mu.f.dot(&w.u) + mu.m.dot(&w.phi)
}

/// Lie bracket `[w, z] = wz - zw` of the 4×4 embeddings.
pub fn ad(w: &Motor, z: &Motor) -> Motor {
    Motor {
        u: w.phi.cross(&z.u) - z.phi.cross(&w.u),
        phi: w.phi.cross(&z.phi),
    }
}

/// Coadjoint representation of the algebra: `⟨coad(X, μ), Y⟩ = -⟨μ, [X, Y]⟩`.
pub fn coad(x: &Motor, mu: &CoMotor) -> CoMotor {
    CoMotor {
        f: x.phi.cross(&mu.f),
        m: x.u.cross(&mu.f) + x.phi.cross(&mu.m),
    }
}

/// Lower 3×4 block of a 4×4 matrix whose first row vanishes. Products of motor
/// embeddings live here; their commutators are motors again.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorMatrix {
    pub t: Vector3<f64>,
    pub l: Matrix3<f64>,
}

impl Default for MotorMatrix {
    fn default() -> Self {
        Self::zero()
    }
}

impl MotorMatrix {
    pub fn zero() -> Self {
        Self { t: Vector3::zeros(), l: Matrix3::zeros() }
    }

    /// Matrix product; the first row stays zero.
    pub fn matmul(&self, o: &MotorMatrix) -> MotorMatrix {
        MotorMatrix { t: self.l * o.t, l: self.l * o.l }
    }

    pub fn to_matrix4(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        for r in 0..3 {
            m[(r + 1, 0)] = self.t[r];
            for c in 0..3 {
                m[(r + 1, c + 1)] = self.l[(r, c)];
            }
        }
        m
    }

    /// Projection onto se(3); exact when `l` is antisymmetric.
    pub fn to_motor(&self) -> Motor {
        Motor { u: self.t, phi: vee_antisym(&self.l) }
    }

    /// Size of the symmetric part of `l` (zero for genuine motors).
    pub fn symmetric_defect(&self) -> f64 {
        (self.l + self.l.transpose()).amax() * 0.5
    }

    pub fn amax(&self) -> f64 {
        self.t.amax().max(self.l.amax())
    }
}

impl From<Motor> for MotorMatrix {
    fn from(w: Motor) -> Self {
        MotorMatrix { t: w.u, l: hat(&w.phi) }
    }
}

impl Add for MotorMatrix {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        MotorMatrix { t: self.t + o.t, l: self.l + o.l }
    }
}

impl AddAssign for MotorMatrix {
    fn add_assign(&mut self, o: Self) {
        self.t += o.t;
        self.l += o.l;
    }
}

impl Sub for MotorMatrix {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        MotorMatrix { t: self.t - o.t, l: self.l - o.l }
    }
}

impl Neg for MotorMatrix {
    type Output = Self;
    fn neg(self) -> Self {
        MotorMatrix { t: -self.t, l: -self.l }
    }
}

impl Mul<f64> for MotorMatrix {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        MotorMatrix { t: self.t * s, l: self.l * s }
    }
}

/// Element of E(3): a position `x` and an orthogonal frame `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuclideanMotion {
    x: Vector3<f64>,
    s: Matrix3<f64>,
}

impl Default for EuclideanMotion {
    fn default() -> Self {
        Self::identity()
    }
}

impl EuclideanMotion {
    pub fn identity() -> Self {
        Self { x: Vector3::zeros(), s: Matrix3::identity() }
    }

    /// Validates orthogonality of `s` against [`ORTHOGONALITY_TOL`] and removes
    /// any residual drift.
    pub fn new(x: Vector3<f64>, s: Matrix3<f64>) -> Result<Self, LieError> {
        let defect = orthogonality_defect(&s);
        if !defect.is_finite() || defect > ORTHOGONALITY_TOL {
            return Err(LieError::NonOrthogonal { defect });
        }
        Ok(Self::new_unchecked(x, s))
    }

    fn new_unchecked(x: Vector3<f64>, s: Matrix3<f64>) -> Self {
        let s = if orthogonality_defect(&s) > REORTHONORMALIZE_TOL { polar_project(&s) } else { s };
        Self { x, s }
    }

    pub fn translation(x: Vector3<f64>) -> Self {
        Self { x, s: Matrix3::identity() }
    }

    pub fn from_frame(s: Matrix3<f64>) -> Result<Self, LieError> {
        Self::new(Vector3::zeros(), s)
    }

    pub fn position(&self) -> &Vector3<f64> {
        &self.x
    }

    pub fn frame(&self) -> &Matrix3<f64> {
        &self.s
    }

    pub fn det(&self) -> f64 {
        self.s.determinant()
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m[(0, 0)] = 1.0;
        for r in 0..3 {
            m[(r + 1, 0)] = self.x[r];
            for c in 0..3 {
                m[(r + 1, c + 1)] = self.s[(r, c)];
            }
        }
        m
    }

    pub fn from_homogeneous(m: &Matrix4<f64>) -> Result<Self, LieError> {
        let x = Vector3::new(m[(1, 0)], m[(2, 0)], m[(3, 0)]);
        let s = m.fixed_view::<3, 3>(1, 1).into_owned();
        Self::new(x, s)
    }

    pub fn compose(&self, h: &EuclideanMotion) -> EuclideanMotion {
        Self::new_unchecked(self.x + self.s * h.x, self.s * h.s)
    }

    pub fn inverse(&self) -> EuclideanMotion {
        let st = self.s.transpose();
        EuclideanMotion { x: -(st * self.x), s: st }
    }

    pub fn act(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.s * p + self.x
    }

    /// Adjoint action `g w g⁻¹`.
    pub fn adjoint(&self, w: &Motor) -> Motor {
        let rot = self.s * hat(&w.phi) * self.s.transpose();
        Motor { u: self.s * w.u - rot * self.x, phi: vee_antisym(&rot) }
    }

    /// Coadjoint action `μ ∘ Ad_g`, i.e. `⟨g.co_adjoint(μ), w⟩ = ⟨μ, Ad_g w⟩`.
    pub fn co_adjoint(&self, mu: &CoMotor) -> CoMotor {
        let st = self.s.transpose();
        let d = self.det().signum();
        CoMotor { f: st * mu.f, m: d * (st * (mu.f.cross(&self.x) + mu.m)) }
    }
}

/// Rodrigues coefficients `(sinθ/θ, (1-cosθ)/θ², (θ-sinθ)/θ³)`.
fn rodrigues_coefficients(theta: f64) -> (f64, f64, f64) {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        let t4 = t2 * t2;
        (
            1.0 - t2 / 6.0 + t4 / 120.0,
            0.5 - t2 / 24.0 + t4 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0,
        )
    } else {
        let (s, c) = theta.sin_cos();
        let t2 = theta * theta;
        (s / theta, (1.0 - c) / t2, (theta - s) / (t2 * theta))
    }
}

/// Rotation `exp(hat(phi))`.
pub fn exp_so3(phi: &Vector3<f64>) -> Matrix3<f64> {
    let (a, b, _) = rodrigues_coefficients(phi.norm());
    let k = hat(phi);
    Matrix3::identity() + k * a + k * k * b
}

/// Group exponential of a motor.
pub fn exp_se3(w: &Motor) -> EuclideanMotion {
    let (a, b, c) = rodrigues_coefficients(w.phi.norm());
    let k = hat(&w.phi);
    let k2 = k * k;
    let rot = Matrix3::identity() + k * a + k2 * b;
    let left_jacobian = Matrix3::identity() + k * b + k2 * c;
    EuclideanMotion { x: left_jacobian * w.u, s: rot }
}

/// Principal-branch rotation vector of a proper rotation.
pub fn log_so3(s: &Matrix3<f64>) -> Result<Vector3<f64>, LieError> {
    if s.determinant() < 0.0 {
        return Err(LieError::ImproperFrame);
    }
    let axis2 = Vector3::new(s[(2, 1)] - s[(1, 2)], s[(0, 2)] - s[(2, 0)], s[(1, 0)] - s[(0, 1)]);
    let sin_t = 0.5 * axis2.norm();
    let cos_t = 0.5 * (s.trace() - 1.0);
    let theta = sin_t.atan2(cos_t);
    if theta >= std::f64::consts::PI - LOG_BRANCH_MARGIN {
        return Err(LieError::LogBranch { angle: theta });
    }
    let scale = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0)
    } else {
        0.5 * theta / theta.sin()
    };
    Ok(axis2 * scale)
}

/// Principal-branch logarithm of a proper motion.
pub fn log_se3(g: &EuclideanMotion) -> Result<Motor, LieError> {
    let phi = log_so3(&g.s)?;
    let theta = phi.norm();
    let k = hat(&phi);
    let coeff = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        let (a, b, _) = rodrigues_coefficients(theta);
        (1.0 - a / (2.0 * b)) / (theta * theta)
    };
    let inv_jacobian = Matrix3::identity() - k * 0.5 + k * k * coeff;
    Ok(Motor { u: inv_jacobian * g.x, phi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rand_vec(rng: &mut impl Rng, scale: f64) -> Vector3<f64> {
        Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
    }

    fn rand_motor(rng: &mut impl Rng) -> Motor {
        Motor::new(rand_vec(rng, 2.0), rand_vec(rng, 1.5))
    }

    fn rand_motion(rng: &mut impl Rng) -> EuclideanMotion {
        exp_se3(&rand_motor(rng))
    }

    /// Scaling-and-squaring Taylor exponential of a 4×4 matrix.
    fn expm4(m: &Matrix4<f64>) -> Matrix4<f64> {
        let squarings = 12;
        let a = m / f64::from(1 << squarings);
        let mut term = Matrix4::identity();
        let mut sum = Matrix4::identity();
        for k in 1..20 {
            term = term * a / k as f64;
            sum += term;
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }

    #[test]
    fn hat_of_zero_and_unit_z() {
        assert_eq!(hat(&Vector3::zeros()), Matrix3::zeros());
        let k = hat(&Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(k[(0, 1)], -1.0);
        assert_eq!(k[(1, 0)], 1.0);
        // cross-product oracle: e3 × e1 = e2
        let e1 = Vector3::x();
        assert_eq!(k * e1, Vector3::z().cross(&e1));
        assert_eq!(k * e1, Vector3::y());
    }

    #[test]
    fn hat_vee_round_trip_and_cross_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = rand_vec(&mut rng, 3.0);
            let w = rand_vec(&mut rng, 3.0);
            assert_eq!(vee(&hat(&p)), p);
            assert!((hat(&p) * w - p.cross(&w)).amax() < 1e-14);
            assert_eq!(hat(&p).transpose(), -hat(&p));
        }
    }

    #[test]
    fn group_axioms_match_homogeneous_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let g = rand_motion(&mut rng);
            let h = rand_motion(&mut rng);
            let gh = g.compose(&h);
            assert!((gh.to_homogeneous() - g.to_homogeneous() * h.to_homogeneous()).amax() < 1e-12);
            let e = g.compose(&g.inverse());
            assert!((e.to_homogeneous() - Matrix4::identity()).amax() < 1e-12);
            let inv4 = g.to_homogeneous().try_inverse().unwrap();
            assert!((g.inverse().to_homogeneous() - inv4).amax() < 1e-12);
            let p = rand_vec(&mut rng, 1.0);
            assert_eq!(EuclideanMotion::identity().act(&p), p);
        }
    }

    #[test]
    fn two_quarter_turns_make_a_half_turn() {
        let quarter = exp_se3(&Motor::new(Vector3::zeros(), Vector3::new(0.0, 0.0, FRAC_PI_2)));
        let half = quarter.compose(&quarter);
        let expected = quarter.to_homogeneous() * quarter.to_homogeneous();
        assert!((half.to_homogeneous() - expected).amax() < 1e-15);
        let rz_pi = Matrix3::new(-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0);
        assert!((half.frame() - rz_pi).amax() < 1e-15);
    }

    #[test]
    fn rejects_non_orthogonal_frames() {
        let mut s = Matrix3::identity();
        s[(0, 1)] = 1e-3;
        assert!(matches!(EuclideanMotion::new(Vector3::zeros(), s), Err(LieError::NonOrthogonal { .. })));
        s[(0, 1)] = 1e-11;
        let g = EuclideanMotion::new(Vector3::zeros(), s).unwrap();
        assert!(orthogonality_defect(g.frame()) < 1e-15);
    }

    #[test]
    fn exponential_special_cases() {
        assert_eq!(exp_se3(&Motor::zero()), EuclideanMotion::identity());
        let t = exp_se3(&Motor::new(Vector3::new(1.0, 2.0, 3.0), Vector3::zeros()));
        assert_eq!(*t.position(), Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(*t.frame(), Matrix3::identity());

        let w = Motor::new(Vector3::zeros(), Vector3::new(0.0, 0.0, FRAC_PI_2));
        let oracle = expm4(&w.to_matrix4());
        assert!((exp_se3(&w).to_homogeneous() - oracle).amax() < 1e-10);
    }

    #[test]
    fn exponential_matches_matrix_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let w = rand_motor(&mut rng);
            let oracle = expm4(&w.to_matrix4());
            assert!((exp_se3(&w).to_homogeneous() - oracle).amax() < 1e-10);
        }
        // small-angle branch
        let w = Motor::new(Vector3::new(0.3, -0.2, 0.1), Vector3::new(1e-7, -2e-7, 3e-8));
        assert!((exp_se3(&w).to_homogeneous() - expm4(&w.to_matrix4())).amax() < 1e-14);
    }

    #[test]
    fn log_inverts_exp_on_principal_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let mut w = rand_motor(&mut rng);
            let n = w.phi.norm();
            if n >= 3.0 {
                w.phi *= 2.9 / n;
            }
            let back = log_se3(&exp_se3(&w)).unwrap();
            assert!((back - w).amax() < 1e-10, "{w:?} -> {back:?}");
        }
        let tiny = Motor::new(Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1e-9, 0.0));
        assert!((log_se3(&exp_se3(&tiny)).unwrap() - tiny).amax() < 1e-15);
    }

    #[test]
    fn log_domain_errors() {
        let near_pi = exp_se3(&Motor::new(Vector3::zeros(), Vector3::new(PI, 0.0, 0.0)));
        assert!(matches!(log_se3(&near_pi), Err(LieError::LogBranch { .. })));
        let reflect = EuclideanMotion::from_frame(-Matrix3::identity()).unwrap();
        assert_eq!(log_se3(&reflect), Err(LieError::ImproperFrame));
    }

    #[test]
    fn adjoint_is_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let g = rand_motion(&mut rng);
            let w = rand_motor(&mut rng);
            let conj = g.to_homogeneous() * w.to_matrix4() * g.inverse().to_homogeneous();
            assert!((g.adjoint(&w).to_matrix4() - conj).amax() < 1e-12);
        }
        let w = Motor::basis(4);
        assert_eq!(EuclideanMotion::identity().adjoint(&w), w);
        // improper frames conjugate axial vectors with det S
        let inv = EuclideanMotion::from_frame(-Matrix3::identity()).unwrap();
        let w = Motor::new(Vector3::new(1.0, 2.0, 3.0), Vector3::new(4.0, 5.0, 6.0));
        let conj = inv.to_homogeneous() * w.to_matrix4() * inv.inverse().to_homogeneous();
        assert!((inv.adjoint(&w).to_matrix4() - conj).amax() < 1e-14);
        assert_eq!(inv.adjoint(&w).phi, w.phi);
    }

    #[test]
    fn bracket_is_commutator_and_satisfies_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let (x, y, z) = (rand_motor(&mut rng), rand_motor(&mut rng), rand_motor(&mut rng));
            let comm = x.to_matrix4() * y.to_matrix4() - y.to_matrix4() * x.to_matrix4();
            assert!((ad(&x, &y).to_matrix4() - comm).amax() < 1e-13);
            assert_eq!(ad(&x, &x).amax(), 0.0);
            let jacobi = ad(&x, &ad(&y, &z)) + ad(&y, &ad(&z, &x)) + ad(&z, &ad(&x, &y));
            assert!(jacobi.amax() < 1e-12);
            let g = rand_motion(&mut rng);
            let lhs = g.adjoint(&ad(&y, &z));
            let rhs = ad(&g.adjoint(&y), &g.adjoint(&z));
            assert!((lhs - rhs).amax() < 1e-10);
        }
    }

    #[test]
    fn coadjoint_duality_and_basis_relations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let (x, y) = (rand_motor(&mut rng), rand_motor(&mut rng));
            let mu = CoMotor::from_array(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
            assert!((pair(&coad(&x, &mu), &y) + pair(&mu, &ad(&x, &y))).abs() < 1e-12);
            let g = rand_motion(&mut rng);
            assert!((pair(&g.co_adjoint(&mu), &y) - pair(&mu, &g.adjoint(&y))).abs() < 1e-12);
        }
        // ad*_{v_i} v*_j = ε_ijk r*_k and ad*_{v_i} r*_j = 0
        for i in 0..3 {
            for j in 0..3 {
                let got = coad(&Motor::translation_generator(i), &CoMotor::force_dual(j));
                let mut expected = CoMotor::zero();
                for k in 0..3 {
                    expected.m[k] = crate::levi_civita(i, j, k);
                }
                assert_eq!(got, expected);
                assert_eq!(coad(&Motor::translation_generator(i), &CoMotor::moment_dual(j)), CoMotor::zero());
            }
        }
    }

    #[test]
    fn translations_are_ad_h_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let h = EuclideanMotion::from_frame(exp_so3(&rand_vec(&mut rng, 2.0))).unwrap();
            let w = Motor::new(rand_vec(&mut rng, 1.0), Vector3::zeros());
            assert_eq!(h.adjoint(&w).phi, Vector3::zeros());
        }
    }

    #[test]
    fn motor_matrix_products_and_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (x, y) = (rand_motor(&mut rng), rand_motor(&mut rng));
        let (mx, my) = (MotorMatrix::from(x), MotorMatrix::from(y));
        assert!((mx.matmul(&my).to_matrix4() - x.to_matrix4() * y.to_matrix4()).amax() < 1e-14);
        let comm = mx.matmul(&my) - my.matmul(&mx);
        assert!(comm.symmetric_defect() < 1e-14);
        assert!((comm.to_motor() - ad(&x, &y)).amax() < 1e-14);
    }
}
