//! Small fixed-size vector/matrix numerics on which the whole observer stack
//! is built: 3-vectors, 3x3 matrices, rotations, rigid transforms and the
//! handful of operators (skew, projector, adjugate, Rodrigues exponential)
//! that the regression machinery relies on.
//!
//! Everything here is a pure function of its inputs; no global state.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

/// Directions shorter than this are considered degenerate for projector
/// construction; the simulator guarantees the robot never coincides with a
/// landmark, so hitting this signals a bug rather than a recoverable state.
pub const EPS_PROJ: f64 = 1e-9;

/// Below this rotation angle (rad) the Rodrigues coefficients switch to their
/// Taylor expansions to avoid dividing by a vanishing angle.
const EPS_ANGLE: f64 = 1e-6;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum GeometryError {
    /// A projector (or bearing) was requested for a near-zero direction.
    #[error("degenerate direction: vector norm below {EPS_PROJ}")]
    DegenerateDirection,
}

// ---------------------------------------------------------------------------
// Vec3
// ---------------------------------------------------------------------------

/// A 3-vector of f64 scalars (meters, rad/s, ... depending on context).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, rhs: Vec3) -> f64 {
        self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn cross(self, rhs: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * rhs.z - self.z * rhs.y,
            y: self.z * rhs.x - self.x * rhs.z,
            z: self.x * rhs.y - self.y * rhs.x,
        }
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector along `self`, or an error when the norm is degenerate.
    pub fn normalized(self) -> Result<Vec3, GeometryError> {
        let n = self.norm();
        if n <= EPS_PROJ {
            return Err(GeometryError::DegenerateDirection);
        }
        Ok(self / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, rhs: Vec3) {
        *self = *self + rhs;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, rhs: Vec3) {
        *self = *self - rhs;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

// ---------------------------------------------------------------------------
// Mat3
// ---------------------------------------------------------------------------

/// A 3x3 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const ZERO: Mat3 = Mat3 { m: [[0.0; 3]; 3] };

    pub const IDENTITY: Mat3 = Mat3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub const fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Mat3 { m: rows }
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Mat3::from_rows([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    /// Outer product `a * b^T`.
    pub fn outer(a: Vec3, b: Vec3) -> Self {
        let (a, b) = (a.as_array(), b.as_array());
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = a[i] * b[j];
            }
        }
        Mat3 { m }
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::new(self.m[i][0], self.m[i][1], self.m[i][2])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.m[j][i];
            }
        }
        Mat3 { m }
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Symmetric part `(M + M^T) / 2`.
    pub fn symmetrized(&self) -> Mat3 {
        (*self + self.transpose()) * 0.5
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    /// Solve `self * x = b` by Gaussian elimination with partial pivoting.
    /// Returns `None` when a pivot falls below `1e-14 * scale`.
    pub fn solve(&self, b: Vec3) -> Option<Vec3> {
        let mut a = self.m;
        let mut rhs = b.as_array();
        let scale = self.frobenius_norm().max(1.0);
        for k in 0..3 {
            let mut p = k;
            for i in (k + 1)..3 {
                if a[i][k].abs() > a[p][k].abs() {
                    p = i;
                }
            }
            if a[p][k].abs() <= 1e-14 * scale {
                return None;
            }
            a.swap(k, p);
            rhs.swap(k, p);
            for i in (k + 1)..3 {
                let f = a[i][k] / a[k][k];
                for j in k..3 {
                    a[i][j] -= f * a[k][j];
                }
                rhs[i] -= f * rhs[k];
            }
        }
        let mut x = [0.0; 3];
        for k in (0..3).rev() {
            let mut s = rhs[k];
            for j in (k + 1)..3 {
                s -= a[k][j] * x[j];
            }
            x[k] = s / a[k][k];
        }
        Some(Vec3::from_array(x))
    }

    /// Inverse via the adjugate; `None` when the determinant is tiny
    /// relative to the matrix scale.
    pub fn inverse(&self) -> Option<Mat3> {
        let d = self.det();
        let scale = self.frobenius_norm().max(1.0);
        if d.abs() <= 1e-14 * scale * scale * scale {
            return None;
        }
        Some(adjugate(self) * (1.0 / d))
    }

    /// Eigenvalues of a symmetric matrix, ascending. Uses the closed-form
    /// trigonometric solution of the characteristic cubic; accuracy degrades
    /// to about 1e-8 absolute near repeated roots, which is ample for
    /// excitation thresholds and rank checks.
    pub fn sym_eigenvalues(&self) -> [f64; 3] {
        let a = self.m;
        let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        if p1 == 0.0 {
            let mut e = [a[0][0], a[1][1], a[2][2]];
            e.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return e;
        }
        let q = self.trace() / 3.0;
        let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let b = (*self - Mat3::IDENTITY * q) * (1.0 / p);
        let r = (b.det() / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e_max = q + 2.0 * p * phi.cos();
        let e_min = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let e_mid = 3.0 * q - e_max - e_min;
        [e_min, e_mid, e_max]
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.m[i][j]
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, rhs: Mat3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.m[i][j] + rhs.m[i][j];
            }
        }
        Mat3 { m }
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, rhs: Mat3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.m[i][j] - rhs.m[i][j];
            }
        }
        Mat3 { m }
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.m[i][0] * rhs.m[0][j]
                    + self.m[i][1] * rhs.m[1][j]
                    + self.m[i][2] * rhs.m[2][j];
            }
        }
        Mat3 { m }
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, s: f64) -> Mat3 {
        let mut m = self.m;
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        Mat3 { m }
    }
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// Skew-symmetric matrix of `a`, satisfying `hat(a) * b == a.cross(b)`.
#[rustfmt::skip]
pub fn hat(a: Vec3) -> Mat3 {
    Mat3::from_rows([
        [ 0.0,  -a.z,   a.y],
        [ a.z,   0.0,  -a.x],
        [-a.y,   a.x,   0.0],
    ])
}

/// Orthogonal projector `I - x x^T / |x|^2` onto the complement of `x`.
///
/// Symmetric, idempotent, rank 2; annihilates `x`.
pub fn projector(x: Vec3) -> Result<Mat3, GeometryError> {
    let n2 = x.norm_squared();
    if n2.sqrt() <= EPS_PROJ {
        return Err(GeometryError::DegenerateDirection);
    }
    Ok(Mat3::IDENTITY - Mat3::outer(x, x) * (1.0 / n2))
}

/// Adjugate of a 3x3 matrix: `adjugate(A) * A == det(A) * I`, including for
/// singular `A`.
pub fn adjugate(a: &Mat3) -> Mat3 {
    let m = &a.m;
    let cof = |i1: usize, i2: usize, j1: usize, j2: usize| {
        m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]
    };
    // adj(A) = C^T where C is the cofactor matrix.
    Mat3::from_rows([
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ])
}

// ---------------------------------------------------------------------------
// RotationMatrix
// ---------------------------------------------------------------------------

/// A member of SO(3), stored as a full 3x3 matrix.
///
/// Constructors either guarantee orthonormality by construction (`identity`,
/// `rot_z`, `exp`) or validate it (`try_from_mat`). Long products should be
/// re-projected with [`RotationMatrix::renormalized`] now and then.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix = RotationMatrix(Mat3::IDENTITY);

    /// Wrap a matrix that is already known to be a rotation.
    pub fn from_mat_unchecked(m: Mat3) -> Self {
        RotationMatrix(m)
    }

    /// Validate orthonormality (`R^T R = I` and `det R = 1` within `tol`).
    pub fn try_from_mat(m: Mat3, tol: f64) -> Option<Self> {
        let defect = (m.transpose() * m - Mat3::IDENTITY).frobenius_norm();
        if defect <= tol && (m.det() - 1.0).abs() <= tol {
            Some(RotationMatrix(m))
        } else {
            None
        }
    }

    pub fn mat(&self) -> &Mat3 {
        &self.0
    }

    #[rustfmt::skip]
    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RotationMatrix(Mat3::from_rows([
            [1.0, 0.0, 0.0],
            [0.0,   c,  -s],
            [0.0,   s,   c],
        ]))
    }

    #[rustfmt::skip]
    pub fn rot_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RotationMatrix(Mat3::from_rows([
            [  c, 0.0,   s],
            [0.0, 1.0, 0.0],
            [ -s, 0.0,   c],
        ]))
    }

    #[rustfmt::skip]
    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RotationMatrix(Mat3::from_rows([
            [  c,  -s, 0.0],
            [  s,   c, 0.0],
            [0.0, 0.0, 1.0],
        ]))
    }

    pub fn transpose(&self) -> Self {
        RotationMatrix(self.0.transpose())
    }

    /// Orthonormality defect `||R^T R - I||_F`, for drift monitoring.
    pub fn orthogonality_defect(&self) -> f64 {
        (self.0.transpose() * self.0 - Mat3::IDENTITY).frobenius_norm()
    }

    /// Periodic drift control for long products of incremental rotations:
    /// every `interval` steps, re-project onto SO(3) if the orthogonality
    /// defect has grown past rounding noise (~1e-14). Projecting more often
    /// (or unconditionally) would inject perturbations larger than the drift
    /// it removes.
    pub fn periodic_renorm(self, steps: u64) -> Self {
        const INTERVAL: u64 = 250;
        const DEFECT: f64 = 1e-14;
        if steps % INTERVAL == 0 && self.orthogonality_defect() > DEFECT {
            self.renormalized()
        } else {
            self
        }
    }

    /// Nearest rotation by iterating the polar-decomposition Newton step
    /// `X <- (X + X^-T) / 2`. Converges quadratically for near-rotations.
    pub fn renormalized(&self) -> Self {
        let mut x = self.0;
        for _ in 0..8 {
            let inv_t = match x.inverse() {
                Some(inv) => inv.transpose(),
                None => break,
            };
            x = (x + inv_t) * 0.5;
            if (x.transpose() * x - Mat3::IDENTITY).frobenius_norm() < 1e-15 {
                break;
            }
        }
        RotationMatrix(x)
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for RotationMatrix {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        self.0 * v
    }
}

/// Rotation by angle `dt * |omega|` about `omega`, i.e. `exp(dt * hat(omega))`,
/// via the closed-form Rodrigues formula. Falls back to the Taylor expansion
/// of the coefficients for tiny angles; `omega = 0` returns the identity.
pub fn rot_exp(omega: Vec3, dt: f64) -> RotationMatrix {
    let v = omega * dt;
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < EPS_ANGLE {
        (
            1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
            0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
        )
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = hat(v);
    RotationMatrix(Mat3::IDENTITY + k * a + (k * k) * b)
}

/// Rotation distance `sqrt(tr(I - R R_hat^T) / 4)` in [0, 1]; zero iff the
/// arguments agree, one at a half-turn apart.
pub fn attitude_error(r: &RotationMatrix, r_hat: &RotationMatrix) -> f64 {
    let r_tilde = *r * r_hat.transpose();
    let v = 0.25 * (Mat3::IDENTITY - *r_tilde.mat()).trace();
    v.clamp(0.0, 1.0).sqrt()
}

// ---------------------------------------------------------------------------
// Pose / Twist
// ---------------------------------------------------------------------------

/// Rigid transform `T(R, x)`: rotation plus translation, acting on points as
/// `p -> R p + x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: RotationMatrix,
    pub translation: Vec3,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        rotation: RotationMatrix::IDENTITY,
        translation: Vec3::ZERO,
    };

    pub fn new(rotation: RotationMatrix, translation: Vec3) -> Self {
        Pose { rotation, translation }
    }

    /// Group composition: `T(Ra, xa) * T(Rb, xb) = T(Ra Rb, xa + Ra xb)`.
    pub fn compose(&self, rhs: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * rhs.rotation,
            translation: self.translation + self.rotation * rhs.translation,
        }
    }

    /// Group inverse: `T(R, x)^-1 = T(R^T, -R^T x)`.
    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Frobenius distance between the 4x4 homogeneous representations.
    pub fn distance(&self, rhs: &Pose) -> f64 {
        let dr = (*self.rotation.mat() - *rhs.rotation.mat()).frobenius_norm();
        let dt = (self.translation - rhs.translation).norm();
        (dr * dr + dt * dt).sqrt()
    }
}

/// Body-frame velocity pair: angular (rad/s) and linear (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist {
    pub angular: Vec3,
    pub linear: Vec3,
}

impl Twist {
    pub const ZERO: Twist = Twist {
        angular: Vec3::ZERO,
        linear: Vec3::ZERO,
    };

    pub fn new(angular: Vec3, linear: Vec3) -> Self {
        Twist { angular, linear }
    }
}
