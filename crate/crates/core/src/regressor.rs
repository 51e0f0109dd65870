//! Linear regression pairs built from bearings and the extension state.
//!
//! A visible bearing `y` at extension state `(Q, xi)` yields the pair
//! `phi = proj(Q y)`, `q = proj(Q y) * xi`, which satisfies `q = phi^T * vl`
//! for the landmark coordinates `vl` in the extension frame. Invisible
//! landmarks contribute the zero pair, which keeps the regression valid while
//! carrying no information. The anchored and feedback variants re-express the
//! same constraint against the inertial-frame landmark, for use by the
//! localization stage.

use thiserror::Error;

use crate::extension::ExtensionState;
use crate::geometry::{projector, Mat3, Pose, RotationMatrix, Vec3};

/// Bearings are accepted (and re-normalized) only within this band around
/// unit norm; anything further off is a sensor-level bug we refuse to mask.
pub const BEARING_NORM_BAND: f64 = 1e-6;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum RegressorError {
    #[error("bearing norm {norm} outside the accepted unit band")]
    NonUnitBearing { norm: f64 },
}

/// Which regression the localization-stage landmark estimators consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarlMode {
    /// Regression against the fixed anchor pose and initial extension state.
    Anchored,
    /// Regression against the current pose estimate (closed loop).
    Feedback,
}

/// One regression sample: matrix regressor `phi`, regressand `q`, and the
/// visibility flag. Invisible samples are exactly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressorSample {
    pub phi: Mat3,
    pub q: Vec3,
    pub visible: bool,
    pub t: f64,
}

impl RegressorSample {
    pub fn invisible(t: f64) -> Self {
        RegressorSample { phi: Mat3::ZERO, q: Vec3::ZERO, visible: false, t }
    }
}

fn check_unit(y: Vec3) -> Result<Vec3, RegressorError> {
    let norm = y.norm();
    if (norm - 1.0).abs() > BEARING_NORM_BAND {
        return Err(RegressorError::NonUnitBearing { norm });
    }
    Ok(y / norm)
}

/// Build the regression pair for one landmark at time `t`.
///
/// `bearing` is the body-frame unit bearing, or `None` when the landmark is
/// out of view.
pub fn build_regressor(
    ext: &ExtensionState,
    bearing: Option<Vec3>,
    t: f64,
) -> Result<RegressorSample, RegressorError> {
    let Some(y) = bearing else {
        return Ok(RegressorSample::invisible(t));
    };
    let y = check_unit(y)?;
    let dir = ext.attitude * y;
    // |Q y| = 1, so the projector cannot be degenerate here.
    let phi = projector(dir).expect("rotated unit bearing is non-degenerate");
    let q = phi * ext.position;
    Ok(RegressorSample { phi, q, visible: true, t })
}

/// Re-express a sample as a regression on the inertial-frame landmark, using
/// the fixed anchor pose `T(R0, x0)` and the initial extension state:
/// `phi_bar = R0 Q(0)^T phi`, `q_bar = phi (xi - xi(0) + Q(0) R0^T x0)`.
pub fn build_anchored_regressor(
    ext: &ExtensionState,
    ext0: &ExtensionState,
    anchor: &Pose,
    sample: &RegressorSample,
) -> RegressorSample {
    if !sample.visible {
        return RegressorSample::invisible(sample.t);
    }
    let q0_r0t = ext0.attitude * anchor.rotation.transpose();
    let phi_bar = *anchor.rotation.mat() * *ext0.attitude.transpose().mat() * sample.phi;
    let q_bar = sample.phi * (ext.position - ext0.position + q0_r0t * anchor.translation);
    RegressorSample { phi: phi_bar, q: q_bar, visible: true, t: sample.t }
}

/// Closed-loop variant: the anchor is replaced by the current pose estimate
/// `(R_hat, x_hat)`: `phi_bar = R_hat Q^T phi`, `q_bar = phi (Q R_hat^T x_hat)`.
pub fn build_feedback_regressor(
    ext: &ExtensionState,
    r_hat: &RotationMatrix,
    x_hat: Vec3,
    sample: &RegressorSample,
) -> RegressorSample {
    if !sample.visible {
        return RegressorSample::invisible(sample.t);
    }
    let phi_bar = *r_hat.mat() * *ext.attitude.transpose().mat() * sample.phi;
    let q_bar = sample.phi * (ext.attitude * (r_hat.transpose() * x_hat));
    RegressorSample { phi: phi_bar, q: q_bar, visible: true, t: sample.t }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::constant_transform;
    use crate::geometry::rot_exp;

    fn ext(q: RotationMatrix, xi: Vec3) -> ExtensionState {
        ExtensionState::new(q, xi)
    }

    /// Synthetic consistent scene: given truth pose and extension initials,
    /// produce the extension state and body bearing for a landmark.
    struct Scene {
        ext0: ExtensionState,
        ext_now: ExtensionState,
        anchor: Pose,
        cx: Pose,
    }

    fn scene(truth_now: &Pose) -> Scene {
        let anchor = Pose::new(RotationMatrix::rot_z(0.4), Vec3::new(1.0, -0.5, 0.3));
        let ext0 = ext(RotationMatrix::rot_z(1.3), Vec3::new(0.2, 0.7, -0.4));
        let cx = constant_transform(&anchor, &ext0);
        // ext state consistent with the constant transform at the new truth.
        let ext_pose = cx.compose(truth_now);
        Scene {
            ext0,
            ext_now: ext(ext_pose.rotation, ext_pose.translation),
            anchor,
            cx,
        }
    }

    fn bearing_of(truth: &Pose, l: Vec3) -> Vec3 {
        truth.rotation.transpose() * (l - truth.translation).normalized().unwrap()
    }

    #[test]
    fn axis_aligned_example() {
        let e = ext(RotationMatrix::IDENTITY, Vec3::new(1.0, 2.0, 3.0));
        let s = build_regressor(&e, Some(Vec3::new(0.0, 0.0, 1.0)), 0.0).unwrap();
        assert!((s.phi - Mat3::diag(1.0, 1.0, 0.0)).frobenius_norm() == 0.0);
        assert!((s.q - Vec3::new(1.0, 2.0, 0.0)).norm() == 0.0);
        assert!(s.visible);
    }

    #[test]
    fn invisible_is_zero() {
        let e = ext(RotationMatrix::rot_z(0.2), Vec3::new(1.0, 1.0, 1.0));
        let s = build_regressor(&e, None, 3.5).unwrap();
        assert_eq!(s.phi, Mat3::ZERO);
        assert_eq!(s.q, Vec3::ZERO);
        assert!(!s.visible);
        assert_eq!(s.t, 3.5);
        // The anchored/feedback builders pass zero samples through.
        let anchored = build_anchored_regressor(&e, &e, &Pose::IDENTITY, &s);
        assert_eq!(anchored.phi, Mat3::ZERO);
        let fed = build_feedback_regressor(&e, &RotationMatrix::IDENTITY, Vec3::ZERO, &s);
        assert_eq!(fed.q, Vec3::ZERO);
    }

    #[test]
    fn non_unit_bearing_rejected_but_band_renormalized() {
        let e = ext(RotationMatrix::IDENTITY, Vec3::ZERO);
        let err = build_regressor(&e, Some(Vec3::new(0.0, 0.0, 1.5)), 0.0).unwrap_err();
        assert!(matches!(err, RegressorError::NonUnitBearing { .. }));
        // Inside the band: accepted and renormalized to a unit projector axis.
        let y = Vec3::new(0.0, 0.0, 1.0 + 5e-7);
        let s = build_regressor(&e, Some(y), 0.0).unwrap();
        assert!((s.phi - Mat3::diag(1.0, 1.0, 0.0)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn regression_consistency_in_extension_frame() {
        // q - phi^T vl = 0 exactly when the bearing comes from the landmark.
        let mut state = 5u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..100 {
            let q = rot_exp(Vec3::new(next(), next(), next()) * 2.0, 1.0);
            let xi = Vec3::new(next(), next(), next()) * 4.0;
            let vl = Vec3::new(next(), next(), next()) * 6.0 + Vec3::new(0.0, 0.0, 8.0);
            let y = q.transpose() * (vl - xi).normalized().unwrap();
            let s = build_regressor(&ext(q, xi), Some(y), 0.0).unwrap();
            let residual = s.q - s.phi.transpose() * vl;
            assert!(residual.norm() < 1e-12, "residual {}", residual.norm());
            // phi is symmetric, idempotent, rank 2.
            assert!((s.phi - s.phi.transpose()).frobenius_norm() == 0.0);
            assert!((s.phi * s.phi - s.phi).frobenius_norm() < 1e-14);
        }
    }

    #[test]
    fn anchored_regression_consistent_with_inertial_landmark() {
        let truth_now = Pose::new(RotationMatrix::rot_z(-0.7), Vec3::new(2.0, 1.5, 1.8));
        let sc = scene(&truth_now);
        for l in [
            Vec3::new(4.0, -1.0, 2.0),
            Vec3::new(-2.0, 3.0, 0.5),
            Vec3::new(0.5, 0.5, 4.0),
        ] {
            let y = bearing_of(&truth_now, l);
            let s = build_regressor(&sc.ext_now, Some(y), 1.0).unwrap();
            let a = build_anchored_regressor(&sc.ext_now, &sc.ext0, &sc.anchor, &s);
            let residual = a.q - a.phi.transpose() * l;
            assert!(residual.norm() < 1e-12, "residual {}", residual.norm());
            // Rotated projector keeps rank 2.
            let eig = (a.phi * a.phi.transpose()).sym_eigenvalues();
            assert!(eig[0].abs() < 1e-8 && (eig[1] - 1.0).abs() < 1e-8);
        }
        let _ = sc.cx;
    }

    #[test]
    fn feedback_reduces_to_valid_regression_at_truth() {
        let truth_now = Pose::new(RotationMatrix::rot_z(0.9), Vec3::new(-1.0, 2.0, 1.1));
        let sc = scene(&truth_now);
        let l = Vec3::new(3.0, 3.0, -1.0);
        let y = bearing_of(&truth_now, l);
        let s = build_regressor(&sc.ext_now, Some(y), 0.0).unwrap();
        let f = build_feedback_regressor(&sc.ext_now, &truth_now.rotation, truth_now.translation, &s);
        let residual = f.q - f.phi.transpose() * l;
        assert!(residual.norm() < 1e-12);
    }

    #[test]
    fn anchored_and_feedback_agree_at_time_zero() {
        let anchor = Pose::new(RotationMatrix::rot_z(0.4), Vec3::new(1.0, -0.5, 0.3));
        let ext0 = ext(RotationMatrix::rot_z(1.3), Vec3::new(0.2, 0.7, -0.4));
        let l = Vec3::new(2.0, 4.0, 1.0);
        let y = bearing_of(&anchor, l);
        let s = build_regressor(&ext0, Some(y), 0.0).unwrap();
        let a = build_anchored_regressor(&ext0, &ext0, &anchor, &s);
        let f = build_feedback_regressor(&ext0, &anchor.rotation, anchor.translation, &s);
        assert!((a.phi - f.phi).frobenius_norm() < 1e-13);
        assert!((a.q - f.q).norm() < 1e-13);
    }
}
