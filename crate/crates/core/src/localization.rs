//! Localization stage: estimate the constant extension-to-inertial transform
//! and the robot position, and express pose and landmarks in the inertial
//! frame.
//!
//! A second bank of landmark estimators runs on the anchored (or feedback)
//! regressions and produces inertial-frame landmark estimates directly; the
//! mismatch between those and the extension-frame estimates drives the
//! attitude correction `w_vis`, while the position estimate blends
//! dead-reckoning with the same mismatch.

use crate::extension::ExtensionState;
use crate::geometry::{rot_exp, Mat3, Pose, RotationMatrix, Twist, Vec3};
use crate::mapping::{LandmarkEstimator, MapperKind, SigmaGains};
use crate::regressor::{
    build_anchored_regressor, build_feedback_regressor, BarlMode, RegressorSample,
};

/// Per-landmark correction weights: `attitude[i]` scales the i-th difference
/// vector in `w_vis`, `position[i]` the i-th term of the position correction.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationGains {
    pub attitude: Vec<f64>,
    pub position: Vec<f64>,
}

impl LocalizationGains {
    pub fn uniform(n: usize, k: f64, sigma: f64) -> Self {
        assert!(k > 0.0 && sigma > 0.0, "gains must be positive");
        LocalizationGains { attitude: vec![k; n], position: vec![sigma; n] }
    }
}

/// Observer state: attitude-transform estimate, position estimate, and the
/// bank of inertial-frame landmark estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationState {
    pub cq_hat: RotationMatrix,
    pub x_hat: Vec3,
    pub bar_estimators: Vec<LandmarkEstimator>,
    steps: u64,
}

impl LocalizationState {
    /// Standard initialization: identity transform estimate and the initial
    /// extension position; landmark estimators start at zero.
    pub fn init(n_landmarks: usize, mapper: MapperKind, xi0: Vec3) -> Self {
        Self::init_with(RotationMatrix::IDENTITY, xi0, n_landmarks, mapper)
    }

    /// Initialization with an explicit transform guess (used by the
    /// basin-of-attraction sweeps).
    pub fn init_with(
        cq_hat: RotationMatrix,
        x_hat: Vec3,
        n_landmarks: usize,
        mapper: MapperKind,
    ) -> Self {
        LocalizationState {
            cq_hat,
            x_hat,
            bar_estimators: (0..n_landmarks)
                .map(|_| LandmarkEstimator::new(mapper, Vec3::ZERO))
                .collect(),
            steps: 0,
        }
    }

    pub fn l_bar(&self) -> Vec<Vec3> {
        self.bar_estimators.iter().map(|e| e.l_hat()).collect()
    }
}

/// Everything one localization tick consumes besides its own state.
pub struct LocalizationInputs<'a> {
    pub u: &'a Twist,
    pub ext: &'a ExtensionState,
    pub ext0: &'a ExtensionState,
    pub anchor: &'a Pose,
    pub l_hat_v: &'a [Vec3],
    pub samples: &'a [RegressorSample],
    pub sigma_gains: &'a [SigmaGains],
    pub barl_mode: BarlMode,
}

/// Attitude correction `sum_i k_i (vr_i x (cQ_hat * br_i))` over consecutive
/// landmark differences `vr_i` (extension frame) and `br_i` (inertial frame);
/// zero when fewer than three landmarks are available.
pub fn w_vis(
    l_hat_v: &[Vec3],
    l_bar: &[Vec3],
    cq_hat: &RotationMatrix,
    gains: &LocalizationGains,
) -> Vec3 {
    let n = l_hat_v.len().min(l_bar.len());
    if n <= 2 {
        return Vec3::ZERO;
    }
    let mut w = Vec3::ZERO;
    for i in 0..(n - 1) {
        let vr = l_hat_v[i + 1] - l_hat_v[i];
        let br = l_bar[i + 1] - l_bar[i];
        w += gains.attitude[i] * vr.cross(*cq_hat * br);
    }
    w
}

/// Outputs expressed in the inertial frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationOutputs {
    pub r_hat: RotationMatrix,
    pub x_hat: Vec3,
    pub l_hat: Vec<Vec3>,
}

/// Algebraic output map: `R_hat = cQ_hat^T Q` and
/// `l_hat_i = cQ_hat^T (vl_hat_i - xi) + x_hat`.
pub fn outputs(
    state: &LocalizationState,
    ext: &ExtensionState,
    l_hat_v: &[Vec3],
) -> LocalizationOutputs {
    let cq_t = state.cq_hat.transpose();
    LocalizationOutputs {
        r_hat: cq_t * ext.attitude,
        x_hat: state.x_hat,
        l_hat: l_hat_v
            .iter()
            .map(|&lv| cq_t * (lv - ext.position) + state.x_hat)
            .collect(),
    }
}

/// One observer tick. The landmark estimators are stepped first on the
/// anchored/feedback regressions; the attitude update then uses the exact
/// rotation exponential `exp(-dt * hat(w_vis))`, and the position update is a
/// forward-Euler step of dead-reckoning plus the per-landmark corrections
/// (summed over the landmarks visible in this tick's samples).
pub fn localization_step(
    state: &LocalizationState,
    inputs: &LocalizationInputs<'_>,
    gains: &LocalizationGains,
    dt: f64,
) -> LocalizationState {
    debug_assert!(dt > 0.0);
    let r_hat = state.cq_hat.transpose() * inputs.ext.attitude;

    let mut bar_estimators = state.bar_estimators.clone();
    for (i, est) in bar_estimators.iter_mut().enumerate() {
        let sample = match inputs.barl_mode {
            BarlMode::Anchored => {
                build_anchored_regressor(inputs.ext, inputs.ext0, inputs.anchor, &inputs.samples[i])
            }
            BarlMode::Feedback => {
                build_feedback_regressor(inputs.ext, &r_hat, state.x_hat, &inputs.samples[i])
            }
        };
        est.step(&sample, &inputs.sigma_gains[i], dt);
    }
    let l_bar: Vec<Vec3> = bar_estimators.iter().map(|e| e.l_hat()).collect();

    let w = w_vis(inputs.l_hat_v, &l_bar, &state.cq_hat, gains);
    let steps = state.steps + 1;
    let cq_hat = (rot_exp(-w, dt) * state.cq_hat).periodic_renorm(steps);

    let mut correction = Vec3::ZERO;
    let cq_t = state.cq_hat.transpose();
    for (i, sample) in inputs.samples.iter().enumerate() {
        if !sample.visible {
            continue;
        }
        let l_hat_i = cq_t * (inputs.l_hat_v[i] - inputs.ext.position) + state.x_hat;
        correction += gains.position[i] * (l_bar[i] - l_hat_i);
    }
    let x_hat = state.x_hat + (r_hat * inputs.u.linear + correction) * dt;

    LocalizationState { cq_hat, x_hat, bar_estimators, steps }
}

/// Skew part `(M - M^T) / 2`.
pub fn skew_part(m: &Mat3) -> Mat3 {
    (*m - m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::{constant_transform, virtual_landmark};
    use crate::geometry::hat;
    use crate::regressor::build_regressor;

    fn landmarks() -> Vec<Vec3> {
        vec![
            Vec3::new(3.0, 0.5, 2.6),
            Vec3::new(1.0, -2.0, 1.2),
            Vec3::new(4.0, -1.5, 2.9),
            Vec3::new(-0.5, 1.0, 1.5),
        ]
    }

    struct Scene {
        truth: Pose,
        ext: ExtensionState,
        ext0: ExtensionState,
        anchor: Pose,
        cx: Pose,
        l: Vec<Vec3>,
        lv: Vec<Vec3>,
    }

    fn scene() -> Scene {
        let anchor = Pose::new(RotationMatrix::rot_z(0.5), Vec3::new(1.0, 1.0, 2.0));
        let ext0 = ExtensionState::new(RotationMatrix::rot_z(1.6), Vec3::new(0.0, 1.0, 1.0));
        let cx = constant_transform(&anchor, &ext0);
        let truth = Pose::new(RotationMatrix::rot_z(-0.3), Vec3::new(2.5, 0.0, 2.0));
        let ext_pose = cx.compose(&truth);
        let l = landmarks();
        let lv = l.iter().map(|&li| virtual_landmark(&cx, li)).collect();
        Scene {
            truth,
            ext: ExtensionState::new(ext_pose.rotation, ext_pose.translation),
            ext0,
            anchor,
            cx,
            l,
            lv,
        }
    }

    fn samples_of(sc: &Scene) -> Vec<RegressorSample> {
        sc.l
            .iter()
            .map(|&li| {
                let y = sc.truth.rotation.transpose()
                    * (li - sc.truth.translation).normalized().unwrap();
                build_regressor(&sc.ext, Some(y), 0.0).unwrap()
            })
            .collect()
    }

    #[test]
    fn w_vis_zero_at_equilibrium_and_for_two_landmarks() {
        let sc = scene();
        let l_bar = sc.l.clone();
        let g = LocalizationGains::uniform(sc.l.len(), 1.0, 1.0);
        let w = w_vis(&sc.lv, &l_bar, &sc.cx.rotation, &g);
        assert!(w.norm() < 1e-12, "w = {w:?}");
        // Two landmarks: the correction is defined to vanish.
        let w2 = w_vis(&sc.lv[..2], &l_bar[..2], &RotationMatrix::rot_z(1.0), &g);
        assert_eq!(w2, Vec3::ZERO);
    }

    #[test]
    fn w_vis_hat_form_identity() {
        // hat(w_vis) equals twice the skew part of cQ_tilde^T M on exact
        // landmark data, with M = sum k_i (cQ r_i)(cQ r_i)^T.
        let sc = scene();
        let g = LocalizationGains::uniform(sc.l.len(), 1.0, 1.0);
        let cq_hat = RotationMatrix::rot_z(0.9) * RotationMatrix::rot_x(-0.4);
        let w = w_vis(&sc.lv, &sc.l, &cq_hat, &g);

        let cq = sc.cx.rotation;
        let cq_tilde = cq * cq_hat.transpose();
        let mut m = Mat3::ZERO;
        for i in 0..(sc.l.len() - 1) {
            let r = sc.l[i + 1] - sc.l[i];
            m = m + Mat3::outer(cq * r, cq * r) * g.attitude[i];
        }
        let lhs = hat(w);
        let rhs = skew_part(&(*cq_tilde.transpose().mat() * m)) * 2.0;
        assert!(
            (lhs - rhs).frobenius_norm() < 1e-12,
            "defect {}",
            (lhs - rhs).frobenius_norm()
        );
    }

    #[test]
    fn equilibrium_step_reduces_to_dead_reckoning() {
        let sc = scene();
        let n = sc.l.len();
        let g = LocalizationGains::uniform(n, 1.0, 1.0);
        let sg = vec![SigmaGains::new(5.0, 100.0, 5.0); n];
        let mut state = LocalizationState::init_with(
            sc.cx.rotation,
            sc.truth.translation,
            n,
            MapperKind::Gradient,
        );
        // Seed the landmark estimators with the exact inertial positions.
        for (est, &li) in state.bar_estimators.iter_mut().zip(&sc.l) {
            *est = LandmarkEstimator::Gradient { l_hat: li };
        }
        let samples = samples_of(&sc);
        let u = Twist::new(Vec3::new(0.0, 0.0, -0.4), Vec3::new(1.0, 0.0, 0.0));
        let dt = 1e-3;
        let next = localization_step(
            &state,
            &LocalizationInputs {
                u: &u,
                ext: &sc.ext,
                ext0: &sc.ext0,
                anchor: &sc.anchor,
                l_hat_v: &sc.lv,
                samples: &samples,
                sigma_gains: &sg,
                barl_mode: BarlMode::Anchored,
            },
            &g,
            dt,
        );
        // Attitude estimate untouched, position dead-reckons with the true R.
        assert!((*next.cq_hat.mat() - *sc.cx.rotation.mat()).frobenius_norm() < 1e-12);
        let expected = sc.truth.translation + sc.truth.rotation * u.linear * dt;
        assert!((next.x_hat - expected).norm() < 1e-12);
        // Bar estimators saw zero residuals.
        for (est, &li) in next.bar_estimators.iter().zip(&sc.l) {
            assert!((est.l_hat() - li).norm() < 1e-12);
        }
    }

    #[test]
    fn output_identity_chain() {
        let sc = scene();
        let n = sc.l.len();
        let state = LocalizationState {
            cq_hat: sc.cx.rotation,
            x_hat: sc.truth.translation,
            bar_estimators: (0..n)
                .map(|i| LandmarkEstimator::Gradient { l_hat: sc.l[i] })
                .collect(),
            steps: 0,
        };
        let out = outputs(&state, &sc.ext, &sc.lv);
        assert!((*out.r_hat.mat() - *sc.truth.rotation.mat()).frobenius_norm() < 1e-12);
        for (lh, &li) in out.l_hat.iter().zip(&sc.l) {
            assert!((*lh - li).norm() < 1e-12);
        }
    }

    #[test]
    fn output_attitude_with_identity_transform() {
        let ext = ExtensionState::new(RotationMatrix::rot_z(0.7), Vec3::ZERO);
        let state = LocalizationState::init(3, MapperKind::Gradient, Vec3::ZERO);
        let out = outputs(&state, &ext, &[Vec3::ZERO; 3]);
        assert!((*out.r_hat.mat() - *ext.attitude.mat()).frobenius_norm() == 0.0);
    }
}
