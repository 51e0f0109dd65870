//! Open-loop dynamic extension on SE(3).
//!
//! The extension integrates the measured body velocities exactly like the
//! true kinematics but from its own initial condition, so its pose stays a
//! constant rigid transform away from the true pose. That constant transform
//! is what the localization observer later identifies; here we only
//! integrate and expose the closed-form constant for use as a test oracle.

use crate::geometry::{rot_exp, Pose, RotationMatrix, Twist, Vec3};

/// State of the dynamic extension: attitude `Q` and position `xi`, together
/// a pose in the extension frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionState {
    pub attitude: RotationMatrix,
    pub position: Vec3,
    /// Compensation term of the position accumulation.
    comp: Vec3,
    steps: u64,
}

impl ExtensionState {
    pub fn new(attitude: RotationMatrix, position: Vec3) -> Self {
        ExtensionState { attitude, position, comp: Vec3::ZERO, steps: 0 }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.attitude, self.position)
    }
}

/// One compensated-summation step: accumulates `increment` into `sum`
/// without the O(|sum| * eps) per-step rounding of a plain add.
pub(crate) fn kahan_add(sum: Vec3, comp: Vec3, increment: Vec3) -> (Vec3, Vec3) {
    let y = increment - comp;
    let t = sum + y;
    let comp = (t - sum) - y;
    (t, comp)
}

/// One integration tick with the measured twist `u` held over `dt`:
/// `xi <- xi + dt * Q v`, then `Q <- Q exp(dt * hat(omega))`, with periodic
/// drift control on the attitude product.
pub fn extension_step(state: &ExtensionState, u: &Twist, dt: f64) -> ExtensionState {
    debug_assert!(dt > 0.0);
    let (position, comp) = kahan_add(state.position, state.comp, state.attitude * u.linear * dt);
    let steps = state.steps + 1;
    let attitude = (state.attitude * rot_exp(u.angular, dt)).periodic_renorm(steps);
    ExtensionState { attitude, position, comp, steps }
}

/// The constant transform between the extension frame and the inertial
/// frame, from the two initial conditions:
/// `T(Q(0) R(0)^T, xi(0) - Q(0) R(0)^T x(0))`.
///
/// Needs ground-truth access, so it serves as a test oracle rather than as
/// part of any observer.
pub fn constant_transform(x0: &Pose, ext0: &ExtensionState) -> Pose {
    let cq = ext0.attitude * x0.rotation.transpose();
    let cxi = ext0.position - cq * x0.translation;
    Pose::new(cq, cxi)
}

/// Landmark coordinates expressed in the extension frame: `cxi + cQ * l`.
/// Constant along any trajectory.
pub fn virtual_landmark(cx: &Pose, l: Vec3) -> Vec3 {
    cx.apply(l)
}
