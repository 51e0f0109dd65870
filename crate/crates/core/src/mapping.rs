//! Per-landmark mapping observer in the extension frame.
//!
//! Two interchangeable estimators consume the regression samples:
//!
//! * a scalarized least-squares observer: a first-order filter pair turns the
//!   rank-deficient regression into an extended one (`q_e = Phi * vl`), the
//!   adjugate decouples it into scalar regressions (`Y = Delta * vl`), and an
//!   integral channel (`chi`, `omega`) accumulates past excitation so the
//!   estimate keeps converging after the motion stops;
//! * a normalized gradient step, which only makes progress while the current
//!   regressor excites the error direction.
//!
//! A batch normal-equation solver over the whole sample history acts as the
//! ground-truth oracle both estimators are tested against.

use thiserror::Error;

use crate::geometry::{adjugate, Mat3, Vec3};
use crate::regressor::RegressorSample;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum MappingError {
    /// The accumulated normal matrix has rank < 3; at least two samples with
    /// distinct projector null spaces are needed.
    #[error("singular normal matrix: accumulated regressor rank < 3")]
    SingularNormalMatrix,
}

/// Which landmark estimator runs, for both the extension-frame mapping stage
/// and the localization-stage estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapperKind {
    Drem,
    Gradient,
}

/// Gains of the Sigma observer: filter pole `alpha` (1/s), adaptation gain
/// `gamma`, and the weight `k_i` on the integral-information channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaGains {
    pub alpha: f64,
    pub gamma: f64,
    pub k_i: f64,
}

impl SigmaGains {
    pub fn new(alpha: f64, gamma: f64, k_i: f64) -> Self {
        assert!(alpha > 0.0 && gamma > 0.0 && k_i > 0.0, "gains must be positive");
        SigmaGains { alpha, gamma, k_i }
    }
}

/// Internal state of the Sigma observer for one landmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaState {
    /// Filtered regressand.
    pub q_e: Vec3,
    /// Filtered regressor (symmetric PSD).
    pub phi_filter: Mat3,
    /// Integral-channel state.
    pub chi: Vec3,
    /// Forgetting state in (0, 1], monotone non-increasing.
    pub omega: f64,
    /// Landmark estimate in the extension frame.
    pub l_hat: Vec3,
    /// Recorded chi(0).
    pub chi0: Vec3,
}

/// The mixed signals derived from a [`SigmaState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DremSignals {
    /// det of the filtered regressor, clamped at zero.
    pub delta: f64,
    /// Decoupled regressand `adj(Phi) * q_e`.
    pub y: Vec3,
    /// `delta + k_i * (1 - omega)`.
    pub delta_e: f64,
    /// `y + k_i * (chi - omega * chi(0))`.
    pub y_e: Vec3,
}

/// Zero-filter initialization: `q_e = 0`, `Phi = 0`, `omega = 1`. Starting the
/// filters at zero removes the exponentially decaying mismatch term from the
/// extended regression entirely.
pub fn sigma_init(l_hat0: Vec3, chi0: Vec3) -> SigmaState {
    SigmaState {
        q_e: Vec3::ZERO,
        phi_filter: Mat3::ZERO,
        chi: chi0,
        omega: 1.0,
        l_hat: l_hat0,
        chi0,
    }
}

/// Mixed signals from the current state.
///
/// `delta` is computed as the determinant of the symmetrized filter matrix
/// and clamped at zero: the filter is PSD in exact arithmetic and the
/// non-negativity of `delta` is load-bearing for the integral channel.
pub fn drem_signals(state: &SigmaState, gains: &SigmaGains) -> DremSignals {
    let phi_sym = state.phi_filter.symmetrized();
    let delta = phi_sym.det().max(0.0);
    let y = adjugate(&phi_sym) * state.q_e;
    let delta_e = delta + gains.k_i * (1.0 - state.omega);
    let y_e = y + gains.k_i * (state.chi - state.chi0 * state.omega);
    DremSignals { delta, y, delta_e, y_e }
}

/// One forward-Euler tick of the five observer equations, with the mixed
/// signals evaluated at the pre-step state:
///
/// ```text
/// q_e  <- q_e  + dt * alpha * (phi q   - q_e)
/// Phi  <- Phi  + dt * alpha * (phi phi^T - Phi)
/// chi  <- chi  + dt * delta * (Y - delta chi)
/// omega <- omega * (1 - dt * delta^2)
/// l_hat <- l_hat + dt * gamma * delta_e * (Y_e - delta_e * l_hat)
/// ```
///
/// The filter feeds on `phi phi^T` and `phi q`; for the plain projector
/// regressor (`phi` symmetric idempotent) this coincides with filtering `phi`
/// itself, and it keeps the extended regression exact for the rotated
/// anchored/feedback regressors as well. Invisible samples enter as zeros, so
/// the filters only decay.
pub fn sigma_step(
    state: &SigmaState,
    sample: &RegressorSample,
    gains: &SigmaGains,
    dt: f64,
) -> SigmaState {
    debug_assert!(dt > 0.0);
    let sig = drem_signals(state, gains);
    let a = gains.alpha * dt;
    let q_e = state.q_e + (sample.phi * sample.q - state.q_e) * a;
    let phi_filter = state.phi_filter + (sample.phi * sample.phi.transpose() - state.phi_filter) * a;
    let chi = state.chi + (sig.y - state.chi * sig.delta) * (sig.delta * dt);
    let omega = state.omega * (1.0 - dt * sig.delta * sig.delta);
    let l_hat = state.l_hat + (sig.y_e - state.l_hat * sig.delta_e) * (gains.gamma * sig.delta_e * dt);
    SigmaState { q_e, phi_filter, chi, omega, l_hat, chi0: state.chi0 }
}

/// Normalized gradient update `l_hat + phi (q - phi^T l_hat) / (gamma + 1)`;
/// invisible samples leave the estimate untouched.
///
/// This is the least-squares descent step for the regression `q = phi^T l`.
/// For the plain projector regressor it collapses to
/// `l_hat + (q - phi l_hat) / (gamma + 1)`, and applied to the feedback
/// regression it reproduces the closed-loop discrete estimator driven by
/// `proj(R_hat y)` exactly.
pub fn gradient_step(l_hat: Vec3, sample: &RegressorSample, gamma: f64) -> Vec3 {
    if !sample.visible {
        return l_hat;
    }
    l_hat + sample.phi * (sample.q - sample.phi.transpose() * l_hat) * (1.0 / (gamma + 1.0))
}

/// A landmark estimator of either kind, with a uniform step/readout surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LandmarkEstimator {
    Drem(SigmaState),
    Gradient { l_hat: Vec3 },
}

impl LandmarkEstimator {
    pub fn new(kind: MapperKind, l_hat0: Vec3) -> Self {
        match kind {
            MapperKind::Drem => LandmarkEstimator::Drem(sigma_init(l_hat0, l_hat0)),
            MapperKind::Gradient => LandmarkEstimator::Gradient { l_hat: l_hat0 },
        }
    }

    pub fn step(&mut self, sample: &RegressorSample, gains: &SigmaGains, dt: f64) {
        match self {
            LandmarkEstimator::Drem(state) => *state = sigma_step(state, sample, gains, dt),
            LandmarkEstimator::Gradient { l_hat } => {
                *l_hat = gradient_step(*l_hat, sample, gains.gamma)
            }
        }
    }

    pub fn l_hat(&self) -> Vec3 {
        match self {
            LandmarkEstimator::Drem(state) => state.l_hat,
            LandmarkEstimator::Gradient { l_hat } => *l_hat,
        }
    }

    pub fn sigma_state(&self) -> Option<&SigmaState> {
        match self {
            LandmarkEstimator::Drem(state) => Some(state),
            LandmarkEstimator::Gradient { .. } => None,
        }
    }
}

/// The certified lower bound on the exponential convergence rate once an
/// interval-excitation certificate `(delta, t_c)` is in hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBound {
    /// Guaranteed exponential rate.
    pub rate: f64,
    /// Settling offset `1 / (6 alpha)` after which the bound applies.
    pub tau_star: f64,
    /// Excitation floor `(alpha * delta * exp(-alpha * t_c))^3`.
    pub delta0: f64,
}

/// Evaluate the rate bound `gamma * k_i^2 * (1 - exp(-delta0^2 / (6 alpha e)))^2`.
///
/// `1 - exp(-x)` goes through `exp_m1` so the bound stays positive (instead
/// of rounding to zero) for the tiny floors produced by weak certificates.
pub fn gamma_star(gains: &SigmaGains, delta: f64, t_c: f64) -> RateBound {
    assert!(delta > 0.0 && t_c > 0.0, "certificate values must be positive");
    let delta0 = (gains.alpha * delta * (-gains.alpha * t_c).exp()).powi(3);
    let arg = delta0 * delta0 / (6.0 * gains.alpha * std::f64::consts::E);
    let one_minus_exp = -(-arg).exp_m1();
    let rate = gains.gamma * gains.k_i * gains.k_i * one_minus_exp * one_minus_exp;
    RateBound { rate, tau_star: 1.0 / (6.0 * gains.alpha), delta0 }
}

/// Batch normal-equation solution over a sample history:
/// `(sum phi phi^T) vl = sum phi q`.
///
/// This is the ground-truth oracle for the online estimators. Fails while the
/// accumulated regressors do not span all three directions, which takes at
/// least two distinct bearings.
pub fn batch_ls_oracle(samples: &[RegressorSample]) -> Result<Vec3, MappingError> {
    let mut normal = Mat3::ZERO;
    let mut rhs = Vec3::ZERO;
    for s in samples {
        if !s.visible {
            continue;
        }
        normal = normal + s.phi * s.phi.transpose();
        rhs += s.phi * s.q;
    }
    normal.solve(rhs).ok_or(MappingError::SingularNormalMatrix)
}
