//! Visual-inertial SLAM observer toolkit.
//!
//! A deterministic rigid-body simulator plus a bearing-only SLAM observer
//! stack built on a parameter-estimation formulation: an open-loop dynamic
//! extension turns landmark mapping into linear regression on constants, a
//! scalarized least-squares observer (with an integral-excitation channel)
//! estimates the landmarks, and a cascaded localization observer recovers
//! pose and map in the inertial frame. A body-frame LTV Kalman filter is
//! included as a comparison baseline, together with excitation analysis,
//! convergence-rate certificates, and a batch runner with CSV/JSON exports.

pub mod baseline;
pub mod excitation;
pub mod extension;
pub mod geometry;
pub mod harness;
pub mod localization;
pub mod mapping;
pub mod regressor;
pub mod sim;

pub use baseline::{kf_predict, kf_update, BodyLandmarkBelief, KfConfig};
pub use excitation::{
    certify, certify_with, delta_floor, gramian, ExcitationCertificate, ExcitationKind,
};
pub use extension::{constant_transform, extension_step, virtual_landmark, ExtensionState};
pub use geometry::{
    adjugate, attitude_error, hat, projector, rot_exp, GeometryError, Mat3, Pose, RotationMatrix,
    Twist, Vec3,
};
pub use harness::{basin_sweep, compare, run, run_with_options, RunOptions, RunRecord, TickOrder};
pub use localization::{
    localization_step, outputs, w_vis, LocalizationGains, LocalizationInputs, LocalizationState,
};
pub use mapping::{
    batch_ls_oracle, drem_signals, gamma_star, gradient_step, sigma_init, sigma_step,
    LandmarkEstimator, MapperKind, SigmaGains, SigmaState,
};
pub use regressor::{
    build_anchored_regressor, build_feedback_regressor, build_regressor, BarlMode, RegressorSample,
};
pub use sim::{
    measure_bearing, measure_velocity, scenario_ie, scenario_pe, step_truth, GroundTruthState,
    LandmarkMap, NoiseModel, NoiseRng, ProfileSegment, Scenario, TrajectoryProfile,
    VisibilitySchedule,
};
