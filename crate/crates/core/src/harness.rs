//! Batch runner: executes a scenario end to end (simulator, dynamic
//! extension, mapping and localization observers, optional baseline filter)
//! and records every signal the analyses and exports need.
//!
//! The per-tick order follows the discrete observer loop: integrate the
//! extension, take the new measurements, step the per-landmark mapping
//! estimators, then the localization block, then read out the inertial-frame
//! outputs. A swapped order is available purely so tests can verify the
//! pipeline is order-sensitive.

pub mod acceptance;
pub mod analysis;
pub mod config;
pub mod export;

use thiserror::Error;

use crate::baseline::{kf_predict, kf_update, BaselineError, BodyLandmarkBelief};
use crate::extension::{constant_transform, extension_step, virtual_landmark, ExtensionState};
use crate::geometry::{attitude_error, GeometryError, Pose, RotationMatrix, Vec3};
use crate::localization::{
    localization_step, outputs, LocalizationInputs, LocalizationState,
};
use crate::mapping::{drem_signals, LandmarkEstimator};
use crate::regressor::{build_regressor, RegressorError, RegressorSample};
use crate::sim::{
    measure_bearing, measure_velocity, step_truth, GroundTruthState, NoiseRng, Scenario,
    ScenarioError,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("at t = {t} s: {source}")]
    Geometry { t: f64, source: GeometryError },
    #[error("at t = {t} s: {source}")]
    Regressor { t: f64, source: RegressorError },
    #[error("at t = {t} s: {source}")]
    Baseline { t: f64, source: BaselineError },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config error: {0}")]
    Config(String),
}

/// Pipeline order within one tick; swapping is only for the order-sensitivity
/// diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickOrder {
    MappingThenLocalization,
    LocalizationThenMapping,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub tick_order: TickOrder,
    pub with_baseline: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { tick_order: TickOrder::MappingThenLocalization, with_baseline: false }
    }
}

/// Time series recorded for one landmark.
#[derive(Debug, Clone)]
pub struct LandmarkTrace {
    /// Measured body-frame bearing (None while invisible).
    pub bearings: Vec<Option<Vec3>>,
    pub samples: Vec<RegressorSample>,
    /// Extension-frame estimate.
    pub l_hat_v: Vec<Vec3>,
    /// Inertial-frame estimate from the localization-stage estimator bank.
    pub l_bar: Vec<Vec3>,
    /// Inertial-frame output estimate.
    pub l_hat: Vec<Vec3>,
    /// Signed extension-frame error against the constant-transform oracle.
    pub err_v: Vec<Vec3>,
    pub err_inertial: Vec<f64>,
    pub err_bar: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta_e: Vec<f64>,
    pub omega: Vec<f64>,
    /// Baseline filter error |body-frame estimate - truth| (empty unless the
    /// run carried the baseline).
    pub baseline_err: Vec<f64>,
}

impl LandmarkTrace {
    fn with_capacity(n: usize) -> Self {
        LandmarkTrace {
            bearings: Vec::with_capacity(n),
            samples: Vec::with_capacity(n),
            l_hat_v: Vec::with_capacity(n),
            l_bar: Vec::with_capacity(n),
            l_hat: Vec::with_capacity(n),
            err_v: Vec::with_capacity(n),
            err_inertial: Vec::with_capacity(n),
            err_bar: Vec::with_capacity(n),
            delta: Vec::with_capacity(n),
            delta_e: Vec::with_capacity(n),
            omega: Vec::with_capacity(n),
            baseline_err: Vec::new(),
        }
    }
}

/// Full run record on a uniform time grid (`t[0] = 0` up to the horizon).
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub scenario: Scenario,
    pub t: Vec<f64>,
    pub truth: Vec<Pose>,
    pub ext: Vec<Pose>,
    pub x_hat: Vec<Vec3>,
    pub r_hat: Vec<RotationMatrix>,
    pub att_err: Vec<f64>,
    pub pos_err: Vec<f64>,
    /// Constant transform between extension and inertial frames, from the
    /// initial conditions (exact reference in the noise-free case).
    pub cx: Pose,
    /// Extension-frame landmark references `cx * l_i`.
    pub vl: Vec<Vec3>,
    pub landmarks: Vec<LandmarkTrace>,
}

impl RunRecord {
    pub fn n_steps(&self) -> usize {
        self.t.len().saturating_sub(1)
    }

    /// Index of the sample at (or just before) time `t`.
    pub fn index_at(&self, t: f64) -> usize {
        if self.t.is_empty() {
            return 0;
        }
        self.t.partition_point(|&x| x <= t + 1e-12).saturating_sub(1)
    }

    /// An empty record carrying only the scenario, for format edge cases.
    pub fn empty(scenario: Scenario) -> Self {
        let n = scenario.n_landmarks();
        let initial_pose = scenario.profile.initial_pose;
        let ext0 = ExtensionState::new(scenario.ext_init.0, scenario.ext_init.1);
        let cx = constant_transform(&initial_pose, &ext0);
        let vl = scenario.landmarks.positions.iter().map(|&l| virtual_landmark(&cx, l)).collect();
        RunRecord {
            scenario,
            t: Vec::new(),
            truth: Vec::new(),
            ext: Vec::new(),
            x_hat: Vec::new(),
            r_hat: Vec::new(),
            att_err: Vec::new(),
            pos_err: Vec::new(),
            cx,
            vl,
            landmarks: (0..n).map(|_| LandmarkTrace::with_capacity(0)).collect(),
        }
    }
}

/// Run a scenario with the standard tick order and no baseline filter.
pub fn run(scenario: &Scenario) -> Result<RunRecord, RunError> {
    run_with_options(scenario, RunOptions::default())
}

/// Run a scenario with the baseline body-frame Kalman filter fed the same
/// measurement stream, for side-by-side comparison.
pub fn compare(scenario: &Scenario) -> Result<RunRecord, RunError> {
    run_with_options(scenario, RunOptions { with_baseline: true, ..Default::default() })
}

pub fn run_with_options(scenario: &Scenario, options: RunOptions) -> Result<RunRecord, RunError> {
    scenario.validate()?;
    let n_land = scenario.n_landmarks();
    let n_steps = scenario.n_steps();
    let dt = scenario.dt;
    let noise = scenario.effective_noise();
    let mut rng = NoiseRng::from_seed(noise.seed);

    let anchor = scenario.profile.initial_pose;
    let mut truth = GroundTruthState::initial(&scenario.profile);
    let ext0 = ExtensionState::new(scenario.ext_init.0, scenario.ext_init.1);
    let mut ext = ext0;
    let cx = constant_transform(&anchor, &ext0);
    let vl: Vec<Vec3> =
        scenario.landmarks.positions.iter().map(|&l| virtual_landmark(&cx, l)).collect();

    let mut mappers: Vec<LandmarkEstimator> =
        (0..n_land).map(|_| LandmarkEstimator::new(scenario.mapper, Vec3::ZERO)).collect();
    let mut loc = LocalizationState::init_with(
        scenario.loc_init_cq,
        scenario.loc_init_x.unwrap_or(scenario.ext_init.1),
        n_land,
        scenario.mapper,
    );
    let mut beliefs: Vec<BodyLandmarkBelief> = (0..n_land)
        .map(|_| BodyLandmarkBelief::new(Vec3::ZERO, scenario.kf.initial_cov))
        .collect();

    let mut record = RunRecord {
        scenario: scenario.clone(),
        t: Vec::with_capacity(n_steps + 1),
        truth: Vec::with_capacity(n_steps + 1),
        ext: Vec::with_capacity(n_steps + 1),
        x_hat: Vec::with_capacity(n_steps + 1),
        r_hat: Vec::with_capacity(n_steps + 1),
        att_err: Vec::with_capacity(n_steps + 1),
        pos_err: Vec::with_capacity(n_steps + 1),
        cx,
        vl: vl.clone(),
        landmarks: (0..n_land).map(|_| LandmarkTrace::with_capacity(n_steps + 1)).collect(),
    };

    let measure_all = |truth: &GroundTruthState,
                       rng: &mut NoiseRng|
     -> Result<Vec<Option<Vec3>>, RunError> {
        let mut out = Vec::with_capacity(n_land);
        for (i, &l) in scenario.landmarks.positions.iter().enumerate() {
            if scenario.visibility.is_visible(i, truth.t) {
                let y = measure_bearing(truth, l, &noise, rng)
                    .map_err(|source| RunError::Geometry { t: truth.t, source })?;
                out.push(Some(y));
            } else {
                out.push(None);
            }
        }
        Ok(out)
    };

    let build_samples = |ext: &ExtensionState,
                         bearings: &[Option<Vec3>],
                         t: f64|
     -> Result<Vec<RegressorSample>, RunError> {
        bearings
            .iter()
            .map(|&y| build_regressor(ext, y, t).map_err(|source| RunError::Regressor { t, source }))
            .collect()
    };

    // Record the initial instant, including the t = 0 samples.
    let bearings0 = measure_all(&truth, &mut rng)?;
    let samples0 = build_samples(&ext, &bearings0, 0.0)?;
    record_tick(
        &mut record, scenario, &truth, &ext, &loc, &mappers, &samples0, &bearings0, &beliefs,
        options.with_baseline,
    );

    for _ in 0..n_steps {
        // Single time source: the profile is evaluated at the truth clock for
        // both the true step and the measured twist, so segment switches land
        // on the same tick for the truth and the extension.
        let u_meas = measure_velocity(&scenario.profile, truth.t, &noise, &mut rng);

        truth = step_truth(&truth, &scenario.profile, dt);
        ext = extension_step(&ext, &u_meas, dt);

        let bearings = measure_all(&truth, &mut rng)?;
        let samples = build_samples(&ext, &bearings, truth.t)?;

        let step_mapping = |mappers: &mut Vec<LandmarkEstimator>| {
            for (i, est) in mappers.iter_mut().enumerate() {
                est.step(&samples[i], &scenario.sigma_gains[i], dt);
            }
        };
        let step_loc = |loc: &LocalizationState, l_hat_v: &[Vec3]| {
            localization_step(
                loc,
                &LocalizationInputs {
                    u: &u_meas,
                    ext: &ext,
                    ext0: &ext0,
                    anchor: &anchor,
                    l_hat_v,
                    samples: &samples,
                    sigma_gains: &scenario.sigma_gains,
                    barl_mode: scenario.barl_mode,
                },
                &scenario.loc_gains,
                dt,
            )
        };

        match options.tick_order {
            TickOrder::MappingThenLocalization => {
                step_mapping(&mut mappers);
                let l_hat_v: Vec<Vec3> = mappers.iter().map(|m| m.l_hat()).collect();
                loc = step_loc(&loc, &l_hat_v);
            }
            TickOrder::LocalizationThenMapping => {
                let l_hat_v: Vec<Vec3> = mappers.iter().map(|m| m.l_hat()).collect();
                loc = step_loc(&loc, &l_hat_v);
                step_mapping(&mut mappers);
            }
        }

        if options.with_baseline {
            for (i, belief) in beliefs.iter_mut().enumerate() {
                *belief = kf_predict(belief, &u_meas, dt, scenario.kf.process_noise);
                if let Some(y) = bearings[i] {
                    *belief = kf_update(belief, y, scenario.kf.measurement_noise)
                        .map_err(|source| RunError::Baseline { t: truth.t, source })?;
                }
            }
        }

        record_tick(
            &mut record, scenario, &truth, &ext, &loc, &mappers, &samples, &bearings, &beliefs,
            options.with_baseline,
        );
    }

    Ok(record)
}

#[allow(clippy::too_many_arguments)]
fn record_tick(
    record: &mut RunRecord,
    scenario: &Scenario,
    truth: &GroundTruthState,
    ext: &ExtensionState,
    loc: &LocalizationState,
    mappers: &[LandmarkEstimator],
    samples: &[RegressorSample],
    bearings: &[Option<Vec3>],
    beliefs: &[BodyLandmarkBelief],
    with_baseline: bool,
) {
    let l_hat_v: Vec<Vec3> = mappers.iter().map(|m| m.l_hat()).collect();
    let out = outputs(loc, ext, &l_hat_v);

    record.t.push(truth.t);
    record.truth.push(truth.pose);
    record.ext.push(ext.pose());
    record.x_hat.push(out.x_hat);
    record.r_hat.push(out.r_hat);
    record.att_err.push(attitude_error(&truth.pose.rotation, &out.r_hat));
    record.pos_err.push((out.x_hat - truth.pose.translation).norm());

    let l_bar = loc.l_bar();
    for i in 0..scenario.n_landmarks() {
        let li = scenario.landmarks.positions[i];
        let trace = &mut record.landmarks[i];
        trace.bearings.push(bearings[i]);
        trace.samples.push(samples[i]);
        trace.l_hat_v.push(l_hat_v[i]);
        trace.l_bar.push(l_bar[i]);
        trace.l_hat.push(out.l_hat[i]);
        trace.err_v.push(l_hat_v[i] - record.vl[i]);
        trace.err_inertial.push((out.l_hat[i] - li).norm());
        trace.err_bar.push((l_bar[i] - li).norm());
        match mappers[i].sigma_state() {
            Some(state) => {
                let sig = drem_signals(state, &scenario.sigma_gains[i]);
                trace.delta.push(sig.delta);
                trace.delta_e.push(sig.delta_e);
                trace.omega.push(state.omega);
            }
            None => {
                trace.delta.push(0.0);
                trace.delta_e.push(0.0);
                trace.omega.push(1.0);
            }
        }
        if with_baseline {
            let true_bl = truth.pose.rotation.transpose() * (li - truth.pose.translation);
            trace.baseline_err.push((beliefs[i].mean - true_bl).norm());
        }
    }
}

/// Final localization errors of `n` runs that differ only in the initial
/// transform estimate, drawn Haar-uniformly on SO(3). Runs execute in
/// parallel; results are ordered by draw index, so the output is
/// deterministic for a fixed `seed`.
pub fn basin_sweep(
    scenario: &Scenario,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>, RunError> {
    let mut rng = NoiseRng::from_seed(seed);
    let draws: Vec<RotationMatrix> = (0..n_draws).map(|_| rng.rotation()).collect();
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let chunk = n_draws.div_ceil(threads.max(1));
    let mut results: Vec<Option<Result<(f64, f64), RunError>>> = Vec::new();
    results.resize_with(n_draws, || None);

    std::thread::scope(|scope| {
        for (slot_chunk, draw_chunk) in results.chunks_mut(chunk).zip(draws.chunks(chunk)) {
            scope.spawn(move || {
                for (slot, cq0) in slot_chunk.iter_mut().zip(draw_chunk) {
                    let mut sc = scenario.clone();
                    sc.loc_init_cq = *cq0;
                    *slot = Some(run(&sc).map(|record| {
                        let last = record.t.len() - 1;
                        (record.att_err[last], record.pos_err[last])
                    }));
                }
            });
        }
    });

    results
        .into_iter()
        .map(|r| r.expect("every draw slot is filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{scenario_ie, scenario_pe};

    #[test]
    fn run_is_deterministic() {
        let mut sc = scenario_pe();
        sc.horizon = 0.5;
        sc.noise_enabled = true;
        let a = run(&sc).unwrap();
        let b = run(&sc).unwrap();
        assert_eq!(a.t, b.t);
        assert_eq!(a.x_hat, b.x_hat);
        for (la, lb) in a.landmarks.iter().zip(&b.landmarks) {
            assert_eq!(la.l_hat_v, lb.l_hat_v);
            assert_eq!(la.bearings, lb.bearings);
        }
    }

    #[test]
    fn different_seeds_differ_under_noise() {
        let mut sc = scenario_pe();
        sc.horizon = 0.2;
        sc.noise_enabled = true;
        let a = run(&sc).unwrap();
        sc.noise.seed = 7;
        let b = run(&sc).unwrap();
        assert_ne!(a.landmarks[0].bearings, b.landmarks[0].bearings);
    }

    #[test]
    fn tick_reorder_changes_the_trace() {
        let mut sc = scenario_pe();
        sc.horizon = 1.0;
        let a = run_with_options(&sc, RunOptions::default()).unwrap();
        let b = run_with_options(
            &sc,
            RunOptions { tick_order: TickOrder::LocalizationThenMapping, with_baseline: false },
        )
        .unwrap();
        let last = a.t.len() - 1;
        let diff = (a.x_hat[last] - b.x_hat[last]).norm();
        assert!(diff > 0.0, "pipeline must be order-sensitive");
        // Mapping estimates themselves are unaffected by the swap.
        assert_eq!(a.landmarks[0].l_hat_v, b.landmarks[0].l_hat_v);
    }

    #[test]
    fn record_grid_is_uniform_and_complete() {
        let mut sc = scenario_ie();
        sc.horizon = 0.25;
        let record = run(&sc).unwrap();
        assert_eq!(record.t.len(), sc.n_steps() + 1);
        for w in record.t.windows(2) {
            assert!((w[1] - w[0] - sc.dt).abs() < 1e-12);
        }
        assert_eq!(record.landmarks.len(), 6);
        for trace in &record.landmarks {
            assert_eq!(trace.samples.len(), record.t.len());
            assert_eq!(trace.l_hat_v.len(), record.t.len());
        }
        assert_eq!(record.index_at(0.1), (0.1 / sc.dt).round() as usize);
    }

    #[test]
    fn module_errors_carry_a_timestamp() {
        // Trajectory passing exactly through a landmark: the bearing becomes
        // degenerate mid-run and the error reports when.
        let mut sc = scenario_pe();
        sc.horizon = 1.0;
        // The robot starts at [1,1,2] moving along body-x; place the landmark
        // half a second ahead on the straight-line start of the arc. Use a
        // straight profile so the hit time is exact.
        sc.profile.segments[0].twist.angular = crate::geometry::Vec3::ZERO;
        let ahead = sc.profile.initial_pose.rotation * crate::geometry::Vec3::new(0.5, 0.0, 0.0);
        sc.landmarks.positions[0] = sc.profile.initial_pose.translation + ahead;
        let err = run(&sc).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("at t = 0.5"), "got: {msg}");
        assert!(msg.contains("degenerate"), "got: {msg}");
    }

    #[test]
    fn baseline_traces_only_when_requested() {
        let mut sc = scenario_pe();
        sc.horizon = 0.1;
        let plain = run(&sc).unwrap();
        assert!(plain.landmarks[0].baseline_err.is_empty());
        let with = compare(&sc).unwrap();
        assert_eq!(with.landmarks[0].baseline_err.len(), with.t.len());
    }
}
