//! Human-readable scenario configs: one `key = value` pair per line, `#`
//! comments, repeatable keys for lists. Writing and re-parsing a scenario is
//! lossless (floats use shortest round-trip formatting).
//!
//! Schema (see the project README for the full description):
//!
//! ```text
//! name = pe
//! dt = 0.001
//! horizon = 20
//! seed = 42
//! mapper = drem                 # drem | gradient
//! barl = anchored               # anchored | feedback
//! noise_enabled = false
//! noise_sigma_v = 0.01
//! noise_sigma_omega = 0.005
//! noise_sigma_bearing = 0.01
//! rho = 1 1 1
//! initial_attitude = <9 numbers, row-major>
//! initial_position = 1 1 2
//! ext_attitude = <9 numbers, row-major>
//! ext_position = 0 1 1
//! alpha = 5                     # one value (broadcast) or one per landmark
//! gamma = 100
//! k_i = 5
//! loc_k = 1
//! loc_sigma = 1
//! kf_initial_cov = 10
//! kf_process_noise = 0.0001
//! kf_measurement_noise = 0.01
//! segment = 20 1 0 0 0 0 -0.4   # t_end vx vy vz wx wy wz (repeatable)
//! landmark = 2.46 1.63 2.4      # x y z (repeatable)
//! visibility = 0 0 12           # landmark t_start t_end (repeatable)
//! ```

use crate::baseline::KfConfig;
use crate::geometry::{Mat3, Pose, RotationMatrix, Twist, Vec3};
use crate::harness::RunError;
use crate::localization::LocalizationGains;
use crate::mapping::{MapperKind, SigmaGains};
use crate::regressor::BarlMode;
use crate::sim::{
    LandmarkMap, NoiseModel, ProfileSegment, Scenario, TrajectoryProfile, VisibilitySchedule,
};

fn fmt_floats(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&format!("{v}"));
    }
}

fn line(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    out.push_str(" = ");
    fmt_floats(out, values);
    out.push('\n');
}

fn mat_values(m: &Mat3) -> Vec<f64> {
    let mut v = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            v.push(m[(i, j)]);
        }
    }
    v
}

/// Render a scenario as config text.
pub fn to_config(sc: &Scenario) -> String {
    let mut out = String::new();
    out.push_str(&format!("name = {}\n", sc.name));
    line(&mut out, "dt", &[sc.dt]);
    line(&mut out, "horizon", &[sc.horizon]);
    out.push_str(&format!("seed = {}\n", sc.noise.seed));
    out.push_str(&format!(
        "mapper = {}\n",
        match sc.mapper {
            MapperKind::Drem => "drem",
            MapperKind::Gradient => "gradient",
        }
    ));
    out.push_str(&format!(
        "barl = {}\n",
        match sc.barl_mode {
            BarlMode::Anchored => "anchored",
            BarlMode::Feedback => "feedback",
        }
    ));
    out.push_str(&format!("noise_enabled = {}\n", sc.noise_enabled));
    line(&mut out, "noise_sigma_v", &[sc.noise.sigma_v]);
    line(&mut out, "noise_sigma_omega", &[sc.noise.sigma_omega]);
    line(&mut out, "noise_sigma_bearing", &[sc.noise.sigma_bearing]);
    line(&mut out, "rho", &sc.rho);
    line(&mut out, "initial_attitude", &mat_values(sc.profile.initial_pose.rotation.mat()));
    line(&mut out, "initial_position", &sc.profile.initial_pose.translation.as_array());
    line(&mut out, "ext_attitude", &mat_values(sc.ext_init.0.mat()));
    line(&mut out, "ext_position", &sc.ext_init.1.as_array());
    let alphas: Vec<f64> = sc.sigma_gains.iter().map(|g| g.alpha).collect();
    let gammas: Vec<f64> = sc.sigma_gains.iter().map(|g| g.gamma).collect();
    let kis: Vec<f64> = sc.sigma_gains.iter().map(|g| g.k_i).collect();
    line(&mut out, "alpha", &alphas);
    line(&mut out, "gamma", &gammas);
    line(&mut out, "k_i", &kis);
    line(&mut out, "loc_k", &sc.loc_gains.attitude);
    line(&mut out, "loc_sigma", &sc.loc_gains.position);
    line(&mut out, "kf_initial_cov", &[sc.kf.initial_cov]);
    line(&mut out, "kf_process_noise", &[sc.kf.process_noise]);
    line(&mut out, "kf_measurement_noise", &[sc.kf.measurement_noise]);
    for seg in &sc.profile.segments {
        let mut v = vec![seg.t_end];
        v.extend_from_slice(&seg.twist.linear.as_array());
        v.extend_from_slice(&seg.twist.angular.as_array());
        line(&mut out, "segment", &v);
    }
    for l in &sc.landmarks.positions {
        line(&mut out, "landmark", &l.as_array());
    }
    for (i, windows) in sc.visibility.windows.iter().enumerate() {
        for &(a, b) in windows {
            line(&mut out, "visibility", &[i as f64, a, b]);
        }
    }
    out
}

struct Entry {
    key: String,
    value: String,
    line_no: usize,
}

fn bad(line_no: usize, msg: impl std::fmt::Display) -> RunError {
    RunError::Config(format!("line {line_no}: {msg}"))
}

fn parse_floats(e: &Entry, expected: Option<usize>) -> Result<Vec<f64>, RunError> {
    let values: Result<Vec<f64>, _> =
        e.value.split_whitespace().map(str::parse::<f64>).collect();
    let values = values.map_err(|err| bad(e.line_no, format!("{}: {err}", e.key)))?;
    if let Some(n) = expected {
        if values.len() != n {
            return Err(bad(e.line_no, format!("{} expects {n} values, got {}", e.key, values.len())));
        }
    }
    Ok(values)
}

fn parse_attitude(e: &Entry) -> Result<RotationMatrix, RunError> {
    let v = parse_floats(e, Some(9))?;
    let m = Mat3::from_rows([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]]);
    RotationMatrix::try_from_mat(m, 1e-6)
        .ok_or_else(|| bad(e.line_no, format!("{} is not a rotation matrix", e.key)))
}

/// Broadcast a 1-or-n float list across n landmarks.
fn spread(e: &Entry, n: usize) -> Result<Vec<f64>, RunError> {
    let v = parse_floats(e, None)?;
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        len if len == n => Ok(v),
        len => Err(bad(e.line_no, format!("{} expects 1 or {n} values, got {len}", e.key))),
    }
}

/// Parse config text into a scenario (validated).
pub fn from_config(text: &str) -> Result<Scenario, RunError> {
    let mut entries: Vec<Entry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(bad(line_no, "expected `key = value`"));
        };
        entries.push(Entry {
            key: key.trim().to_string(),
            value: value.trim().to_string(),
            line_no,
        });
    }

    let find = |key: &str| entries.iter().find(|e| e.key == key);
    let require = |key: &str| {
        find(key).ok_or_else(|| RunError::Config(format!("missing required key `{key}`")))
    };
    let scalar = |key: &str| -> Result<f64, RunError> { parse_floats(require(key)?, Some(1)).map(|v| v[0]) };

    let landmarks: Vec<Vec3> = entries
        .iter()
        .filter(|e| e.key == "landmark")
        .map(|e| parse_floats(e, Some(3)).map(|v| Vec3::new(v[0], v[1], v[2])))
        .collect::<Result<_, _>>()?;
    if landmarks.is_empty() {
        return Err(RunError::Config("at least one `landmark` line required".into()));
    }
    let n = landmarks.len();

    let segments: Vec<ProfileSegment> = entries
        .iter()
        .filter(|e| e.key == "segment")
        .map(|e| {
            let v = parse_floats(e, Some(7))?;
            Ok(ProfileSegment {
                t_end: v[0],
                twist: Twist::new(Vec3::new(v[4], v[5], v[6]), Vec3::new(v[1], v[2], v[3])),
            })
        })
        .collect::<Result<_, RunError>>()?;
    if segments.is_empty() {
        return Err(RunError::Config("at least one `segment` line required".into()));
    }

    let mut visibility = VisibilitySchedule::always_visible(n);
    for e in entries.iter().filter(|e| e.key == "visibility") {
        let v = parse_floats(e, Some(3))?;
        let idx = v[0] as usize;
        if idx >= n {
            return Err(bad(e.line_no, format!("visibility index {idx} out of range")));
        }
        visibility.windows[idx].push((v[1], v[2]));
    }

    let alphas = spread(require("alpha")?, n)?;
    let gammas = spread(require("gamma")?, n)?;
    let kis = spread(require("k_i")?, n)?;
    for (((a, g), k), _) in alphas.iter().zip(&gammas).zip(&kis).zip(0..) {
        if !(*a > 0.0 && *g > 0.0 && *k > 0.0) {
            return Err(RunError::Config("alpha, gamma and k_i must be positive".into()));
        }
    }
    let sigma_gains: Vec<SigmaGains> = alphas
        .iter()
        .zip(&gammas)
        .zip(&kis)
        .map(|((&a, &g), &k)| SigmaGains::new(a, g, k))
        .collect();

    let mapper = match require("mapper")?.value.as_str() {
        "drem" => MapperKind::Drem,
        "gradient" => MapperKind::Gradient,
        other => return Err(RunError::Config(format!("unknown mapper `{other}`"))),
    };
    let barl_mode = match require("barl")?.value.as_str() {
        "anchored" => BarlMode::Anchored,
        "feedback" => BarlMode::Feedback,
        other => return Err(RunError::Config(format!("unknown barl mode `{other}`"))),
    };
    let noise_enabled = match require("noise_enabled")?.value.as_str() {
        "true" => true,
        "false" => false,
        other => return Err(RunError::Config(format!("noise_enabled must be true/false, got `{other}`"))),
    };

    let seed_entry = require("seed")?;
    let seed: u64 = seed_entry
        .value
        .parse()
        .map_err(|e| bad(seed_entry.line_no, format!("seed: {e}")))?;

    let rho_v = parse_floats(require("rho")?, Some(3))?;

    let scenario = Scenario {
        name: require("name")?.value.clone(),
        dt: scalar("dt")?,
        horizon: scalar("horizon")?,
        profile: TrajectoryProfile::new(
            Pose::new(parse_attitude(require("initial_attitude")?)?, {
                let v = parse_floats(require("initial_position")?, Some(3))?;
                Vec3::from_array([v[0], v[1], v[2]])
            }),
            segments,
        ),
        landmarks: LandmarkMap::new(landmarks),
        visibility,
        noise: NoiseModel {
            sigma_v: scalar("noise_sigma_v")?,
            sigma_omega: scalar("noise_sigma_omega")?,
            sigma_bearing: scalar("noise_sigma_bearing")?,
            seed,
        },
        noise_enabled,
        ext_init: (parse_attitude(require("ext_attitude")?)?, {
            let v = parse_floats(require("ext_position")?, Some(3))?;
            Vec3::from_array([v[0], v[1], v[2]])
        }),
        sigma_gains,
        loc_gains: LocalizationGains {
            attitude: spread(require("loc_k")?, n)?,
            position: spread(require("loc_sigma")?, n)?,
        },
        mapper,
        barl_mode,
        kf: KfConfig {
            initial_cov: scalar("kf_initial_cov")?,
            process_noise: scalar("kf_process_noise")?,
            measurement_noise: scalar("kf_measurement_noise")?,
        },
        loc_init_cq: RotationMatrix::IDENTITY,
        loc_init_x: None,
        rho: [rho_v[0], rho_v[1], rho_v[2]],
    };
    scenario.validate().map_err(RunError::Scenario)?;
    Ok(scenario)
}
