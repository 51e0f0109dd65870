//! Randomized invariants of the algebraic layer and the file formats.

use proptest::prelude::*;

use vislam_core::extension::ExtensionState;
use vislam_core::geometry::{adjugate, attitude_error, hat, projector, rot_exp, Mat3, Pose, Vec3};
use vislam_core::harness::config::{from_config, to_config};
use vislam_core::regressor::build_regressor;
use vislam_core::sim::scenario_pe;

fn vec3() -> impl Strategy<Value = Vec3> {
    (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn rotation() -> impl Strategy<Value = vislam_core::RotationMatrix> {
    (vec3(), 0.01..1.0f64).prop_map(|(axis, dt)| rot_exp(axis, dt))
}

proptest! {
    #[test]
    fn hat_equals_cross(a in vec3(), b in vec3()) {
        prop_assert!((hat(a) * b - a.cross(b)).norm() <= 1e-12);
    }

    #[test]
    fn rot_exp_shared_axis_group_law(w in vec3(), s in 0.0..1.5f64, t in 0.0..1.5f64) {
        let lhs = rot_exp(w, s) * rot_exp(w, t);
        let rhs = rot_exp(w, s + t);
        prop_assert!((*lhs.mat() - *rhs.mat()).frobenius_norm() <= 1e-12);
    }

    #[test]
    fn projector_equivariance(y in vec3(), q in rotation()) {
        prop_assume!(y.norm() > 1e-3);
        let u = y.normalized().unwrap();
        let lhs = projector(q * u).unwrap();
        let rhs = *q.mat() * projector(u).unwrap() * *q.transpose().mat();
        prop_assert!((lhs - rhs).frobenius_norm() <= 1e-13);
    }

    #[test]
    fn pose_group_axioms(ra in rotation(), ta in vec3(), rb in rotation(), tb in vec3()) {
        let a = Pose::new(ra, ta);
        let b = Pose::new(rb, tb);
        let lhs = a.compose(&b).inverse();
        let rhs = b.inverse().compose(&a.inverse());
        prop_assert!(lhs.distance(&rhs) <= 1e-11);
        prop_assert!(a.compose(&a.inverse()).distance(&Pose::IDENTITY) <= 1e-11);
    }

    #[test]
    fn adjugate_identity_holds(rows in proptest::array::uniform9(-10.0..10.0f64)) {
        let m = Mat3::from_rows([
            [rows[0], rows[1], rows[2]],
            [rows[3], rows[4], rows[5]],
            [rows[6], rows[7], rows[8]],
        ]);
        let defect = (adjugate(&m) * m - Mat3::IDENTITY * m.det()).frobenius_norm();
        prop_assert!(defect <= 1e-9 * (1.0 + m.frobenius_norm().powi(3)));
    }

    #[test]
    fn attitude_error_symmetric_bounded(a in rotation(), b in rotation()) {
        let e = attitude_error(&a, &b);
        prop_assert!((0.0..=1.0).contains(&e));
        prop_assert!((e - attitude_error(&b, &a)).abs() <= 1e-12);
    }

    #[test]
    fn visible_regressor_is_consistent(q in rotation(), xi in vec3(), l in vec3()) {
        prop_assume!((l - xi).norm() > 1e-2);
        let ext = ExtensionState::new(q, xi);
        let y = q.transpose() * (l - xi).normalized().unwrap();
        let s = build_regressor(&ext, Some(y), 0.0).unwrap();
        prop_assert!((s.phi - s.phi.transpose()).frobenius_norm() == 0.0);
        prop_assert!((s.phi * s.phi - s.phi).frobenius_norm() <= 1e-13);
        prop_assert!((s.q - s.phi.transpose() * l).norm() <= 1e-11 * (1.0 + l.norm()));
    }

    #[test]
    fn float_formatting_round_trips(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(v.is_finite());
        let parsed: f64 = format!("{v}").parse().unwrap();
        prop_assert_eq!(parsed.to_bits(), v.to_bits());
    }

    #[test]
    fn scenario_config_round_trips(
        seed in any::<u64>(),
        dt_us in 100u32..5000,
        gains in (0.1..20.0f64, 1.0..500.0f64, 0.1..50.0f64),
        coords in proptest::collection::vec((-8.0..8.0f64, -8.0..8.0f64, 0.1..5.0f64), 1..7),
    ) {
        let mut sc = scenario_pe();
        sc.noise.seed = seed;
        sc.dt = dt_us as f64 * 1e-6;
        sc.landmarks.positions =
            coords.into_iter().map(|(x, y, z)| Vec3::new(x, y, z)).collect();
        let n = sc.landmarks.positions.len();
        sc.visibility = vislam_core::VisibilitySchedule::always_visible(n);
        sc.sigma_gains = vec![vislam_core::SigmaGains::new(gains.0, gains.1, gains.2); n];
        sc.loc_gains = vislam_core::LocalizationGains::uniform(n, 2.0, 3.0);
        let parsed = from_config(&to_config(&sc)).unwrap();
        prop_assert_eq!(parsed, sc);
    }
}
