//! Throughput of the per-tick observer pieces and of whole short runs.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use vislam_core::{
    batch_ls_oracle, build_regressor, gradient_step, rot_exp, run, scenario_pe, sigma_init,
    sigma_step, ExtensionState, RegressorSample, SigmaGains, Vec3,
};

fn synthetic_samples(n: usize) -> Vec<RegressorSample> {
    let vl = Vec3::new(1.0, -2.0, 3.0);
    (0..n)
        .map(|k| {
            let t = k as f64 * 1e-3;
            let q = rot_exp(Vec3::new(0.2, -0.1, 0.9), t);
            let xi = Vec3::new((2.0 * t).cos(), (2.0 * t).sin(), 0.1 * t);
            let ext = ExtensionState::new(q, xi);
            let y = q.transpose() * (vl - xi).normalized().unwrap();
            build_regressor(&ext, Some(y), t).unwrap()
        })
        .collect()
}

fn bench_estimator_steps(c: &mut Criterion) {
    let gains = SigmaGains::new(5.0, 100.0, 5.0);
    let samples = synthetic_samples(1000);
    c.bench_function("sigma_step", |b| {
        let mut state = sigma_init(Vec3::ZERO, Vec3::ZERO);
        let mut k = 0;
        b.iter(|| {
            state = sigma_step(black_box(&state), &samples[k % samples.len()], &gains, 1e-3);
            k += 1;
        });
    });
    c.bench_function("gradient_step", |b| {
        let mut l_hat = Vec3::ZERO;
        let mut k = 0;
        b.iter(|| {
            l_hat = gradient_step(black_box(l_hat), &samples[k % samples.len()], 100.0);
            k += 1;
        });
    });
    c.bench_function("batch_ls_oracle_5k", |b| {
        let samples = synthetic_samples(5000);
        b.iter(|| batch_ls_oracle(black_box(&samples)).unwrap());
    });
}

fn bench_full_run(c: &mut Criterion) {
    let mut sc = scenario_pe();
    sc.horizon = 1.0;
    c.bench_function("run_1s_six_landmarks", |b| {
        b.iter(|| run(black_box(&sc)).unwrap());
    });
}

criterion_group!(
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_estimator_steps, bench_full_run
);
criterion_main!(benches);
