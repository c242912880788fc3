use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rmtl_core::{
    covering_number, estimate_bound_inputs, expected_risk_table, generate_tasks, mc_joint_sup_prob, sample_class,
    solve_rmtl, ConstrainedClass, CoverMethod, Coupling, EmpiricalMetricTable, EstimationSettings, LossSpec,
    SolverConfig, SyntheticFamily, TaskFamily,
};

fn family(m: usize) -> TaskFamily {
    SyntheticFamily {
        task_count: m,
        input_dim: 3,
        relatedness: 0.7,
        noise_std: 0.2,
        weight_scale: 0.5,
        mean_shift: 0.0,
        input_scale: 1.0,
        seed: 1,
    }
    .build()
    .unwrap()
}

fn class() -> ConstrainedClass {
    ConstrainedClass::new(1.0, Coupling::MeanCoupled, 0.5, LossSpec::unit()).unwrap()
}

fn covers(c: &mut Criterion) {
    let mut g = c.benchmark_group("covering_number");
    for size in [32usize, 128] {
        let values: Vec<Vec<f64>> = (0..size)
            .map(|i| (0..20).map(|j| ((i * 7 + j * 13) % 17) as f64 / 17.0).collect())
            .collect();
        let table = EmpiricalMetricTable::from_values(&values, 1.0).unwrap();
        g.bench_with_input(BenchmarkId::new("greedy", size), &table, |b, t| {
            b.iter(|| covering_number(black_box(t), 0.1, CoverMethod::Greedy).unwrap())
        });
    }
    g.finish();
}

fn solver(c: &mut Criterion) {
    let fam = family(4);
    let data = generate_tasks(&fam, 100, 7).unwrap();
    let cls = class();
    let cfg = SolverConfig::default();
    c.bench_function("solve_rmtl/m4_n100", |b| b.iter(|| solve_rmtl(black_box(&data), &cls, &cfg).unwrap()));
}

fn joint_probability(c: &mut Criterion) {
    let fam = family(3);
    let cls = class();
    let cands = sample_class(&cls, 3, 3, 16, 5).unwrap();
    let risks = expected_risk_table(&fam, &cls, &cands, 20_000, 9).unwrap();
    let xi = [0.1; 3];
    c.bench_function("mc_joint_sup_prob/m3_n20_t1000", |b| {
        b.iter(|| mc_joint_sup_prob(&fam, &cls, &cands, &risks, 20, &xi, 1000, 3).unwrap())
    });
}

fn estimation(c: &mut Criterion) {
    let fam = family(3);
    let cls = class();
    let cands = sample_class(&cls, 3, 3, 8, 5).unwrap();
    let settings = EstimationSettings {
        trials: 500,
        cov_trials: 1000,
        reference_size: 5000,
        ..EstimationSettings::default()
    };
    let mut g = c.benchmark_group("estimate_bound_inputs");
    g.sample_size(10);
    g.bench_function("m3_n20", |b| {
        b.iter(|| estimate_bound_inputs(&fam, &cls, &cands, 20, &[0.2; 3], &settings).unwrap())
    });
    g.finish();
}

criterion_group!(benches, covers, solver, joint_probability, estimation);
criterion_main!(benches);
