use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use rrr_core::rng::{stream, StreamPurpose};
use rrr_core::{
    fit, generate, scalar_prox, scaled_prox, svd, DenseMatrix, DesignSpec, FitConfig, HuberParam,
    NoiseSpec, PenaltySpec, SimScenario,
};

use rand::Rng;
use rand_distr::StandardNormal;

fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = stream(seed, StreamPurpose::Design);
    let data = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    DenseMatrix::from_vec(rows, cols, data).unwrap()
}

fn bench_svd(c: &mut Criterion) {
    let mut group = c.benchmark_group("svd");
    for (rows, cols) in [(12usize, 7usize), (40, 20), (120, 40)] {
        let m = random_matrix(rows, cols, 1);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{rows}x{cols}")),
            &m,
            |b, m| b.iter(|| svd(black_box(m)).unwrap()),
        );
    }
    group.finish();
}

fn bench_prox(c: &mut Criterion) {
    let mut group = c.benchmark_group("scalar_prox");
    let zs: Vec<f64> = (0..1024).map(|i| (i as f64) / 64.0 - 8.0).collect();
    for spec in [
        PenaltySpec::mcp(0.8).unwrap(),
        PenaltySpec::scad(0.8).unwrap(),
        PenaltySpec::nuclear(0.8).unwrap(),
    ] {
        group.bench_with_input(
            BenchmarkId::new("closed_form", spec.family.name()),
            &spec,
            |b, spec| {
                b.iter(|| {
                    zs.iter()
                        .map(|&z| scalar_prox(black_box(z), spec, 0.7))
                        .sum::<f64>()
                })
            },
        );
        group.bench_with_input(
            BenchmarkId::new("step_scaled", spec.family.name()),
            &spec,
            |b, spec| {
                b.iter(|| {
                    zs.iter()
                        .map(|&z| scaled_prox(black_box(z), spec, 0.7))
                        .sum::<f64>()
                })
            },
        );
    }
    group.finish();
}

fn bench_fit(c: &mut Criterion) {
    let scenario = SimScenario {
        n: 200,
        p: 12,
        q: 7,
        r: 2,
        design: DesignSpec::IidGaussian,
        noise: NoiseSpec::Gaussian { sd: 1.0 },
        missing_fraction: 0.0,
        n_test: 10,
        seed: 3,
    };
    let data = generate(&scenario).unwrap();
    let mut group = c.benchmark_group("fit_n200_p12_q7");
    group.sample_size(20);
    for spec in [
        PenaltySpec::mcp(0.8).unwrap(),
        PenaltySpec::scad(0.8).unwrap(),
        PenaltySpec::nuclear(0.8).unwrap(),
    ] {
        let config = FitConfig::new(HuberParam::new(1.0).unwrap(), spec);
        group.bench_with_input(
            BenchmarkId::from_parameter(spec.family.name()),
            &config,
            |b, config| {
                b.iter(|| fit(&data.y_train, &data.x_train, &data.mask, black_box(config)).unwrap())
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench_svd, bench_prox, bench_fit);
criterion_main!(benches);
