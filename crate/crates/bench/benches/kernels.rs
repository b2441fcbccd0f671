use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

use wigner_clt::functionals::{mean_correction, variance_integral, variance_series, MEAN_NODES};
use wigner_clt::profile::profile_random_ds;
use wigner_clt::spectral::{eigenvalues, FieldGrid};
use wigner_clt::testfn::{cheb_coeffs, DEFAULT_NODES, DEFAULT_ORDER};
use wigner_clt::{predict, Beta, PredictOptions};
use wigner_clt_bench::{flat_spec, random_profile, skewed_spec, smooth_fn};

fn chebyshev(c: &mut Criterion) {
    let f = smooth_fn();
    c.bench_function("cheb_coeffs J=256 M=2048", |b| {
        b.iter(|| cheb_coeffs(black_box(&f), DEFAULT_ORDER, DEFAULT_NODES).unwrap())
    });
}

fn functionals(c: &mut Criterion) {
    let spec = skewed_spec(100, Beta::Real);
    let summary = spec.cumulant_summary();
    let f = smooth_fn();
    let t = cheb_coeffs(&f, DEFAULT_ORDER, DEFAULT_NODES).unwrap();
    c.bench_function("variance_series N=100", |b| {
        b.iter(|| variance_series(black_box(&t), &spec.profile, &summary, Beta::Real))
    });
    let mut g = c.benchmark_group("quadrature");
    g.sample_size(10);
    g.bench_function("variance_integral N=100 400x400", |b| {
        b.iter(|| variance_integral(black_box(&f), &spec.profile, &summary, Beta::Real, 400).unwrap())
    });
    g.bench_function("mean_correction N=100", |b| {
        b.iter(|| mean_correction(black_box(&f), &spec.profile, &summary, Beta::Real, MEAN_NODES).unwrap())
    });
    g.bench_function("predict N=100 with integral", |b| {
        b.iter(|| predict(black_box(&f), &spec, &PredictOptions::default()).unwrap())
    });
    g.finish();
}

fn profiles(c: &mut Criterion) {
    let mut g = c.benchmark_group("profile");
    g.sample_size(10);
    g.bench_function("sinkhorn + decomposition N=200", |b| {
        b.iter(|| profile_random_ds(black_box(200), 3, 0.5).unwrap())
    });
    let p = random_profile(200);
    g.bench_function("resolvent_trace N=200", |b| {
        b.iter(|| p.resolvent_trace(black_box(Complex64::new(0.3, 0.5))).unwrap())
    });
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("replica");
    g.sample_size(10);
    for beta in [Beta::Real, Beta::Complex] {
        let spec = flat_spec(300, beta);
        g.bench_function(format!("sample N=300 beta={}", beta.value()), |b| {
            b.iter(|| spec.sample(black_box(1), 0))
        });
        let h = spec.sample(1, 0);
        g.bench_function(format!("eigenvalues N=300 beta={}", beta.value()), |b| {
            b.iter(|| eigenvalues(black_box(&h)).unwrap())
        });
    }
    let sample = eigenvalues(&flat_spec(1000, Beta::Real).sample(2, 0)).unwrap();
    let grid = FieldGrid::uniform(0.2, 2000, 0.0).unwrap();
    g.bench_function("log field N=1000 grid=2000", |b| b.iter(|| grid.eval(black_box(&sample)).unwrap()));
    g.finish();
}

criterion_group!(benches, chebyshev, functionals, profiles, sampling);
criterion_main!(benches);
