use std::sync::Arc;

use num_complex::Complex64;

use wigner_clt::ensemble::{two_point, Matrix};
use wigner_clt::harness::{run_ensemble, EigensolveMode, RunConfig};
use wigner_clt::profile::{profile_band, profile_flat, profile_random_ds};
use wigner_clt::quadrature::integrate_adaptive;
use wigner_clt::semicircle::rho_sc;
use wigner_clt::spectral::{eigenvalues, log_char_field, SpectralSample};
use wigner_clt::{predict, Beta, EnsembleSpec, EntryDistribution, PredictOptions, TestFunction, VarianceProfile};

#[test]
fn sampled_entries_have_the_profile_variance() {
    let p = Arc::new(profile_random_ds(5, 12, 0.8).unwrap());
    for beta in [Beta::Real, Beta::Complex] {
        let spec = EnsembleSpec::new(beta, p.clone(), EntryDistribution::Uniform, two_point(0.3).unwrap()).unwrap();
        let r = 20_000;
        let mut second = [[0.0f64; 5]; 5];
        let mut pseudo = Complex64::new(0.0, 0.0);
        for k in 0..r {
            match spec.sample(4, k) {
                Matrix::Real(h) => {
                    for i in 0..5 {
                        for j in 0..5 {
                            second[i][j] += h[(i, j)] * h[(i, j)];
                        }
                    }
                }
                Matrix::Complex(h) => {
                    for i in 0..5 {
                        for j in 0..5 {
                            second[i][j] += h[(i, j)].norm_sqr();
                        }
                    }
                    pseudo += h[(0, 1)] * h[(0, 1)];
                }
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                let est = second[i][j] / r as f64;
                let s = p.matrix()[(i, j)];
                // relative SE of a second moment is at most ~sqrt(2 + kappa4) / sqrt(R)
                assert!((est - s).abs() <= 6.0 * s * (3.0f64 / r as f64).sqrt() + 1e-12, "{beta:?} ({i},{j}) {est} vs {s}");
            }
        }
        if beta == Beta::Complex {
            // E H_ij^2 = 0 for complex off-diagonal entries
            assert!((pseudo / r as f64).norm() <= 6.0 * p.matrix()[(0, 1)] / (r as f64).sqrt());
        }
    }
}

#[test]
fn cubic_statistic_variance_matches_prediction() {
    // x^3 needs the eigensolver; V comes from the Chebyshev series
    let spec = EnsembleSpec::gaussian(Beta::Real, Arc::new(profile_band(120, 20).unwrap()));
    let f = TestFunction::Polynomial(vec![0.0, 0.0, 0.0, 1.0]);
    let pred = predict(&f, &spec, &PredictOptions::default()).unwrap();
    assert_eq!(pred.paths_agree, Some(true));
    let mut cfg = RunConfig::new(spec, f, 3000, 21);
    cfg.eigensolve = EigensolveMode::Always;
    cfg.experiments.clt = false;
    let k = run_ensemble(&cfg, None).unwrap().kstats.unwrap();
    assert!((k.k2 - pred.v).abs() <= 4.0 * k.se_k2, "k2 = {} +- {}, V = {}", k.k2, k.se_k2, pred.v);
    assert!(k.k1.abs() <= 4.0 * k.se_k1, "odd statistic has mean {}", k.k1);
}

#[test]
fn profile_csv_roundtrip_preserves_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let p = profile_random_ds(30, 8, 0.6).unwrap();
    let path = dir.path().join("s.csv");
    p.write_csv(&path).unwrap();
    let q = VarianceProfile::load(&path).unwrap();
    assert_eq!(p.matrix(), q.matrix());
    let f = TestFunction::Gaussian { center: -0.2, width: 0.5 };
    let a = predict(&f, &EnsembleSpec::gaussian(Beta::Complex, Arc::new(p)), &PredictOptions::default()).unwrap();
    let b = predict(&f, &EnsembleSpec::gaussian(Beta::Complex, Arc::new(q)), &PredictOptions::default()).unwrap();
    assert_eq!(a.v, b.v);
    assert_eq!(a.e, b.e);
}

#[test]
fn log_field_centering_matches_direct_integral() {
    let eigs: Vec<f64> = (0..40).map(|k| -1.9 + 3.8 * (k as f64 + 0.5) / 40.0).collect();
    let sample = SpectralSample::from_eigenvalues(eigs.clone());
    for (e, eta) in [(0.3, 0.2), (-1.1, 0.05), (0.0, 1.0)] {
        let z = Complex64::new(e, eta);
        let raw: f64 = eigs.iter().map(|l| (z - l).norm().ln()).sum();
        let re_int = integrate_adaptive(|x| (z - x).norm().ln() * rho_sc(x), -2.0, 2.0, 1e-12, 1e-12).unwrap();
        let field = log_char_field(&sample, e, eta).unwrap();
        let want = raw - 40.0 * re_int;
        assert!((field.re - want).abs() <= 1e-8, "{e} {eta}: {} vs {want}", field.re);
    }
}

#[test]
fn flat_identity_prediction_from_eigenvalues() {
    // sum of eigenvalues reproduces the trace, and the run agrees with V = 1
    let spec = EnsembleSpec::gaussian(Beta::Complex, Arc::new(profile_flat(40).unwrap()));
    let h = spec.sample(9, 3);
    let s = eigenvalues(&h).unwrap();
    assert!((s.eigs.iter().sum::<f64>() - h.trace()).abs() <= 1e-10);
    let mut cfg = RunConfig::new(spec, TestFunction::identity(), 4000, 2);
    cfg.eigensolve = EigensolveMode::Always;
    let res = run_ensemble(&cfg, None).unwrap();
    let k = res.kstats.unwrap();
    assert!((k.k2 - 1.0).abs() <= 4.0 * k.se_k2);
    assert!(res.comparison.unwrap().pass);
}
