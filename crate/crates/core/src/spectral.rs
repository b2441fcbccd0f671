//! Per-sample spectral quantities: eigenvalues, linear statistics, the
//! log-characteristic-polynomial field, rigidity and the empirical Stieltjes
//! transform.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::Serialize;

use crate::ensemble::Matrix;
use crate::error::{Error, Result};
use crate::quadrature::semicircle_mean;
use crate::semicircle::{classical_locations, log_potential, log_potential_upper, rho_sc, sc_cdf};
use crate::testfn::TestFunction;

/// Node count for semicircle centering integrals.
pub const CENTERING_NODES: usize = 2048;
const CONSERVATION_TOL: f64 = 1e-8;

/// Where a sample came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleSource {
    pub spec_hash: String,
    pub seed: u64,
    pub replica: u64,
}

/// `(sum lambda, tr H, sum lambda^2, sum |H_ij|^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceChecks {
    pub sum_eigs: f64,
    pub trace: f64,
    pub sum_sq_eigs: f64,
    pub frobenius_sq: f64,
}

/// Sorted spectrum of one matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSample {
    pub eigs: Vec<f64>,
    pub trace_checks: TraceChecks,
    pub source: Option<SampleSource>,
}

impl SpectralSample {
    pub fn n(&self) -> usize {
        self.eigs.len()
    }

    pub fn with_source(mut self, source: SampleSource) -> Self {
        self.source = Some(source);
        self
    }

    /// Build from an eigenvalue list (sorted here); trace checks are the
    /// eigenvalue sums themselves.
    pub fn from_eigenvalues(mut eigs: Vec<f64>) -> Self {
        eigs.sort_by(f64::total_cmp);
        let s1 = eigs.iter().sum();
        let s2 = eigs.iter().map(|v| v * v).sum();
        SpectralSample {
            eigs,
            trace_checks: TraceChecks {
                sum_eigs: s1,
                trace: s1,
                sum_sq_eigs: s2,
                frobenius_sq: s2,
            },
            source: None,
        }
    }
}

/// Full spectrum of a Hermitian matrix, ascending, with conservation checks.
pub fn eigenvalues(h: &Matrix) -> Result<SpectralSample> {
    // faer is built without its thread pool, so the result is schedule-independent
    let failed = |e: faer::linalg::evd::EvdError| Error::Numerical(format!("eigensolver did not converge: {e:?}"));
    let mut eigs: Vec<f64> = match h {
        Matrix::Real(m) => faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(failed)?,
        Matrix::Complex(m) => faer::Mat::<faer::c64>::from_fn(m.nrows(), m.ncols(), |i, j| {
            let z = m[(i, j)];
            faer::c64::new(z.re, z.im)
        })
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(failed)?,
    };
    if eigs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("eigensolver returned non-finite eigenvalues".into()));
    }
    eigs.sort_by(f64::total_cmp);
    let n = eigs.len() as f64;
    let checks = TraceChecks {
        sum_eigs: eigs.iter().sum(),
        trace: h.trace(),
        sum_sq_eigs: eigs.iter().map(|v| v * v).sum(),
        frobenius_sq: h.frobenius_sq(),
    };
    let tol = CONSERVATION_TOL * n.max(1.0);
    if (checks.sum_eigs - checks.trace).abs() > tol
        || (checks.sum_sq_eigs - checks.frobenius_sq).abs() > tol
    {
        return Err(Error::Numerical(format!(
            "eigensolver violated trace conservation: {checks:?}"
        )));
    }
    Ok(SpectralSample {
        eigs,
        trace_checks: checks,
        source: None,
    })
}

/// `int x^k rho_sc`: Catalan numbers for even `k`, zero for odd.
fn semicircle_moment(k: usize) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let m = k / 2;
    // C_m = binom(2m, m) / (m + 1)
    let mut c = 1.0;
    for i in 0..m {
        c = c * 2.0 * (2 * i + 1) as f64 / (i + 2) as f64;
    }
    c
}

/// `int f rho_sc`: exact for polynomials and log kinds, quadrature otherwise.
pub fn semicircle_centering(f: &TestFunction) -> Result<f64> {
    if let Some(c) = f.monomial_coeffs() {
        return Ok(c.iter().enumerate().map(|(k, ck)| ck * semicircle_moment(k)).sum());
    }
    match *f {
        TestFunction::LogRe { energy, eta } | TestFunction::LogIm { energy, eta } => {
            let v = if eta > 0.0 {
                log_potential_upper(Complex64::new(energy, eta))?
            } else {
                log_potential(energy)?
            };
            Ok(if matches!(f, TestFunction::LogRe { .. }) {
                v.re
            } else {
                v.im
            })
        }
        _ => Ok(semicircle_mean(|x| f.eval(x), CENTERING_NODES)),
    }
}

/// Linear statistic evaluator with the centering integral computed once.
#[derive(Debug, Clone)]
pub struct LssEvaluator {
    f: TestFunction,
    centering: f64,
}

impl LssEvaluator {
    pub fn new(f: TestFunction) -> Result<Self> {
        let centering = semicircle_centering(&f)?;
        Ok(LssEvaluator { f, centering })
    }

    pub fn test_function(&self) -> &TestFunction {
        &self.f
    }

    /// `int f rho_sc`.
    pub fn centering(&self) -> f64 {
        self.centering
    }

    /// `sum_i f(lambda_i) - N int f rho_sc`.
    pub fn eval(&self, sample: &SpectralSample) -> Result<f64> {
        if let Some(v) = sample.eigs.iter().find(|v| v.abs() > 5.0) {
            return Err(Error::Numerical(format!(
                "eigenvalue {v} lies outside [-5, 5]"
            )));
        }
        let s: f64 = sample.eigs.iter().map(|&x| self.f.eval(x)).sum();
        Ok(s - sample.n() as f64 * self.centering)
    }

    /// Same statistic from `tr H` and `tr H^2` alone; only for polynomials of
    /// degree at most two.
    pub fn eval_from_traces(&self, n: usize, trace: f64, trace_sq: f64) -> Option<f64> {
        let c = self.f.monomial_coeffs()?;
        if c.iter().skip(3).any(|v| *v != 0.0) {
            return None;
        }
        let get = |k: usize| c.get(k).copied().unwrap_or(0.0);
        let n = n as f64;
        Some(get(0) * n + get(1) * trace + get(2) * trace_sq - n * self.centering)
    }
}

/// One-shot `LSS(f)`; prefer [`LssEvaluator`] in loops.
pub fn lss(sample: &SpectralSample, f: &TestFunction) -> Result<f64> {
    LssEvaluator::new(f.clone())?.eval(sample)
}

/// Deterministic part `int log(z - x) rho_sc(x) dx` of the field at `E + i eta`.
pub fn field_centering(e: f64, eta: f64) -> Result<Complex64> {
    if eta > 0.0 {
        log_potential_upper(Complex64::new(e, eta))
    } else if eta == 0.0 {
        log_potential(e)
    } else {
        Err(Error::Domain(format!("field needs eta >= 0, got {eta}")))
    }
}

/// `L_N(E + i eta) = sum_j log(E + i eta - lambda_j) - N int log(z - x) rho_sc`,
/// principal branch.
pub fn log_char_field(sample: &SpectralSample, e: f64, eta: f64) -> Result<Complex64> {
    let c = field_centering(e, eta)?;
    field_with_centering(sample, e, eta, c)
}

fn field_with_centering(sample: &SpectralSample, e: f64, eta: f64, c: Complex64) -> Result<Complex64> {
    let n = sample.n() as f64;
    if eta == 0.0 {
        if sample.eigs.contains(&e) {
            return Err(Error::Domain(format!("E = {e} coincides with an eigenvalue")));
        }
        let re: f64 = sample.eigs.iter().map(|&l| (l - e).abs().ln()).sum();
        let above = sample.n() - sample.eigs.partition_point(|&l| l <= e);
        let im = PI * (above as f64 - n * (1.0 - sc_cdf(e)));
        return Ok(Complex64::new(re - n * c.re, im));
    }
    let mut re = 0.0;
    let mut im = 0.0;
    for &l in &sample.eigs {
        let d = e - l;
        re += 0.5 * (d * d + eta * eta).ln();
        im += eta.atan2(d);
    }
    Ok(Complex64::new(re - n * c.re, im - n * c.im))
}

/// Field evaluation on a fixed grid with the centering cached per point.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub energies: Vec<f64>,
    pub eta: f64,
    centering: Vec<Complex64>,
}

impl FieldGrid {
    pub fn new(energies: Vec<f64>, eta: f64) -> Result<Self> {
        let centering = energies
            .iter()
            .map(|&e| field_centering(e, eta))
            .collect::<Result<Vec<_>>>()?;
        Ok(FieldGrid {
            energies,
            eta,
            centering,
        })
    }

    /// Uniform grid of `m` points on `[-(2 - kappa), 2 - kappa]`.
    pub fn uniform(kappa: f64, m: usize, eta: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 2.0) || m < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs 0 < kappa < 2 and at least two points, got kappa = {kappa}, m = {m}"
            )));
        }
        let edge = 2.0 - kappa;
        let pts = (0..m)
            .map(|i| -edge + 2.0 * edge * i as f64 / (m - 1) as f64)
            .collect();
        Self::new(pts, eta)
    }

    pub fn eval(&self, sample: &SpectralSample) -> Result<Vec<Complex64>> {
        self.energies
            .iter()
            .zip(&self.centering)
            .map(|(&e, &c)| field_with_centering(sample, e, self.eta, c))
            .collect()
    }

    /// Move the given grid point by `delta` (and refresh its centering).
    pub fn shift_point(&mut self, idx: usize, delta: f64) -> Result<()> {
        self.energies[idx] += delta;
        self.centering[idx] = field_centering(self.energies[idx], self.eta)?;
        Ok(())
    }
}

/// Largest and smallest normalized eigenvalue deviation in the bulk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RigidityStats {
    pub max: f64,
    pub min: f64,
}

/// Precomputed classical locations for a given `N` and bulk fraction.
#[derive(Debug, Clone)]
pub struct RigidityEvaluator {
    n: usize,
    lo: usize,
    hi: usize,
    gamma: Vec<f64>,
    weight: Vec<f64>,
}

impl RigidityEvaluator {
    pub fn new(n: usize, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "bulk fraction must lie in (0, 1/2), got {kappa}"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidArgument(format!("need N >= 3, got {n}")));
        }
        let gamma = classical_locations(n);
        let lo = ((kappa * n as f64).ceil() as usize).max(1);
        let hi = ((1.0 - kappa) * n as f64).floor() as usize;
        if lo > hi {
            return Err(Error::InvalidArgument(format!("empty bulk window for N = {n}, kappa = {kappa}")));
        }
        let scale = PI / SQRT_2 * n as f64 / (n as f64).ln();
        let weight = gamma.iter().map(|&g| scale * rho_sc(g)).collect();
        Ok(RigidityEvaluator {
            n,
            lo,
            hi,
            gamma,
            weight,
        })
    }

    /// Statistic for every `k` in the bulk window, 1-based `k` ascending.
    pub fn profile(&self, sample: &SpectralSample) -> Result<Vec<(usize, f64)>> {
        if sample.n() != self.n {
            return Err(Error::InvalidArgument(format!(
                "sample has N = {}, evaluator built for {}",
                sample.n(),
                self.n
            )));
        }
        Ok((self.lo..=self.hi)
            .map(|k| {
                let i = k - 1;
                (k, self.weight[i] * (sample.eigs[i] - self.gamma[i]))
            })
            .collect())
    }

    pub fn eval(&self, sample: &SpectralSample) -> Result<RigidityStats> {
        let vals = self.profile(sample)?;
        let max = vals.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.1));
        let min = vals.iter().fold(f64::INFINITY, |m, v| m.min(v.1));
        Ok(RigidityStats { max, min })
    }
}

/// `max_k (pi/sqrt 2) rho_sc(gamma_k) N (lambda_k - gamma_k) / log N` over the
/// bulk window `k in [kappa N, (1 - kappa) N]`, and the signed minimum.
pub fn rigidity_stats(sample: &SpectralSample, kappa: f64) -> Result<RigidityStats> {
    RigidityEvaluator::new(sample.n(), kappa)?.eval(sample)
}

/// `m_N(z) = N^{-1} sum_j 1 / (lambda_j - z)`.
pub fn empirical_stieltjes(sample: &SpectralSample, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 {
        return Err(Error::Domain(format!("Stieltjes transform needs Im z != 0, got {z}")));
    }
    let s: Complex64 = sample.eigs.iter().map(|&l| (l - z).inv()).sum();
    Ok(s / sample.n() as f64)
}
