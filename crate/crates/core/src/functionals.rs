//! Deterministic CLT functionals: variance `V`, mean shift `E`, cubic term `B`,
//! the predicted characteristic function and the log-kernel variance.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{Beta, CumulantSummary, EnsembleSpec};
use crate::error::{Error, Result};
use crate::profile::VarianceProfile;
use crate::quadrature::{pairwise_sum, ArcsineRule};
use crate::semicircle::{msc, msc_boundary};
use crate::testfn::{
    cheb_coeffs, log_cheb_coeffs, ChebCoeffs, LogPart, TestFunction, DEFAULT_NODES,
    DEFAULT_ORDER,
};

/// Default tensor rule size for the double-integral variance.
pub const INTEGRAL_NODES: usize = 400;
/// Default rule size for the mean correction.
pub const MEAN_NODES: usize = 800;
/// Largest truncation order the adaptive series will try.
pub const MAX_ORDER: usize = 1 << 17;
const SERIES_REL_TOL: f64 = 1e-9;

/// Which computation produced the reported variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VariancePath {
    Series,
    Integral,
}

/// Series variance with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesVariance {
    pub value: f64,
    /// `(1/2 beta) * tail_estimate * sup_j tr S^j`.
    pub truncation_bound: f64,
    /// Set when the truncation bound exceeds 10% of the value.
    pub tail_warning: bool,
    /// Whether the last ten terms of the main sum are below `1e-9` of it.
    pub converged: bool,
    pub order: usize,
}

/// `V_beta(f)` from the Chebyshev series
/// `(1/2 beta) sum_j j t_j^2 tr S^j - ((2 - beta)/4) t_1^2 tr S
///  + (s4/2) t_2^2 + (s3/2) t_1 t_2`.
pub fn variance_series(
    t: &ChebCoeffs,
    profile: &VarianceProfile,
    summary: &CumulantSummary,
    beta: Beta,
) -> SeriesVariance {
    let order = t.order();
    let traces = profile.trace_powers(order.max(1));
    let terms: Vec<f64> = (1..=order)
        .map(|j| j as f64 * t.t[j] * t.t[j] * traces[j - 1])
        .collect();
    let main = pairwise_sum(terms.iter().copied());
    let last: f64 = terms.iter().rev().take(10).map(|v| v.abs()).sum();
    let converged = last <= SERIES_REL_TOL * main.abs() || main == 0.0;
    let b = beta.value();
    let (t1, t2) = (t.get(1), t.get(2));
    let tr = traces[0];
    let value = main / (2.0 * b) - (2.0 - b) / 4.0 * t1 * t1 * tr
        + 0.5 * summary.s4_hat * t2 * t2
        + 0.5 * summary.s3_hat * t1 * t2;
    let sup = traces.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let truncation_bound = t.tail_estimate * sup / (2.0 * b);
    SeriesVariance {
        value,
        truncation_bound,
        tail_warning: truncation_bound > 0.1 * value.abs(),
        converged,
        order,
    }
}

/// Chebyshev coefficients of `f` with the truncation order doubled until the
/// variance series converges (or `MAX_ORDER` is reached).
pub fn adaptive_coeffs(
    f: &TestFunction,
    profile: &VarianceProfile,
    start_order: usize,
) -> Result<ChebCoeffs> {
    // log kinds have closed-form coefficients decaying like |m|^n
    if let TestFunction::LogRe { energy, eta } | TestFunction::LogIm { energy, eta } = *f {
        if eta > 0.0 {
            let z = Complex64::new(energy, eta);
            let r = msc(z)?.norm();
            let needed = ((1e-13f64).ln() / r.ln()).ceil() as usize;
            let order = needed.clamp(start_order, MAX_ORDER);
            let part = if matches!(f, TestFunction::LogRe { .. }) {
                LogPart::Real
            } else {
                LogPart::Imag
            };
            return log_cheb_coeffs(z, order, part);
        }
    }
    if let Some(deg) = f.polynomial_degree() {
        let order = deg.max(2);
        return cheb_coeffs(f, order, DEFAULT_NODES.max(4 * order));
    }
    let summary = CumulantSummary::gaussian(Beta::Real);
    let mut order = start_order.max(16);
    loop {
        let nodes = DEFAULT_NODES.max(4 * order);
        let t = cheb_coeffs(f, order, nodes)?;
        let s = variance_series(&t, profile, &summary, Beta::Real);
        if s.converged || order >= MAX_ORDER {
            return Ok(t);
        }
        order *= 2;
    }
}

/// `m(x + i0)` on the open interval.
fn m_plus(x: f64) -> Complex64 {
    msc_boundary(x).expect("quadrature nodes lie inside (-2, 2)")
}

/// The profile-dependent kernel
/// `g(x, y) = Re sum_a [P a / (1 - P a)^2 + Q a / (1 - Q a)^2]`
/// with `P = m+(x) m+(y)`, `Q = m+(x) m-(y)`, `a` over the spectrum of `A`.
pub fn g_kernel(profile: &VarianceProfile, x: f64, y: f64) -> f64 {
    let (mx, my) = (m_plus(x), m_plus(y));
    g_kernel_m(profile.a_spectrum(), mx * my, mx * my.conj())
}

fn g_kernel_m(a_spec: &[f64], p: Complex64, q: Complex64) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for &a in a_spec {
        if a == 0.0 {
            continue;
        }
        let dp = one - p * a;
        let dq = one - q * a;
        acc += p * a / (dp * dp) + q * a / (dq * dq);
    }
    acc.re
}

/// Uniform bound `2 sum_a |a| / (1 - |a|)^2` on `|g|`.
pub fn g_kernel_bound(profile: &VarianceProfile) -> f64 {
    profile
        .a_spectrum()
        .iter()
        .map(|a| 2.0 * a.abs() / (1.0 - a.abs()).powi(2))
        .sum()
}

/// `V_beta(f)` from the double-integral representation, evaluated with a
/// tensor Gauss–Chebyshev rule of `nodes` points per axis.
pub fn variance_integral(
    f: &TestFunction,
    profile: &VarianceProfile,
    summary: &CumulantSummary,
    beta: Beta,
    nodes: usize,
) -> Result<f64> {
    let rule = ArcsineRule::new(nodes);
    let xs = &rule.nodes;
    let fx: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect();
    let dfx: Vec<f64> = xs.iter().map(|&x| f.derivative(1, x)).collect();
    if let Some(k) = fx.iter().chain(&dfx).position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "test function or derivative is not finite at quadrature node {}",
            k % nodes
        )));
    }
    let ms: Vec<Complex64> = xs.iter().map(|&x| m_plus(x)).collect();
    let a_spec: Vec<f64> = profile
        .a_spectrum()
        .iter()
        .copied()
        .filter(|a| *a != 0.0)
        .collect();
    let rows: Vec<(f64, f64)> = (0..nodes)
        .into_par_iter()
        .map(|i| {
            let mut kern = Vec::with_capacity(nodes);
            let mut prof = Vec::with_capacity(nodes);
            for j in 0..nodes {
                let (x, y) = (xs[i], xs[j]);
                let dq = if i == j {
                    dfx[i]
                } else {
                    (fx[i] - fx[j]) / (x - y)
                };
                kern.push(dq * dq * (4.0 - x * y));
                if !a_spec.is_empty() {
                    let g = g_kernel_m(&a_spec, ms[i] * ms[j], ms[i] * ms[j].conj());
                    prof.push(fx[i] * fx[j] * g);
                }
            }
            (pairwise_sum(kern), pairwise_sum(prof))
        })
        .collect();
    let w2 = rule.weight * rule.weight;
    let kern = w2 * pairwise_sum(rows.iter().map(|r| r.0));
    let prof = w2 * pairwise_sum(rows.iter().map(|r| r.1));
    let v_hat = kern / (2.0 * PI * PI) + prof / (PI * PI);
    if !v_hat.is_finite() {
        return Err(Error::Numerical("variance double integral is not finite".into()));
    }
    let b = beta.value();
    let c = ChebCoeffs::new(low_coeffs(&rule, &fx));
    let (t1, t2) = (c.get(1), c.get(2));
    Ok(v_hat / b - (2.0 - b) / 4.0 * t1 * t1 * profile.trace()
        + 0.5 * summary.s4_hat * t2 * t2
        + 0.5 * summary.s3_hat * t1 * t2)
}

/// `t_0, t_1, t_2` on the given rule.
fn low_coeffs(rule: &ArcsineRule, fx: &[f64]) -> Vec<f64> {
    (0..=2)
        .map(|n| {
            let s = pairwise_sum(
                rule.theta
                    .iter()
                    .zip(fx)
                    .map(|(th, v)| v * (n as f64 * th).cos()),
            );
            2.0 / rule.len() as f64 * s
        })
        .collect()
}

/// Mean shift `E_beta(f)`.
///
/// Both classes carry the fourth- and third-cumulant terms; the real class
/// adds the trace, endpoint and resolvent terms.
pub fn mean_correction(
    f: &TestFunction,
    profile: &VarianceProfile,
    summary: &CumulantSummary,
    beta: Beta,
    nodes: usize,
) -> Result<f64> {
    let rule = ArcsineRule::new(nodes);
    let fx: Vec<f64> = rule.nodes.iter().map(|&x| f.eval(x)).collect();
    if let Some(k) = fx.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "test function is not finite at quadrature node {k}"
        )));
    }
    let integrate = |h: &dyn Fn(f64) -> f64| {
        rule.weight * pairwise_sum(rule.nodes.iter().zip(&fx).map(|(&x, v)| v * h(x)))
    };
    let s4_term = summary.s4_hat / (2.0 * PI)
        * integrate(&|x| x.powi(4) - 4.0 * x * x + 2.0);
    let s3_term = summary.s3_hat / (8.0 * PI)
        * integrate(&|x| x.powi(3) - x * x - 2.0 * x + 4.0);
    let mut total = s4_term + s3_term;
    if beta == Beta::Real {
        let trace_term = profile.trace() / (2.0 * PI) * integrate(&|x| 2.0 - x * x);
        let edge = 0.25 * (f.eval(2.0) + f.eval(-2.0));
        let mut res = Vec::with_capacity(nodes);
        for (&x, v) in rule.nodes.iter().zip(&fx) {
            let mp = m_plus(x);
            let m = mp * mp;
            let tr = profile.resolvent_trace_split(m)?;
            res.push(v * (m * tr).re);
        }
        let res_term = rule.weight * pairwise_sum(res) / PI;
        total += trace_term + edge + res_term;
    }
    Ok(total)
}

/// `B(f) = s3 t_1^3 / 8`.
pub fn cubic_term(t: &ChebCoeffs, summary: &CumulantSummary) -> f64 {
    let t1 = t.get(1);
    summary.s3_hat * t1 * t1 * t1 / 8.0
}

/// Predicted `(V, E, B)` with provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltPrediction {
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub beta: Beta,
    #[serde(rename = "J")]
    pub order: usize,
    pub tail_estimate: f64,
    pub paths_agree: Option<bool>,
    pub provenance: VariancePath,
    pub v_series: f64,
    pub v_integral: Option<f64>,
    pub truncation_bound: f64,
    pub tail_warning: bool,
    pub series_converged: bool,
}

/// Knobs for [`predict`].
#[derive(Debug, Clone, Copy)]
pub struct PredictOptions {
    pub start_order: usize,
    pub integral_nodes: usize,
    pub mean_nodes: usize,
    pub with_integral: bool,
}

impl Default for PredictOptions {
    fn default() -> Self {
        PredictOptions {
            start_order: DEFAULT_ORDER,
            integral_nodes: INTEGRAL_NODES,
            mean_nodes: MEAN_NODES,
            with_integral: true,
        }
    }
}

/// `|a - b| <= max(1e-5 |a|, 1e-7)`.
pub fn paths_agree(series: f64, integral: f64) -> bool {
    (series - integral).abs() <= (1e-5 * series.abs()).max(1e-7)
}

/// Compute all three functionals for `f` under `spec`.
pub fn predict(f: &TestFunction, spec: &EnsembleSpec, opts: &PredictOptions) -> Result<CltPrediction> {
    let profile = &spec.profile;
    let summary = spec.cumulant_summary();
    let t = adaptive_coeffs(f, profile, opts.start_order)?;
    let series = variance_series(&t, profile, &summary, spec.beta);
    let v_integral = if opts.with_integral {
        Some(variance_integral(f, profile, &summary, spec.beta, opts.integral_nodes)?)
    } else {
        None
    };
    let e = mean_correction(f, profile, &summary, spec.beta, opts.mean_nodes)?;
    Ok(CltPrediction {
        v: series.value,
        e,
        b: cubic_term(&t, &summary),
        beta: spec.beta,
        order: t.order(),
        tail_estimate: t.tail_estimate,
        paths_agree: v_integral.map(|vi| paths_agree(series.value, vi)),
        provenance: VariancePath::Series,
        v_series: series.value,
        v_integral,
        truncation_bound: series.truncation_bound,
        tail_warning: series.tail_warning,
        // a polynomial's expansion is exact at its degree
        series_converged: series.converged || f.polynomial_degree().is_some(),
    })
}

/// `exp(-lambda^2 V/2 + i lambda^3 B/3 + i lambda E)`.
pub fn predicted_char(lambda: f64, pred: &CltPrediction) -> Complex64 {
    let re = -0.5 * lambda * lambda * pred.v;
    let im = lambda.powi(3) * pred.b / 3.0 + lambda * pred.e;
    Complex64::new(re, im).exp()
}

/// Cumulants implied by the prediction.
///
/// The third cumulant is reported under two conventions: matching the cubic
/// term of the exponent gives `-2B`; the exact linear-statistic oracle
/// (`f = x`, where `B = s3`) gives `+B`. Callers compare against both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictedCumulants {
    pub k1: f64,
    pub k2: f64,
    pub k3_exponent: f64,
    pub k3_direct: f64,
    /// `2 |B|`.
    pub k3_abs: f64,
}

pub fn predicted_cumulants(pred: &CltPrediction) -> PredictedCumulants {
    PredictedCumulants {
        k1: pred.e,
        k2: pred.v,
        k3_exponent: -2.0 * pred.b,
        k3_direct: pred.b,
        k3_abs: 2.0 * pred.b.abs(),
    }
}

/// `sqrt(z - 2) sqrt(z + 2)`: cut on `[-2, 2]`, `~ z` at infinity.
fn r_root(z: Complex64) -> Complex64 {
    (z - 2.0).sqrt() * (z + 2.0).sqrt()
}

/// `L(z, w) = 2 pi^2 log[(z + R(z))(w + R(w)) / (2 (z w - 4 + R(z) R(w)))]`.
pub fn l_kernel(z: Complex64, w: Complex64) -> Result<Complex64> {
    for p in [z, w] {
        if p.im == 0.0 && p.re.abs() <= 2.0 {
            return Err(Error::Domain(format!("L kernel argument {p} lies on the cut [-2, 2]")));
        }
    }
    let (rz, rw) = (r_root(z), r_root(w));
    let num = (z + rz) * (w + rw);
    let den = 2.0 * (z * w - 4.0 + rz * rw);
    Ok(2.0 * PI * PI * (num / den).ln())
}

/// Gaussian-ensemble variance of `Re log(z - x)` or `Im log(z - x)` summed
/// over eigenvalues, from the `L` kernel.
pub fn gbe_log_variance(z: Complex64, beta: Beta, part: LogPart) -> Result<f64> {
    if !(z.im > 0.0) || z.re.abs() >= 2.0 {
        return Err(Error::Domain(format!(
            "log variance needs Im z > 0 and |Re z| < 2, got {z}"
        )));
    }
    let zb = z.conj();
    let (lzz, lzzb, lzbzb) = (l_kernel(z, z)?, l_kernel(z, zb)?, l_kernel(zb, zb)?);
    let quarter = match part {
        LogPart::Real => 0.25 * (lzz + 2.0 * lzzb + lzbzb),
        LogPart::Imag => 0.25 * (2.0 * lzzb - lzz - lzbzb),
        LogPart::Complex => {
            return Err(Error::InvalidArgument("pick the real or imaginary part".into()))
        }
    };
    Ok(quarter.re / (2.0 * beta.value() * PI * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{two_point, EntryDistribution};
    use crate::profile::{profile_band, profile_flat, profile_random_ds};
    use crate::testfn::log_test_coeff;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn gaussian(beta: Beta) -> CumulantSummary {
        CumulantSummary::gaussian(beta)
    }

    fn coeffs(f: &TestFunction) -> ChebCoeffs {
        cheb_coeffs(f, DEFAULT_ORDER, DEFAULT_NODES).unwrap()
    }

    #[test]
    fn identity_variance_is_trace() {
        let p = profile_random_ds(30, 9, 0.8).unwrap();
        let t = coeffs(&TestFunction::identity());
        for beta in [Beta::Real, Beta::Complex] {
            let v = variance_series(&t, &p, &gaussian(beta), beta).value;
            assert_abs_diff_eq!(v, p.trace(), epsilon = 1e-10);
        }
    }

    #[test]
    fn square_variance_flat_gaussian() {
        let p = profile_flat(100).unwrap();
        let t = coeffs(&TestFunction::square());
        let v = variance_series(&t, &p, &gaussian(Beta::Real), Beta::Real).value;
        assert_abs_diff_eq!(v, 4.0, epsilon = 1e-10);
        // exact Var(tr H^2) = 4 - 2/N
        assert!((v - (4.0 - 2.0 / 100.0)).abs() <= 10.0 / 100.0);
    }

    #[test]
    fn pure_mode_variance() {
        let p = profile_flat(10).unwrap();
        for j in 1..8 {
            let t = coeffs(&TestFunction::Chebyshev(j));
            let v = variance_series(&t, &p, &gaussian(Beta::Complex), Beta::Complex).value;
            assert_abs_diff_eq!(v, j as f64 / 4.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn integral_path_flat_identity() {
        let p = profile_flat(20).unwrap();
        let v = variance_integral(&TestFunction::identity(), &p, &gaussian(Beta::Real), Beta::Real, 100)
            .unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn integral_and_series_agree() {
        let p = profile_random_ds(50, 21, 0.9).unwrap();
        let spec = EnsembleSpec::new(
            Beta::Real,
            Arc::new(p.clone()),
            EntryDistribution::Uniform,
            two_point(0.3).unwrap(),
        )
        .unwrap();
        let s = spec.cumulant_summary();
        for f in [
            TestFunction::identity(),
            TestFunction::square(),
            TestFunction::Chebyshev(3),
            TestFunction::Gaussian { center: 0.0, width: 0.5f64.sqrt() },
        ] {
            for beta in [Beta::Real, Beta::Complex] {
                let t = adaptive_coeffs(&f, &p, DEFAULT_ORDER).unwrap();
                let a = variance_series(&t, &p, &s, beta).value;
                let b = variance_integral(&f, &p, &s, beta, INTEGRAL_NODES).unwrap();
                assert!(paths_agree(a, b), "{}: {a} vs {b}", f.descriptor());
            }
        }
    }

    #[test]
    fn g_kernel_is_bounded() {
        let p = profile_band(60, 6).unwrap();
        let c = g_kernel_bound(&p);
        for i in 0..40 {
            for j in 0..40 {
                let x = -1.9 + 3.8 * i as f64 / 39.0;
                let y = -1.9 + 3.8 * j as f64 / 39.0;
                assert!(g_kernel(&p, x, y).abs() <= c);
            }
        }
        let flat = profile_flat(10).unwrap();
        assert!(g_kernel(&flat, 0.3, -0.4).abs() < 1e-14);
    }

    #[test]
    fn mean_correction_vanishes_for_square_flat_gaussian() {
        let p = profile_flat(200).unwrap();
        let e = mean_correction(&TestFunction::square(), &p, &gaussian(Beta::Real), Beta::Real, MEAN_NODES)
            .unwrap();
        assert!(e.abs() <= 5e-3, "{e}");
        assert_abs_diff_eq!(e, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn mean_correction_vanishes_for_square_any_profile() {
        // E[tr H^2] - N = 0 for every doubly stochastic S
        let p = profile_random_ds(40, 2, 0.9).unwrap();
        let e = mean_correction(&TestFunction::square(), &p, &gaussian(Beta::Real), Beta::Real, MEAN_NODES)
            .unwrap();
        assert_abs_diff_eq!(e, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn mean_correction_is_odd_blind() {
        let p = profile_band(50, 5).unwrap();
        for f in [TestFunction::identity(), TestFunction::Chebyshev(3)] {
            for beta in [Beta::Real, Beta::Complex] {
                let e = mean_correction(&f, &p, &gaussian(beta), beta, MEAN_NODES).unwrap();
                assert!(e.abs() < 1e-12, "{e}");
            }
        }
    }

    #[test]
    fn mean_correction_moment_oracle() {
        // flat S, Gaussian, beta = 1: the resolvent term is -(1/2pi) int f/sqrt
        // and E_1(x^4) = 2 tr S-term... check against hand integration:
        // (1/2pi)(2*6pi - 20pi) = -4, edges (16+16)/4 = 8, resolvent -(1/2pi)*6pi = -3
        let p = profile_flat(10).unwrap();
        let f = TestFunction::Polynomial(vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        let e = mean_correction(&f, &p, &gaussian(Beta::Real), Beta::Real, MEAN_NODES).unwrap();
        assert_abs_diff_eq!(e, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn cubic_term_examples() {
        let t = coeffs(&TestFunction::identity());
        let mut s = gaussian(Beta::Real);
        assert_eq!(cubic_term(&t, &s), 0.0);
        s.s3_hat = 0.37;
        assert_abs_diff_eq!(cubic_term(&t, &s), 0.37, epsilon = 1e-12);
    }

    #[test]
    fn predicted_char_properties() {
        let pred = CltPrediction {
            v: 2.0,
            e: 0.3,
            b: 0.1,
            beta: Beta::Real,
            order: 2,
            tail_estimate: 0.0,
            paths_agree: None,
            provenance: VariancePath::Series,
            v_series: 2.0,
            v_integral: None,
            truncation_bound: 0.0,
            tail_warning: false,
            series_converged: true,
        };
        assert_eq!(predicted_char(0.0, &pred), Complex64::new(1.0, 0.0));
        for l in [-2.0, -0.5, 0.25, 1.0, 3.0] {
            let c = predicted_char(l, &pred);
            assert_abs_diff_eq!(c.norm(), (-0.5 * l * l * 2.0f64).exp(), epsilon = 1e-15);
            assert!(c.norm() < 1.0);
        }
        let mut g = pred.clone();
        g.b = 0.0;
        g.e = 0.0;
        assert_eq!(predicted_char(0.7, &g).im, 0.0);
        let k = predicted_cumulants(&pred);
        assert_eq!(k.k2, 2.0);
        assert_abs_diff_eq!(k.k3_abs, 0.2);
        assert_abs_diff_eq!(k.k3_exponent, -0.2);
        let json = serde_json::to_string(&pred).unwrap();
        for key in ["\"V\"", "\"E\"", "\"B\"", "\"J\"", "tail_estimate", "paths_agree", "\"beta\":1"] {
            assert!(json.contains(key), "{json}");
        }
    }

    #[test]
    fn l_kernel_properties() {
        let z = Complex64::new(0.4, 0.3);
        let w = Complex64::new(-1.1, 0.7);
        let a = l_kernel(z, w).unwrap();
        let b = l_kernel(w, z).unwrap();
        assert!((a - b).norm() < 1e-12);
        let c = l_kernel(z, z.conj()).unwrap();
        assert!(c.im.abs() < 1e-12);
        assert!(l_kernel(Complex64::new(1.0, 0.0), z).is_err());
        // closed form -4 pi^2 log(1 - m(z) m(w))
        let mz = msc(z).unwrap();
        let mw = msc(w).unwrap();
        let want = -4.0 * PI * PI * (1.0 - mz * mw).ln();
        assert!((a - want).norm() < 1e-10, "{a} vs {want}");
    }

    #[test]
    fn l_kernel_log_growth() {
        let half = |eta: f64| 0.5 * l_kernel(Complex64::new(0.0, eta), Complex64::new(0.0, -eta)).unwrap().re;
        let target = 2.0 * PI * PI * 10f64.ln();
        for (a, b) in [(1e-2, 1e-3), (1e-3, 1e-4)] {
            let d = half(b) - half(a);
            assert!((d - target).abs() <= 0.15 * target, "{d} vs {target}");
        }
    }

    #[test]
    fn gbe_variance_examples() {
        let z = Complex64::new(0.0, (-5.0f64).exp());
        let v = gbe_log_variance(z, Beta::Real, LogPart::Real).unwrap();
        assert!((v - 5.0).abs() <= 1.5, "{v}");
        let vi = gbe_log_variance(z, Beta::Real, LogPart::Imag).unwrap();
        // the parts differ by the bounded amount -2 Re log(1 - m^2) / beta
        let m = msc(z).unwrap();
        let gap = -2.0 * (1.0 - m * m).ln().re;
        assert_abs_diff_eq!(v - vi, gap, epsilon = 1e-9);
        assert!((v - vi).abs() <= 2.0 * 2f64.ln() + 1e-9);
        assert!(gbe_log_variance(Complex64::new(2.5, 0.1), Beta::Real, LogPart::Real).is_err());
    }

    #[test]
    fn gbe_variance_is_the_gaussian_series() {
        // on a flat profile the kernel value equals (1/2 beta) sum j t_j^2 exactly
        let p = profile_flat(8).unwrap();
        for &(e, eta) in &[(0.0, 0.3), (0.8, 0.2), (-1.3, 0.5)] {
            let z = Complex64::new(e, eta);
            for part in [LogPart::Real, LogPart::Imag] {
                for beta in [Beta::Real, Beta::Complex] {
                    let t = log_cheb_coeffs(z, 400, part).unwrap();
                    let main: f64 = (1..=400).map(|j| j as f64 * t.t[j] * t.t[j]).sum();
                    let kernel = gbe_log_variance(z, beta, part).unwrap();
                    assert_abs_diff_eq!(kernel, main / (2.0 * beta.value()), epsilon = 1e-9);
                    let series = variance_series(&t, &p, &gaussian(beta), beta).value;
                    assert!((series - kernel).abs() < 1.0);
                }
            }
        }
        // t_2 at z = i is -m^2 = (3 - sqrt 5)/2
        let z = Complex64::new(0.0, 1.0);
        let t2 = log_test_coeff(z, 2, LogPart::Real).unwrap().re;
        assert_abs_diff_eq!(t2, (3.0 - 5f64.sqrt()) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn predict_reports_both_paths() {
        let p = Arc::new(profile_flat(30).unwrap());
        let spec = EnsembleSpec::gaussian(Beta::Real, p);
        let pred = predict(&TestFunction::square(), &spec, &PredictOptions::default()).unwrap();
        assert_abs_diff_eq!(pred.v, 4.0, epsilon = 1e-10);
        assert_abs_diff_eq!(pred.e, 0.0, epsilon = 1e-10);
        assert_eq!(pred.paths_agree, Some(true));
        let pred = predict(
            &TestFunction::Gaussian { center: 0.3, width: 0.7 },
            &spec,
            &PredictOptions::default(),
        )
        .unwrap();
        assert!(pred.series_converged);
        assert_eq!(pred.paths_agree, Some(true));
    }

    #[derive(Debug, Clone)]
    struct Config {
        seed: u64,
        n: usize,
        roughness: f64,
        off: EntryDistribution,
        diag: EntryDistribution,
        beta: Beta,
        coeffs: Vec<f64>,
    }

    fn family() -> impl Strategy<Value = EntryDistribution> {
        prop_oneof![
            Just(EntryDistribution::Gaussian),
            Just(EntryDistribution::Rademacher),
            Just(EntryDistribution::Uniform),
            (0.05..0.95f64).prop_map(|p| EntryDistribution::TwoPoint { p }),
        ]
    }

    fn config() -> impl Strategy<Value = Config> {
        (
            0u64..10_000,
            2usize..30,
            0.0..1.0f64,
            family(),
            family(),
            prop_oneof![Just(Beta::Real), Just(Beta::Complex)],
            prop::collection::vec(-2.0..2.0f64, 1..7),
        )
            .prop_map(|(seed, n, roughness, off, diag, beta, coeffs)| Config {
                seed,
                n,
                roughness,
                off,
                diag,
                beta,
                coeffs,
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn variance_is_nonnegative(c in config()) {
            let p = profile_random_ds(c.n, c.seed, c.roughness).unwrap();
            let spec = EnsembleSpec::new(c.beta, Arc::new(p), c.off, c.diag).unwrap();
            let f = TestFunction::Polynomial(c.coeffs.clone());
            let t = adaptive_coeffs(&f, &spec.profile, DEFAULT_ORDER).unwrap();
            let v = variance_series(&t, &spec.profile, &spec.cumulant_summary(), c.beta).value;
            prop_assert!(v >= -1e-10, "{c:?}: V = {v}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn functionals_are_homogeneous(c in config(), k in -3.0..3.0f64) {
            let p = profile_random_ds(c.n.max(3), c.seed, c.roughness).unwrap();
            let spec = EnsembleSpec::new(c.beta, Arc::new(p), c.off, c.diag).unwrap();
            let opts = PredictOptions { with_integral: false, ..Default::default() };
            let f = TestFunction::Polynomial(c.coeffs.clone());
            let g = TestFunction::Polynomial(c.coeffs.iter().map(|v| k * v).collect());
            let a = predict(&f, &spec, &opts).unwrap();
            let b = predict(&g, &spec, &opts).unwrap();
            let tol = |x: f64| 1e-12 * (1.0 + x.abs());
            prop_assert!((b.v - k * k * a.v).abs() <= tol(b.v));
            prop_assert!((b.e - k * a.e).abs() <= tol(b.e));
            prop_assert!((b.b - k * k * k * a.b).abs() <= tol(b.b));
        }
    }
}
