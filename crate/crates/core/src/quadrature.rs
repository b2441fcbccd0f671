//! Quadrature rules used throughout the crate.
//!
//! Two families are provided. Gauss–Chebyshev rules on `[-2, 2]` absorb the
//! arcsine weight `1/sqrt(4 - x^2)` (first kind) or the semicircle weight
//! `sqrt(4 - x^2)` (second kind) and converge spectrally for smooth
//! integrands. The adaptive Gauss–Kronrod integrator handles everything else
//! (weighted norms, test oracles).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Chebyshev rule of the first kind mapped to `[-2, 2]`.
///
/// `sum_j weight * g(nodes[j])` approximates `int_{-2}^{2} g(x) dx / sqrt(4 - x^2)`.
/// Nodes are `x_j = 2 cos(theta_j)` with `theta_j = pi (j + 1/2) / m`, so they
/// never touch the endpoints.
#[derive(Debug, Clone)]
pub struct ArcsineRule {
    pub theta: Vec<f64>,
    pub nodes: Vec<f64>,
    pub weight: f64,
}

impl ArcsineRule {
    pub fn new(m: usize) -> Self {
        let theta: Vec<f64> = (0..m).map(|j| PI * (j as f64 + 0.5) / m as f64).collect();
        let nodes = theta.iter().map(|t| 2.0 * t.cos()).collect();
        ArcsineRule {
            theta,
            nodes,
            weight: PI / m as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `int_{-2}^{2} g(x) / sqrt(4 - x^2) dx`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.weight * pairwise_sum(self.nodes.iter().map(|&x| g(x)))
    }
}

/// Expectation of `f` under the semicircle law, `int f(x) rho_sc(x) dx`.
///
/// Uses the `m`-point Gauss–Chebyshev rule of the second kind.
pub fn semicircle_mean<F: Fn(f64) -> f64>(f: F, m: usize) -> f64 {
    let h = PI / (m as f64 + 1.0);
    let terms = (1..=m).map(|j| {
        let theta = h * j as f64;
        let s = theta.sin();
        s * s * f(2.0 * theta.cos())
    });
    2.0 / (m as f64 + 1.0) * pairwise_sum(terms)
}

/// Sum in a fixed binary-tree order. Deterministic and accurate to `O(eps log n)`.
pub fn pairwise_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let v: Vec<f64> = it.into_iter().collect();
    pairwise_slice(&v)
}

fn pairwise_slice(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise_slice(&v[..mid]) + pairwise_slice(&v[mid..])
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut finite = fc.is_finite();
    for i in 0..7 {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        finite &= f1.is_finite() && f2.is_finite();
        k += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    if !finite {
        return Err(Error::Numerical(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    Ok((k * h, ((k - g) * h).abs()))
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Bisects until the Kronrod–Gauss difference on every panel is below its
/// share of `max(abs_tol, rel_tol * |I|)`. Fails if the integrand is not
/// finite at a sample point or if the panel budget is exhausted.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_PANELS: usize = 20_000;
    let (i0, e0) = kronrod15(&mut f, a, b)?;
    // (lo, hi, value, error)
    let mut panels = vec![(a, b, i0, e0)];
    let mut total = i0;
    let mut err = e0;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if panels.len() >= MAX_PANELS {
            return Err(Error::Numerical(format!(
                "adaptive quadrature on [{a}, {b}] did not converge (error estimate {err:e})"
            )));
        }
        // split the worst panel
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty panel list");
        let (lo, hi, v, e) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = kronrod15(&mut f, lo, mid)?;
        let (v2, e2) = kronrod15(&mut f, mid, hi)?;
        total += v1 + v2 - v;
        err += e1 + e2 - e;
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
    // re-sum in a fixed order to avoid drift from the running updates
    panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(pairwise_sum(panels.iter().map(|p| p.2)))
}
