//! Test functions, their Chebyshev expansions and weighted norms.
//!
//! Chebyshev polynomials use the scaling adapted to `[-2, 2]`:
//! `T_n(2 cos theta) = cos(n theta)`, so `T_1(x) = x/2` and
//! `T_2(x) = x^2/2 - 1`. A function expands as
//! `f = t_0/2 + sum_{n >= 1} t_n T_n` with
//! `t_n = (2/pi) int T_n f / sqrt(4 - x^2)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;
use crate::semicircle::msc;

/// Default node count of the Gauss–Chebyshev rule for coefficients.
pub const DEFAULT_NODES: usize = 2048;
/// Default truncation order.
pub const DEFAULT_ORDER: usize = 256;
/// Step for central differences of black-box functions.
pub const FD_STEP: f64 = 1e-5;

/// A real test function on `[-5, 5]`.
#[derive(Clone)]
pub enum TestFunction {
    /// `sum_k c[k] x^k`.
    Polynomial(Vec<f64>),
    /// The scaled Chebyshev polynomial `T_n`.
    Chebyshev(usize),
    /// `exp(-(x - center)^2 / (2 width^2))`.
    Gaussian { center: f64, width: f64 },
    /// `Re log(E + i eta - x)`. Singular at `x = E` when `eta = 0`.
    LogRe { energy: f64, eta: f64 },
    /// `Im log(E + i eta - x)` (principal branch). Jumps at `x = E` when `eta = 0`.
    LogIm { energy: f64, eta: f64 },
    /// Black-box smooth function; derivatives by central differences.
    Closure {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
    /// `sum_i a_i f_i`.
    Linear(Vec<(f64, TestFunction)>),
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestFunction({})", self.descriptor())
    }
}

impl TestFunction {
    pub fn identity() -> Self {
        TestFunction::Polynomial(vec![0.0, 1.0])
    }

    pub fn square() -> Self {
        TestFunction::Polynomial(vec![0.0, 0.0, 1.0])
    }

    pub fn closure<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        TestFunction::Closure {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn log_re(z: Complex64) -> Self {
        TestFunction::LogRe {
            energy: z.re,
            eta: z.im,
        }
    }

    pub fn log_im(z: Complex64) -> Self {
        TestFunction::LogIm {
            energy: z.re,
            eta: z.im,
        }
    }

    /// `a f + b g`.
    pub fn combine(a: f64, f: TestFunction, b: f64, g: TestFunction) -> Self {
        TestFunction::Linear(vec![(a, f), (b, g)])
    }

    pub fn scaled(self, c: f64) -> Self {
        TestFunction::Linear(vec![(c, self)])
    }

    /// Parse a builtin name: `x`, `x2`, `gauss(c,w)`, `logre(E,eta)`,
    /// `logim(E,eta)`, `cheb(n)` or `poly(c0,c1,...)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let s: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        match s.as_str() {
            "x" => return Ok(Self::identity()),
            "x2" => return Ok(Self::square()),
            _ => {}
        }
        let (name, args) = s
            .strip_suffix(')')
            .and_then(|body| body.split_once('('))
            .ok_or_else(|| Error::Config(format!("unknown test function `{spec}`")))?;
        let nums = args
            .split(',')
            .filter(|a| !a.is_empty())
            .map(|a| {
                a.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad number `{a}` in `{spec}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let want = |k: usize| -> Result<()> {
            if nums.len() == k {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "`{name}` takes {k} argument(s), got {} in `{spec}`",
                    nums.len()
                )))
            }
        };
        match name {
            "gauss" => {
                want(2)?;
                if !(nums[1] > 0.0) {
                    return Err(Error::Config(format!("gauss width must be positive in `{spec}`")));
                }
                Ok(TestFunction::Gaussian {
                    center: nums[0],
                    width: nums[1],
                })
            }
            "logre" | "logim" => {
                want(2)?;
                if !(nums[1] >= 0.0) {
                    return Err(Error::Config(format!("eta must be >= 0 in `{spec}`")));
                }
                let (energy, eta) = (nums[0], nums[1]);
                Ok(if name == "logre" {
                    TestFunction::LogRe { energy, eta }
                } else {
                    TestFunction::LogIm { energy, eta }
                })
            }
            "cheb" => {
                want(1)?;
                let n = nums[0];
                if n < 0.0 || n.fract() != 0.0 {
                    return Err(Error::Config(format!("cheb order must be a non-negative integer in `{spec}`")));
                }
                Ok(TestFunction::Chebyshev(n as usize))
            }
            "poly" => {
                if nums.is_empty() {
                    return Err(Error::Config(format!("poly needs coefficients in `{spec}`")));
                }
                Ok(TestFunction::Polynomial(nums))
            }
            _ => Err(Error::Config(format!("unknown test function `{spec}`"))),
        }
    }

    /// Canonical text form; `parse(descriptor())` round-trips for builtin kinds.
    pub fn descriptor(&self) -> String {
        match self {
            TestFunction::Polynomial(c) => {
                if c.len() == 2 && c[0] == 0.0 && c[1] == 1.0 {
                    "x".into()
                } else if c.len() == 3 && c[0] == 0.0 && c[1] == 0.0 && c[2] == 1.0 {
                    "x2".into()
                } else {
                    let parts: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                    format!("poly({})", parts.join(","))
                }
            }
            TestFunction::Chebyshev(n) => format!("cheb({n})"),
            TestFunction::Gaussian { center, width } => format!("gauss({center},{width})"),
            TestFunction::LogRe { energy, eta } => format!("logre({energy},{eta})"),
            TestFunction::LogIm { energy, eta } => format!("logim({energy},{eta})"),
            TestFunction::Closure { name, .. } => format!("closure:{name}"),
            TestFunction::Linear(terms) => {
                let parts: Vec<String> = terms
                    .iter()
                    .map(|(a, f)| format!("{a}*{}", f.descriptor()))
                    .collect();
                format!("[{}]", parts.join("+"))
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck),
            TestFunction::Chebyshev(n) => cheb_t(*n, x),
            TestFunction::Gaussian { center, width } => {
                let u = (x - center) / width;
                (-0.5 * u * u).exp()
            }
            TestFunction::LogRe { energy, eta } => {
                let d = energy - x;
                0.5 * (d * d + eta * eta).ln()
            }
            TestFunction::LogIm { energy, eta } => log_arg(energy - x, *eta),
            TestFunction::Closure { f, .. } => f(x),
            TestFunction::Linear(terms) => terms.iter().map(|(a, f)| a * f.eval(x)).sum(),
        }
    }

    /// Derivative of order `d` (0, 1 or 2).
    pub fn derivative(&self, d: u8, x: f64) -> f64 {
        match d {
            0 => return self.eval(x),
            1 | 2 => {}
            _ => panic!("derivative order {d} not supported"),
        }
        match self {
            TestFunction::Polynomial(c) => {
                let mut coeffs = c.clone();
                for _ in 0..d {
                    coeffs = coeffs
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(k, v)| k as f64 * v)
                        .collect();
                }
                coeffs.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
            }
            TestFunction::Chebyshev(n) => {
                let (_, d1, d2) = cheb_t_with_derivatives(*n, x);
                if d == 1 {
                    d1
                } else {
                    d2
                }
            }
            TestFunction::Gaussian { center, width } => {
                let w2 = width * width;
                let u = x - center;
                let g = (-0.5 * u * u / w2).exp();
                if d == 1 {
                    -u / w2 * g
                } else {
                    (u * u / (w2 * w2) - 1.0 / w2) * g
                }
            }
            TestFunction::LogRe { energy, eta } | TestFunction::LogIm { energy, eta } => {
                let r = Complex64::new(energy - x, *eta).inv();
                let v = if d == 1 { -r } else { -r * r };
                if matches!(self, TestFunction::LogRe { .. }) {
                    v.re
                } else {
                    v.im
                }
            }
            TestFunction::Closure { f, .. } => {
                let h = FD_STEP;
                if d == 1 {
                    (f(x + h) - f(x - h)) / (2.0 * h)
                } else {
                    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
                }
            }
            TestFunction::Linear(terms) => {
                terms.iter().map(|(a, f)| a * f.derivative(d, x)).sum()
            }
        }
    }

    /// Monomial coefficients when `f` is a polynomial (including `T_n` and
    /// linear combinations of polynomials).
    pub fn monomial_coeffs(&self) -> Option<Vec<f64>> {
        match self {
            TestFunction::Polynomial(c) => Some(c.clone()),
            TestFunction::Chebyshev(n) => Some(cheb_monomials(*n)),
            TestFunction::Linear(terms) => {
                let mut out: Vec<f64> = Vec::new();
                for (a, f) in terms {
                    let c = f.monomial_coeffs()?;
                    if c.len() > out.len() {
                        out.resize(c.len(), 0.0);
                    }
                    for (o, v) in out.iter_mut().zip(c) {
                        *o += a * v;
                    }
                }
                Some(out)
            }
            _ => None,
        }
    }

    fn has_black_box(&self) -> bool {
        match self {
            TestFunction::Closure { .. } => true,
            TestFunction::Linear(terms) => terms.iter().any(|(_, f)| f.has_black_box()),
            _ => false,
        }
    }

    /// Degree when `f` is a polynomial (trailing zero coefficients ignored).
    pub fn polynomial_degree(&self) -> Option<usize> {
        let c = self.monomial_coeffs()?;
        Some(c.iter().rposition(|v| *v != 0.0).unwrap_or(0))
    }

    /// Weighted norms `(||f||_{1,w}, ||f'||_{1,w}, ||f''||_{1,w})` and a flag
    /// telling whether `f` is numerically negligible at `±5`.
    pub fn admissibility(&self) -> Result<Admissibility> {
        let norms = [
            weighted_norm(self, 0, 1.0)?,
            weighted_norm(self, 1, 1.0)?,
            weighted_norm(self, 2, 1.0)?,
        ];
        let edge = self.eval(5.0).abs().max(self.eval(-5.0).abs());
        let scale = self.eval(0.0).abs().max(norms[0] / PI).max(f64::MIN_POSITIVE);
        Ok(Admissibility {
            weighted_norms: norms,
            vanishes_at_support_edge: edge <= 1e-8 * scale,
        })
    }
}

/// Weighted-norm metadata of a test function.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Admissibility {
    pub weighted_norms: [f64; 3],
    pub vanishes_at_support_edge: bool,
}

fn log_arg(re: f64, eta: f64) -> f64 {
    // principal arg in (-pi, pi]; for eta = 0 and re < 0 this is pi
    if eta == 0.0 {
        if re < 0.0 {
            PI
        } else {
            0.0
        }
    } else {
        eta.atan2(re)
    }
}

/// Scaled Chebyshev polynomial `T_n(x)` by the three-term recurrence
/// `T_{n+1} = x T_n - T_{n-1}`, `T_0 = 1`, `T_1 = x/2`.
pub fn cheb_t(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, 0.5 * x);
    for _ in 1..n {
        let next = x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn cheb_t_with_derivatives(n: usize, x: f64) -> (f64, f64, f64) {
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    let (mut t0, mut t1) = (1.0, 0.5 * x);
    let (mut d0, mut d1) = (0.0, 0.5);
    let (mut s0, mut s1) = (0.0, 0.0);
    for _ in 1..n {
        let t2 = x * t1 - t0;
        let d2 = t1 + x * d1 - d0;
        let s2 = 2.0 * d1 + x * s1 - s0;
        (t0, t1) = (t1, t2);
        (d0, d1) = (d1, d2);
        (s0, s1) = (s1, s2);
    }
    (t1, d1, s1)
}

fn cheb_monomials(n: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 0.5];
    for _ in 1..n {
        let mut next = vec![0.0; cur.len() + 1];
        for (k, v) in cur.iter().enumerate() {
            next[k + 1] += v;
        }
        for (k, v) in prev.iter().enumerate() {
            next[k] -= v;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Truncated Chebyshev series `t_0 .. t_J` with an estimate of the dropped tail
/// `sum_{n > J} |t_n|`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ChebCoeffs {
    pub t: Vec<f64>,
    pub tail_estimate: f64,
}

impl ChebCoeffs {
    pub fn new(t: Vec<f64>) -> Self {
        let tail_estimate = estimate_tail(&t);
        ChebCoeffs { t, tail_estimate }
    }

    /// Truncation order `J`.
    pub fn order(&self) -> usize {
        self.t.len().saturating_sub(1)
    }

    /// Coefficient `t_n`, zero beyond the truncation order.
    pub fn get(&self, n: usize) -> f64 {
        self.t.get(n).copied().unwrap_or(0.0)
    }

    /// Evaluate `t_0/2 + sum t_n T_n(x)` by Clenshaw's recurrence.
    pub fn reconstruct(&self, x: f64) -> f64 {
        reconstruct(&self.t, x)
    }
}

/// Clenshaw evaluation of `t_0/2 + sum_{n >= 1} t_n T_n(x)`.
pub fn reconstruct(t: &[f64], x: f64) -> f64 {
    if t.is_empty() {
        return 0.0;
    }
    let (mut b1, mut b2) = (0.0, 0.0);
    for &tk in t[1..].iter().rev() {
        let b0 = tk + x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    0.5 * t[0] + 0.5 * x * b1 - b2
}

fn estimate_tail(t: &[f64]) -> f64 {
    let scale = t.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = f64::EPSILON * t.len() as f64 * scale;
    if t.len() < 20 {
        return floor;
    }
    let n = t.len();
    let decade = |lo: usize| t[lo..lo + 10].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let last = decade(n - 10);
    let before = decade(n - 20);
    if last <= 100.0 * f64::EPSILON * scale {
        return floor;
    }
    if before == 0.0 {
        return f64::INFINITY;
    }
    let q = (last / before).powf(0.1);
    if q >= 1.0 {
        return f64::INFINITY;
    }
    last * q / (1.0 - q) + floor
}

/// Chebyshev coefficients `t_0..t_J` from an `M`-node Gauss–Chebyshev rule:
/// `t_n = (2/M) sum_j f(x_j) cos(n theta_j)`, `theta_j = pi (j + 1/2) / M`.
pub fn cheb_coeffs(f: &TestFunction, order: usize, nodes: usize) -> Result<ChebCoeffs> {
    cheb_coeffs_fn(|x| f.eval(x), order, nodes)
}

/// As [`cheb_coeffs`] for any closure.
pub fn cheb_coeffs_fn<F: Fn(f64) -> f64>(f: F, order: usize, nodes: usize) -> Result<ChebCoeffs> {
    if nodes < 2 * order || nodes == 0 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2J = {} nodes, got {nodes}",
            2 * order
        )));
    }
    let m = nodes;
    let mut values = Vec::with_capacity(m);
    for j in 0..m {
        let theta = PI * (j as f64 + 0.5) / m as f64;
        let x = 2.0 * theta.cos();
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::Numerical(format!(
                "test function is not finite at Chebyshev node {j} (x = {x})"
            )));
        }
        values.push(v);
    }
    // cos(n theta_j) = cos(pi * n (2j+1) / (2M)); tabulate on the 4M-th roots
    let period = 4 * m;
    let table: Vec<f64> = (0..period)
        .map(|k| (PI * k as f64 / (2 * m) as f64).cos())
        .collect();
    let scale = 2.0 / m as f64;
    let t = (0..=order)
        .map(|n| {
            let mut acc = 0.0;
            for (j, v) in values.iter().enumerate() {
                let k = (n * (2 * j + 1)) % period;
                acc += v * table[k];
            }
            scale * acc
        })
        .collect();
    Ok(ChebCoeffs::new(t))
}

/// Which part of `log(z - x)` a coefficient refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogPart {
    Real,
    Imag,
    Complex,
}

/// Closed-form coefficient `t_n(log(z - .)) = 2 (-1)^{n+1} m_sc(z)^n / n` for
/// `Im z > 0`, `n >= 1`. For [`LogPart::Real`] / [`LogPart::Imag`] the result
/// is real (imaginary component zero).
pub fn log_test_coeff(z: Complex64, n: usize, part: LogPart) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "t_0 of a log test function has no closed form here; use quadrature".into(),
        ));
    }
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("log coefficients need Im z > 0, got {z}")));
    }
    let m = msc(z)?;
    let sign = if n % 2 == 1 { 2.0 } else { -2.0 };
    let c = m.powu(n as u32) * (sign / n as f64);
    Ok(match part {
        LogPart::Complex => c,
        LogPart::Real => Complex64::new(c.re, 0.0),
        LogPart::Imag => Complex64::new(c.im, 0.0),
    })
}

/// Full coefficient vector for `Re` or `Im` of `log(z - .)`: closed form for
/// `n >= 1`, quadrature for `t_0`, analytic geometric tail bound.
pub fn log_cheb_coeffs(z: Complex64, order: usize, part: LogPart) -> Result<ChebCoeffs> {
    let f = match part {
        LogPart::Real => TestFunction::log_re(z),
        LogPart::Imag => TestFunction::log_im(z),
        LogPart::Complex => {
            return Err(Error::InvalidArgument(
                "complex coefficients do not form a real series; pick Real or Imag".into(),
            ))
        }
    };
    let t0 = cheb_coeffs(&f, 0, DEFAULT_NODES)?.t[0];
    let mut t = vec![t0];
    for n in 1..=order {
        t.push(log_test_coeff(z, n, part)?.re);
    }
    let r = msc(z)?.norm();
    let j1 = (order + 1) as f64;
    let tail = 2.0 * r.powf(j1) / (j1 * (1.0 - r));
    Ok(ChebCoeffs {
        t,
        tail_estimate: tail,
    })
}

/// Weighted norm `(int_{-5}^{5} |f^{(d)}(x)|^p / sqrt|4 - x^2| dx)^{1/p}`.
///
/// The arcsine singularities at `±2` are removed by `x = 2 cos(theta)` on
/// `[-2, 2]` and `x = ±2 cosh(u)` outside.
pub fn weighted_norm(f: &TestFunction, d: u8, p: f64) -> Result<f64> {
    if d > 2 || !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "weighted norm needs d in {{0,1,2}} and p >= 1, got d = {d}, p = {p}"
        )));
    }
    let g = |x: f64| f.derivative(d, x).abs().powf(p);
    // finite differences are noisy at the 1e-6 level; do not chase that noise
    let (abs_tol, rel_tol) = if f.has_black_box() {
        (1e-8, 1e-4)
    } else {
        (1e-12, 1e-10)
    };
    let inner = integrate_adaptive(|t: f64| g(2.0 * t.cos()), 0.0, PI, abs_tol, rel_tol);
    let u_max = (2.5f64).acosh();
    let right = integrate_adaptive(|u: f64| g(2.0 * u.cosh()), 0.0, u_max, abs_tol, rel_tol);
    let left = integrate_adaptive(|u: f64| g(-2.0 * u.cosh()), 0.0, u_max, abs_tol, rel_tol);
    let total = match (inner, right, left) {
        (Ok(a), Ok(b), Ok(c)) => a + b + c,
        _ => {
            return Err(Error::Numerical(format!(
                "weighted norm of {} (derivative {d}) is not integrable",
                f.descriptor()
            )))
        }
    };
    Ok(total.powf(1.0 / p))
}
