//! Closed-form quantities attached to the semicircle law
//! `rho_sc(x) = sqrt((4 - x^2)_+) / (2 pi)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Which limit of the spectral parameter is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
    /// Real `z` in the bulk, approached from the upper half-plane (`x + i0`).
    BoundaryFromAbove,
}

/// A spectral parameter `z = E ± i eta`, or a boundary point `x + i0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub z: Complex64,
    pub side: Side,
}

impl SpectralPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        let side = if z.im > 0.0 {
            Side::Upper
        } else if z.im < 0.0 {
            Side::Lower
        } else {
            return Err(Error::Domain(format!(
                "z = {z} lies on the real axis; use SpectralPoint::boundary"
            )));
        };
        Ok(SpectralPoint { z, side })
    }

    pub fn boundary(x: f64) -> Result<Self> {
        if !(x.abs() < 2.0) {
            return Err(Error::Domain(format!("boundary point {x} outside (-2, 2)")));
        }
        Ok(SpectralPoint {
            z: Complex64::new(x, 0.0),
            side: Side::BoundaryFromAbove,
        })
    }

    /// `m_sc` at this point (boundary value `m_sc(x + i0)` on the arc).
    pub fn msc(&self) -> Complex64 {
        match self.side {
            Side::BoundaryFromAbove => msc_boundary(self.z.re).expect("validated at construction"),
            _ => msc(self.z).expect("validated at construction"),
        }
    }
}

/// Stieltjes transform of the semicircle law.
///
/// Returns the root of `m^2 + z m + 1 = 0` with `|m| <= 1`, which is the one
/// with `sign(Im m) = sign(Im z)`. The larger root is formed first (no
/// cancellation) and the wanted root is its reciprocal, since the product of
/// the two roots is 1.
pub fn msc(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite spectral parameter {z}")));
    }
    if z.im == 0.0 {
        return Err(Error::Domain(format!(
            "m_sc is not defined on the real axis (z = {z}); use msc_boundary"
        )));
    }
    let s = (z * z - 4.0).sqrt();
    let a = -z + s;
    let b = -z - s;
    let big = if a.norm_sqr() >= b.norm_sqr() { a } else { b } * 0.5;
    let m = big.inv();
    // for |Im z| at roundoff level both roots sit on the unit circle
    if m.im * z.im < 0.0 {
        return Ok(big);
    }
    Ok(m)
}

/// Boundary value `m_sc(x + i0) = (-x + i sqrt(4 - x^2)) / 2` for `|x| < 2`.
pub fn msc_boundary(x: f64) -> Result<Complex64> {
    if !(x.abs() < 2.0) {
        return Err(Error::Domain(format!(
            "boundary value requires |x| < 2, got {x}"
        )));
    }
    Ok(Complex64::new(-0.5 * x, 0.5 * (4.0 - x * x).sqrt()))
}

/// `m_sc'(z) = m^2 / (1 - m^2)`.
pub fn msc_derivative(z: Complex64) -> Result<Complex64> {
    let m = msc(z)?;
    let m2 = m * m;
    Ok(m2 / (1.0 - m2))
}

/// Difference quotient `(m_sc(z) - m_sc(w)) / (z - w)`.
pub fn msc_diff_quotient(z: Complex64, w: Complex64) -> Result<Complex64> {
    if z == w {
        return Err(Error::Domain(
            "difference quotient needs z != w (use msc_derivative)".into(),
        ));
    }
    Ok((msc(z)? - msc(w)?) / (z - w))
}

/// Semicircle density.
pub fn rho_sc(x: f64) -> f64 {
    let r = 4.0 - x * x;
    if r > 0.0 {
        r.sqrt() / (2.0 * PI)
    } else {
        0.0
    }
}

/// Semicircle distribution function, clamped to `[0, 1]`.
pub fn sc_cdf(e: f64) -> f64 {
    if e <= -2.0 {
        return 0.0;
    }
    if e >= 2.0 {
        return 1.0;
    }
    let v = 0.5 + e * (4.0 - e * e).sqrt() / (4.0 * PI) + (0.5 * e).asin() / PI;
    v.clamp(0.0, 1.0)
}

/// Classical location `gamma_k`: the solution of `F_sc(gamma_k) = k / n`.
pub fn classical_location(k: usize, n: usize) -> Result<f64> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "classical location needs 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    if k == n {
        return Ok(2.0);
    }
    let target = k as f64 / n as f64;
    let (mut lo, mut hi) = (-2.0_f64, 2.0_f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if sc_cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// All classical locations `gamma_1 <= ... <= gamma_n`.
pub fn classical_locations(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| classical_location(k, n).expect("1 <= k <= n"))
        .collect()
}

/// `int log(E - x) rho_sc(x) dx` for `|E| < 2`, with `log` the principal branch
/// (`arg` in `(-pi, pi]`).
///
/// The real part is `E^2/4 - 1/2`; the imaginary part is `pi (1 - F_sc(E))`,
/// since `E - x` is negative exactly when `x > E`.
pub fn log_potential(e: f64) -> Result<Complex64> {
    if !(e.abs() < 2.0) {
        return Err(Error::Domain(format!(
            "log potential on the real axis needs |E| < 2, got {e}"
        )));
    }
    Ok(Complex64::new(0.25 * e * e - 0.5, PI * (1.0 - sc_cdf(e))))
}

/// `int log(z - x) rho_sc(x) dx` for `Im z > 0`, principal branch.
///
/// Equals `-log(-m) + m^2/2` with `m = m_sc(z)`: the derivative in `z` is
/// `-m`, and the expression behaves like `log z` at infinity.
pub fn log_potential_upper(z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!(
            "log potential off the axis needs Im z > 0, got {z}"
        )));
    }
    let m = msc(z)?;
    Ok(-(-m).ln() + 0.5 * m * m)
}
