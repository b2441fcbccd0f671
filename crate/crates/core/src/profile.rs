//! Doubly stochastic variance profiles `S_ij = E|H_ij|^2`.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight of the flat profile blended into band profiles to keep every entry positive.
pub const BAND_BLEND: f64 = 1e-3;
/// Row-sum tolerance accepted by [`validate`].
pub const VALIDATE_TOL: f64 = 1e-8;
const SINKHORN_TOL: f64 = 1e-12;
const SINKHORN_MAX_ITER: usize = 10_000;
const RESOLVENT_GUARD: f64 = 1e-10;

/// How a profile was built; enough to rebuild it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDescriptor {
    #[serde(rename = "type")]
    pub kind: ProfileKind,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub params: ProfileParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Flat,
    Band,
    RandomDs,
    /// Loaded from a matrix file; cannot be rebuilt from the descriptor alone.
    Matrix,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roughness: Option<f64>,
}

impl ProfileDescriptor {
    pub fn build(&self) -> Result<VarianceProfile> {
        match self.kind {
            ProfileKind::Flat => profile_flat(self.n),
            ProfileKind::Band => {
                let w = self.params.width.ok_or_else(|| {
                    Error::Config("band profile needs params.width".into())
                })?;
                profile_band(self.n, w)
            }
            ProfileKind::RandomDs => {
                let seed = self
                    .seed
                    .ok_or_else(|| Error::Config("random_ds profile needs a seed".into()))?;
                let r = self.params.roughness.ok_or_else(|| {
                    Error::Config("random_ds profile needs params.roughness".into())
                })?;
                profile_random_ds(self.n, seed, r)
            }
            ProfileKind::Matrix => Err(Error::Config(
                "a matrix profile is loaded from its CSV file, not rebuilt from a descriptor"
                    .into(),
            )),
        }
    }
}

/// Scalar diagnostics of a candidate profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileReport {
    pub row_sum_err: f64,
    /// `N * min_ij S_ij`.
    pub min_entry_n: f64,
    /// `N * max_ij S_ij`.
    pub max_entry_n: f64,
    /// `1 - max_{i >= 2} |s_i|`.
    pub spectral_gap: f64,
}

/// A validated variance profile with its spectral decomposition.
#[derive(Debug, Clone)]
pub struct VarianceProfile {
    descriptor: ProfileDescriptor,
    s: DMatrix<f64>,
    /// Perron eigenvalue first, then the rest in descending order.
    spectrum: Vec<f64>,
    /// Eigenvalues of `A = S - ee*/N`, descending (includes the 0 on `e`).
    a_spectrum: Vec<f64>,
    report: ProfileReport,
}

impl VarianceProfile {
    /// Validate `s` and decompose it.
    pub fn from_matrix(s: DMatrix<f64>, descriptor: ProfileDescriptor) -> Result<Self> {
        let n = s.nrows();
        if n < 2 || s.ncols() != n {
            return Err(Error::InvalidProfile(format!(
                "profile must be square with N >= 2, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if s[(i, j)] != s[(j, i)] {
                    return Err(Error::InvalidProfile(format!(
                        "profile is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let (spectrum, report) = decompose(&s)?;
        let mut a_spectrum: Vec<f64> = spectrum[1..].to_vec();
        a_spectrum.push(0.0);
        a_spectrum.sort_by(|x, y| y.total_cmp(x));
        Ok(VarianceProfile {
            descriptor,
            s,
            spectrum,
            a_spectrum,
            report,
        })
    }

    pub fn n(&self) -> usize {
        self.s.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.s[(i, j)]
    }

    pub fn descriptor(&self) -> &ProfileDescriptor {
        &self.descriptor
    }

    /// Eigenvalues of `S`, Perron eigenvalue first.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn a_spectrum(&self) -> &[f64] {
        &self.a_spectrum
    }

    pub fn report(&self) -> ProfileReport {
        self.report
    }

    pub fn spectral_gap(&self) -> f64 {
        self.report.spectral_gap
    }

    /// `(c_low, c_high)` with `c_low / N <= S_ij <= c_high / N`.
    pub fn bounds(&self) -> (f64, f64) {
        (self.report.min_entry_n, self.report.max_entry_n)
    }

    pub fn trace(&self) -> f64 {
        self.s.diagonal().iter().sum()
    }

    /// `tr S^j` for `j = 1..=J`, from the eigenvalues.
    pub fn trace_powers(&self, j_max: usize) -> Vec<f64> {
        let mut pow = self.spectrum.clone();
        let mut out = Vec::with_capacity(j_max);
        for _ in 0..j_max {
            out.push(pow.iter().sum());
            for (p, s) in pow.iter_mut().zip(&self.spectrum) {
                *p *= s;
            }
        }
        out
    }

    /// `tr(S (1 - M S)^{-1}) = sum_i s_i / (1 - M s_i)`.
    pub fn resolvent_trace(&self, m: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for &s in &self.spectrum {
            let d = Complex64::new(1.0, 0.0) - m * s;
            if d.norm() <= RESOLVENT_GUARD {
                return Err(Error::Numerical(format!(
                    "1 - M s is singular for eigenvalue s = {s} at M = {m}"
                )));
            }
            acc += s / d;
        }
        Ok(acc)
    }

    /// Same trace with the Perron direction split off:
    /// `1/(1 - M) + sum_a a / (1 - M a)` over the spectrum of `A`.
    pub fn resolvent_trace_split(&self, m: Complex64) -> Result<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let perron = one - m;
        if perron.norm() <= RESOLVENT_GUARD {
            return Err(Error::Numerical(format!(
                "1 - M is singular on the Perron direction at M = {m}"
            )));
        }
        Ok(perron.inv() + self.deflated_resolvent_sum(m)?)
    }

    /// `sum_a a / (1 - M a)` over the spectrum of `A`.
    pub fn deflated_resolvent_sum(&self, m: Complex64) -> Result<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for &a in &self.a_spectrum {
            let d = one - m * a;
            if d.norm() <= RESOLVENT_GUARD {
                return Err(Error::Numerical(format!(
                    "1 - M a is singular for eigenvalue a = {a} at M = {m}"
                )));
            }
            acc += a / d;
        }
        Ok(acc)
    }

    /// Write the dense matrix as CSV with full round-trip precision.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        for i in 0..self.n() {
            w.write_record((0..self.n()).map(|j| format!("{:?}", self.s[(i, j)])))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a dense CSV matrix and validate it as a profile.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| {
                        Error::Config(format!(
                            "{}: line {}: `{v}` is not a number",
                            path.display(),
                            line + 1
                        ))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Config(format!(
                "{}: profile matrix must be square",
                path.display()
            )));
        }
        let s = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let descriptor = ProfileDescriptor {
            kind: ProfileKind::Matrix,
            n,
            params: ProfileParams::default(),
            seed: None,
        };
        Self::from_matrix(s, descriptor)
    }

    pub fn write_descriptor(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path)?;
        serde_json::to_writer_pretty(&mut f, &self.descriptor)?;
        writeln!(f)?;
        Ok(())
    }

    /// Load a profile from a JSON descriptor or a CSV matrix, by extension.
    pub fn load(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => {
                let reader = BufReader::new(File::open(path)?);
                let d: ProfileDescriptor = serde_json::from_reader(reader).map_err(|e| {
                    Error::Config(format!("{}: {e}", path.display()))
                })?;
                d.build()
            }
            Some("csv") => Self::read_csv(path),
            _ => {
                // sniff: JSON starts with '{'
                let mut first = String::new();
                BufReader::new(File::open(path)?).read_line(&mut first)?;
                if first.trim_start().starts_with('{') {
                    let d: ProfileDescriptor =
                        serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| {
                            Error::Config(format!("{}: {e}", path.display()))
                        })?;
                    d.build()
                } else {
                    Self::read_csv(path)
                }
            }
        }
    }
}

/// Eigenvalues with the Perron value first, plus the report.
fn decompose(s: &DMatrix<f64>) -> Result<(Vec<f64>, ProfileReport)> {
    let n = s.nrows();
    let mut row_sum_err = 0.0_f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            let v = s[(i, j)];
            if !v.is_finite() {
                return Err(Error::InvalidProfile(format!("entry ({i}, {j}) is not finite")));
            }
            sum += v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        row_sum_err = row_sum_err.max((sum - 1.0).abs());
    }
    if lo <= 0.0 {
        return Err(Error::InvalidProfile(format!(
            "profile entries must be strictly positive (min entry {lo})"
        )));
    }
    if row_sum_err > VALIDATE_TOL {
        return Err(Error::InvalidProfile(format!(
            "row sums deviate from 1 by {row_sum_err:e}"
        )));
    }
    let eig = SymmetricEigen::try_new(s.clone(), f64::EPSILON, 0).ok_or_else(|| {
        Error::Numerical("symmetric eigensolver did not converge on the profile".into())
    })?;
    // Perron vector: the eigenvector best aligned with e
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let perron = (0..n)
        .max_by(|&a, &b| {
            let pa = eig.eigenvectors.column(a).sum().abs();
            let pb = eig.eigenvectors.column(b).sum().abs();
            pa.total_cmp(&pb)
        })
        .expect("n >= 2");
    let alignment = eig.eigenvectors.column(perron).sum().abs() * inv_sqrt_n;
    if (alignment - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidProfile(format!(
            "constant vector is not an eigenvector (alignment {alignment})"
        )));
    }
    let mut rest: Vec<f64> = (0..n)
        .filter(|&k| k != perron)
        .map(|k| eig.eigenvalues[k])
        .collect();
    rest.sort_by(|x, y| y.total_cmp(x));
    let second = rest.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut spectrum = Vec::with_capacity(n);
    spectrum.push(eig.eigenvalues[perron]);
    spectrum.extend(rest);
    let report = ProfileReport {
        row_sum_err,
        min_entry_n: lo * n as f64,
        max_entry_n: hi * n as f64,
        spectral_gap: 1.0 - second,
    };
    Ok((spectrum, report))
}

/// Check a candidate profile matrix without keeping the decomposition.
pub fn validate(s: &DMatrix<f64>) -> Result<ProfileReport> {
    decompose(s).map(|(_, r)| r)
}

/// `S_ij = 1/N`.
pub fn profile_flat(n: usize) -> Result<VarianceProfile> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need N >= 2, got {n}")));
    }
    let s = DMatrix::from_element(n, n, 1.0 / n as f64);
    VarianceProfile::from_matrix(
        s,
        ProfileDescriptor {
            kind: ProfileKind::Flat,
            n,
            params: ProfileParams::default(),
            seed: None,
        },
    )
}

/// Circulant band of half-width `w`, blended with the flat profile.
pub fn profile_band(n: usize, w: usize) -> Result<VarianceProfile> {
    if n < 3 || w < 1 || w > (n - 1) / 2 {
        return Err(Error::InvalidArgument(format!(
            "band half-width must satisfy 1 <= W <= (N-1)/2, got W = {w}, N = {n}"
        )));
    }
    let inside = (1.0 - BAND_BLEND) / (2 * w + 1) as f64 + BAND_BLEND / n as f64;
    let outside = BAND_BLEND / n as f64;
    let s = DMatrix::from_fn(n, n, |i, j| {
        let d = i.abs_diff(j);
        if d.min(n - d) <= w {
            inside
        } else {
            outside
        }
    });
    VarianceProfile::from_matrix(
        s,
        ProfileDescriptor {
            kind: ProfileKind::Band,
            n,
            params: ProfileParams {
                width: Some(w),
                roughness: None,
            },
            seed: None,
        },
    )
}

/// Random symmetric positive matrix `exp(roughness * g)` scaled to be doubly
/// stochastic by symmetric Sinkhorn iteration.
pub fn profile_random_ds(n: usize, seed: u64, roughness: f64) -> Result<VarianceProfile> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need N >= 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&roughness) {
        return Err(Error::InvalidArgument(format!(
            "roughness must lie in [0, 1], got {roughness}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let g: f64 = StandardNormal.sample(&mut rng);
            let v = (roughness * g).exp();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let mut d = vec![1.0; n];
    let mut md = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..SINKHORN_MAX_ITER {
        mat_vec(&m, &d, &mut md);
        residual = d
            .iter()
            .zip(&md)
            .fold(0.0_f64, |r, (di, mi)| r.max((di * mi - 1.0).abs()));
        if residual < SINKHORN_TOL {
            break;
        }
        // geometric mean of d and 1/(M d): the fixed point has d_i (M d)_i = 1
        for (di, mi) in d.iter_mut().zip(&md) {
            *di = (*di / mi).sqrt();
        }
    }
    if residual >= SINKHORN_TOL {
        return Err(Error::Numerical(format!(
            "Sinkhorn scaling did not converge in {SINKHORN_MAX_ITER} iterations (residual {residual:e})"
        )));
    }
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = d[i] * m[(i, j)] * d[j];
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    VarianceProfile::from_matrix(
        s,
        ProfileDescriptor {
            kind: ProfileKind::RandomDs,
            n,
            params: ProfileParams {
                width: None,
                roughness: Some(roughness),
            },
            seed: Some(seed),
        },
    )
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..n {
            acc += m[(i, j)] * x[j];
        }
        *o = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn frobenius_sq(s: &DMatrix<f64>) -> f64 {
        s.iter().map(|v| v * v).sum()
    }

    fn perron_residual(p: &VarianceProfile) -> f64 {
        let e = DVector::from_element(p.n(), 1.0);
        (p.matrix() * &e - &e).amax()
    }

    #[test]
    fn flat_profile() {
        let p = profile_flat(4).unwrap();
        for t in p.trace_powers(10) {
            assert_abs_diff_eq!(t, 1.0, epsilon = 1e-12);
        }
        assert!(p.a_spectrum().iter().all(|a| a.abs() < 1e-12));
        let r = p.report();
        assert_abs_diff_eq!(r.min_entry_n, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.max_entry_n, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.spectral_gap, 1.0, epsilon = 1e-12);
        assert!(profile_flat(1).is_err());
    }

    #[test]
    fn band_profile() {
        let p = profile_band(41, 20).unwrap();
        let flat = profile_flat(41).unwrap();
        assert!((p.matrix() - flat.matrix()).amax() < 1e-15);

        let p = profile_band(100, 10).unwrap();
        for i in 0..100 {
            assert_abs_diff_eq!(p.matrix().row(i).sum(), 1.0, epsilon = 1e-14);
        }
        let t = p.trace_powers(2);
        assert_abs_diff_eq!(t[1], frobenius_sq(p.matrix()), epsilon = 1e-10);
        assert!(profile_band(100, 50).is_err());
        assert!(profile_band(100, 0).is_err());
    }

    #[test]
    fn band_gap_matches_dirichlet_kernel() {
        // circulant eigenvalues: (1-eps) D_W(2 pi k / N)/(2W+1) for k != 0
        let (n, w) = (100usize, 10usize);
        let p = profile_band(n, w).unwrap();
        let mut second = 0.0_f64;
        for k in 1..n {
            let x = 2.0 * PI * k as f64 / n as f64;
            let dk: f64 = (-(w as i64)..=w as i64).map(|l| (l as f64 * x).cos()).sum();
            second = second.max(((1.0 - BAND_BLEND) * dk / (2 * w + 1) as f64).abs());
        }
        assert_abs_diff_eq!(p.spectral_gap(), 1.0 - second, epsilon = 1e-10);
        assert!(p.spectral_gap() > 0.0 && p.spectral_gap() < 1.0);
    }

    #[test]
    fn random_profile_is_doubly_stochastic() {
        let p = profile_random_ds(60, 7, 0.8).unwrap();
        for i in 0..60 {
            assert_abs_diff_eq!(p.matrix().row(i).sum(), 1.0, epsilon = 1e-12);
        }
        assert!(perron_residual(&p) <= 1e-10);
        assert_abs_diff_eq!(p.spectrum()[0], 1.0, epsilon = 1e-10);
        let q = profile_random_ds(60, 7, 0.8).unwrap();
        assert_eq!(p.matrix(), q.matrix());
        let r = profile_random_ds(60, 8, 0.8).unwrap();
        assert_ne!(p.matrix(), r.matrix());

        let flat = profile_random_ds(30, 3, 0.0).unwrap();
        assert!((flat.matrix() - profile_flat(30).unwrap().matrix()).amax() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let mut s = profile_flat(5).unwrap().matrix().clone();
        s[(0, 1)] = 0.0;
        s[(1, 0)] = 0.0;
        assert!(validate(&s).is_err());
        let mut s = profile_flat(5).unwrap().matrix().clone();
        s[(0, 0)] += 1e-6;
        assert!(validate(&s).is_err());
        let mut s = profile_flat(5).unwrap().matrix().clone();
        s[(0, 1)] += 1e-12;
        let d = profile_flat(5).unwrap().descriptor().clone();
        assert!(VarianceProfile::from_matrix(s, d).is_err());
    }

    #[test]
    fn trace_powers_match_direct_sums() {
        let p = profile_random_ds(40, 1, 0.6).unwrap();
        let t = p.trace_powers(30);
        assert_abs_diff_eq!(t[0], p.trace(), epsilon = 1e-10);
        assert_abs_diff_eq!(t[1], frobenius_sq(p.matrix()), epsilon = 1e-10);
        let rate = 1.0 - p.spectral_gap();
        for (j, tj) in t.iter().enumerate() {
            assert!((tj - 1.0).abs() <= rate.powi(j as i32) * 40.0 + 1e-12);
        }
    }

    #[test]
    fn a_spectrum_is_deflated_spectrum() {
        let p = profile_random_ds(30, 11, 0.7).unwrap();
        let n = 30;
        let a = p.matrix() - DMatrix::from_element(n, n, 1.0 / n as f64);
        let mut direct: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
        direct.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in direct.iter().zip(p.a_spectrum()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-8);
        }
    }

    #[test]
    fn resolvent_trace_examples() {
        let flat = profile_flat(10).unwrap();
        let v = flat.resolvent_trace(Complex64::new(0.5, 0.0)).unwrap();
        assert_abs_diff_eq!(v.re, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
        let p = profile_random_ds(20, 2, 0.5).unwrap();
        let v = p.resolvent_trace(Complex64::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(v.re, p.trace(), epsilon = 1e-12);
        assert!(flat.resolvent_trace(Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn resolvent_trace_matches_dense_solve() {
        let p = profile_random_ds(50, 5, 0.9).unwrap();
        let sc = p.matrix().map(|v| Complex64::new(v, 0.0));
        let id = DMatrix::<Complex64>::identity(50, 50);
        for k in 0..10 {
            let m = Complex64::from_polar(0.99 * (k as f64 + 1.0) / 10.0, 0.7 * k as f64);
            let x = (&id - &sc * m).lu().solve(&sc).unwrap();
            let oracle = x.trace();
            let eig = p.resolvent_trace(m).unwrap();
            let split = p.resolvent_trace_split(m).unwrap();
            assert!((eig - oracle).norm() <= 1e-9, "{eig} vs {oracle}");
            assert!((split - oracle).norm() <= 1e-9, "{split} vs {oracle}");
        }
    }

    #[test]
    fn csv_and_descriptor_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = profile_random_ds(12, 4, 0.5).unwrap();
        let path = dir.path().join("s.csv");
        p.write_csv(&path).unwrap();
        let q = VarianceProfile::load(&path).unwrap();
        assert_eq!(p.matrix(), q.matrix());

        let path = dir.path().join("s.json");
        p.write_descriptor(&path).unwrap();
        let q = VarianceProfile::load(&path).unwrap();
        assert_eq!(p.matrix(), q.matrix());
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"type\": \"random_ds\""), "{text}");
        assert!(text.contains("\"N\": 12"), "{text}");
    }

    #[test]
    fn descriptor_rejects_unknown_keys() {
        let bad = r#"{"type": "flat", "N": 4, "colour": 1}"#;
        assert!(serde_json::from_str::<ProfileDescriptor>(bad).is_err());
        let missing = ProfileDescriptor {
            kind: ProfileKind::Band,
            n: 10,
            params: ProfileParams::default(),
            seed: None,
        };
        assert!(missing.build().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn sherman_morrison_split(seed in 0u64..1000, r in 0.0..0.99f64, phi in 0.0..std::f64::consts::TAU) {
            let p = profile_random_ds(25, seed, 0.7).unwrap();
            let m = Complex64::from_polar(r, phi);
            let a = p.resolvent_trace(m).unwrap();
            let b = p.resolvent_trace_split(m).unwrap();
            prop_assert!((a - b).norm() <= 1e-9);
        }

        #[test]
        fn perron_pair_holds(seed in 0u64..1000, n in 2usize..40, r in 0.0..1.0f64) {
            let p = profile_random_ds(n, seed, r).unwrap();
            prop_assert!(perron_residual(&p) <= 1e-10);
            prop_assert!((p.spectrum()[0] - 1.0).abs() <= 1e-10);
            prop_assert!(p.spectral_gap() > 0.0);
        }
    }
}
