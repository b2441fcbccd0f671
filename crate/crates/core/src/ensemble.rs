//! Entry distributions, ensemble specifications and matrix sampling.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::profile::VarianceProfile;

/// Symmetry class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Beta {
    /// Real symmetric, `beta = 1`.
    Real,
    /// Complex Hermitian, `beta = 2`.
    Complex,
}

impl Beta {
    pub fn value(self) -> f64 {
        match self {
            Beta::Real => 1.0,
            Beta::Complex => 2.0,
        }
    }
}

impl TryFrom<u8> for Beta {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Beta::Real),
            2 => Ok(Beta::Complex),
            _ => Err(format!("beta must be 1 or 2, got {v}")),
        }
    }
}

impl From<Beta> for u8 {
    fn from(b: Beta) -> u8 {
        match b {
            Beta::Real => 1,
            Beta::Complex => 2,
        }
    }
}

/// A standardized (mean 0, variance 1) entry law with closed-form cumulants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntryDistribution {
    Gaussian,
    Rademacher,
    /// `(Bernoulli(p) - p) / sqrt(p (1 - p))`.
    TwoPoint { p: f64 },
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    Uniform,
}

/// Standardized Bernoulli law with success probability `p`.
pub fn two_point(p: f64) -> Result<EntryDistribution> {
    let d = EntryDistribution::TwoPoint { p };
    d.check()?;
    Ok(d)
}

impl EntryDistribution {
    pub fn check(&self) -> Result<()> {
        if let EntryDistribution::TwoPoint { p } = *self {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "two_point needs 0 < p < 1, got {p}"
                )));
            }
        }
        Ok(())
    }

    pub fn kappa3(&self) -> f64 {
        match *self {
            EntryDistribution::TwoPoint { p } => (1.0 - 2.0 * p) / (p * (1.0 - p)).sqrt(),
            _ => 0.0,
        }
    }

    pub fn kappa4(&self) -> f64 {
        match *self {
            EntryDistribution::Gaussian => 0.0,
            EntryDistribution::Rademacher => -2.0,
            EntryDistribution::TwoPoint { p } => {
                let q = p * (1.0 - p);
                (1.0 - 6.0 * q) / q
            }
            EntryDistribution::Uniform => -1.2,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            EntryDistribution::Gaussian => rng.sample(StandardNormal),
            EntryDistribution::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryDistribution::TwoPoint { p } => {
                let sd = (p * (1.0 - p)).sqrt();
                if rng.random::<f64>() < p {
                    (1.0 - p) / sd
                } else {
                    -p / sd
                }
            }
            EntryDistribution::Uniform => (2.0 * rng.random::<f64>() - 1.0) * 3f64.sqrt(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            EntryDistribution::Gaussian => "gaussian".into(),
            EntryDistribution::Rademacher => "rademacher".into(),
            EntryDistribution::TwoPoint { p } => format!("two_point({p})"),
            EntryDistribution::Uniform => "uniform".into(),
        }
    }
}

/// Symmetry class, variance profile and entry laws.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub beta: Beta,
    pub profile: Arc<VarianceProfile>,
    pub offdiag: EntryDistribution,
    pub diag: EntryDistribution,
}

/// Cumulant sums entering the CLT functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CumulantSummary {
    pub beta: Beta,
    /// `sum_i kappa_3(H_ii)`.
    pub s3_hat: f64,
    /// Fourth-cumulant sum for the symmetry class of the ensemble.
    pub s4_hat: f64,
    /// `sqrt(N) * s3_hat`.
    pub s3_tilde: f64,
    /// `sum_{a != j} kappa_4` of the off-diagonal entries (both parts for beta = 2).
    pub s4_tilde: f64,
}

impl CumulantSummary {
    /// All-zero summary (Gaussian entries).
    pub fn gaussian(beta: Beta) -> Self {
        CumulantSummary {
            beta,
            s3_hat: 0.0,
            s4_hat: 0.0,
            s3_tilde: 0.0,
            s4_tilde: 0.0,
        }
    }
}

/// A sampled Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Matrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl Matrix {
    pub fn n(&self) -> usize {
        match self {
            Matrix::Real(m) => m.nrows(),
            Matrix::Complex(m) => m.nrows(),
        }
    }

    /// `tr H`.
    pub fn trace(&self) -> f64 {
        match self {
            Matrix::Real(m) => m.diagonal().iter().sum(),
            Matrix::Complex(m) => m.diagonal().iter().map(|z| z.re).sum(),
        }
    }

    /// `sum_ij |H_ij|^2 = tr H^2`.
    pub fn frobenius_sq(&self) -> f64 {
        match self {
            Matrix::Real(m) => m.iter().map(|v| v * v).sum(),
            Matrix::Complex(m) => m.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    /// Largest `|H_ij - conj(H_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let d = match self {
                    Matrix::Real(m) => (m[(i, j)] - m[(j, i)]).abs(),
                    Matrix::Complex(m) => (m[(i, j)] - m[(j, i)].conj()).norm(),
                };
                worst = worst.max(d);
            }
        }
        worst
    }
}

impl EnsembleSpec {
    pub fn new(
        beta: Beta,
        profile: Arc<VarianceProfile>,
        offdiag: EntryDistribution,
        diag: EntryDistribution,
    ) -> Result<Self> {
        offdiag.check()?;
        diag.check()?;
        Ok(EnsembleSpec {
            beta,
            profile,
            offdiag,
            diag,
        })
    }

    /// Gaussian entries on and off the diagonal.
    pub fn gaussian(beta: Beta, profile: Arc<VarianceProfile>) -> Self {
        EnsembleSpec {
            beta,
            profile,
            offdiag: EntryDistribution::Gaussian,
            diag: EntryDistribution::Gaussian,
        }
    }

    pub fn n(&self) -> usize {
        self.profile.n()
    }

    pub fn cumulant_summary(&self) -> CumulantSummary {
        let s = self.profile.matrix();
        let n = self.n();
        let (k3d, k4d, k4o) = (self.diag.kappa3(), self.diag.kappa4(), self.offdiag.kappa4());
        let mut off = 0.0;
        let mut diag4 = 0.0;
        let mut s3 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = s[(i, j)];
                if i == j {
                    diag4 += v * v * k4d;
                    s3 += v.powf(1.5) * k3d;
                } else {
                    off += v * v * k4o;
                }
            }
        }
        let (s4_hat, s4_tilde) = match self.beta {
            Beta::Real => (off + diag4, off),
            // real and imaginary parts each carry (S_ij/2)^2 kappa_4
            Beta::Complex => (0.5 * off + 0.5 * diag4, 0.5 * off),
        };
        CumulantSummary {
            beta: self.beta,
            s3_hat: s3,
            s4_hat,
            s3_tilde: (n as f64).sqrt() * s3,
            s4_tilde,
        }
    }

    /// Hex SHA-256 of everything that determines the law of `H`.
    pub fn spec_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update([u8::from(self.beta)]);
        h.update(self.offdiag.name().as_bytes());
        h.update(b"|");
        h.update(self.diag.name().as_bytes());
        h.update((self.n() as u64).to_le_bytes());
        for v in self.profile.matrix().iter() {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Sample replica `replica` of the ensemble under `master_seed`.
    ///
    /// Each replica owns its own ChaCha stream, so replicas are independent and
    /// can be drawn in any order.
    pub fn sample(&self, master_seed: u64, replica: u64) -> Matrix {
        let mut rng = replica_rng(master_seed, replica);
        let n = self.n();
        let s = self.profile.matrix();
        match self.beta {
            Beta::Real => {
                let mut h = DMatrix::zeros(n, n);
                for i in 0..n {
                    h[(i, i)] = s[(i, i)].sqrt() * self.diag.sample(&mut rng);
                    for j in i + 1..n {
                        let v = s[(i, j)].sqrt() * self.offdiag.sample(&mut rng);
                        h[(i, j)] = v;
                        h[(j, i)] = v;
                    }
                }
                Matrix::Real(h)
            }
            Beta::Complex => {
                let mut h = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
                for i in 0..n {
                    h[(i, i)] = Complex64::new(s[(i, i)].sqrt() * self.diag.sample(&mut rng), 0.0);
                    for j in i + 1..n {
                        let scale = (0.5 * s[(i, j)]).sqrt();
                        let re = self.offdiag.sample(&mut rng);
                        let im = self.offdiag.sample(&mut rng);
                        let v = Complex64::new(scale * re, scale * im);
                        h[(i, j)] = v;
                        h[(j, i)] = v.conj();
                    }
                }
                Matrix::Complex(h)
            }
        }
    }
}

/// The per-replica generator: ChaCha8 keyed by the master seed, stream = replica.
pub fn replica_rng(master_seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replica);
    rng
}
