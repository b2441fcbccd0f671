//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use wigner_clt::ensemble::two_point;
use wigner_clt::profile::{profile_flat, profile_random_ds};
use wigner_clt::{Beta, EnsembleSpec, EntryDistribution, TestFunction, VarianceProfile};

pub fn random_profile(n: usize) -> VarianceProfile {
    profile_random_ds(n, 17, 0.5).expect("random profile")
}

/// Gaussian ensemble on a flat profile.
pub fn flat_spec(n: usize, beta: Beta) -> EnsembleSpec {
    EnsembleSpec::gaussian(beta, Arc::new(profile_flat(n).expect("flat profile")))
}

/// Non-Gaussian ensemble on a random profile, so every cumulant term is live.
pub fn skewed_spec(n: usize, beta: Beta) -> EnsembleSpec {
    EnsembleSpec::new(
        beta,
        Arc::new(random_profile(n)),
        EntryDistribution::Rademacher,
        two_point(0.2).expect("valid p"),
    )
    .expect("valid spec")
}

pub fn smooth_fn() -> TestFunction {
    TestFunction::Gaussian { center: 0.3, width: 0.7 }
}
