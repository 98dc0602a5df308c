//! Reproducible random perturbation specs that satisfy the decay bound by construction.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, ComplexMatrix};
use crate::spec::{abs_sum, GammaFactors, Kernel, PerturbationSpec};

/// Kernel entries live on `|n|, |m| ≤ SUPPORT`.
pub const SUPPORT: i64 = 4;
/// Fiber envelope exponent of the `fibered` profile.
pub const FIBER_EXPONENT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Selfadjoint,
    Nonselfadjoint,
    RankOne,
    Fibered,
}

impl Profile {
    pub const ALL: [Profile; 4] = [Profile::Selfadjoint, Profile::Nonselfadjoint, Profile::RankOne, Profile::Fibered];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Selfadjoint => "selfadjoint",
            Profile::Nonselfadjoint => "nonselfadjoint",
            Profile::RankOne => "rank_one",
            Profile::Fibered => "fibered",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Profile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown profile {s:?}")))
    }
}

fn unit_disk(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(rng.random::<f64>().sqrt(), rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
}

fn random_block(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |_, _| unit_disk(rng))
}

/// Rescales `w` to spectral norm `fraction · C e^{−γ(|n|+|m|)}`.
fn fit(w: ComplexMatrix, fraction: f64, bound: f64, gamma: f64, n: i64, m: i64) -> ComplexMatrix {
    let norm = matrix::spectral_norm(&w);
    if norm == 0.0 {
        return w;
    }
    let target = fraction * bound * (-gamma * abs_sum(n, m)).exp();
    w * Complex64::new(target / norm, 0.0)
}

fn support_pairs() -> impl Iterator<Item = (i64, i64)> {
    (-SUPPORT..=SUPPORT).flat_map(|n| (-SUPPORT..=SUPPORT).map(move |m| (n, m)))
}

/// Builds a spec for `profile` from `seed`; identical arguments give identical specs.
pub fn generate_spec(seed: u64, profile: Profile, gamma: f64, d: usize) -> Result<PerturbationSpec> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("fiber dimension must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 1.0 + 4.0 * rng.random::<f64>();
    let mut map = BTreeMap::new();
    match profile {
        Profile::RankOne => {
            let c = unit_disk(&mut rng) * bound;
            let u = nalgebra::DVector::from_fn(d, |_, _| unit_disk(&mut rng));
            let u = if u.norm() > 0.0 { u.normalize() } else { nalgebra::DVector::from_element(d, Complex64::new(1.0 / (d as f64).sqrt(), 0.0)) };
            map.insert((0, 0), &u * u.adjoint() * c);
        }
        Profile::Selfadjoint => {
            for (n, m) in support_pairs().filter(|&(n, m)| (n, m) <= (m, n)) {
                if !rng.random_bool(0.3) {
                    continue;
                }
                let mut w = random_block(&mut rng, d);
                if n == m {
                    w = (&w + w.adjoint()) * Complex64::new(0.5, 0.0);
                }
                let w = fit(w, rng.random_range(0.2..1.0), bound, gamma, n, m);
                if n != m {
                    map.insert((m, n), w.adjoint());
                }
                map.insert((n, m), w);
            }
        }
        Profile::Nonselfadjoint => {
            for (n, m) in support_pairs() {
                if !rng.random_bool(0.3) {
                    continue;
                }
                let w = random_block(&mut rng, d);
                map.insert((n, m), fit(w, rng.random_range(0.2..1.0), bound, gamma, n, m));
            }
        }
        Profile::Fibered => {
            for (n, m) in support_pairs() {
                let u = unit_disk(&mut rng);
                // ⟨(j,k)⟩^{-β} envelope over fiber indices
                let w = ComplexMatrix::from_fn(d, d, |j, k| {
                    let bracket = (1.0 + (j * j + k * k) as f64).sqrt();
                    u * bracket.powf(-FIBER_EXPONENT)
                });
                let w = w * Complex64::new(bound * (-gamma * abs_sum(n, m)).exp(), 0.0);
                // the envelope already has norm ≤ 1 for d = 1; shrink larger fibers onto the bound
                let norm = matrix::spectral_norm(&w) * (gamma * abs_sum(n, m)).exp();
                let w = if norm > bound { w * Complex64::new(bound / norm, 0.0) } else { w };
                map.insert((n, m), w);
            }
        }
    }
    // keep at least one entry so the perturbation is never trivially zero
    if map.is_empty() {
        let w = fit(random_block(&mut rng, d), 0.5, bound, gamma, 0, 0);
        map.insert((0, 0), if profile == Profile::Selfadjoint { (&w + w.adjoint()) * Complex64::new(0.5, 0.0) } else { w });
    }
    let spec = PerturbationSpec {
        gamma,
        bound,
        fiber_dim: d,
        gamma_factors: GammaFactors::identity(),
        lambda1: ComplexMatrix::identity(d, d),
        lambda2: ComplexMatrix::identity(d, d),
        kernel: Kernel::Entries(map),
    };
    spec.validate()?;
    Ok(spec)
}
