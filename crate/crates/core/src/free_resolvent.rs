//! Free lattice resolvent kernel `R₀(z(λ); n, m)` on the uniformizing disk at a threshold,
//! its weighted continuation through the band, and the singular split at `λ = 0`.
//!
//! With `s = √(4−λ²)` (principal root, `Re s ≥ 0`) and `k = 2·asin(λ/2)`:
//!
//! ```text
//! R₀(λ; n, m) = i·e^{i|n−m|k} / (λ s) = i/(2λ) + α(λ) + β(λ; |n−m|)
//! α(λ)    = iλ / (2s(2+s))
//! β(λ; d) = −2·e^{iw/2}·sin(w/2) / (λ s),   w = d·k
//! ```
//!
//! Both α and β are written without subtractive cancellation, so they stay accurate as `λ → 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeWindow;
use crate::matrix::{ComplexMatrix, I};

/// Largest `|λ|` the kernel formula is evaluated at.
pub const FORMULA_REACH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Threshold {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "4")]
    Four,
}

impl Threshold {
    pub fn value(self) -> f64 {
        match self {
            Threshold::Zero => 0.0,
            Threshold::Four => 4.0,
        }
    }

    pub fn from_value(mu: f64) -> Result<Self> {
        if mu == 0.0 {
            Ok(Threshold::Zero)
        } else if mu == 4.0 {
            Ok(Threshold::Four)
        } else {
            Err(Error::InvalidParameter(format!("threshold must be 0 or 4, got {mu}")))
        }
    }

    /// `z₀(λ) = λ²`, `z₄(λ) = 4 − λ²`.
    pub fn energy(self, lambda: Complex64) -> Complex64 {
        match self {
            Threshold::Zero => lambda * lambda,
            Threshold::Four => 4.0 - lambda * lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sheet {
    Physical,
    Nonphysical,
}

impl Sheet {
    pub fn of(lambda: Complex64) -> Self {
        if lambda.im > 0.0 {
            Sheet::Physical
        } else {
            Sheet::Nonphysical
        }
    }
}

/// A point `λ ≠ 0` of the punctured disk at a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    lambda: Complex64,
    threshold: Threshold,
}

impl SurfacePoint {
    pub fn new(lambda: Complex64, threshold: Threshold) -> Result<Self> {
        if !(lambda.re.is_finite() && lambda.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be finite, got {lambda}")));
        }
        if lambda.norm() == 0.0 {
            return Err(Error::Singularity);
        }
        if lambda.norm() >= FORMULA_REACH {
            return Err(Error::OutsideContinuation { point: lambda.into(), radius: FORMULA_REACH });
        }
        Ok(SurfacePoint { lambda, threshold })
    }

    /// As [`SurfacePoint::new`], additionally requiring `|λ| < radius`.
    pub fn within(lambda: Complex64, threshold: Threshold, radius: f64) -> Result<Self> {
        let p = Self::new(lambda, threshold)?;
        if lambda.norm() >= radius {
            return Err(Error::OutsideContinuation { point: lambda.into(), radius });
        }
        Ok(p)
    }

    pub fn at_zero(lambda: Complex64) -> Result<Self> {
        Self::new(lambda, Threshold::Zero)
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn threshold(&self) -> Threshold {
        self.threshold
    }

    pub fn energy(&self) -> Complex64 {
        self.threshold.energy(self.lambda)
    }

    pub fn sheet(&self) -> Sheet {
        Sheet::of(self.lambda)
    }

    pub fn is_physical(&self) -> bool {
        self.sheet() == Sheet::Physical
    }

    fn require_zero(&self) -> Result<Complex64> {
        match self.threshold {
            Threshold::Zero => Ok(self.lambda),
            Threshold::Four => Err(Error::InvalidParameter(
                "kernel is parametrized at threshold 0; map the point with to_threshold_zero".into(),
            )),
        }
    }
}

/// Same `λ`, tagged with threshold 0. Energy `4 − λ²` at threshold 4 corresponds to `u = λ²` at 0.
pub fn to_threshold_zero(p: SurfacePoint) -> SurfacePoint {
    SurfacePoint { lambda: p.lambda, threshold: Threshold::Zero }
}

/// The `λ` on the physical sheet (`Im λ > 0`) with `λ² = z`, for `z ∉ [0, ∞)`.
pub fn physical_lambda(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

/// `√(4 − λ²)`, principal branch.
fn root(lambda: Complex64) -> Complex64 {
    (4.0 - lambda * lambda).sqrt()
}

/// `asin(x)` with a Taylor series near 0 where the logarithmic formula loses relative accuracy.
pub(crate) fn asin_accurate(x: Complex64) -> Complex64 {
    if x.norm() < 0.25 {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut k = 0.0;
        loop {
            // ratio of consecutive coefficients (2k+1)²/((2k+2)(2k+3))
            let r = (2.0 * k + 1.0) * (2.0 * k + 1.0) / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
            term *= x2 * r;
            sum += term;
            k += 1.0;
            if term.norm() <= 1e-18 * sum.norm() || k > 60.0 {
                break;
            }
        }
        sum
    } else {
        x.asin()
    }
}

/// `k(λ) = 2·asin(λ/2)`.
pub fn quasi_momentum(lambda: Complex64) -> Complex64 {
    2.0 * asin_accurate(lambda / 2.0)
}

/// `i·e^{i d k}/(λ s)` without the threshold bookkeeping.
pub fn free_kernel(lambda: Complex64, dist: u64) -> Complex64 {
    let s = root(lambda);
    let k = quasi_momentum(lambda);
    I * (I * k * dist as f64).exp() / (lambda * s)
}

/// `∂_λ` of [`free_kernel`].
pub fn free_kernel_derivative(lambda: Complex64, dist: u64) -> Complex64 {
    let s = root(lambda);
    let d = dist as f64;
    free_kernel(lambda, dist) * (2.0 * I * d / s - (4.0 - 2.0 * lambda * lambda) / (lambda * s * s))
}

/// `α(λ) = i(1/(λs) − 1/(2λ))`, evaluated as `iλ/(2s(2+s))`.
pub fn alpha(lambda: Complex64) -> Complex64 {
    let s = root(lambda);
    I * lambda / (2.0 * s * (2.0 + s))
}

/// `β(λ; d) = i(e^{iw} − 1)/(λs)` with `w = d·k(λ)`; the limit `−d/2` at `λ = 0` is returned there.
pub fn beta(lambda: Complex64, dist: u64) -> Complex64 {
    if dist == 0 {
        return Complex64::new(0.0, 0.0);
    }
    if lambda.norm() == 0.0 {
        return Complex64::new(-(dist as f64) / 2.0, 0.0);
    }
    let s = root(lambda);
    let w = quasi_momentum(lambda) * dist as f64;
    -2.0 * (I * w / 2.0).exp() * (w / 2.0).sin() / (lambda * s)
}

/// Taylor polynomial of α through `λ⁷`, used as an independent check of [`alpha`].
pub fn alpha_series(lambda: Complex64) -> Complex64 {
    let l2 = lambda * lambda;
    I * lambda * (1.0 / 16.0 + l2 * (3.0 / 256.0 + l2 * (5.0 / 2048.0 + l2 * 35.0 / 65536.0)))
}

pub fn kernel_value(p: SurfacePoint, n: i64, m: i64) -> Result<Complex64> {
    let lambda = p.require_zero()?;
    Ok(free_kernel(lambda, n.abs_diff(m)))
}

pub fn kernel_derivative(p: SurfacePoint, n: i64, m: i64) -> Result<Complex64> {
    let lambda = p.require_zero()?;
    Ok(free_kernel_derivative(lambda, n.abs_diff(m)))
}

fn weights(gamma: f64, sites: &[i64]) -> Vec<f64> {
    sites.iter().map(|&n| (-0.5 * gamma * n.unsigned_abs() as f64).exp()).collect()
}

fn max_distance(sites: &[i64]) -> u64 {
    match (sites.iter().min(), sites.iter().max()) {
        (Some(&lo), Some(&hi)) => hi.abs_diff(lo),
        _ => 0,
    }
}

fn sandwich(gamma: f64, sites: &[i64], f: impl Fn(u64) -> Complex64) -> ComplexMatrix {
    let table: Vec<Complex64> = (0..=max_distance(sites)).map(&f).collect();
    let w = weights(gamma, sites);
    ComplexMatrix::from_fn(sites.len(), sites.len(), |i, j| table[sites[i].abs_diff(sites[j]) as usize] * (w[i] * w[j]))
}

/// `e^{−(γ/2)|n|} R₀(λ; n, m) e^{−(γ/2)|m|}` for `n, m` in an arbitrary site list.
pub fn weighted_kernel_on_sites(lambda: Complex64, gamma: f64, sites: &[i64]) -> ComplexMatrix {
    sandwich(gamma, sites, |d| free_kernel(lambda, d))
}

pub fn weighted_kernel_derivative_on_sites(lambda: Complex64, gamma: f64, sites: &[i64]) -> ComplexMatrix {
    sandwich(gamma, sites, |d| free_kernel_derivative(lambda, d))
}

/// `e^{−(γ/2)|n|}(α(λ) + β(λ; |n−m|))e^{−(γ/2)|m|}` on a site list.
pub fn holomorphic_part_on_sites(lambda: Complex64, gamma: f64, sites: &[i64]) -> ComplexMatrix {
    let a = alpha(lambda);
    sandwich(gamma, sites, |d| a + beta(lambda, d))
}

fn window_sites(window: &LatticeWindow) -> Vec<i64> {
    window.site_range().collect()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")))
    }
}

/// Scalar `(2N+1) × (2N+1)` weighted kernel matrix; fiber tensoring is left to callers.
pub fn weighted_resolvent(p: SurfacePoint, gamma: f64, window: &LatticeWindow) -> Result<ComplexMatrix> {
    let lambda = p.require_zero()?;
    check_gamma(gamma)?;
    crate::matrix::ensure_finite(weighted_kernel_on_sites(lambda, gamma, &window_sites(window)), "weighted resolvent")
}

pub fn weighted_resolvent_derivative(p: SurfacePoint, gamma: f64, window: &LatticeWindow) -> Result<ComplexMatrix> {
    let lambda = p.require_zero()?;
    check_gamma(gamma)?;
    crate::matrix::ensure_finite(
        weighted_kernel_derivative_on_sites(lambda, gamma, &window_sites(window)),
        "weighted resolvent derivative",
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSplit {
    /// `i/(2λ)`.
    pub singular_coefficient: Complex64,
    /// `ξ(n) = e^{−(γ/2)|n|}`.
    pub xi: Vec<f64>,
    /// The holomorphic remainder `A(λ)`.
    pub holomorphic_part: ComplexMatrix,
}

impl KernelSplit {
    pub fn xi_outer(&self) -> ComplexMatrix {
        let n = self.xi.len();
        ComplexMatrix::from_fn(n, n, |i, j| Complex64::new(self.xi[i] * self.xi[j], 0.0))
    }

    pub fn reassemble(&self) -> ComplexMatrix {
        self.xi_outer() * self.singular_coefficient + &self.holomorphic_part
    }
}

pub fn singular_split(p: SurfacePoint, gamma: f64, window: &LatticeWindow) -> Result<KernelSplit> {
    let lambda = p.require_zero()?;
    check_gamma(gamma)?;
    let sites = window_sites(window);
    Ok(KernelSplit {
        singular_coefficient: I / (2.0 * lambda),
        xi: weights(gamma, &sites),
        holomorphic_part: crate::matrix::ensure_finite(holomorphic_part_on_sites(lambda, gamma, &sites), "split")?,
    })
}
