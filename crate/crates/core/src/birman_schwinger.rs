//! Sandwiched Birman–Schwinger operators
//! `T(λ) = 𝒲 · (Γ₂ W_{−γ}(L₀ − λ²)^{−1}W_{−γ} Γ₁ ⊗ Λ₂Λ₁)` on the window, where `𝒲` has blocks
//! `e^{(γ/2)|n|} w(n,m) e^{(γ/2)|m|}`. At threshold 4 the kernel is replaced by that of `−JVJ`.
//!
//! `det(I + R₀V) = det(I + T)`, so characteristic values of `I + T` are eigenvalues (physical sheet)
//! and resonances (second sheet).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charval::AnalyticFamily;
use crate::error::{Error, Result};
use crate::free_resolvent::{self, SurfacePoint, Threshold};
use crate::lattice::{self, LatticeWindow};
use crate::matrix::{self, ComplexMatrix, I};
use crate::spec::{abs_sum, PerturbationSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BsVariant {
    /// Threshold 0, kernel of `V`.
    AtZero,
    /// Threshold 4, kernel of `−V_J`.
    AtFour,
}

impl BsVariant {
    pub fn threshold(self) -> Threshold {
        match self {
            BsVariant::AtZero => Threshold::Zero,
            BsVariant::AtFour => Threshold::Four,
        }
    }

    pub fn for_threshold(mu: Threshold) -> Self {
        match mu {
            Threshold::Zero => BsVariant::AtZero,
            Threshold::Four => BsVariant::AtFour,
        }
    }
}

/// `(i/λ)·singular + remainder = matrix`.
#[derive(Debug, Clone, PartialEq)]
pub struct BsSplit {
    pub singular: ComplexMatrix,
    pub remainder: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsOperator {
    pub matrix: ComplexMatrix,
    pub lambda: SurfacePoint,
    pub variant: BsVariant,
    pub split: Option<BsSplit>,
}

fn check_window(spec: &PerturbationSpec, window: &LatticeWindow) -> Result<()> {
    if window.fiber_dim() != spec.fiber_dim {
        return Err(Error::DimensionMismatch { expected: spec.fiber_dim, got: window.fiber_dim() });
    }
    Ok(())
}

fn variant_sign(variant: BsVariant, n: i64, m: i64) -> f64 {
    match variant {
        BsVariant::AtZero => 1.0,
        BsVariant::AtFour => {
            if (n.unsigned_abs() + m.unsigned_abs()) % 2 == 0 {
                -1.0
            } else {
                1.0
            }
        }
    }
}

/// Nonzero blocks of `𝒲` (or `−𝒲_J`) inside the window.
fn script_w_blocks(spec: &PerturbationSpec, variant: BsVariant, window: &LatticeWindow) -> Result<Vec<(i64, i64, ComplexMatrix)>> {
    check_window(spec, window)?;
    let mut out = Vec::new();
    for (n, m, w) in spec.kernel_on(window) {
        lattice::check_entry(spec, n, m, &w)?;
        let scale = variant_sign(variant, n, m) * (0.5 * spec.gamma * abs_sum(n, m)).exp();
        out.push((n, m, w * Complex64::new(scale, 0.0)));
    }
    Ok(out)
}

pub fn assemble_script_w(spec: &PerturbationSpec, variant: BsVariant, window: &LatticeWindow) -> Result<ComplexMatrix> {
    let d = spec.fiber_dim;
    let mut out = ComplexMatrix::zeros(window.dim(), window.dim());
    for (n, m, b) in script_w_blocks(spec, variant, window)? {
        let r = window.index(n, 0).expect("site in window");
        let c = window.index(m, 0).expect("site in window");
        out.view_mut((r, c), (d, d)).copy_from(&b);
    }
    matrix::ensure_finite(out, "script W")
}

/// `𝒲 · (Γ₂ K Γ₁ ⊗ Λ₂Λ₁)` for a scalar window matrix `K`, exploiting the sparsity of `𝒲`.
fn sandwich(spec: &PerturbationSpec, blocks: &[(i64, i64, ComplexMatrix)], k: &ComplexMatrix, window: &LatticeWindow) -> ComplexMatrix {
    let d = spec.fiber_dim;
    let fiber = spec.fiber_product();
    let sites: Vec<i64> = window.site_range().collect();
    let g1: Vec<Complex64> = sites.iter().map(|&n| spec.gamma_factors.g1(n)).collect();
    let g2: Vec<Complex64> = sites.iter().map(|&n| spec.gamma_factors.g2(n)).collect();
    let offset = window.half_width() as i64;
    let mut out = ComplexMatrix::zeros(window.dim(), window.dim());
    for (n, m, b) in blocks {
        let q = b * &fiber;
        let mi = (m + offset) as usize;
        let r0 = window.index(*n, 0).expect("site in window");
        for (ci, _) in sites.iter().enumerate() {
            let s = g2[mi] * k[(mi, ci)] * g1[ci];
            if s == matrix::ZERO {
                continue;
            }
            let mut view = out.view_mut((r0, ci * d), (d, d));
            view += &q * s;
        }
    }
    out
}

fn kernel_point(p: SurfacePoint, variant: BsVariant) -> Result<SurfacePoint> {
    if p.threshold() != variant.threshold() {
        return Err(Error::InvalidParameter(format!(
            "point at threshold {} used with the threshold-{} variant",
            p.threshold().value(),
            variant.threshold().value()
        )));
    }
    Ok(free_resolvent::to_threshold_zero(p))
}

pub fn assemble_t(spec: &PerturbationSpec, p: SurfacePoint, variant: BsVariant, window: &LatticeWindow) -> Result<BsOperator> {
    let q = kernel_point(p, variant)?;
    let blocks = script_w_blocks(spec, variant, window)?;
    let k = free_resolvent::weighted_resolvent(q, spec.gamma, &window.scalar())?;
    let t = matrix::ensure_finite(sandwich(spec, &blocks, &k, window), "Birman-Schwinger operator")?;
    Ok(BsOperator { matrix: t, lambda: p, variant, split: None })
}

pub fn assemble_t_split(spec: &PerturbationSpec, p: SurfacePoint, variant: BsVariant, window: &LatticeWindow) -> Result<BsOperator> {
    let q = kernel_point(p, variant)?;
    let blocks = script_w_blocks(spec, variant, window)?;
    let ks = free_resolvent::singular_split(q, spec.gamma, &window.scalar())?;
    let half_outer = ks.xi_outer() * Complex64::new(0.5, 0.0);
    let singular = sandwich(spec, &blocks, &half_outer, window);
    let remainder = sandwich(spec, &blocks, &ks.holomorphic_part, window);
    let t = &singular * (I / q.lambda()) + &remainder;
    Ok(BsOperator {
        matrix: matrix::ensure_finite(t, "Birman-Schwinger operator")?,
        lambda: p,
        variant,
        split: Some(BsSplit { singular, remainder }),
    })
}

pub fn assemble_t_derivative(spec: &PerturbationSpec, p: SurfacePoint, variant: BsVariant, window: &LatticeWindow) -> Result<ComplexMatrix> {
    let q = kernel_point(p, variant)?;
    let blocks = script_w_blocks(spec, variant, window)?;
    let k = free_resolvent::weighted_resolvent_derivative(q, spec.gamma, &window.scalar())?;
    matrix::ensure_finite(sandwich(spec, &blocks, &k, window), "Birman-Schwinger derivative")
}

/// `λ ↦ I + T(λ)` compressed to the sites where `𝒲` has nonzero rows or columns.
///
/// `T` vanishes on every other row, so `I + T` is block triangular and the compressed family has the
/// same determinant and the same characteristic values with the same multiplicities.
#[derive(Debug, Clone)]
pub struct ReducedFamily {
    sites: Vec<i64>,
    gamma: f64,
    fiber_dim: usize,
    script_w: ComplexMatrix,
    g1: Vec<Complex64>,
    g2: Vec<Complex64>,
    fiber: ComplexMatrix,
}

impl ReducedFamily {
    pub fn new(spec: &PerturbationSpec, variant: BsVariant, window: &LatticeWindow) -> Result<Self> {
        let d = spec.fiber_dim;
        let blocks = script_w_blocks(spec, variant, window)?;
        let mut sites: Vec<i64> = blocks
            .iter()
            .filter(|(_, _, b)| b.iter().any(|z| *z != matrix::ZERO))
            .flat_map(|(n, m, _)| [*n, *m])
            .collect();
        sites.sort_unstable();
        sites.dedup();
        let pos = |n: i64| sites.binary_search(&n).ok();
        let dim = sites.len() * d;
        let mut script_w = ComplexMatrix::zeros(dim, dim);
        for (n, m, b) in &blocks {
            if let (Some(i), Some(j)) = (pos(*n), pos(*m)) {
                script_w.view_mut((i * d, j * d), (d, d)).copy_from(b);
            }
        }
        Ok(ReducedFamily {
            g1: sites.iter().map(|&n| spec.gamma_factors.g1(n)).collect(),
            g2: sites.iter().map(|&n| spec.gamma_factors.g2(n)).collect(),
            sites,
            gamma: spec.gamma,
            fiber_dim: d,
            script_w,
            fiber: spec.fiber_product(),
        })
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    fn sandwich(&self, k: ComplexMatrix) -> ComplexMatrix {
        let s = self.sites.len();
        let inner = ComplexMatrix::from_fn(s, s, |i, j| self.g2[i] * k[(i, j)] * self.g1[j]);
        &self.script_w * matrix::kron(&inner, &self.fiber)
    }

    pub fn t(&self, lambda: Complex64) -> ComplexMatrix {
        self.sandwich(free_resolvent::weighted_kernel_on_sites(lambda, self.gamma, &self.sites))
    }

    pub fn t_derivative(&self, lambda: Complex64) -> ComplexMatrix {
        self.sandwich(free_resolvent::weighted_kernel_derivative_on_sites(lambda, self.gamma, &self.sites))
    }

    /// Residue of `T` at `λ = 0` divided by `i`: `𝒲Γ₂(½ξξᵀ)Γ₁⊗Λ₂Λ₁` on the support.
    pub fn singular(&self) -> ComplexMatrix {
        let xi: Vec<f64> = self.sites.iter().map(|&n| (-0.5 * self.gamma * n.unsigned_abs() as f64).exp()).collect();
        let s = self.sites.len();
        self.sandwich(ComplexMatrix::from_fn(s, s, |i, j| Complex64::new(0.5 * xi[i] * xi[j], 0.0)))
    }
}

impl AnalyticFamily for ReducedFamily {
    fn dim(&self) -> usize {
        self.sites.len() * self.fiber_dim
    }

    fn value(&self, lambda: Complex64) -> Result<ComplexMatrix> {
        if lambda.norm() == 0.0 {
            return Err(Error::Singularity);
        }
        let t = self.t(lambda);
        matrix::ensure_finite(ComplexMatrix::identity(t.nrows(), t.ncols()) + t, "I + T")
    }

    fn derivative(&self, lambda: Complex64) -> Result<ComplexMatrix> {
        if lambda.norm() == 0.0 {
            return Err(Error::Singularity);
        }
        matrix::ensure_finite(self.t_derivative(lambda), "T'")
    }
}
