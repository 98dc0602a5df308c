//! Truncated fibered lattice operators on the window `{-N, …, N} ⊗ ℂ^d`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{self, ComplexMatrix};
use crate::spec::{abs_sum, Kernel, PerturbationSpec};

/// Relative slack used when comparing `‖w(n,m)‖e^{γ(|n|+|m|)}` against `C`.
const BOUND_SLACK: f64 = 1e-12;
/// Relative singular value cutoff for the numerical rank of `Λ₂Λ₁`.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct LatticeWindow {
    half_width: usize,
    fiber_dim: usize,
}

impl LatticeWindow {
    pub fn new(half_width: usize, fiber_dim: usize) -> Result<Self> {
        if half_width == 0 {
            return Err(Error::InvalidParameter("window half-width must be positive".into()));
        }
        if fiber_dim == 0 {
            return Err(Error::InvalidParameter("fiber dimension must be positive".into()));
        }
        half_width
            .checked_mul(2)
            .and_then(|s| s.checked_add(1))
            .and_then(|s| s.checked_mul(fiber_dim))
            .ok_or_else(|| Error::InvalidParameter("window dimension overflows".into()))?;
        Ok(LatticeWindow { half_width, fiber_dim })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    /// Number of lattice sites `2N+1`.
    pub fn sites(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Total dimension `(2N+1)·d`.
    pub fn dim(&self) -> usize {
        self.sites() * self.fiber_dim
    }

    pub fn site_range(&self) -> std::ops::RangeInclusive<i64> {
        let n = self.half_width as i64;
        -n..=n
    }

    pub fn contains(&self, n: i64) -> bool {
        n.unsigned_abs() <= self.half_width as u64
    }

    /// Row index of `(site, fiber component)`.
    pub fn index(&self, n: i64, a: usize) -> Option<usize> {
        if !self.contains(n) || a >= self.fiber_dim {
            return None;
        }
        Some((n + self.half_width as i64) as usize * self.fiber_dim + a)
    }

    pub fn site_of(&self, idx: usize) -> Option<(i64, usize)> {
        if idx >= self.dim() {
            return None;
        }
        let n = (idx / self.fiber_dim) as i64 - self.half_width as i64;
        Some((n, idx % self.fiber_dim))
    }

    /// Same sites, scalar fiber.
    pub fn scalar(&self) -> LatticeWindow {
        LatticeWindow { half_width: self.half_width, fiber_dim: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSign {
    Plus,
    Minus,
}

pub fn fourier_symbol(alpha: f64) -> f64 {
    let s = (alpha / 2.0).sin();
    4.0 * s * s
}

/// Integer matrix of `L₀` on the scalar window (Dirichlet section).
pub fn free_laplacian_integer(window: &LatticeWindow) -> DMatrix<i64> {
    let s = window.sites();
    DMatrix::from_fn(s, s, |i, j| match i.abs_diff(j) {
        0 => 2,
        1 => -1,
        _ => 0,
    })
}

/// Integer diagonal of `J` on the scalar window.
pub fn parity_integer(window: &LatticeWindow) -> DMatrix<i64> {
    let s = window.sites();
    let half = window.half_width as i64;
    DMatrix::from_fn(s, s, |i, j| {
        if i != j {
            0
        } else if (i as i64 - half).rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    })
}

/// Largest entry of `J L₀ J + L₀ − 4I` over the interior rows `|n| ≤ N−1`, in exact integer arithmetic.
pub fn threshold_reflection_defect(window: &LatticeWindow) -> i64 {
    let l0 = free_laplacian_integer(window);
    let j = parity_integer(window);
    let s = window.sites();
    let lhs = &j * &l0 * &j + &l0 - DMatrix::<i64>::identity(s, s) * 4;
    (1..s - 1)
        .flat_map(|i| (0..s).map(move |c| (i, c)))
        .map(|(i, c)| lhs[(i, c)].abs())
        .max()
        .unwrap_or(0)
}

fn cast(m: &DMatrix<i64>) -> ComplexMatrix {
    m.map(|x| Complex64::new(x as f64, 0.0))
}

pub fn build_free_hamiltonian(window: &LatticeWindow) -> ComplexMatrix {
    let l0 = cast(&free_laplacian_integer(window));
    matrix::kron(&l0, &ComplexMatrix::identity(window.fiber_dim, window.fiber_dim))
}

pub fn build_weight(window: &LatticeWindow, gamma: f64, sign: WeightSign) -> Result<ComplexMatrix> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let s = match sign {
        WeightSign::Plus => 1.0,
        WeightSign::Minus => -1.0,
    };
    let diag: Vec<Complex64> = (0..window.dim())
        .map(|idx| {
            let (n, _) = window.site_of(idx).expect("index in range");
            Complex64::new((s * 0.5 * gamma * n.unsigned_abs() as f64).exp(), 0.0)
        })
        .collect();
    matrix::ensure_finite(ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)), "weight")
}

pub fn build_j(window: &LatticeWindow) -> ComplexMatrix {
    matrix::kron(&cast(&parity_integer(window)), &ComplexMatrix::identity(window.fiber_dim, window.fiber_dim))
}

pub(crate) fn check_entry(spec: &PerturbationSpec, n: i64, m: i64, w: &ComplexMatrix) -> Result<()> {
    let norm = matrix::spectral_norm(w);
    let weighted = norm * (spec.gamma * abs_sum(n, m)).exp();
    if weighted > spec.bound * (1.0 + BOUND_SLACK) {
        return Err(Error::AssumptionViolation { n, m, norm: weighted, bound: spec.bound });
    }
    Ok(())
}

/// Finite section of `(Γ₁⊗Λ₁)W(Γ₂⊗Λ₂)`; block `(n, m)` is `g₁(n)g₂(m)Λ₁w(n,m)Λ₂`.
pub fn build_perturbation(spec: &PerturbationSpec, window: &LatticeWindow) -> Result<ComplexMatrix> {
    let d = spec.fiber_dim;
    if window.fiber_dim != d {
        return Err(Error::DimensionMismatch { expected: d, got: window.fiber_dim });
    }
    let mut v = ComplexMatrix::zeros(window.dim(), window.dim());
    for (n, m, w) in spec.kernel_on(window) {
        check_entry(spec, n, m, &w)?;
        let block = &spec.lambda1 * &w * &spec.lambda2 * (spec.gamma_factors.g1(n) * spec.gamma_factors.g2(m));
        let r0 = window.index(n, 0).expect("site in window");
        let c0 = window.index(m, 0).expect("site in window");
        v.view_mut((r0, c0), (d, d)).copy_from(&block);
    }
    matrix::ensure_finite(v, "perturbation")
}

/// `J V J`.
pub fn conjugate_by_j(v: &ComplexMatrix, window: &LatticeWindow) -> Result<ComplexMatrix> {
    matrix::ensure_square(v, window.dim())?;
    let sign = |idx: usize| {
        let (n, _) = window.site_of(idx).expect("index in range");
        if n.unsigned_abs() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    Ok(ComplexMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * (sign(i) * sign(j))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub pass: bool,
    /// `sup ‖w(n,m)‖e^{γ(|n|+|m|)}` over the support; infinite when the closed form decays slower than `γ`.
    pub decay_sup: f64,
    pub bound: f64,
    pub worst_pair: Option<(i64, i64)>,
    pub violations: Vec<(i64, i64)>,
    pub fiber_rank: usize,
    pub fiber_dim: usize,
    pub gamma_diagonal: bool,
    pub gamma_bounded: bool,
    pub failures: Vec<String>,
}

pub fn verify_assumption(spec: &PerturbationSpec) -> AssumptionReport {
    let mut failures = Vec::new();
    let mut violations = Vec::new();
    let mut decay_sup: f64 = 0.0;
    let mut worst_pair = None;
    let limit = spec.bound * (1.0 + BOUND_SLACK);

    match &spec.kernel {
        Kernel::Entries(map) => {
            for (&(n, m), w) in map {
                let val = matrix::spectral_norm(w) * (spec.gamma * abs_sum(n, m)).exp();
                if val > decay_sup || worst_pair.is_none() {
                    decay_sup = decay_sup.max(val);
                    worst_pair = Some((n, m));
                }
                if !(val <= limit) {
                    violations.push((n, m));
                }
            }
        }
        Kernel::ExpDecay { amplitude, rate } => {
            worst_pair = Some((0, 0));
            decay_sup = if *rate >= spec.gamma { amplitude.norm() } else if amplitude.norm() == 0.0 { 0.0 } else { f64::INFINITY };
            if !(decay_sup <= limit) {
                violations.push((0, 0));
            }
        }
    }
    if !violations.is_empty() {
        failures.push(format!(
            "decay bound violated at {} kernel entr{} (sup {:.6e} > C = {:.6e})",
            violations.len(),
            if violations.len() == 1 { "y" } else { "ies" },
            decay_sup,
            spec.bound
        ));
    }

    let product = spec.fiber_product();
    let fiber_rank = matrix::numerical_rank(&product, RANK_TOL);
    if fiber_rank > spec.fiber_dim {
        failures.push("rank of fiber product exceeds fiber dimension".into());
    }

    let (s1, s2) = spec.gamma_factors.sup_norms();
    let gamma_bounded = s1.is_finite() && s2.is_finite();
    if !gamma_bounded {
        failures.push("gamma factors are unbounded".into());
    }

    AssumptionReport {
        pass: failures.is_empty(),
        decay_sup,
        bound: spec.bound,
        worst_pair,
        violations,
        fiber_rank,
        fiber_dim: spec.fiber_dim,
        gamma_diagonal: true,
        gamma_bounded,
        failures,
    }
}

/// `Σ |g₁(n)||g₂(m)|‖Λ₁w(n,m)Λ₂‖` over the window, an upper bound for `‖V‖`.
pub fn perturbation_norm_bound(spec: &PerturbationSpec, window: &LatticeWindow) -> f64 {
    spec.kernel_on(window)
        .into_iter()
        .map(|(n, m, w)| {
            spec.gamma_factors.g1(n).norm()
                * spec.gamma_factors.g2(m).norm()
                * matrix::spectral_norm(&(&spec.lambda1 * &w * &spec.lambda2))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{c, ONE, ZERO};

    fn real(m: &ComplexMatrix) -> Vec<f64> {
        m.iter().map(|z| z.re).collect()
    }

    #[test]
    fn window_index_round_trip() {
        let w = LatticeWindow::new(3, 2).unwrap();
        assert_eq!(w.dim(), 14);
        for idx in 0..w.dim() {
            let (n, a) = w.site_of(idx).unwrap();
            assert_eq!(w.index(n, a), Some(idx));
        }
        assert_eq!(w.index(4, 0), None);
        assert_eq!(w.index(0, 2), None);
        assert!(LatticeWindow::new(0, 1).is_err());
        assert!(LatticeWindow::new(1, 0).is_err());
    }

    #[test]
    fn free_hamiltonian_small() {
        let h = build_free_hamiltonian(&LatticeWindow::new(1, 1).unwrap());
        assert_eq!(real(&h), vec![2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let h2 = build_free_hamiltonian(&LatticeWindow::new(1, 2).unwrap());
        assert_eq!(h2, matrix::kron(&h, &ComplexMatrix::identity(2, 2)));
    }

    #[test]
    fn free_hamiltonian_spectrum_inside_band() {
        let h = build_free_hamiltonian(&LatticeWindow::new(2, 1).unwrap());
        let re = h.map(|z| z.re);
        for e in re.symmetric_eigenvalues().iter() {
            assert!(*e > 0.0 && *e < 4.0);
        }
    }

    #[test]
    fn weights() {
        let w = LatticeWindow::new(1, 1).unwrap();
        let m = build_weight(&w, 2.0, WeightSign::Minus).unwrap();
        let e = (-1.0f64).exp();
        assert!((m[(0, 0)].re - e).abs() < 1e-15);
        assert_eq!(m[(1, 1)], ONE);
        let w2 = LatticeWindow::new(2, 1).unwrap();
        let p = build_weight(&w2, 1.0, WeightSign::Plus).unwrap();
        assert!((matrix::max_abs(&p) - 1f64.exp()).abs() < 1e-14);
        let id = &p * build_weight(&w2, 1.0, WeightSign::Minus).unwrap();
        assert!(matrix::max_relative_diff(&id, &ComplexMatrix::identity(5, 5)) < 1e-14);
        assert!(build_weight(&w, 0.0, WeightSign::Plus).is_err());
    }

    #[test]
    fn parity() {
        let w = LatticeWindow::new(1, 1).unwrap();
        let j = build_j(&w);
        assert_eq!(real(&j), vec![-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0]);
        assert_eq!(&j * &j, ComplexMatrix::identity(3, 3));
        assert_eq!(threshold_reflection_defect(&LatticeWindow::new(5, 1).unwrap()), 0);
    }

    #[test]
    fn perturbation_blocks() {
        let w = LatticeWindow::new(2, 1).unwrap();
        let spec = PerturbationSpec::scalar(1.0, 1.0, &[(0, 0, ONE)]);
        let v = build_perturbation(&spec, &w).unwrap();
        assert_eq!(v[(2, 2)], ONE);
        assert_eq!(matrix::max_abs(&(v.clone() - ComplexMatrix::from_fn(5, 5, |i, j| if i == 2 && j == 2 { ONE } else { ZERO }))), 0.0);

        let mut scaled = spec.clone();
        scaled.gamma_factors = crate::spec::GammaFactors::Scalar { mu1: c(2.0, 0.0), mu2: c(3.0, 0.0) };
        assert_eq!(build_perturbation(&scaled, &w).unwrap()[(2, 2)], c(6.0, 0.0));

        let bad = PerturbationSpec::scalar(1.0, 1.0, &[(1, 0, ONE)]);
        assert!(matches!(build_perturbation(&bad, &w), Err(Error::AssumptionViolation { n: 1, m: 0, .. })));
    }

    #[test]
    fn diagonal_perturbation_commutes_with_parity() {
        let w = LatticeWindow::new(3, 1).unwrap();
        let spec = PerturbationSpec::scalar(0.5, 10.0, &[(0, 0, c(1.0, 2.0)), (1, 1, c(-0.3, 0.0)), (-2, -2, c(0.0, 0.1))]);
        let v = build_perturbation(&spec, &w).unwrap();
        let j = build_j(&w);
        assert_eq!(&j * &v * &j, v);
        assert_eq!(conjugate_by_j(&v, &w).unwrap(), v);
    }

    #[test]
    fn conjugation_flips_odd_offsets() {
        let w = LatticeWindow::new(2, 1).unwrap();
        let spec = PerturbationSpec::scalar(1.0, 10.0, &[(0, 1, ONE)]);
        let v = build_perturbation(&spec, &w).unwrap();
        let vj = conjugate_by_j(&v, &w).unwrap();
        assert_eq!(vj, -v.clone());
        assert_eq!(conjugate_by_j(&vj, &w).unwrap(), v);
        assert!(conjugate_by_j(&ComplexMatrix::zeros(3, 3), &w).is_err());
    }

    #[test]
    fn assumption_reports() {
        let entries: Vec<(i64, i64, Complex64)> = (-3..=3)
            .flat_map(|n| (-3..=3).map(move |m| (n, m)))
            .map(|(n, m)| (n, m, c((-(abs_sum(n, m))).exp(), 0.0)))
            .collect();
        let r = verify_assumption(&PerturbationSpec::scalar(1.0, 1.0, &entries));
        assert!(r.pass, "{r:?}");
        assert!((r.decay_sup - 1.0).abs() < 1e-12);

        let r = verify_assumption(&PerturbationSpec::scalar(1.0, 1.0, &[(0, 0, c(10.0, 0.0))]));
        assert!(!r.pass);
        assert_eq!(r.violations, vec![(0, 0)]);

        let mut spec = PerturbationSpec::scalar(1.0, 1.0, &[]);
        spec.fiber_dim = 3;
        spec.lambda1 = ComplexMatrix::identity(3, 3);
        spec.lambda2 = ComplexMatrix::identity(3, 3);
        let r = verify_assumption(&spec);
        assert!(r.pass);
        assert_eq!(r.fiber_rank, 3);
    }

    #[test]
    fn closed_form_kernel_assumption() {
        let mut spec = PerturbationSpec::scalar(1.0, 2.0, &[]);
        spec.kernel = Kernel::ExpDecay { amplitude: c(1.5, 0.0), rate: 1.0 };
        assert!(verify_assumption(&spec).pass);
        spec.kernel = Kernel::ExpDecay { amplitude: c(1.5, 0.0), rate: 0.5 };
        let r = verify_assumption(&spec);
        assert!(!r.pass);
        assert!(r.decay_sup.is_infinite());
    }

    #[test]
    fn symbol() {
        assert_eq!(fourier_symbol(0.0), 0.0);
        assert!((fourier_symbol(std::f64::consts::PI) - 4.0).abs() < 1e-15);
        assert!((fourier_symbol(std::f64::consts::FRAC_PI_2) - 2.0).abs() < 1e-15);
    }
}
