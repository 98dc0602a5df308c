//! Brute-force ground truth: dense eigenvalues of truncated operators, Riesz projections,
//! window-stable discrete spectrum, truncated resolvents, and the limiting-absorption check.

use std::f64::consts::PI;

use faer::linalg::solvers::DenseSolveCore;
use faer::prelude::*;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};
use crate::free_resolvent::{free_kernel, physical_lambda};
use crate::lattice::{self, LatticeWindow, WeightSign};
use crate::matrix::{self, from_faer, to_faer, ComplexMatrix};
use crate::spec::PerturbationSpec;

/// Largest accepted relative residual on the sampled eigenpairs.
pub const BACKWARD_TOL: f64 = 1e-10;
const CERTIFIED_SAMPLES: usize = 10;

fn canonical(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// All eigenvalues of a dense complex matrix, sorted by real then imaginary part.
///
/// Ten evenly spaced eigenpairs are certified by the relative residual
/// `‖Av − λv‖₂ / (‖A‖_F ‖v‖₂)` of the computed eigenvectors.
pub fn eigs(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    matrix::ensure_square(m, n)?;
    if !matrix::is_finite(m) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let a = to_faer(m);
    let evd = a.eigen().map_err(|e| Error::Eigensolver(format!("{e:?} (dimension {n})")))?;
    let (s, u) = (evd.S(), evd.U());
    let scale = a.norm_l2();
    let mut values: Vec<Complex64> = (0..n).map(|k| s[k]).collect();
    if scale > 0.0 {
        let step = (n / CERTIFIED_SAMPLES).max(1);
        for k in (0..n).step_by(step).take(CERTIFIED_SAMPLES) {
            let v = u.col(k);
            let r = &a * v - v * Scale(values[k]);
            let err = r.norm_l2() / (scale * v.norm_l2());
            if !(err <= BACKWARD_TOL) {
                let cond = a.singular_values().ok().and_then(|sv| Some(sv.first()? / sv.last()?));
                return Err(Error::Eigensolver(format!(
                    "backward error {err:.3e} at eigenvalue {} exceeds {BACKWARD_TOL:e} (dimension {n}, 2-norm condition {cond:?})",
                    values[k]
                )));
            }
        }
    }
    canonical(&mut values);
    Ok(values)
}

/// Distance from `z` to the band `[0, 4]`.
pub fn band_distance(z: Complex64) -> f64 {
    if z.re < 0.0 {
        z.norm()
    } else if z.re > 4.0 {
        (z - 4.0).norm()
    } else {
        z.im.abs()
    }
}

pub fn truncated_hamiltonian(spec: &PerturbationSpec, window: &LatticeWindow) -> Result<ComplexMatrix> {
    Ok(lattice::build_free_hamiltonian(window) + lattice::build_perturbation(spec, window)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpectrum {
    pub half_width: usize,
    pub eigenvalues: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableEigenvalue {
    pub value: Complex64,
    /// Distance to the nearest eigenvalue on the second largest window.
    pub drift: f64,
    pub band_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub windows: Vec<WindowSpectrum>,
    pub stable_discrete: Vec<StableEigenvalue>,
    pub essential_band: [f64; 2],
    pub delta_band: f64,
    pub drift_tol: f64,
}

impl SpectrumReport {
    /// Eigenvalues of the largest window.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.windows.last().expect("at least two windows").eigenvalues
    }
}

/// Eigenvalues of `H₀ + V` on each window; points farther than `delta_band` from `[0, 4]` whose
/// drift between the two largest windows is at most `1e-6` are reported as stable.
pub fn discrete_spectrum(spec: &PerturbationSpec, half_widths: &[usize], delta_band: f64) -> Result<SpectrumReport> {
    if half_widths.len() < 2 || half_widths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("need at least two strictly increasing window sizes".into()));
    }
    if !(delta_band.is_finite() && delta_band > 0.0) {
        return Err(Error::InvalidParameter(format!("delta_band must be positive, got {delta_band}")));
    }
    let mut windows = Vec::with_capacity(half_widths.len());
    for &n in half_widths {
        let w = LatticeWindow::new(n, spec.fiber_dim)?;
        windows.push(WindowSpectrum { half_width: n, eigenvalues: eigs(&truncated_hamiltonian(spec, &w)?)? });
    }
    let last = &windows[windows.len() - 1].eigenvalues;
    let prev = &windows[windows.len() - 2].eigenvalues;
    let mut stable_discrete: Vec<StableEigenvalue> = last
        .iter()
        .filter(|z| band_distance(**z) > delta_band)
        .filter_map(|&z| {
            let drift = prev.iter().map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min);
            (drift <= defaults::DRIFT_TOL).then_some(StableEigenvalue { value: z, drift, band_distance: band_distance(z) })
        })
        .collect();
    stable_discrete.sort_by(|a, b| a.value.re.total_cmp(&b.value.re).then(a.value.im.total_cmp(&b.value.im)));
    Ok(SpectrumReport {
        windows,
        stable_discrete,
        essential_band: [0.0, 4.0],
        delta_band,
        drift_tol: defaults::DRIFT_TOL,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RieszData {
    pub point: Complex64,
    pub radius: f64,
    pub projection: ComplexMatrix,
    pub rank: usize,
    pub trace: Complex64,
    pub idempotency_error: f64,
    pub nodes: usize,
}

/// `P = (1/2πi) ∮ (ζ − A)⁻¹ dζ` over the positively oriented circle `|ζ − point| = radius`,
/// so that `P` projects onto the enclosed generalized eigenspaces and `tr P` is their total
/// algebraic multiplicity.
pub fn riesz_projection(m: &ComplexMatrix, point: Complex64, radius: f64) -> Result<RieszData> {
    let n = m.nrows();
    matrix::ensure_square(m, n)?;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let values = eigs(m)?;
    // geometric convergence factor of the trapezoidal rule from the eigenvalue closest to the circle
    let mut q: f64 = 0.0;
    for z in &values {
        let d = (z - point).norm();
        if (d - radius).abs() < 0.1 * radius {
            return Err(Error::ContourSeparation { point, distance: d, radius });
        }
        q = q.max(if d < radius { d / radius } else { radius / d });
    }
    let nodes = if q <= 0.0 { 32 } else { ((1e-15f64).ln() / q.ln()).ceil().clamp(32.0, 2048.0) as usize };

    let a = to_faer(m);
    let mut p = Mat::<c64>::zeros(n, n);
    for k in 0..nodes {
        let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / nodes as f64);
        let zeta = point + radius * e;
        let shifted = Mat::from_fn(n, n, |i, j| if i == j { zeta - a[(i, j)] } else { -a[(i, j)] });
        let inv = shifted.partial_piv_lu().inverse();
        p += inv * Scale(radius * e / nodes as f64);
    }
    let p2 = &p * &p;
    let scale = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| p[(i, j)].norm()).fold(1.0, f64::max);
    let idempotency_error = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (p2[(i, j)] - p[(i, j)]).norm())
        .fold(0.0, f64::max)
        / scale;
    let sv = if n == 0 { Vec::new() } else { p.singular_values().map_err(|e| Error::Numerical(format!("svd failed: {e:?}")))? };
    let top = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > 1e-8 * top).count();
    let projection = from_faer(p.as_ref());
    let trace = matrix::trace(&projection);
    let data = RieszData { point, radius, projection, rank, trace, idempotency_error, nodes };
    if idempotency_error > 1e-8 || (trace - Complex64::new(rank as f64, 0.0)).norm() > 1e-6 {
        return Err(Error::Numerical(format!(
            "Riesz projection around {point} failed its checks: trace {trace}, rank {rank}, |P^2 - P| {idempotency_error:.3e}"
        )));
    }
    Ok(data)
}

/// `W_{−γ}(L₀ − λ²)⁻¹W_{−γ}` on the scalar window, by dense inversion of the Dirichlet section.
pub fn dense_weighted_resolvent(lambda: Complex64, gamma: f64, window: &LatticeWindow) -> Result<ComplexMatrix> {
    let w = window.scalar();
    let z = lambda * lambda;
    let h = lattice::build_free_hamiltonian(&w) - ComplexMatrix::identity(w.dim(), w.dim()) * z;
    let inv = to_faer(&h).partial_piv_lu().inverse();
    let weight = lattice::build_weight(&w, gamma, WeightSign::Minus)?;
    let r = from_faer(inv.as_ref());
    matrix::ensure_finite(&weight * r * &weight, "dense resolvent")
}

/// `(A − z)⁻¹` by dense LU.
pub fn dense_resolvent(a: &ComplexMatrix, z: Complex64) -> Result<ComplexMatrix> {
    let n = a.nrows();
    matrix::ensure_square(a, n)?;
    let shifted = a - ComplexMatrix::identity(n, n) * z;
    let inv = to_faer(&shifted).partial_piv_lu().inverse();
    matrix::ensure_finite(from_faer(inv.as_ref()), "resolvent")
}

/// Perturbation restricted to the lattice sites where it acts: `(sites, V_SS)`.
fn perturbation_support(spec: &PerturbationSpec, window: &LatticeWindow) -> Result<(Vec<i64>, ComplexMatrix)> {
    let v = lattice::build_perturbation(spec, window)?;
    let d = spec.fiber_dim;
    let sites: Vec<i64> = window
        .site_range()
        .filter(|&n| {
            let i = window.index(n, 0).expect("site in window");
            (0..v.ncols()).any(|j| (0..d).any(|a| v[(i + a, j)] != matrix::ZERO))
                || (0..v.nrows()).any(|r| (0..d).any(|a| v[(r, i + a)] != matrix::ZERO))
        })
        .collect();
    let k = sites.len() * d;
    let mut vs = ComplexMatrix::zeros(k, k);
    for (a, &n) in sites.iter().enumerate() {
        for (b, &m) in sites.iter().enumerate() {
            let i = window.index(n, 0).expect("site in window");
            let j = window.index(m, 0).expect("site in window");
            vs.view_mut((a * d, b * d), (d, d)).copy_from(&v.view((i, j), (d, d)));
        }
    }
    Ok((sites, vs))
}

/// `⟨δ_φ⊗e₀, (H_V − z)⁻¹ δ_ψ⊗e₀⟩` on the whole lattice via the second resolvent identity
/// restricted to the support of `V`, together with the 1-norm condition number of `I + R₀V` there.
pub fn exact_matrix_element(spec: &PerturbationSpec, window: &LatticeWindow, z: Complex64, phi: i64, psi: i64) -> Result<(Complex64, f64)> {
    let (sites, vs) = perturbation_support(spec, window)?;
    let lambda = physical_lambda(z);
    if lambda.norm() == 0.0 {
        return Err(Error::Singularity);
    }
    let d = spec.fiber_dim;
    let free = free_kernel(lambda, phi.abs_diff(psi));
    if sites.is_empty() {
        return Ok((free, 1.0));
    }
    let k = sites.len() * d;
    let r_ss = ComplexMatrix::from_fn(k, k, |i, j| {
        if i % d == j % d {
            free_kernel(lambda, sites[i / d].abs_diff(sites[j / d]))
        } else {
            matrix::ZERO
        }
    });
    let a = ComplexMatrix::identity(k, k) + &r_ss * &vs;
    let inv = a.clone().try_inverse().ok_or(Error::Singularity)?;
    let n1 = |m: &ComplexMatrix| m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let cond = n1(&a) * n1(&inv);
    let left = nalgebra::DVector::from_fn(k, |i, _| if i % d == 0 { free_kernel(lambda, phi.abs_diff(sites[i / d])) } else { matrix::ZERO });
    let right = nalgebra::DVector::from_fn(k, |i, _| if i % d == 0 { free_kernel(lambda, sites[i / d].abs_diff(psi)) } else { matrix::ZERO });
    let corr = (left.transpose() * &vs * &inv * right)[(0, 0)];
    Ok((free - corr, cond))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LapSample {
    pub energy: f64,
    pub epsilon: f64,
    /// `+1` for `E + iε`, `-1` for `E − iε`.
    pub side: i8,
    pub value: Complex64,
    pub modulus: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapVerdict {
    pub bounded: bool,
    /// Largest ratio of the ladder maxima at the two smallest `ε`, over both sides.
    pub growth: f64,
    /// Energies whose own ratio exceeds the growth tolerance: candidate blow-up points.
    pub candidates: Vec<f64>,
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapTable {
    pub interval: [f64; 2],
    pub phi: i64,
    pub psi: i64,
    pub epsilons: Vec<f64>,
    pub samples: Vec<LapSample>,
    pub verdict: LapVerdict,
}

/// `|⟨δ_φ, (z − H_V)⁻¹ δ_ψ⟩|` for `Re z` across `interval` and `Im z = ±ε` down the ladder.
///
/// The verdict is a heuristic for `sup < ∞`: the maximum over the interval must grow by less than
/// 5% between the two smallest `ε`. Samples where `I + R₀V` is numerically singular (condition
/// above `1e10`) are flagged and left out.
pub fn lap_check(
    spec: &PerturbationSpec,
    interval: (f64, f64),
    phi: i64,
    psi: i64,
    epsilons: &[f64],
    window: &LatticeWindow,
    energies: usize,
) -> Result<LapTable> {
    let (a, b) = interval;
    if !(a > 0.0 && b < 4.0 && a <= b) {
        return Err(Error::InvalidParameter(format!("interval must lie inside (0, 4), got [{a}, {b}]")));
    }
    if epsilons.len() < 2 || epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("epsilon ladder needs at least two positive, decreasing values".into()));
    }
    if energies == 0 {
        return Err(Error::InvalidParameter("need at least one energy sample".into()));
    }
    let grid: Vec<f64> = if energies == 1 || a == b {
        vec![0.5 * (a + b)]
    } else {
        (0..energies).map(|k| a + (b - a) * k as f64 / (energies - 1) as f64).collect()
    };
    let mut samples = Vec::with_capacity(grid.len() * epsilons.len() * 2);
    for &e in &grid {
        for &eps in epsilons {
            for side in [1i8, -1] {
                let z = Complex64::new(e, side as f64 * eps);
                let (g, cond) = exact_matrix_element(spec, window, z, phi, psi)?;
                // (z − H)⁻¹ = −(H − z)⁻¹
                let value = -g;
                samples.push(LapSample { energy: e, epsilon: eps, side, value, modulus: value.norm(), flagged: !(cond <= defaults::LAP_CONDITION_LIMIT) });
            }
        }
    }
    let verdict = lap_verdict(&samples, &grid, epsilons);
    Ok(LapTable { interval: [a, b], phi, psi, epsilons: epsilons.to_vec(), samples, verdict })
}

fn lap_verdict(samples: &[LapSample], grid: &[f64], epsilons: &[f64]) -> LapVerdict {
    let last = epsilons[epsilons.len() - 1];
    let prev = epsilons[epsilons.len() - 2];
    let tol = 1.0 + defaults::LAP_GROWTH_TOL;
    let level_max = |eps: f64, side: i8| {
        samples
            .iter()
            .filter(|s| s.epsilon == eps && s.side == side && !s.flagged)
            .map(|s| s.modulus)
            .fold(0.0, f64::max)
    };
    let mut growth: f64 = 0.0;
    for side in [1i8, -1] {
        let hi = level_max(last, side);
        let lo = level_max(prev, side);
        if lo > 0.0 {
            growth = growth.max(hi / lo);
        }
    }
    let mut candidates = Vec::new();
    for &e in grid {
        let pick = |eps: f64| {
            samples
                .iter()
                .filter(|s| s.energy == e && s.epsilon == eps && !s.flagged)
                .map(|s| s.modulus)
                .fold(0.0, f64::max)
        };
        let (hi, lo) = (pick(last), pick(prev));
        if lo > 0.0 && hi / lo >= tol {
            candidates.push(e);
        }
    }
    LapVerdict { bounded: growth < tol, growth, candidates, flagged: samples.iter().filter(|s| s.flagged).count() }
}
