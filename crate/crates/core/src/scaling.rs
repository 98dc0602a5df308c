//! Complex scaling: Möbius spectral maps, spectral arcs, the dilation flow on the torus,
//! dilated lattice vectors and the scaled operator on a Fourier grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charval::ResonanceRecord;
use crate::eig_oracle::{self, band_distance};
use crate::error::{Error, Result};
use crate::free_resolvent::{Sheet, Threshold};
use crate::lattice::fourier_symbol;
use crate::matrix::{self, ComplexMatrix};
use crate::spec::{Kernel, PerturbationSpec};

/// Open disk of admissible scaling parameters.
pub const THETA_LIMIT: f64 = PI / 8.0;
/// Class radius of finitely supported rank-one perturbations.
pub const CLASS_RADIUS: f64 = 0.5;
const ALIAS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParam {
    theta: Complex64,
}

impl ScalingParam {
    pub fn new(theta: Complex64) -> Result<Self> {
        if !(theta.re.is_finite() && theta.im.is_finite()) || theta.norm() >= THETA_LIMIT {
            return Err(Error::InvalidParameter(format!("|theta| must be below pi/8, got {theta}")));
        }
        Ok(ScalingParam { theta })
    }

    /// Also requires `|θ| < R′ = min(R, π/8)/2` for a perturbation of class radius `R`.
    pub fn for_class(theta: Complex64, class_radius: f64) -> Result<Self> {
        let p = Self::new(theta)?;
        let limit = Self::reduced_radius(class_radius);
        if theta.norm() >= limit {
            return Err(Error::InvalidParameter(format!("|theta| must be below {limit:.6} for class radius {class_radius}, got {theta}")));
        }
        Ok(p)
    }

    pub fn reduced_radius(class_radius: f64) -> f64 {
        class_radius.min(THETA_LIMIT) / 2.0
    }

    pub fn theta(&self) -> Complex64 {
        self.theta
    }

    /// `th(2θ)`.
    pub fn t(&self) -> Complex64 {
        (2.0 * self.theta).tanh()
    }

    pub fn is_real(&self) -> bool {
        self.theta.im == 0.0
    }
}

/// Uniform grid `α_k = 2πk/M − π` on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourierGrid {
    size: usize,
}

impl FourierGrid {
    pub fn new(size: usize) -> Result<Self> {
        if size < 64 || !size.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("grid size must be a power of two >= 64, got {size}")));
        }
        Ok(FourierGrid { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn node(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.size as f64 - PI
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.size).map(|k| self.node(k)).collect()
    }

    /// Lattice indices represented by the grid: `−M/2 ..= M/2 − 1`.
    pub fn modes(&self) -> std::ops::Range<i64> {
        let h = (self.size / 2) as i64;
        -h..h
    }
}

/// `F_θ(λ) = (λ − th 2θ)/(1 − λ th 2θ)`.
pub fn mobius_f(theta: Complex64, lambda: Complex64) -> Result<Complex64> {
    let p = ScalingParam::new(theta)?;
    let t = p.t();
    let den = 1.0 - lambda * t;
    if den.norm() < 1e-14 {
        return Err(Error::MobiusDomain(den.norm()));
    }
    Ok((lambda - t) / den)
}

/// `T(z) = 2(1 − z)`.
pub fn t_map(z: Complex64) -> Complex64 {
    2.0 * (1.0 - z)
}

pub fn t_inv(z: Complex64) -> Complex64 {
    1.0 - z / 2.0
}

/// `G_θ = T ∘ F_θ ∘ T⁻¹`.
pub fn map_g(theta: Complex64, z: Complex64) -> Result<Complex64> {
    Ok(t_map(mobius_f(theta, t_inv(z))?))
}

/// `T(F_θ(λ))` at the given points of `[−1, 1]`.
pub fn spectral_arc_at(theta: Complex64, lambdas: &[f64]) -> Result<Vec<Complex64>> {
    lambdas
        .iter()
        .map(|&l| {
            // the fixed points ±1 map to the thresholds exactly
            if l == 1.0 {
                Ok(Complex64::new(0.0, 0.0))
            } else if l == -1.0 {
                Ok(Complex64::new(4.0, 0.0))
            } else {
                Ok(t_map(mobius_f(theta, Complex64::new(l, 0.0))?))
            }
        })
        .collect()
}

/// Points of the spectral curve of the scaled free operator, `λ_j` uniform in `[−1, 1]`.
pub fn spectral_arc(theta: Complex64, samples: usize) -> Result<Vec<Complex64>> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two arc samples".into()));
    }
    let lambdas: Vec<f64> = (0..samples)
        .map(|j| if j == samples - 1 { 1.0 } else { -1.0 + 2.0 * j as f64 / (samples - 1) as f64 })
        .collect();
    spectral_arc_at(theta, &lambdas)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcReport {
    pub degenerate: bool,
    pub center: Option<Complex64>,
    pub radius: Option<f64>,
    pub max_deviation: f64,
    pub pass: bool,
}

pub const ARC_TOL: f64 = 1e-10;

fn circumcircle(a: Complex64, b: Complex64, c: Complex64) -> Option<(Complex64, f64)> {
    let (ab, ac) = (b - a, c - a);
    let cross = ab.re * ac.im - ab.im * ac.re;
    let scale = ab.norm() * ac.norm();
    if !(cross.abs() > 1e-12 * scale) {
        return None;
    }
    let (b2, c2) = (ab.norm_sqr(), ac.norm_sqr());
    let ux = (ac.im * b2 - ab.im * c2) / (2.0 * cross);
    let uy = (ab.re * c2 - ac.re * b2) / (2.0 * cross);
    let center = a + Complex64::new(ux, uy);
    Some((center, (a - center).norm()))
}

/// Fits the circle through the first, middle and last points and reports how far the
/// remaining points stray from it. Collinear input is reported as degenerate and fails.
pub fn arc_circle_check(points: &[Complex64]) -> Result<ArcReport> {
    if points.len() < 4 {
        return Err(Error::InvalidParameter(format!("need at least 4 points, got {}", points.len())));
    }
    let (a, b, c) = (points[0], points[points.len() / 2], points[points.len() - 1]);
    match circumcircle(a, b, c) {
        None => {
            let dir = (c - a) / (c - a).norm();
            let max_deviation = points.iter().map(|p| ((p - a) / dir).im.abs()).fold(0.0, f64::max);
            Ok(ArcReport { degenerate: true, center: None, radius: None, max_deviation, pass: false })
        }
        Some((center, radius)) => {
            let max_deviation = points.iter().map(|p| ((p - center).norm() - radius).abs()).fold(0.0, f64::max);
            Ok(ArcReport { degenerate: false, center: Some(center), radius: Some(radius), max_deviation, pass: max_deviation <= ARC_TOL })
        }
    }
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one_way = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Circle carrying the arc of `θ` (center, radius), or `None` when the arc is the segment `[0, 4]`.
fn arc_circle(theta: Complex64) -> Result<Option<(Complex64, f64, f64)>> {
    let p = t_map(mobius_f(theta, Complex64::new(0.0, 0.0))?);
    if p.im.abs() < 1e-14 {
        return Ok(None);
    }
    let y0 = (p.re * p.re - 4.0 * p.re + p.im * p.im) / (2.0 * p.im);
    let center = Complex64::new(2.0, y0);
    Ok(Some((center, center.norm(), p.im.signum())))
}

/// Distance from `z` to the spectral curve of the scaled free operator.
pub fn distance_to_arc(theta: Complex64, z: Complex64) -> Result<f64> {
    match arc_circle(theta)? {
        None => Ok(band_distance(z)),
        Some((center, radius, side)) => {
            let r = (z - center).norm();
            let projected = if r > 0.0 { center + (z - center) * (radius / r) } else { center + Complex64::new(0.0, side * radius) };
            if projected.im * side >= 0.0 {
                Ok((r - radius).abs())
            } else {
                Ok(z.norm().min((z - 4.0).norm()))
            }
        }
    }
}

/// True when `z` lies strictly inside the region swept between `[0, 4]` and the arc of `θ`.
pub fn in_swept_region(theta: Complex64, z: Complex64) -> Result<bool> {
    match arc_circle(theta)? {
        None => Ok(false),
        Some((center, radius, side)) => Ok(z.im * side > 0.0 && (z - center).norm() < radius),
    }
}

fn e_factor(theta: Complex64) -> Complex64 {
    (2.0 * theta).exp()
}

/// `e^{iφ_θ(α)} = (cos(α/2) + iE sin(α/2)) / (cos(α/2) − iE sin(α/2))` with `E = e^{2θ}`.
fn flow_exp(theta: Complex64, alpha: f64) -> Complex64 {
    let e = e_factor(theta);
    let (s, c) = (alpha / 2.0).sin_cos();
    let i = Complex64::i();
    (c + i * e * s) / (c - i * e * s)
}

fn check_angle(alpha: f64) -> Result<()> {
    if !(alpha > -PI - 1e-12 && alpha <= PI + 1e-12) {
        return Err(Error::InvalidParameter(format!("angle must lie in (-pi, pi], got {alpha}")));
    }
    Ok(())
}

/// Real flow `φ_θ(α)`: `cos φ = F_θ(cos α)` with the sign of `α`, written as
/// `tan(φ/2) = e^{2θ} tan(α/2)` so that it stays accurate near `α = 0, ±π`.
pub fn flow_phi(theta: f64, alpha: f64) -> Result<f64> {
    check_angle(alpha)?;
    let e = (2.0 * theta).exp();
    let (s, c) = (alpha / 2.0).sin_cos();
    Ok(2.0 * (e * s).atan2(c))
}

/// Analytic continuation of `φ_θ(α)` to complex `θ`, principal logarithm.
pub fn flow_phi_complex(theta: Complex64, alpha: f64) -> Result<Complex64> {
    check_angle(alpha)?;
    Ok(-Complex64::i() * flow_exp(theta, alpha).ln())
}

/// `∂φ_θ/∂α = E / (cos²(α/2) + E² sin²(α/2))`.
pub fn flow_jacobian(theta: f64, alpha: f64) -> Result<f64> {
    Ok(flow_jacobian_complex(Complex64::new(theta, 0.0), alpha)?.re)
}

pub fn flow_jacobian_complex(theta: Complex64, alpha: f64) -> Result<Complex64> {
    check_angle(alpha)?;
    let e = e_factor(theta);
    let (s, c) = (alpha / 2.0).sin_cos();
    Ok(e / (c * c + e * e * s * s))
}

/// `e^{−inφ_θ(α)}√J(α)/√(2π)`, the dilated basis vector `δ_n` on the torus.
fn dilated_sample(n: i64, theta: Complex64, alpha: f64, conj_phase: bool) -> Complex64 {
    let w = flow_exp(theta, alpha);
    let e = e_factor(theta);
    let (s, c) = (alpha / 2.0).sin_cos();
    let jac = e / (c * c + e * e * s * s);
    let phase = if conj_phase { w.powi(n as i32) } else { w.powi(-(n as i32)) };
    phase * jac.sqrt() / (2.0 * PI).sqrt()
}

fn alias_ratio(coeffs: &[Complex64], grid: &FourierGrid) -> f64 {
    let cut = (3 * grid.size() / 8) as i64;
    let total: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
    let tail: f64 = grid.modes().zip(coeffs).filter(|(m, _)| m.abs() >= cut).map(|(_, z)| z.norm_sqr()).sum();
    if total > 0.0 {
        (tail / total).sqrt()
    } else {
        0.0
    }
}

/// Lattice coefficients of `e^{iθA₀}δ_n`, indexed by `grid.modes()`.
pub fn dilated_delta(n: i64, theta: Complex64, grid: &FourierGrid) -> Result<Vec<Complex64>> {
    if theta.norm() >= CLASS_RADIUS {
        return Err(Error::InvalidParameter(format!("|theta| must be below {CLASS_RADIUS}, got {theta}")));
    }
    if n.unsigned_abs() as usize > grid.size() / 8 {
        return Err(Error::Aliasing { ratio: 1.0 });
    }
    let nodes = grid.nodes();
    let samples: Vec<Complex64> = nodes.iter().map(|&a| dilated_sample(n, theta, a, false)).collect();
    let h = 2.0 * PI / grid.size() as f64 / (2.0 * PI).sqrt();
    let coeffs: Vec<Complex64> = grid
        .modes()
        .map(|m| {
            nodes
                .iter()
                .zip(&samples)
                .map(|(&a, &psi)| Complex64::from_polar(1.0, m as f64 * a) * psi)
                .sum::<Complex64>()
                * h
        })
        .collect();
    let ratio = alias_ratio(&coeffs, grid);
    if !(ratio <= ALIAS_TOL) {
        return Err(Error::Aliasing { ratio });
    }
    Ok(coeffs)
}

/// `sup |Im φ_θ(α)|` over `|θ| = r` and the torus, sampled.
fn im_phi_sup(r: f64) -> f64 {
    let mut sup: f64 = 0.0;
    for j in 0..64 {
        let theta = Complex64::from_polar(r, 2.0 * PI * j as f64 / 64.0);
        for k in 0..512 {
            let alpha = -PI + 2.0 * PI * (k as f64 + 0.5) / 512.0;
            sup = sup.max(flow_exp(theta, alpha).norm().ln().abs());
        }
    }
    sup
}

/// Largest `R < min(1/2, π/8)` with `sup_{|θ|≤R} |Im φ_θ| ≤ γ/4`, by bisection.
pub fn growth_radius(gamma: f64) -> Result<f64> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let cap = CLASS_RADIUS.min(THETA_LIMIT) * (1.0 - 1e-9);
    if im_phi_sup(cap) <= gamma / 4.0 {
        return Ok(cap);
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if im_phi_sup(mid) <= gamma / 4.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub radius: f64,
    pub constant: f64,
    /// `(n, sup_θ ‖e^{iθA₀}δ_n‖, C e^{(γ/2)|n|})`.
    pub rows: Vec<(i64, f64, f64)>,
    pub pass: bool,
}

/// Checks `‖e^{iθA₀}δ_n‖ ≤ C e^{(γ/2)|n|}` for `|n| ≤ max_n` and `θ` on the circle of radius `R_γ`,
/// with `C = sup |J|^{1/2}`.
pub fn growth_check(gamma: f64, max_n: i64, grid: &FourierGrid) -> Result<GrowthCheck> {
    let radius = growth_radius(gamma)?;
    let thetas: Vec<Complex64> = (0..16).map(|j| Complex64::from_polar(radius, 2.0 * PI * j as f64 / 16.0)).collect();
    let mut constant: f64 = 0.0;
    for &theta in &thetas {
        for a in grid.nodes() {
            constant = constant.max(flow_jacobian_complex(theta, a)?.norm().sqrt());
        }
    }
    let mut rows = Vec::new();
    let mut pass = true;
    for n in 0..=max_n {
        let mut sup: f64 = 0.0;
        for &theta in &thetas {
            let v = dilated_delta(n, theta, grid)?;
            sup = sup.max(v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
        }
        let bound = constant * (0.5 * gamma * n as f64).exp();
        pass &= sup <= bound;
        rows.push((n, sup, bound));
    }
    Ok(GrowthCheck { radius, constant, rows, pass })
}

fn scalar_factors(spec: &PerturbationSpec) -> Result<(Complex64, Complex64)> {
    spec.gamma_factors
        .as_scalar()
        .ok_or_else(|| Error::Unsupported("complex scaling needs scalar gamma factors".into()))
}

/// Scaled operator `G_θ(f)⊗I_d + Σ μ₁μ₂ |e^{iθA₀}δ_n⟩⟨e^{iθ̄A₀}δ_m| ⊗ Λ₁w(n,m)Λ₂` discretized by
/// Nyström quadrature on the grid; index `k·d + a` for node `k` and fiber component `a`.
pub fn build_scaled_operator(spec: &PerturbationSpec, theta: Complex64, grid: &FourierGrid) -> Result<ComplexMatrix> {
    spec.validate()?;
    let (mu1, mu2) = scalar_factors(spec)?;
    let Kernel::Entries(entries) = &spec.kernel else {
        return Err(Error::Unsupported("complex scaling needs a finitely supported kernel".into()));
    };
    ScalingParam::for_class(theta, CLASS_RADIUS)?;
    let d = spec.fiber_dim;
    let m = grid.size();
    let nodes = grid.nodes();
    let mut h = ComplexMatrix::zeros(m * d, m * d);
    for (k, &a) in nodes.iter().enumerate() {
        let g = map_g(theta, Complex64::new(fourier_symbol(a), 0.0))?;
        for f in 0..d {
            h[(k * d + f, k * d + f)] = g;
        }
    }
    let weight = Complex64::new(2.0 * PI / m as f64, 0.0) * mu1 * mu2;
    for (&(n, mm), w) in entries {
        if n.unsigned_abs().max(mm.unsigned_abs()) as usize > m / 8 {
            return Err(Error::Aliasing { ratio: 1.0 });
        }
        let block = &spec.lambda1 * w * &spec.lambda2;
        if block.iter().all(|z| *z == matrix::ZERO) {
            continue;
        }
        let u: Vec<Complex64> = nodes.iter().map(|&a| dilated_sample(n, theta, a, false)).collect();
        let v: Vec<Complex64> = nodes.iter().map(|&a| dilated_sample(mm, theta, a, true)).collect();
        for k in 0..m {
            for j in 0..m {
                let s = weight * u[k] * v[j];
                for a in 0..d {
                    for b in 0..d {
                        h[(k * d + a, j * d + b)] += s * block[(a, b)];
                    }
                }
            }
        }
    }
    matrix::ensure_finite(h, "scaled operator")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledSpectrum {
    pub theta: Complex64,
    pub grid: usize,
    pub arc: Vec<Complex64>,
    pub eigenvalues: Vec<Complex64>,
    pub discrete: Vec<Complex64>,
    /// Minimum distance to the arc for an eigenvalue to count as discrete.
    pub threshold: f64,
}

/// Eigenvalues of the scaled operator, split into the discretized arc and the discrete points
/// farther from the arc than ten grid spacings.
pub fn scaled_spectrum(spec: &PerturbationSpec, theta: Complex64, grid: &FourierGrid) -> Result<ScaledSpectrum> {
    let h = build_scaled_operator(spec, theta, grid)?;
    let eigenvalues = eig_oracle::eigs(&h)?;
    let half = grid.size() / 2;
    let arc: Vec<Complex64> = (0..=half)
        .map(|k| map_g(theta, Complex64::new(fourier_symbol(PI * k as f64 / half as f64), 0.0)))
        .collect::<Result<_>>()?;
    let spacing = arc.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max);
    let threshold = 10.0 * spacing;
    let mut discrete = Vec::new();
    for &z in &eigenvalues {
        if distance_to_arc(theta, z)? > threshold {
            discrete.push(z);
        }
    }
    Ok(ScaledSpectrum { theta, grid: grid.size(), arc, eigenvalues, discrete, threshold })
}

/// Whether a resonance record should appear as a discrete eigenvalue of the scaled operator at `θ`.
///
/// Physical-sheet points are eigenvalues of `H_V` and stay visible outside the swept region;
/// second-sheet points become visible inside it when they are reached by continuing across
/// `(0, 4)` from the half plane opposite to the arc.
pub fn revealed(theta: Complex64, record: &ResonanceRecord) -> Result<bool> {
    let z = record.energy;
    let inside = in_swept_region(theta, z)?;
    Ok(match record.sheet {
        Sheet::Physical => !inside && band_distance(z) > 0.0,
        Sheet::Nonphysical => {
            let side = theta.im.signum();
            let re = record.lambda.re;
            inside
                && match record.threshold {
                    Threshold::Zero => re * side < 0.0,
                    Threshold::Four => re * side > 0.0,
                }
        }
    })
}
