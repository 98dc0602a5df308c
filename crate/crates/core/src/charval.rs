//! Characteristic values of matrix-valued analytic families: contour indices
//! `(1/2πi) Tr ∮ F′F⁻¹ dλ`, determinant winding, and localization by recursive quadrisection
//! of annular sectors.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::birman_schwinger::{BsVariant, ReducedFamily};
use crate::error::{Error, Result};
use crate::free_resolvent::{Sheet, Threshold, FORMULA_REACH};
use crate::lattice::{verify_assumption, LatticeWindow};
use crate::matrix::{ComplexMatrix, I};
use crate::spec::PerturbationSpec;

/// Nodes with `‖F‖₁‖F⁻¹‖₁` above this are treated as hitting a characteristic value.
pub const COND_LIMIT: f64 = 1e12;
/// Largest distance from the nearest integer accepted for an index.
pub const RESIDUAL_TOL: f64 = 1e-6;
pub const MIN_NODES: usize = 16;
pub const MAX_NODES: usize = 4096;

/// A matrix-valued function analytic on the region of interest, with its derivative.
pub trait AnalyticFamily: Sync {
    fn dim(&self) -> usize;
    fn value(&self, lambda: Complex64) -> Result<ComplexMatrix>;
    fn derivative(&self, lambda: Complex64) -> Result<ComplexMatrix>;
}

/// Family given by two closures.
pub struct FnFamily<F, G> {
    dim: usize,
    f: F,
    fprime: G,
}

impl<F, G> FnFamily<F, G>
where
    F: Fn(Complex64) -> ComplexMatrix + Sync,
    G: Fn(Complex64) -> ComplexMatrix + Sync,
{
    pub fn new(dim: usize, f: F, fprime: G) -> Self {
        FnFamily { dim, f, fprime }
    }
}

impl<F, G> AnalyticFamily for FnFamily<F, G>
where
    F: Fn(Complex64) -> ComplexMatrix + Sync,
    G: Fn(Complex64) -> ComplexMatrix + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, lambda: Complex64) -> Result<ComplexMatrix> {
        Ok((self.f)(lambda))
    }

    fn derivative(&self, lambda: Complex64) -> Result<ComplexMatrix> {
        Ok((self.fprime)(lambda))
    }
}

/// Quadrature node on a closed path: point and the weight `dλ` it carries.
#[derive(Debug, Clone, Copy)]
pub struct QuadNode {
    pub z: Complex64,
    pub dz: Complex64,
}

/// A positively oriented closed path with a quadrature rule. Nodes come in path order.
pub trait ClosedPath: Sync {
    fn nodes(&self, count: usize) -> Vec<QuadNode>;
}

/// Positively oriented circle, discretized by the trapezoidal rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub center: Complex64,
    pub radius: f64,
    pub nodes: usize,
}

impl Contour {
    pub fn new(center: Complex64, radius: f64, nodes: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!("contour radius must be positive, got {radius}")));
        }
        if nodes < MIN_NODES {
            return Err(Error::InvalidParameter(format!("contour needs at least {MIN_NODES} nodes, got {nodes}")));
        }
        Ok(Contour { center, radius, nodes })
    }
}

impl ClosedPath for Contour {
    fn nodes(&self, count: usize) -> Vec<QuadNode> {
        let h = 2.0 * PI / count as f64;
        (0..count)
            .map(|k| {
                let e = Complex64::from_polar(1.0, k as f64 * h);
                QuadNode { z: self.center + self.radius * e, dz: I * self.radius * e * h }
            })
            .collect()
    }
}

/// `{center + ρe^{iθ} : r_inner ≤ ρ ≤ r_outer, θ0 ≤ θ ≤ θ1}`, boundary traversed with
/// Gauss–Legendre rules on each of its four edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnularSector {
    pub center: Complex64,
    pub r_inner: f64,
    pub r_outer: f64,
    pub theta0: f64,
    pub theta1: f64,
}

fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut pairs = GaussLegendre::new(n.max(2)).expect("degree at least 2").into_node_weight_pairs();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

impl AnnularSector {
    pub fn new(center: Complex64, r_inner: f64, r_outer: f64, theta0: f64, theta1: f64) -> Result<Self> {
        if !(r_inner >= 0.0 && r_outer > r_inner && r_outer.is_finite()) {
            return Err(Error::InvalidParameter(format!("need 0 <= r_inner < r_outer, got {r_inner}, {r_outer}")));
        }
        if !(theta1 > theta0 && theta1 - theta0 <= 2.0 * PI + 1e-12) {
            return Err(Error::InvalidParameter(format!("need theta0 < theta1 <= theta0 + 2pi, got {theta0}, {theta1}")));
        }
        Ok(AnnularSector { center, r_inner, r_outer, theta0, theta1 })
    }

    /// Upper bound on the diameter.
    pub fn diameter(&self) -> f64 {
        (self.r_outer - self.r_inner) + self.r_outer * (self.theta1 - self.theta0).min(PI)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let w = z - self.center;
        let r = w.norm();
        if r < self.r_inner || r > self.r_outer {
            return false;
        }
        let mut a = w.arg();
        while a < self.theta0 {
            a += 2.0 * PI;
        }
        while a > self.theta0 + 2.0 * PI {
            a -= 2.0 * PI;
        }
        a <= self.theta1
    }

    /// Four children from cutting at `r_inner + fr·Δr` and `θ0 + fa·Δθ`.
    pub fn split(&self, fr: f64, fa: f64) -> [AnnularSector; 4] {
        let rm = self.r_inner + fr * (self.r_outer - self.r_inner);
        let tm = self.theta0 + fa * (self.theta1 - self.theta0);
        let mk = |r0, r1, t0, t1| AnnularSector { center: self.center, r_inner: r0, r_outer: r1, theta0: t0, theta1: t1 };
        [
            mk(self.r_inner, rm, self.theta0, tm),
            mk(self.r_inner, rm, tm, self.theta1),
            mk(rm, self.r_outer, self.theta0, tm),
            mk(rm, self.r_outer, tm, self.theta1),
        ]
    }

    fn arc(&self, r: f64, from: f64, to: f64, rule: &[(f64, f64)], out: &mut Vec<QuadNode>) {
        let mid = 0.5 * (from + to);
        let half = 0.5 * (to - from);
        for &(x, w) in rule {
            let e = Complex64::from_polar(1.0, mid + half * x);
            out.push(QuadNode { z: self.center + r * e, dz: I * r * e * (w * half) });
        }
    }

    fn ray(&self, theta: f64, from: f64, to: f64, rule: &[(f64, f64)], out: &mut Vec<QuadNode>) {
        let mid = 0.5 * (from + to);
        let half = 0.5 * (to - from);
        let e = Complex64::from_polar(1.0, theta);
        for &(x, w) in rule {
            out.push(QuadNode { z: self.center + (mid + half * x) * e, dz: e * (w * half) });
        }
    }
}

impl ClosedPath for AnnularSector {
    fn nodes(&self, count: usize) -> Vec<QuadNode> {
        let rule = gauss_legendre(count / 4);
        let mut out = Vec::with_capacity(4 * rule.len());
        self.arc(self.r_outer, self.theta0, self.theta1, &rule, &mut out);
        self.ray(self.theta1, self.r_outer, self.r_inner, &rule, &mut out);
        if self.r_inner > 0.0 {
            self.arc(self.r_inner, self.theta1, self.theta0, &rule, &mut out);
        }
        self.ray(self.theta0, self.r_inner, self.r_outer, &rule, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexResult {
    pub raw: Complex64,
    pub count: i64,
    pub residual: f64,
    pub nodes: usize,
    /// `(1/2πi) Tr ∮ λF′F⁻¹ dλ`, the sum of enclosed characteristic values weighted by multiplicity.
    pub moment: Complex64,
}

impl IndexResult {
    fn from_raw(raw: Complex64, moment: Complex64, nodes: usize) -> Self {
        let count = raw.re.round() as i64;
        IndexResult { raw, count, residual: (raw - Complex64::new(count as f64, 0.0)).norm(), nodes, moment }
    }

    pub fn accepted(&self) -> bool {
        self.residual <= RESIDUAL_TOL
    }
}

struct NodeValue {
    trace: Complex64,
    phase: Complex64,
}

fn norm1(m: &ComplexMatrix) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn evaluate<F: AnalyticFamily + ?Sized>(f: &F, z: Complex64) -> Result<NodeValue> {
    let n = f.dim();
    if n == 0 {
        return Ok(NodeValue { trace: Complex64::new(0.0, 0.0), phase: Complex64::new(1.0, 0.0) });
    }
    let fm = f.value(z)?;
    let fp = f.derivative(z)?;
    crate::matrix::ensure_square(&fm, n)?;
    crate::matrix::ensure_square(&fp, n)?;
    let lu = fm.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::ContourHitsValue { point: z, condition: f64::INFINITY })?;
    let condition = norm1(&fm) * norm1(&inv);
    if !(condition < COND_LIMIT) {
        return Err(Error::ContourHitsValue { point: z, condition });
    }
    let mut trace = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            trace += inv[(i, j)] * fp[(j, i)];
        }
    }
    let mut phase = Complex64::new(lu.p().determinant::<f64>(), 0.0);
    for i in 0..n {
        let u = lu.u()[(i, i)];
        phase *= u / u.norm();
    }
    Ok(NodeValue { trace, phase })
}

fn evaluate_path<F: AnalyticFamily + ?Sized, P: ClosedPath + ?Sized>(f: &F, path: &P, count: usize) -> Result<(Vec<QuadNode>, Vec<NodeValue>)> {
    let nodes = path.nodes(count);
    let values = nodes.par_iter().map(|q| evaluate(f, q.z)).collect::<Result<Vec<_>>>()?;
    Ok((nodes, values))
}

fn trace_sum(nodes: &[QuadNode], values: &[NodeValue]) -> IndexResult {
    let mut raw = Complex64::new(0.0, 0.0);
    let mut moment = Complex64::new(0.0, 0.0);
    for (q, v) in nodes.iter().zip(values) {
        raw += q.dz * v.trace;
        moment += q.z * q.dz * v.trace;
    }
    let scale = 1.0 / (2.0 * PI * I);
    IndexResult::from_raw(raw * scale, moment * scale, nodes.len())
}

fn winding_sum(nodes: &[QuadNode], values: &[NodeValue]) -> Result<IndexResult> {
    let mut total = 0.0;
    for k in 0..values.len() {
        let next = &values[(k + 1) % values.len()];
        let jump = (next.phase / values[k].phase).arg();
        if jump.abs() > PI / 2.0 {
            return Err(Error::InsufficientResolution { jump: jump.abs(), nodes: nodes.len() });
        }
        total += jump;
    }
    let raw = Complex64::new(total / (2.0 * PI), 0.0);
    Ok(IndexResult::from_raw(raw, Complex64::new(f64::NAN, f64::NAN), nodes.len()))
}

/// Quadrature of `(1/2πi) Tr ∮ F′F⁻¹ dλ` with the given node count; no refinement.
pub fn index_trace<F: AnalyticFamily + ?Sized, P: ClosedPath + ?Sized>(f: &F, path: &P, nodes: usize) -> Result<IndexResult> {
    let (q, v) = evaluate_path(f, path, nodes)?;
    Ok(trace_sum(&q, &v))
}

/// Winding number of `det F` around 0 along the path; no refinement.
pub fn index_winding<F: AnalyticFamily + ?Sized, P: ClosedPath + ?Sized>(f: &F, path: &P, nodes: usize) -> Result<IndexResult> {
    let (q, v) = evaluate_path(f, path, nodes)?;
    winding_sum(&q, &v)
}

/// Trace index, doubling nodes until it is integral and agrees with the determinant winding.
pub fn index_adaptive<F: AnalyticFamily + ?Sized, P: ClosedPath + ?Sized>(f: &F, path: &P, nodes: usize) -> Result<IndexResult> {
    let mut count = nodes.max(MIN_NODES);
    loop {
        let (q, v) = evaluate_path(f, path, count)?;
        let tr = trace_sum(&q, &v);
        let agrees = matches!(winding_sum(&q, &v), Ok(w) if w.count == tr.count);
        if tr.accepted() && agrees {
            return Ok(tr);
        }
        if count >= MAX_NODES {
            return Err(Error::NonIntegralIndex { raw: tr.raw, residual: tr.residual, nodes: count });
        }
        count = (count * 2).min(MAX_NODES);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocateOptions {
    pub nodes: usize,
    pub min_sep: f64,
}

impl Default for LocateOptions {
    fn default() -> Self {
        LocateOptions { nodes: crate::defaults::CONTOUR_NODES, min_sep: crate::defaults::MIN_SEP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharValue {
    pub lambda: Complex64,
    pub multiplicity: usize,
    /// More than one count inside a cell of diameter `min_sep`; `lambda` is then the centroid.
    pub cluster: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub cell: AnnularSector,
    pub depth: usize,
    pub index: i64,
    pub residual: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Located {
    pub values: Vec<CharValue>,
    pub cells: Vec<CellRecord>,
    pub total_index: i64,
}

const SPLITS: [f64; 6] = [0.5, 0.47, 0.53, 0.44, 0.56, 0.41];
const MAX_DEPTH: usize = 64;

fn retryable(e: &Error) -> bool {
    matches!(e, Error::ContourHitsValue { .. } | Error::NonIntegralIndex { .. } | Error::InsufficientResolution { .. })
}

fn refine<F: AnalyticFamily + ?Sized>(
    f: &F,
    cell: AnnularSector,
    idx: IndexResult,
    depth: usize,
    opts: &LocateOptions,
    out: &mut Located,
) -> Result<()> {
    out.cells.push(CellRecord { cell, depth, index: idx.count, residual: idx.residual, nodes: idx.nodes });
    if idx.count == 0 {
        return Ok(());
    }
    if idx.count < 0 {
        return Err(Error::Numerical(format!(
            "cell {cell:?} has index {} (a pole of F inside the region)",
            idx.count
        )));
    }
    if cell.diameter() <= opts.min_sep || depth >= MAX_DEPTH {
        let m = idx.count as usize;
        let lambda = polish(f, idx.moment / m as f64, idx.count, cell.diameter(), opts.nodes);
        out.values.push(CharValue { lambda, multiplicity: m, cluster: m > 1 });
        return Ok(());
    }
    let mut last_err = None;
    for &s in &SPLITS {
        let children = cell.split(s, s);
        let results: Vec<Result<IndexResult>> = children.par_iter().map(|c| index_adaptive(f, c, opts.nodes)).collect();
        match results.into_iter().collect::<Result<Vec<_>>>() {
            Ok(indices) => {
                let sum: i64 = indices.iter().map(|r| r.count).sum();
                if sum != idx.count {
                    last_err = Some(Error::Numerical(format!(
                        "subdivision of {cell:?} not conservative: parent {} vs children {sum}",
                        idx.count
                    )));
                    continue;
                }
                for (c, r) in children.into_iter().zip(indices) {
                    refine(f, c, r, depth + 1, opts, out)?;
                }
                return Ok(());
            }
            Err(e) if retryable(&e) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one split attempted"))
}

/// Re-centres a circle of radius `radius` on the current estimate and takes its first moment,
/// which is far more accurate than the one from a sector whose edge passes close to the value.
fn polish<F: AnalyticFamily + ?Sized>(f: &F, estimate: Complex64, count: i64, radius: f64, nodes: usize) -> Complex64 {
    let mut z = estimate;
    for _ in 0..2 {
        let Ok(circle) = Contour::new(z, radius, nodes.max(MIN_NODES)) else { break };
        match index_adaptive(f, &circle, nodes) {
            Ok(r) if r.count == count => z = r.moment / count as f64,
            _ => break,
        }
    }
    z
}

fn canonical_order(values: &mut [CharValue]) {
    values.sort_by(|a, b| {
        a.lambda
            .norm()
            .total_cmp(&b.lambda.norm())
            .then(a.lambda.arg().total_cmp(&b.lambda.arg()))
    });
}

/// Characteristic values inside the union of the given cells, with multiplicities.
pub fn locate_in_cells<F: AnalyticFamily + ?Sized>(f: &F, cells: &[AnnularSector], opts: &LocateOptions) -> Result<Located> {
    if !(opts.min_sep.is_finite() && opts.min_sep > 0.0) {
        return Err(Error::InvalidParameter(format!("min_sep must be positive, got {}", opts.min_sep)));
    }
    if opts.nodes < MIN_NODES {
        return Err(Error::InvalidParameter(format!("at least {MIN_NODES} nodes required")));
    }
    let top = cells.par_iter().map(|c| index_adaptive(f, c, opts.nodes)).collect::<Result<Vec<_>>>()?;
    let mut out = Located { values: Vec::new(), cells: Vec::new(), total_index: top.iter().map(|r| r.count).sum() };
    for (c, r) in cells.iter().zip(top) {
        refine(f, *c, r, 0, opts, &mut out)?;
    }
    canonical_order(&mut out.values);
    Ok(out)
}

/// Annulus `r_min ≤ |λ − center| ≤ r_max`, the punctured region scanned for characteristic values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub center: Complex64,
    pub r_min: f64,
    pub r_max: f64,
}

impl Annulus {
    pub fn new(center: Complex64, r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_min < r_max && r_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("need 0 < r_min < r_max, got {r_min}, {r_max}")));
        }
        Ok(Annulus { center, r_min, r_max })
    }

    /// The annulus cut into `sectors` equal sectors starting at angle `rotation`.
    pub fn cells(&self, sectors: usize, rotation: f64) -> Result<Vec<AnnularSector>> {
        if sectors == 0 {
            return Err(Error::InvalidParameter("need at least one sector".into()));
        }
        let h = 2.0 * PI / sectors as f64;
        (0..sectors)
            .map(|k| AnnularSector::new(self.center, self.r_min, self.r_max, rotation + k as f64 * h, rotation + (k + 1) as f64 * h))
            .collect()
    }
}

/// Characteristic values inside an annulus. When a sector boundary runs through a value the
/// decomposition is rotated and the radii nudged by a relative `1e-7` before giving up.
pub fn locate_characteristic_values<F: AnalyticFamily + ?Sized>(
    f: &F,
    region: &Annulus,
    sectors: usize,
    opts: &LocateOptions,
) -> Result<Located> {
    let mut last_err = None;
    for attempt in 0..4 {
        let nudge = 1e-7 * attempt as f64;
        let nudged = Annulus { r_min: region.r_min * (1.0 - nudge), r_max: region.r_max * (1.0 + nudge), ..*region };
        let cells = nudged.cells(sectors, 0.0731 * attempt as f64)?;
        match locate_in_cells(f, &cells, opts) {
            Ok(found) => return Ok(found),
            Err(e) if retryable(&e) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub nodes: usize,
    pub min_sep: f64,
    /// Largest admissible `r_max`; the small-disk regime uses ε₀, validation runs may go up to just below 2.
    pub continuation_radius: f64,
    pub sectors: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            nodes: crate::defaults::CONTOUR_NODES,
            min_sep: crate::defaults::MIN_SEP,
            continuation_radius: crate::defaults::EPSILON0,
            sectors: crate::defaults::SCAN_SECTORS,
        }
    }
}

impl ScanOptions {
    /// Options for scanning an enlarged annulus, as used to validate against eigenvalues far from the thresholds.
    pub fn enlarged(radius: f64) -> Self {
        ScanOptions { continuation_radius: radius, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRecord {
    pub lambda: Complex64,
    pub energy: Complex64,
    pub threshold: Threshold,
    pub multiplicity: usize,
    pub sheet: Sheet,
    pub cluster: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub records: Vec<ResonanceRecord>,
    pub cells: Vec<CellRecord>,
    pub total_index: i64,
    /// Lattice sites carrying the perturbation, on which `I + T` was evaluated.
    pub support_sites: Vec<i64>,
}

/// Characteristic values of `λ ↦ I + T(λ)` in `r_min ≤ |λ| ≤ r_max` at the given threshold.
pub fn resonance_scan(
    spec: &PerturbationSpec,
    threshold: Threshold,
    r_min: f64,
    r_max: f64,
    window: &LatticeWindow,
    opts: &ScanOptions,
) -> Result<ScanReport> {
    if !(opts.continuation_radius > 0.0 && opts.continuation_radius < FORMULA_REACH) {
        return Err(Error::InvalidParameter(format!(
            "continuation radius must lie in (0, {FORMULA_REACH}), got {}",
            opts.continuation_radius
        )));
    }
    if !(r_min > 0.0 && r_min < r_max) {
        return Err(Error::InvalidParameter(format!("need 0 < r_min < r_max, got {r_min}, {r_max}")));
    }
    if r_max > opts.continuation_radius {
        return Err(Error::OutsideContinuation { point: Complex64::new(r_max, 0.0), radius: opts.continuation_radius });
    }
    let report = verify_assumption(spec);
    if !report.pass {
        return Err(match report.worst_pair {
            Some((n, m)) => Error::AssumptionViolation { n, m, norm: report.decay_sup, bound: report.bound },
            None => Error::InvalidParameter(report.failures.join("; ")),
        });
    }
    let family = ReducedFamily::new(spec, BsVariant::for_threshold(threshold), window)?;
    let locate = LocateOptions { nodes: opts.nodes, min_sep: opts.min_sep };

    let region = Annulus::new(Complex64::new(0.0, 0.0), r_min, r_max)?;
    let found = locate_characteristic_values(&family, &region, opts.sectors, &locate)?;
    let records = found
        .values
        .iter()
        .map(|v| ResonanceRecord {
            lambda: v.lambda,
            energy: threshold.energy(v.lambda),
            threshold,
            multiplicity: v.multiplicity,
            sheet: Sheet::of(v.lambda),
            cluster: v.cluster,
        })
        .collect();
    Ok(ScanReport { records, cells: found.cells, total_index: found.total_index, support_sites: family.sites().to_vec() })
}
