//! Perturbation data `V = (Γ₁⊗Λ₁) W (Γ₂⊗Λ₂)` and its JSON document form.
//!
//! Complex numbers are `[re, im]` pairs everywhere. Fiber matrices (`lambda1`,
//! `lambda2`, kernel blocks `w`) are flat row-major lists of `d²` pairs.
//! Diagonal lattice multipliers are either two centered sequences
//! `{"g1": [...], "g2": [...]}` of odd length `2K+1` holding `g(-K..=K)`
//! (constant extension beyond the ends), or `{"scalar": [mu1, mu2]}`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeWindow;
use crate::matrix::{ComplexMatrix, ONE};

/// Diagonal multipliers `Γ₁`, `Γ₂` in the site basis.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaFactors {
    Sequences { g1: Vec<Complex64>, g2: Vec<Complex64> },
    Scalar { mu1: Complex64, mu2: Complex64 },
}

impl GammaFactors {
    pub fn identity() -> Self {
        GammaFactors::Scalar { mu1: ONE, mu2: ONE }
    }

    fn sample(seq: &[Complex64], n: i64) -> Complex64 {
        let half = (seq.len() / 2) as i64;
        let idx = (n.clamp(-half, half) + half) as usize;
        seq[idx]
    }

    pub fn g1(&self, n: i64) -> Complex64 {
        match self {
            GammaFactors::Sequences { g1, .. } => Self::sample(g1, n),
            GammaFactors::Scalar { mu1, .. } => *mu1,
        }
    }

    pub fn g2(&self, n: i64) -> Complex64 {
        match self {
            GammaFactors::Sequences { g2, .. } => Self::sample(g2, n),
            GammaFactors::Scalar { mu2, .. } => *mu2,
        }
    }

    pub fn as_scalar(&self) -> Option<(Complex64, Complex64)> {
        match self {
            GammaFactors::Scalar { mu1, mu2 } => Some((*mu1, *mu2)),
            GammaFactors::Sequences { .. } => None,
        }
    }

    /// `sup_n |g(n)|` for each factor.
    pub fn sup_norms(&self) -> (f64, f64) {
        match self {
            GammaFactors::Sequences { g1, g2 } => (
                g1.iter().map(|z| z.norm()).fold(0.0, f64::max),
                g2.iter().map(|z| z.norm()).fold(0.0, f64::max),
            ),
            GammaFactors::Scalar { mu1, mu2 } => (mu1.norm(), mu2.norm()),
        }
    }
}

/// Lattice kernel `w(n, m)`, each value a `d × d` block.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// Finitely supported kernel, keyed by `(n, m)`.
    Entries(BTreeMap<(i64, i64), ComplexMatrix>),
    /// `w(n, m) = amplitude · e^{-rate(|n|+|m|)} · I_d` on all of `ℤ²`.
    ExpDecay { amplitude: Complex64, rate: f64 },
}

impl Kernel {
    pub fn single(n: i64, m: i64, w: ComplexMatrix) -> Self {
        let mut map = BTreeMap::new();
        map.insert((n, m), w);
        Kernel::Entries(map)
    }

    pub fn zero() -> Self {
        Kernel::Entries(BTreeMap::new())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub gamma: f64,
    pub bound: f64,
    pub fiber_dim: usize,
    pub gamma_factors: GammaFactors,
    pub lambda1: ComplexMatrix,
    pub lambda2: ComplexMatrix,
    pub kernel: Kernel,
}

pub(crate) fn abs_sum(n: i64, m: i64) -> f64 {
    n.unsigned_abs() as f64 + m.unsigned_abs() as f64
}

impl PerturbationSpec {
    /// Scalar (`d = 1`) spec with `Γ = Λ = I` and the given finitely supported kernel.
    pub fn scalar(gamma: f64, bound: f64, entries: &[(i64, i64, Complex64)]) -> Self {
        let mut map = BTreeMap::new();
        for &(n, m, w) in entries {
            map.insert((n, m), ComplexMatrix::from_element(1, 1, w));
        }
        PerturbationSpec {
            gamma,
            bound,
            fiber_dim: 1,
            gamma_factors: GammaFactors::identity(),
            lambda1: ComplexMatrix::identity(1, 1),
            lambda2: ComplexMatrix::identity(1, 1),
            kernel: Kernel::Entries(map),
        }
    }

    /// On-site rank-one coupling `c |δ₀⟩⟨δ₀|` with `d = 1`.
    pub fn rank_one(coupling: Complex64, gamma: f64) -> Self {
        Self::scalar(gamma, coupling.norm().max(f64::MIN_POSITIVE), &[(0, 0, coupling)])
    }

    /// Kernel blocks `w(n, m)` for all `(n, m)` inside the window, in canonical order.
    pub fn kernel_on(&self, window: &LatticeWindow) -> Vec<(i64, i64, ComplexMatrix)> {
        let half = window.half_width() as i64;
        let d = self.fiber_dim;
        match &self.kernel {
            Kernel::Entries(map) => map
                .iter()
                .filter(|((n, m), _)| n.abs() <= half && m.abs() <= half)
                .map(|(&(n, m), w)| (n, m, w.clone()))
                .collect(),
            Kernel::ExpDecay { amplitude, rate } => {
                let mut out = Vec::with_capacity(window.sites() * window.sites());
                for n in -half..=half {
                    for m in -half..=half {
                        let s = amplitude * (-rate * abs_sum(n, m)).exp();
                        if s.norm() == 0.0 {
                            continue;
                        }
                        out.push((n, m, ComplexMatrix::identity(d, d) * s));
                    }
                }
                out
            }
        }
    }

    /// `Λ₂Λ₁`, the fiber factor of the sandwiched operators.
    pub fn fiber_product(&self) -> ComplexMatrix {
        &self.lambda2 * &self.lambda1
    }

    /// Kernel of `-V_J = -J V J` restricted to the window:
    /// `w(n, m) ↦ -(-1)^{|n|+|m|} w(n, m)`. Γ and Λ are unchanged since J commutes with them.
    pub fn j_conjugate_negated(&self, window: &LatticeWindow) -> PerturbationSpec {
        let mut map = BTreeMap::new();
        for (n, m, w) in self.kernel_on(window) {
            let sign = if (n.unsigned_abs() + m.unsigned_abs()) % 2 == 0 { -1.0 } else { 1.0 };
            map.insert((n, m), w * Complex64::new(sign, 0.0));
        }
        PerturbationSpec { kernel: Kernel::Entries(map), ..self.clone() }
    }

    /// Lattice sites carrying at least one nonzero kernel row or column inside the window.
    pub fn active_sites(&self, window: &LatticeWindow) -> Vec<i64> {
        let mut sites: Vec<i64> = self
            .kernel_on(window)
            .into_iter()
            .filter(|(_, _, w)| w.iter().any(|z| *z != Complex64::new(0.0, 0.0)))
            .flat_map(|(n, m, _)| [n, m])
            .collect();
        sites.sort_unstable();
        sites.dedup();
        sites
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpecDoc = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SpecDoc::from(self))?)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let d = self.fiber_dim;
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::Spec(format!("gamma must be positive and finite, got {}", self.gamma)));
        }
        if !(self.bound.is_finite() && self.bound > 0.0) {
            return Err(Error::Spec(format!("C must be positive and finite, got {}", self.bound)));
        }
        if d == 0 {
            return Err(Error::Spec("fiber_dim must be at least 1".into()));
        }
        for (name, m) in [("lambda1", &self.lambda1), ("lambda2", &self.lambda2)] {
            if m.shape() != (d, d) {
                return Err(Error::Spec(format!("{name} must be {d}x{d}")));
            }
            if !crate::matrix::is_finite(m) {
                return Err(Error::Spec(format!("{name} has non-finite entries")));
            }
        }
        if let GammaFactors::Sequences { g1, g2 } = &self.gamma_factors {
            for (name, g) in [("g1", g1), ("g2", g2)] {
                if g.is_empty() || g.len() % 2 == 0 {
                    return Err(Error::Spec(format!("{name} must have odd length 2K+1")));
                }
                if g.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return Err(Error::Spec(format!("{name} has non-finite entries")));
                }
            }
        }
        match &self.kernel {
            Kernel::Entries(map) => {
                for ((n, m), w) in map {
                    if w.shape() != (d, d) {
                        return Err(Error::Spec(format!("w({n},{m}) must be {d}x{d}")));
                    }
                    if !crate::matrix::is_finite(w) {
                        return Err(Error::Spec(format!("w({n},{m}) has non-finite entries")));
                    }
                }
            }
            Kernel::ExpDecay { amplitude, rate } => {
                if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
                    return Err(Error::Spec("amplitude must be finite".into()));
                }
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::Spec(format!("rate must be positive and finite, got {rate}")));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON document

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum ComplexValue {
    Pair([f64; 2]),
    Real(f64),
}

impl From<ComplexValue> for Complex64 {
    fn from(v: ComplexValue) -> Self {
        match v {
            ComplexValue::Pair([re, im]) => Complex64::new(re, im),
            ComplexValue::Real(re) => Complex64::new(re, 0.0),
        }
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    gamma: f64,
    #[serde(rename = "C")]
    bound: f64,
    fiber_dim: usize,
    gamma_factors: GammaFactorsDoc,
    lambda1: Vec<[f64; 2]>,
    lambda2: Vec<[f64; 2]>,
    kernel: KernelDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum GammaFactorsDoc {
    Scalar {
        scalar: [ComplexValue; 2],
    },
    Sequences {
        g1: Vec<ComplexValue>,
        g2: Vec<ComplexValue>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum KernelDoc {
    Entries(Vec<EntryDoc>),
    Form(FormDoc),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDoc {
    n: i64,
    m: i64,
    w: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KernelForm {
    ExpDecay,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormDoc {
    form: KernelForm,
    amplitude: ComplexValue,
    rate: f64,
}

fn square_from_pairs(name: &str, pairs: &[[f64; 2]], d: usize) -> Result<ComplexMatrix> {
    let expected = d
        .checked_mul(d)
        .ok_or_else(|| Error::Spec(format!("fiber_dim {d} is too large")))?;
    if pairs.len() != expected {
        return Err(Error::Spec(format!("{name} must hold {expected} complex entries, got {}", pairs.len())));
    }
    Ok(ComplexMatrix::from_row_iterator(d, d, pairs.iter().map(|&[re, im]| Complex64::new(re, im))))
}

fn pairs_from_square(m: &ComplexMatrix) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(pair(m[(i, j)]));
        }
    }
    out
}

impl TryFrom<SpecDoc> for PerturbationSpec {
    type Error = Error;

    fn try_from(doc: SpecDoc) -> Result<Self> {
        let d = doc.fiber_dim;
        let lambda1 = square_from_pairs("lambda1", &doc.lambda1, d)?;
        let lambda2 = square_from_pairs("lambda2", &doc.lambda2, d)?;
        let gamma_factors = match doc.gamma_factors {
            GammaFactorsDoc::Scalar { scalar: [a, b] } => GammaFactors::Scalar { mu1: a.into(), mu2: b.into() },
            GammaFactorsDoc::Sequences { g1, g2 } => GammaFactors::Sequences {
                g1: g1.into_iter().map(Into::into).collect(),
                g2: g2.into_iter().map(Into::into).collect(),
            },
        };
        let kernel = match doc.kernel {
            KernelDoc::Entries(entries) => {
                let mut map = BTreeMap::new();
                for e in entries {
                    let w = square_from_pairs(&format!("w({},{})", e.n, e.m), &e.w, d)?;
                    if map.insert((e.n, e.m), w).is_some() {
                        return Err(Error::Spec(format!("duplicate kernel entry ({}, {})", e.n, e.m)));
                    }
                }
                Kernel::Entries(map)
            }
            KernelDoc::Form(f) => match f.form {
                KernelForm::ExpDecay => Kernel::ExpDecay { amplitude: f.amplitude.into(), rate: f.rate },
            },
        };
        let spec = PerturbationSpec {
            gamma: doc.gamma,
            bound: doc.bound,
            fiber_dim: d,
            gamma_factors,
            lambda1,
            lambda2,
            kernel,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<&PerturbationSpec> for SpecDoc {
    fn from(spec: &PerturbationSpec) -> Self {
        let gamma_factors = match &spec.gamma_factors {
            GammaFactors::Scalar { mu1, mu2 } => GammaFactorsDoc::Scalar {
                scalar: [ComplexValue::Pair(pair(*mu1)), ComplexValue::Pair(pair(*mu2))],
            },
            GammaFactors::Sequences { g1, g2 } => GammaFactorsDoc::Sequences {
                g1: g1.iter().map(|z| ComplexValue::Pair(pair(*z))).collect(),
                g2: g2.iter().map(|z| ComplexValue::Pair(pair(*z))).collect(),
            },
        };
        let kernel = match &spec.kernel {
            Kernel::Entries(map) => KernelDoc::Entries(
                map.iter()
                    .map(|(&(n, m), w)| EntryDoc { n, m, w: pairs_from_square(w) })
                    .collect(),
            ),
            Kernel::ExpDecay { amplitude, rate } => KernelDoc::Form(FormDoc {
                form: KernelForm::ExpDecay,
                amplitude: ComplexValue::Pair(pair(*amplitude)),
                rate: *rate,
            }),
        };
        SpecDoc {
            gamma: spec.gamma,
            bound: spec.bound,
            fiber_dim: spec.fiber_dim,
            gamma_factors,
            lambda1: pairs_from_square(&spec.lambda1),
            lambda2: pairs_from_square(&spec.lambda2),
            kernel,
        }
    }
}
