//! Dense complex matrix plumbing shared by every module.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_finite(m: ComplexMatrix, what: &str) -> Result<ComplexMatrix> {
    if is_finite(&m) {
        Ok(m)
    } else {
        Err(Error::Numerical(format!("{what} produced non-finite entries")))
    }
}

pub fn ensure_square(m: &ComplexMatrix, dim: usize) -> Result<()> {
    if m.nrows() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: m.nrows() });
    }
    if m.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: m.ncols() });
    }
    Ok(())
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |a - b| / max |b|`, the normwise relative difference in the max-entry norm.
pub fn max_relative_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let scale = max_abs(b);
    let diff = a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numerical_rank(m: &ComplexMatrix, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        Some(&top) if top > 0.0 => sv.iter().filter(|&&s| s > rel_tol * top).count(),
        _ => 0,
    }
}

pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub(crate) fn to_faer(m: &ComplexMatrix) -> faer::Mat<faer::c64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub(crate) fn from_faer(m: faer::MatRef<'_, faer::c64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_with_identity_is_block_diagonal() {
        let a = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 1.0)]);
        let k = kron(&a, &ComplexMatrix::identity(2, 2));
        assert_eq!(k.shape(), (4, 4));
        assert_eq!(k[(0, 2)], c(2.0, 0.0));
        assert_eq!(k[(1, 3)], c(2.0, 0.0));
        assert_eq!(k[(0, 3)], ZERO);
        assert_eq!(k[(3, 3)], c(4.0, 1.0));
    }

    #[test]
    fn rank_of_outer_product() {
        let u = nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.5, 0.5), c(-2.0, 0.0)]);
        let m = &u * u.transpose();
        assert_eq!(numerical_rank(&m, 1e-10), 1);
        assert_eq!(numerical_rank(&ComplexMatrix::zeros(3, 3), 1e-10), 0);
    }

    #[test]
    fn faer_round_trip() {
        let m = ComplexMatrix::from_fn(3, 2, |i, j| c(i as f64, j as f64));
        assert_eq!(from_faer(to_faer(&m).as_ref()), m);
    }
}
