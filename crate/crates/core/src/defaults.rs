//! Default numerical parameters, in one place.
//!
//! | name | value | meaning |
//! |------|-------|---------|
//! | `WINDOW_HALF_WIDTH` | 200 | lattice window `{-N..N}` |
//! | `GRID_SIZE` | 1024 | Fourier grid for complex scaling |
//! | `CONTOUR_NODES` | 256 | quadrature nodes per contour |
//! | `MIN_SEP` | 1e-4 | cell diameter at which localization stops |
//! | `EPSILON0` | 0.25 | continuation radius in `λ` |
//! | `DELTA_BAND` | 1e-3 | distance from `[0,4]` below which eigenvalues count as band artifacts |
//! | `EPSILON_LADDER` | 1e-1 … 1e-4 | imaginary parts for the absorption check |

pub const WINDOW_HALF_WIDTH: usize = 200;
pub const GRID_SIZE: usize = 1024;
pub const CONTOUR_NODES: usize = 256;
pub const MIN_SEP: f64 = 1e-4;
pub const EPSILON0: f64 = 0.25;
pub const DELTA_BAND: f64 = 1e-3;
pub const SCAN_SECTORS: usize = 8;
pub const DRIFT_TOL: f64 = 1e-6;
pub const LAP_GROWTH_TOL: f64 = 0.05;
pub const LAP_CONDITION_LIMIT: f64 = 1e10;

/// `1e-1, 5e-2, …` halving down to (at least) `1e-4`.
pub fn epsilon_ladder() -> Vec<f64> {
    let mut out: Vec<f64> = vec![1e-1];
    while *out.last().unwrap() > 1e-4 * (1.0 + 1e-12) {
        let next: f64 = (out.last().unwrap() / 2.0_f64).max(1e-4);
        out.push(next);
    }
    out
}
