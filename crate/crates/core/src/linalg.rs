//! Complex dense linear algebra shared by the simulator.
//!
//! Thin wrappers over `nalgebra` that pin down the conventions the rest of
//! the crate relies on: descending singular values, a deterministic phase
//! for every singular vector, full left bases for rank-deficient or wide
//! inputs, and a left inverse that reports when it had to fall back to the
//! pseudo-inverse.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative singular-value floor below which a matrix is treated as rank deficient.
pub const RANK_TOL: f64 = 1e-12;

/// Above this size the largest Hermitian eigenvalue comes from power iteration.
const DENSE_EIGEN_LIMIT: usize = 512;

/// Matrix with i.i.d. circularly-symmetric standard complex Gaussian entries.
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let mut out = CMat::zeros(rows, cols);
    for z in out.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *z = C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2);
    }
    out
}

/// Projection of a complex number onto the unit circle, with the angle of zero taken as zero.
#[inline]
pub fn unit_phase(z: C64) -> C64 {
    C64::from_polar(1.0, z.arg())
}

/// Column-major vectorization.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn diag_of(theta: &CVec) -> CMat {
    CMat::from_diagonal(theta)
}

/// Rotates each column of `u` so its largest-magnitude entry is real and
/// positive, applying the same rotation to the matching column of `v`.
fn fix_phases(u: &mut CMat, mut v: Option<&mut CMat>) {
    for j in 0..u.ncols() {
        let mut best = 0;
        let mut best_mag = -1.0;
        for i in 0..u.nrows() {
            let mag = u[(i, j)].norm();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        if best_mag <= 0.0 {
            continue;
        }
        let rot = (u[(best, j)] / best_mag).conj();
        for i in 0..u.nrows() {
            u[(i, j)] *= rot;
        }
        // Exact zero imaginary part on the pivot keeps the convention bit-stable.
        u[(best, j)] = C64::new(u[(best, j)].norm(), 0.0);
        if let Some(v) = v.as_deref_mut() {
            for i in 0..v.nrows() {
                v[(i, j)] *= rot;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LeftSvd {
    /// Square unitary matrix of left singular vectors, ordered by descending singular value.
    pub u: CMat,
    /// The `min(rows, cols)` singular values, descending.
    pub singular: Vec<f64>,
}

/// Full left singular basis of `a`, including the left null space when `a` is tall.
pub fn full_left_svd(a: &CMat) -> LeftSvd {
    let (rows, cols) = a.shape();
    let padded = if cols < rows {
        let mut p = CMat::zeros(rows, rows);
        p.columns_mut(0, cols).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = SVD::new(padded, true, false);
    let mut u = svd.u.expect("left vectors requested");
    let singular: Vec<f64> = svd.singular_values.iter().take(rows.min(cols)).copied().collect();
    fix_phases(&mut u, None);
    LeftSvd { u, singular }
}

#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: CMat,
    pub singular: Vec<f64>,
    /// Right singular vectors as columns (not the adjoint).
    pub v: CMat,
}

/// Economy SVD `a = u diag(singular) vᴴ` with the crate's ordering and phase conventions.
pub fn thin_svd(a: &CMat) -> ThinSvd {
    let svd = SVD::new(a.clone(), true, true);
    let mut u = svd.u.expect("left vectors requested");
    let mut v = svd.v_t.expect("right vectors requested").adjoint();
    fix_phases(&mut u, Some(&mut v));
    ThinSvd {
        u,
        singular: svd.singular_values.iter().copied().collect(),
        v,
    }
}

#[derive(Debug, Clone)]
pub struct LeftInverse {
    pub matrix: CMat,
    /// True when `BᴴB` was singular and the pseudo-inverse was used instead.
    pub fallback: bool,
}

/// `(BᴴB)⁻¹Bᴴ` for a tall full-column-rank `b`, otherwise its pseudo-inverse.
pub fn left_inverse(b: &CMat) -> LeftInverse {
    let sv = b.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let full_rank = b.ncols() <= b.nrows() && max > 0.0 && min > RANK_TOL * max;
    if full_rank {
        let bh = b.adjoint();
        if let Some(chol) = (&bh * b).cholesky() {
            return LeftInverse {
                matrix: chol.solve(&bh),
                fallback: false,
            };
        }
    }
    let eps = (RANK_TOL * max).max(f64::MIN_POSITIVE);
    let matrix = SVD::new(b.clone(), true, true)
        .pseudo_inverse(eps)
        .unwrap_or_else(|_| CMat::zeros(b.ncols(), b.nrows()));
    LeftInverse {
        matrix,
        fallback: true,
    }
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn largest_eigenvalue(h: &CMat) -> f64 {
    if h.nrows() == 0 {
        return 0.0;
    }
    if h.nrows() <= DENSE_EIGEN_LIMIT {
        SymmetricEigen::new(h.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        power_iteration(h, 1e-12, 100_000)
    }
}

/// Dominant eigenvalue of a positive semidefinite Hermitian matrix by power
/// iteration with a Rayleigh-quotient stopping rule.
pub fn power_iteration(h: &CMat, rel_tol: f64, max_iter: usize) -> f64 {
    let n = h.nrows();
    if n == 0 {
        return 0.0;
    }
    // Deterministic start with a mild ramp so it is not orthogonal to a flat eigenvector.
    let mut v = CVec::from_fn(n, |i, _| C64::new(1.0 + i as f64 / n as f64, 0.0));
    v /= C64::new(v.norm(), 0.0);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = h * &v;
        let next = v.dotc(&w).re;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / C64::new(norm, 0.0);
        if (next - lambda).abs() <= rel_tol * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Exponential correlation Toeplitz matrix `[R]_ij = rho^|i-j|`.
pub fn exponential_correlation(n: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| rho.powi((i as i32 - j as i32).abs()))
}

/// Symmetric square root of a real symmetric positive semidefinite matrix.
pub fn symmetric_sqrt(r: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(r.clone());
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

pub fn to_complex(r: &DMatrix<f64>) -> CMat {
    r.map(|x| C64::new(x, 0.0))
}

/// Sum with pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
