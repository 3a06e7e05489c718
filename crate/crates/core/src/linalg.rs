//! Dense helpers shared by the model and solver modules.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative eigenvalue floor applied before any inverse or square root of a
/// Gram-type matrix.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Largest absolute difference between `m` and its transpose.
pub fn asymmetry(m: &RMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Symmetric Toeplitz matrix whose first column is `col`.
pub fn symmetric_toeplitz(col: &[f64]) -> RMatrix {
    let n = col.len();
    RMatrix::from_fn(n, n, |i, j| col[i.abs_diff(j)])
}

/// Eigendecomposition of a real symmetric matrix with eigenvalues sorted in
/// descending order and each eigenvector's first nonzero entry made positive.
pub fn sym_eigen_desc(m: &RMatrix) -> (RVector, RMatrix) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let values = RVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let mut vectors = RMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let scale = col.amax().max(f64::MIN_POSITIVE);
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-12 * scale) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Clamp eigenvalues below `EIGEN_FLOOR * max` up to that floor.
pub fn clamp_eigenvalues(values: &mut RVector) {
    let max = values.iter().cloned().fold(0.0_f64, f64::max);
    let floor = EIGEN_FLOOR * max;
    for v in values.iter_mut() {
        if *v < floor {
            *v = floor;
        }
    }
}

/// Symmetric square root of a PSD matrix after the eigenvalue floor.
pub fn psd_sqrt(m: &RMatrix) -> Result<RMatrix> {
    let asym = asymmetry(m);
    if asym > 1e-9 * m.amax().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let (mut values, vectors) = sym_eigen_desc(m);
    clamp_eigenvalues(&mut values);
    let roots = values.map(libm::sqrt);
    Ok(&vectors * RMatrix::from_diagonal(&roots) * vectors.transpose())
}

/// `vec(Sᵀ)`: the rows of `s` concatenated into one column.
pub fn vec_rows(s: &CMatrix) -> CVector {
    let (rows, cols) = s.shape();
    CVector::from_fn(rows * cols, |idx, _| s[(idx / cols, idx % cols)])
}

/// Inverse of [`vec_rows`].
pub fn unvec_rows(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |r, c| v[r * cols + c])
}

/// `[Re v; Im v]`.
pub fn real_stack(v: &CVector) -> RVector {
    let n = v.len();
    RVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Inverse of [`real_stack`].
pub fn complex_unstack(x: &RVector) -> CVector {
    let n = x.len() / 2;
    CVector::from_fn(n, |i, _| Complex64::new(x[i], x[i + n]))
}

/// Real part of a complex matrix.
pub fn re(m: &CMatrix) -> RMatrix {
    m.map(|z| z.re)
}

/// Imaginary part of a complex matrix.
pub fn im(m: &CMatrix) -> RMatrix {
    m.map(|z| z.im)
}

/// Promote a real matrix to complex.
pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Real `2n x 2n` representation `[[Re M, -Im M], [Im M, Re M]]` of a complex
/// matrix, so that `real_stack(M v) = rep * real_stack(v)`.
pub fn real_representation(m: &CMatrix) -> RMatrix {
    let (r, c) = m.shape();
    let mut out = RMatrix::zeros(2 * r, 2 * c);
    for j in 0..c {
        for i in 0..r {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + c)] = -z.im;
            out[(i + r, j)] = z.im;
            out[(i + r, j + c)] = z.re;
        }
    }
    out
}

/// Block-diagonal matrix with `count` copies of `block`.
pub fn block_diag_repeat(block: &RMatrix, count: usize) -> RMatrix {
    let (r, c) = block.shape();
    let mut out = RMatrix::zeros(r * count, c * count);
    for k in 0..count {
        out.view_mut((k * r, k * c), (r, c)).copy_from(block);
    }
    out
}

/// One circularly-symmetric complex Gaussian draw with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = libm::sqrt(var / 2.0);
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Matrix of i.i.d. `CN(0, var)` entries, filled column by column.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    var: f64,
) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(rng, var);
        }
    }
    m
}

/// Hermitian inner product `aᴴ b`.
pub fn cdot(a: &CVector, b: &CVector) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Squared Frobenius norm of a complex matrix.
pub fn frob2(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}
