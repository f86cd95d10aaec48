//! Small dense linear-algebra kernel: products, Cholesky solves and right
//! pseudoinverses of wide full-row-rank matrices.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::{lit, Scalar};

// Below this many multiply-adds a product runs on the calling thread.
const PAR_THRESHOLD: usize = 1 << 20;

/// Relative pivot tolerance of [`solve_spd`].
pub const PIVOT_TOL: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-10;

/// `a · b`.
pub fn matmul<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            detail: format!("{}x{} times {}x{}", a.rows(), a.cols(), b.rows(), b.cols()),
        });
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![T::zero(); m * n];
    let row_kernel = |(i, dst): (usize, &mut [T])| {
        for (p, &aip) in a.row(i).iter().enumerate() {
            if aip == T::zero() {
                continue;
            }
            for (d, bv) in dst.iter_mut().zip(b.row(p)) {
                *d += aip * *bv;
            }
        }
    };
    if m * k * n >= PAR_THRESHOLD {
        out.par_chunks_mut(n).enumerate().for_each(row_kernel);
    } else {
        out.chunks_mut(n).enumerate().for_each(row_kernel);
    }
    DenseMatrix::new(m, n, out)
}

/// `aᵀ · b` without materializing `aᵀ`.
pub fn matmul_transpose_a<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch {
            op: "matmul_transpose_a",
            detail: format!(
                "({}x{})ᵀ times {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            ),
        });
    }
    let (k, m, n) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![T::zero(); m * n];
    let row_kernel = |(j, dst): (usize, &mut [T])| {
        for p in 0..k {
            let apj = a.get(p, j);
            if apj == T::zero() {
                continue;
            }
            for (d, bv) in dst.iter_mut().zip(b.row(p)) {
                *d += apj * *bv;
            }
        }
    };
    if m * k * n >= PAR_THRESHOLD {
        out.par_chunks_mut(n).enumerate().for_each(row_kernel);
    } else {
        out.chunks_mut(n).enumerate().for_each(row_kernel);
    }
    DenseMatrix::new(m, n, out)
}

/// `a · aᵀ`, exactly symmetric.
pub fn gram<T: Scalar>(a: &DenseMatrix<T>) -> DenseMatrix<T> {
    let m = a.rows();
    let dot =
        |i: usize, j: usize| -> T { a.row(i).iter().zip(a.row(j)).map(|(p, q)| *p * *q).sum() };
    let mut g = vec![T::zero(); m * m];
    let fill = |(i, dst): (usize, &mut [T])| {
        for (j, d) in dst.iter_mut().enumerate().take(i + 1) {
            *d = dot(i, j);
        }
    };
    if m * m * a.cols() >= PAR_THRESHOLD {
        g.par_chunks_mut(m).enumerate().for_each(fill);
    } else {
        g.chunks_mut(m).enumerate().for_each(fill);
    }
    for i in 0..m {
        for j in i + 1..m {
            g[i * m + j] = g[j * m + i];
        }
    }
    DenseMatrix::new(m, m, g).expect("gram of a valid matrix")
}

/// Lower-triangular Cholesky factor `L` with `g = L Lᵀ`.
fn cholesky<T: Scalar>(g: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let n = g.rows();
    let max_diag = (0..n).fold(T::zero(), |m, i| m.max(g.get(i, i).abs()));
    let tol = lit::<T>(PIVOT_TOL) * max_diag;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let lj = l.row(j)[..j].to_vec();
        let d = g.get(j, j) - lj.iter().map(|v| *v * *v).sum::<T>();
        if !(d > tol) {
            return Err(Error::SingularGram {
                row: j,
                pivot: d.to_f64_lossy(),
            });
        }
        let djj = d.sqrt();
        l.set(j, j, djj);
        for i in j + 1..n {
            let s: T = l.row(i)[..j].iter().zip(&lj).map(|(p, q)| *p * *q).sum();
            l.set(i, j, (g.get(i, j) - s) / djj);
        }
    }
    Ok(l)
}

/// Solves `g · S = rhs` for symmetric positive definite `g` via Cholesky.
///
/// A pivot at or below `1e-12 · max diag(g)` is reported as
/// [`Error::SingularGram`].
pub fn solve_spd<T: Scalar>(g: &DenseMatrix<T>, rhs: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let n = g.rows();
    if g.cols() != n || rhs.rows() != n {
        return Err(Error::DimensionMismatch {
            op: "solve_spd",
            detail: format!(
                "system {}x{} with right-hand side {}x{}",
                g.rows(),
                g.cols(),
                rhs.rows(),
                rhs.cols()
            ),
        });
    }
    let scale = g.max_abs();
    let sym_tol = lit::<T>(SYMMETRY_TOL) * scale;
    for i in 0..n {
        for j in 0..i {
            if (g.get(i, j) - g.get(j, i)).abs() > sym_tol {
                return Err(Error::DimensionMismatch {
                    op: "solve_spd",
                    detail: format!("matrix is not symmetric at ({i}, {j})"),
                });
            }
        }
    }
    let l = cholesky(g)?;
    let p = rhs.cols();
    let mut s = rhs.clone();
    // Forward: L Z = rhs, row by row over all right-hand sides at once.
    for i in 0..n {
        for k in 0..i {
            let lik = l.get(i, k);
            if lik == T::zero() {
                continue;
            }
            let (head, tail) = s.data_mut().split_at_mut(i * p);
            let src = &head[k * p..(k + 1) * p];
            for (d, v) in tail[..p].iter_mut().zip(src) {
                *d -= lik * *v;
            }
        }
        let lii = l.get(i, i);
        for v in &mut s.data_mut()[i * p..(i + 1) * p] {
            *v /= lii;
        }
    }
    // Backward: Lᵀ S = Z.
    for i in (0..n).rev() {
        for k in i + 1..n {
            let lki = l.get(k, i);
            if lki == T::zero() {
                continue;
            }
            let (head, tail) = s.data_mut().split_at_mut(k * p);
            let src = &tail[..p];
            for (d, v) in head[i * p..(i + 1) * p].iter_mut().zip(src) {
                *d -= lki * *v;
            }
        }
        let lii = l.get(i, i);
        for v in &mut s.data_mut()[i * p..(i + 1) * p] {
            *v /= lii;
        }
    }
    Ok(s)
}

/// Right pseudoinverse `A† = Aᵀ (A Aᵀ)⁻¹` of a wide, full-row-rank matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoInverse<T> {
    source_dims: (usize, usize),
    pinv: DenseMatrix<T>,
}

impl<T: Scalar> PseudoInverse<T> {
    /// Dimensions `(m, n)` of the matrix this was computed from.
    pub fn source_dims(&self) -> (usize, usize) {
        self.source_dims
    }

    /// The `n × m` pseudoinverse.
    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.pinv
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.pinv
    }
}

/// Computes `Aᵀ · solve_spd(A Aᵀ, I)`.
pub fn right_pinv<T: Scalar>(a: &DenseMatrix<T>) -> Result<PseudoInverse<T>> {
    if a.rows() > a.cols() {
        return Err(Error::NotWide {
            index: 0,
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let g = gram(a);
    let ginv = solve_spd(&g, &DenseMatrix::identity(a.rows()))?;
    let pinv = matmul_transpose_a(a, &ginv)?;
    Ok(PseudoInverse {
        source_dims: a.dims(),
        pinv,
    })
}
