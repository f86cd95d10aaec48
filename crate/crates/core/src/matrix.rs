//! Dense row-major matrices and Kronecker products.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default ceiling on the number of elements [`kron_chain`] will materialize.
pub const DEFAULT_KRON_CAP: usize = 100_000_000;

/// Dense real matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape {
                shape: vec![rows, cols],
            });
        }
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                len: data.len(),
                expected: rows * cols,
                shape: vec![rows, cols],
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix extents must be positive");
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    op: "from_rows",
                    detail: format!("row {i} has {} entries, expected {cols}", r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data).expect("extents must be positive")
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self.get(r, c));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data: out,
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm_sq(&self) -> T {
        self.data.iter().map(|v| *v * *v).sum()
    }

    /// Elementwise `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                op: "sub",
                detail: format!("{:?} vs {:?}", self.dims(), other.dims()),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| *a - *b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Converts every entry to another scalar type.
    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|v| U::from_f64_lossy(v.to_f64_lossy()))
                .collect(),
        }
    }
}

fn checked_dims<T>(mats: &[&DenseMatrix<T>]) -> (u128, u128) {
    mats.iter().fold((1u128, 1u128), |(r, c), m| {
        (r * m.rows as u128, c * m.cols as u128)
    })
}

/// Kronecker product `a ⊗ b` with the default element cap.
pub fn kronecker<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    kronecker_capped(a, b, DEFAULT_KRON_CAP)
}

/// Kronecker product `a ⊗ b`; block `(i, j)` of the result is `a[i][j] * b`.
pub fn kronecker_capped<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    cap: usize,
) -> Result<DenseMatrix<T>> {
    check_cap(&[a, b], cap)?;
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut data = vec![T::zero(); rows * cols];
    for ar in 0..a.rows {
        for br in 0..b.rows {
            let out_row = &mut data[(ar * b.rows + br) * cols..(ar * b.rows + br + 1) * cols];
            let brow = b.row(br);
            for ac in 0..a.cols {
                let s = a.get(ar, ac);
                let dst = &mut out_row[ac * b.cols..(ac + 1) * b.cols];
                for (d, v) in dst.iter_mut().zip(brow) {
                    *d = s * *v;
                }
            }
        }
    }
    Ok(DenseMatrix { rows, cols, data })
}

fn check_cap<T>(mats: &[&DenseMatrix<T>], cap: usize) -> Result<()> {
    let (rows, cols) = checked_dims(mats);
    let elements = rows * cols;
    if elements > cap as u128 {
        return Err(Error::CapExceeded {
            rows,
            cols,
            elements,
            cap,
        });
    }
    Ok(())
}

/// `m[0] ⊗ m[1] ⊗ … ⊗ m[D-1]`, folded left to right, with the default cap.
pub fn kron_chain<T: Scalar>(mats: &[DenseMatrix<T>]) -> Result<DenseMatrix<T>> {
    kron_chain_capped(mats, DEFAULT_KRON_CAP)
}

/// Like [`kron_chain`] but with an explicit element cap. The cap is checked
/// against the final size before anything is allocated.
pub fn kron_chain_capped<T: Scalar>(mats: &[DenseMatrix<T>], cap: usize) -> Result<DenseMatrix<T>> {
    let (first, rest) = mats.split_first().ok_or(Error::DimensionMismatch {
        op: "kron_chain",
        detail: "empty matrix list".into(),
    })?;
    let refs: Vec<&DenseMatrix<T>> = mats.iter().collect();
    check_cap(&refs, cap)?;
    rest.iter()
        .try_fold(first.clone(), |acc, m| kronecker_capped(&acc, m, cap))
}
