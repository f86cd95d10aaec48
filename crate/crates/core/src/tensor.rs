//! Dense D-dimensional tensors and the multilinear operations on them.
//!
//! Storage is lexicographic with the last index varying fastest. With that
//! order, `vec(X ×₀ A₀ ×₁ A₁ … ×_{D-1} A_{D-1}) = (A₀ ⊗ A₁ ⊗ … ⊗ A_{D-1}) vec(X)`.
//!
//! Mode indices are zero-based throughout: mode `d` addresses extent `shape[d]`.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// Dense real tensor with an explicit shape.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

fn validate_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::InvalidShape {
            shape: shape.to_vec(),
        });
    }
    Ok(shape.iter().product())
}

impl<T: Scalar> DenseTensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let expected = validate_shape(&shape)?;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                len: data.len(),
                expected,
                shape,
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let n = validate_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); n],
        })
    }

    /// Inverse of [`DenseTensor::vectorize`].
    pub fn tensorize(v: Vec<T>, shape: &[usize]) -> Result<Self> {
        Self::new(shape.to_vec(), v)
    }

    /// Views a matrix as an order-2 tensor.
    pub fn from_matrix(m: DenseMatrix<T>) -> Self {
        let shape = vec![m.rows(), m.cols()];
        Self {
            shape,
            data: m.into_data(),
        }
    }

    /// Reinterprets an order-2 tensor as a matrix.
    pub fn into_matrix(self) -> Result<DenseMatrix<T>> {
        match self.shape[..] {
            [r, c] => DenseMatrix::new(r, c, self.data),
            _ => Err(Error::DimensionMismatch {
                op: "into_matrix",
                detail: format!("tensor of shape {:?} is not order 2", self.shape),
            }),
        }
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Entries in storage order (last index fastest).
    pub fn vectorize(&self) -> Vec<T> {
        self.data.clone()
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Same data under a different shape of equal size.
    pub fn reshape(self, shape: &[usize]) -> Result<Self> {
        Self::new(shape.to_vec(), self.data)
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index order mismatch");
        index.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| {
            assert!(i < n, "index {i} out of bounds for extent {n}");
            acc * n + i
        })
    }

    pub fn get(&self, index: &[usize]) -> T {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], v: T) {
        let o = self.offset(index);
        self.data[o] = v;
    }

    pub fn frobenius_norm_sq(&self) -> T {
        self.data.iter().map(|v| *v * *v).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.frobenius_norm_sq().sqrt()
    }

    /// Number of entries with `|value| > tol`.
    pub fn count_nonzero(&self, tol: T) -> usize {
        self.data.iter().filter(|v| v.abs() > tol).count()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch {
                op,
                detail: format!("{:?} vs {:?}", self.shape, other.shape),
            });
        }
        Ok(())
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| *a - *b)
                .collect(),
        })
    }

    /// `alpha * self + beta * other`.
    pub fn lin_comb(&self, alpha: T, other: &Self, beta: T) -> Result<Self> {
        self.check_same_shape(other, "lin_comb")?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| alpha * *a + beta * *b)
                .collect(),
        })
    }

    /// In-place `self -= alpha * other`.
    pub fn sub_scaled_assign(&mut self, alpha: T, other: &Self) -> Result<()> {
        self.check_same_shape(other, "sub_scaled_assign")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= alpha * *b;
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> DenseTensor<U> {
        DenseTensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .map(|v| U::from_f64_lossy(v.to_f64_lossy()))
                .collect(),
        }
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// Splits the shape around `mode` into (outer, extent, inner) block sizes.
    fn mode_blocks(&self, mode: usize) -> (usize, usize, usize) {
        let outer = self.shape[..mode].iter().product();
        let inner = self.shape[mode + 1..].iter().product();
        (outer, self.shape[mode], inner)
    }

    /// Mode-`mode` unfolding `X_(mode)`.
    ///
    /// Row `r` holds every entry whose `mode` index equals `r`; columns run
    /// lexicographically over the remaining indices, last index fastest.
    pub fn mode_matricize(&self, mode: usize) -> Result<DenseMatrix<T>> {
        self.check_mode(mode)?;
        let (outer, n, inner) = self.mode_blocks(mode);
        let cols = outer * inner;
        let mut out = vec![T::zero(); n * cols];
        for o in 0..outer {
            for j in 0..n {
                let src = &self.data[(o * n + j) * inner..(o * n + j + 1) * inner];
                out[j * cols + o * inner..j * cols + (o + 1) * inner].copy_from_slice(src);
            }
        }
        DenseMatrix::new(n, cols, out)
    }

    /// Inverse of [`DenseTensor::mode_matricize`].
    pub fn mode_fold(m: &DenseMatrix<T>, mode: usize, shape: &[usize]) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        t.check_mode(mode)?;
        let (outer, n, inner) = t.mode_blocks(mode);
        if m.rows() != n || m.cols() != outer * inner {
            return Err(Error::DimensionMismatch {
                op: "mode_fold",
                detail: format!(
                    "matrix is {}x{}, shape {:?} needs {}x{} in mode {mode}",
                    m.rows(),
                    m.cols(),
                    shape,
                    n,
                    outer * inner
                ),
            });
        }
        let cols = outer * inner;
        let src = m.data();
        for o in 0..outer {
            for j in 0..n {
                t.data[(o * n + j) * inner..(o * n + j + 1) * inner]
                    .copy_from_slice(&src[j * cols + o * inner..j * cols + (o + 1) * inner]);
            }
        }
        Ok(t)
    }

    /// Mode product `X ×_mode A`: replaces extent `shape[mode]` by `a.rows()`
    /// with `y[.., i, ..] = Σ_j a[i, j] · x[.., j, ..]`.
    pub fn mode_product(&self, a: &DenseMatrix<T>, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let (outer, n, inner) = self.mode_blocks(mode);
        if a.cols() != n {
            return Err(Error::DimensionMismatch {
                op: "mode_product",
                detail: format!(
                    "matrix has {} columns but mode {mode} has extent {n}",
                    a.cols()
                ),
            });
        }
        let m = a.rows();
        let mut shape = self.shape.clone();
        shape[mode] = m;
        let mut out = vec![T::zero(); outer * m * inner];
        let x = &self.data;
        if inner == 1 {
            for o in 0..outer {
                let xs = &x[o * n..(o + 1) * n];
                for i in 0..m {
                    out[o * m + i] = a.row(i).iter().zip(xs).map(|(p, q)| *p * *q).sum();
                }
            }
        } else {
            for o in 0..outer {
                for i in 0..m {
                    let dst = &mut out[(o * m + i) * inner..(o * m + i + 1) * inner];
                    for (j, &aij) in a.row(i).iter().enumerate() {
                        if aij == T::zero() {
                            continue;
                        }
                        let src = &x[(o * n + j) * inner..(o * n + j + 1) * inner];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += aij * *s;
                        }
                    }
                }
            }
        }
        Ok(Self { shape, data: out })
    }

    /// `X ×₀ A₀ ×₁ A₁ … ×_{D-1} A_{D-1}`, applied in increasing mode order.
    pub fn multi_mode_product<'a, I>(&self, dicts: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a DenseMatrix<T>>,
    {
        let mut count = 0;
        let mut acc: Option<Self> = None;
        for (mode, a) in dicts.into_iter().enumerate() {
            let cur = acc.as_ref().unwrap_or(self);
            acc = Some(cur.mode_product(a, mode)?);
            count += 1;
        }
        if count != self.order() {
            return Err(Error::DimensionMismatch {
                op: "multi_mode_product",
                detail: format!(
                    "{count} matrices supplied for a tensor of order {}",
                    self.order()
                ),
            });
        }
        Ok(acc.expect("order is at least 1"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(shape: &[usize]) -> DenseTensor<f64> {
        let n: usize = shape.iter().product();
        DenseTensor::new(shape.to_vec(), (0..n).map(|v| v as f64).collect()).unwrap()
    }

    // Deterministic pseudo-random fill for oracle comparisons.
    fn filled(shape: &[usize], salt: u64) -> DenseTensor<f64> {
        let n: usize = shape.iter().product();
        let mut s = salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let data = (0..n)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s % 20_001) as f64 / 10_000.0 - 1.0
            })
            .collect();
        DenseTensor::new(shape.to_vec(), data).unwrap()
    }

    fn mat(rows: usize, cols: usize, salt: u64) -> DenseMatrix<f64> {
        filled(&[rows, cols], salt).into_matrix().unwrap()
    }

    #[test]
    fn matricize_matrix_modes() {
        let t = seq(&[2, 3]);
        let m0 = t.mode_matricize(0).unwrap();
        assert_eq!(m0, DenseMatrix::new(2, 3, t.data().to_vec()).unwrap());
        let m1 = t.mode_matricize(1).unwrap();
        assert_eq!(m1, m0.transpose());
    }

    #[test]
    fn matricize_last_mode_index_map() {
        let t = seq(&[2, 2, 2]);
        let m = t.mode_matricize(2).unwrap();
        assert_eq!(m.dims(), (2, 4));
        // Column c enumerates (j0, j1) with j1 fastest.
        for j0 in 0..2 {
            for j1 in 0..2 {
                for j2 in 0..2 {
                    let c = j0 * 2 + j1;
                    assert_eq!(m.get(j2, c), (j0 * 4 + j1 * 2 + j2) as f64);
                }
            }
        }
    }

    #[test]
    fn matricize_rejects_bad_mode() {
        assert_eq!(
            seq(&[2, 3]).mode_matricize(2).unwrap_err(),
            Error::ModeOutOfRange { mode: 2, order: 2 }
        );
    }

    #[test]
    fn fold_round_trips() {
        let x = filled(&[3, 4, 5], 1);
        for mode in 0..3 {
            let m = x.mode_matricize(mode).unwrap();
            assert_eq!(DenseTensor::mode_fold(&m, mode, x.shape()).unwrap(), x);
        }
        let y = filled(&[2, 3], 2);
        let m = y.mode_matricize(1).unwrap();
        assert_eq!(DenseTensor::mode_fold(&m, 1, &[2, 3]).unwrap(), y);
    }

    #[test]
    fn fold_zero_and_mismatch() {
        let z = DenseMatrix::<f64>::zeros(4, 15);
        let t = DenseTensor::mode_fold(&z, 1, &[3, 4, 5]).unwrap();
        assert_eq!(t, DenseTensor::zeros(&[3, 4, 5]).unwrap());
        assert!(matches!(
            DenseTensor::mode_fold(&z, 0, &[3, 4, 5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mode_product_identity_and_matrix_case() {
        let x = filled(&[3, 4, 2], 3);
        for mode in 0..3 {
            let id = DenseMatrix::identity(x.shape()[mode]);
            assert_eq!(x.mode_product(&id, mode).unwrap(), x);
        }
        let x2 = DenseTensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let a = DenseMatrix::from_rows(&[[0.5, -1.0], [2.0, 3.0]]).unwrap();
        let y = x2.mode_product(&a, 0).unwrap();
        // A · X by hand.
        assert_eq!(y.data(), &[0.5 - 3.0, 1.0 - 4.0, 2.0 + 9.0, 4.0 + 12.0]);
    }

    #[test]
    fn mode_product_triple_loop_oracle() {
        let x = filled(&[3, 3, 3], 4);
        let a = mat(2, 3, 5);
        let y = x.mode_product(&a, 1).unwrap();
        assert_eq!(y.shape(), &[3, 2, 3]);
        for j1 in 0..3 {
            for i2 in 0..2 {
                for j3 in 0..3 {
                    let mut s = 0.0;
                    for j2 in 0..3 {
                        s += x.get(&[j1, j2, j3]) * a.get(i2, j2);
                    }
                    assert!((y.get(&[j1, i2, j3]) - s).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn mode_product_dimension_mismatch() {
        let x = filled(&[3, 3], 4);
        assert!(matches!(
            x.mode_product(&mat(2, 4, 1), 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn multi_mode_two_mode_matrix_identity() {
        let x = filled(&[3, 4], 6);
        let a = mat(2, 3, 7);
        let b = mat(3, 4, 8);
        let y = x.multi_mode_product([&a, &b]).unwrap();
        // A X Bᵀ
        for i in 0..2 {
            for k in 0..3 {
                let mut s = 0.0;
                for p in 0..3 {
                    for q in 0..4 {
                        s += a.get(i, p) * x.get(&[p, q]) * b.get(k, q);
                    }
                }
                assert!((y.get(&[i, k]) - s).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn multi_mode_full_sum_oracle() {
        let x = filled(&[2, 2, 2], 9);
        let ds = [mat(2, 2, 10), mat(2, 2, 11), mat(2, 2, 12)];
        let y = x.multi_mode_product(&ds).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let mut s = 0.0;
                    for p in 0..2 {
                        for q in 0..2 {
                            for r in 0..2 {
                                s += x.get(&[p, q, r])
                                    * ds[0].get(i, p)
                                    * ds[1].get(j, q)
                                    * ds[2].get(k, r);
                            }
                        }
                    }
                    assert!((y.get(&[i, j, k]) - s).abs() < 1e-13);
                }
            }
        }
        let ids = vec![DenseMatrix::identity(2); 3];
        assert_eq!(x.multi_mode_product(&ids).unwrap(), x);
    }

    #[test]
    fn multi_mode_wrong_count() {
        let x = filled(&[2, 2, 2], 9);
        let ds = [mat(2, 2, 10), mat(2, 2, 11)];
        assert!(x.multi_mode_product(&ds).is_err());
    }

    #[test]
    fn vectorize_order() {
        let x = DenseTensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(x.vectorize(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(x.get(&[0, 1]), 2.0);
        assert_eq!(DenseTensor::tensorize(x.vectorize(), &[2, 2]).unwrap(), x);
        assert!(DenseTensor::tensorize(vec![1.0; 3], &[2, 2]).is_err());
    }

    #[test]
    fn norms_and_counts() {
        let z = DenseTensor::<f64>::zeros(&[3, 2]).unwrap();
        assert_eq!(z.frobenius_norm_sq(), 0.0);
        assert_eq!(z.count_nonzero(0.0), 0);
        let t = DenseTensor::new(vec![2], vec![3.0, 4.0]).unwrap();
        assert_eq!(t.frobenius_norm_sq(), 25.0);
        assert_eq!(t.count_nonzero(0.0), 2);
        let s = DenseTensor::new(vec![2], vec![1e-9, 5.0]).unwrap();
        assert_eq!(s.count_nonzero(1e-6), 1);
    }

    #[test]
    fn invalid_shapes() {
        assert!(DenseTensor::<f64>::zeros(&[]).is_err());
        assert!(DenseTensor::<f64>::zeros(&[2, 0]).is_err());
        assert!(DenseTensor::<f64>::new(vec![2, 2], vec![0.0; 5]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let x = DenseTensor::<f32>::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let a = DenseMatrix::<f32>::identity(2);
        assert_eq!(x.multi_mode_product([&a, &a]).unwrap(), x);
    }
}
