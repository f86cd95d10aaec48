//! Mutual coherence, spark, and the sparsity bounds they give for unique
//! recovery with Kronecker-structured dictionaries.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::{lit, Scalar};

/// Default column limit for [`spark_bruteforce`]; enumeration is exponential.
pub const DEFAULT_SPARK_CAP: usize = 20;

/// Relative rank tolerance used by the spark enumeration.
pub const RANK_TOL: f64 = 1e-10;

/// Largest normalized inner product between two distinct columns.
pub fn coherence<T: Scalar>(a: &DenseMatrix<T>) -> Result<T> {
    if a.cols() < 2 {
        return Err(Error::TooFewColumns { cols: a.cols() });
    }
    let at = a.transpose();
    let norms: Vec<T> = (0..a.cols())
        .map(|c| at.row(c).iter().map(|v| *v * *v).sum::<T>().sqrt())
        .collect();
    if let Some(column) = norms.iter().position(|n| *n == T::zero()) {
        return Err(Error::ZeroColumn { column });
    }
    let mut mu = T::zero();
    for i in 0..a.cols() {
        for j in i + 1..a.cols() {
            let ip: T = at.row(i).iter().zip(at.row(j)).map(|(p, q)| *p * *q).sum();
            mu = mu.max(ip.abs() / (norms[i] * norms[j]));
        }
    }
    // Rounding can push parallel columns a hair above 1.
    Ok(mu.min(T::one()))
}

/// Rank of the selected columns by Gaussian elimination with partial
/// pivoting; pivots at or below `tol` count as zero.
fn column_rank<T: Scalar>(a: &DenseMatrix<T>, cols: &[usize], tol: T) -> usize {
    let rows = a.rows();
    let k = cols.len();
    // Work on the transpose so each selected column is a contiguous row.
    let mut w: Vec<Vec<T>> = cols.iter().map(|&c| a.column(c)).collect();
    let mut rank = 0;
    for r in 0..rows {
        if rank == k {
            break;
        }
        let (piv, val) =
            (rank..k)
                .map(|i| (i, w[i][r].abs()))
                .fold(
                    (rank, T::zero()),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if val <= tol {
            continue;
        }
        w.swap(rank, piv);
        let pivot_row = w[rank].clone();
        for row in w.iter_mut().skip(rank + 1) {
            let f = row[r] / pivot_row[r];
            if f != T::zero() {
                for (x, p) in row.iter_mut().zip(&pivot_row).skip(r) {
                    *x -= f * *p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Advances `idx` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Smallest number of linearly dependent columns, found by enumerating
/// column subsets in increasing size. Returns `cols + 1` when the columns are
/// independent.
pub fn spark_bruteforce<T: Scalar>(a: &DenseMatrix<T>, max_cols: usize) -> Result<usize> {
    let n = a.cols();
    if n > max_cols {
        return Err(Error::SparkCapExceeded {
            cols: n,
            cap: max_cols,
        });
    }
    let tol = lit::<T>(RANK_TOL) * a.max_abs();
    for size in 1..=n {
        if size > a.rows() {
            return Ok(size);
        }
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            if column_rank(a, &idx, tol) < size {
                return Ok(size);
            }
            if !next_combination(&mut idx, n) {
                break;
            }
        }
    }
    Ok(n + 1)
}

/// `1 + 1/μ(a)`, a lower bound on the spark. `None` when μ = 0 (unbounded).
pub fn spark_coherence_bound<T: Scalar>(a: &DenseMatrix<T>) -> Result<Option<T>> {
    let mu = coherence(a)?;
    Ok((mu > T::zero()).then(|| T::one() + T::one() / mu))
}

/// Coherence of `A₀ ⊗ … ⊗ A_{D-1}` computed from the factors: `max_d μ(A_d)`.
pub fn kron_coherence<T: Scalar>(dicts: &[DenseMatrix<T>]) -> Result<T> {
    dicts
        .iter()
        .try_fold(T::zero(), |m, a| Ok(m.max(coherence(a)?)))
}

/// `min_d Spark(A_d)`, an upper bound on the spark of the Kronecker product.
pub fn kron_spark_bound<T: Scalar>(dicts: &[DenseMatrix<T>], max_cols: usize) -> Result<usize> {
    let sparks = dicts
        .iter()
        .map(|a| spark_bruteforce(a, max_cols))
        .collect::<Result<Vec<_>>>()?;
    Ok(kron_spark_bound_from(&sparks))
}

/// Same bound from already known per-mode sparks.
pub fn kron_spark_bound_from(sparks: &[usize]) -> usize {
    sparks.iter().copied().min().unwrap_or(0)
}

/// Which spark values fed the random-support bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparkSource {
    /// Exact per-mode sparks from enumeration.
    Computed,
    /// Spark taken as the row count `M_d`, the usual assumption for random
    /// dictionaries.
    RowCount,
}

/// Result of testing a sparsity level against the uniqueness bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessVerdict<T> {
    pub k: usize,
    /// `max_d μ(A_d)`, absent when some dictionary has no defined coherence.
    pub coherence: Option<T>,
    /// `½(1 + 1/μ)`; infinite when μ = 0.
    pub coherence_bound: Option<T>,
    /// Strict test `k < coherence_bound`.
    pub passes_coherence: bool,
    /// `½ min_d Spark(A_d)`, present only when sparks were computed.
    pub spark_bound: Option<T>,
    /// Test `k ≤ spark_bound`.
    pub passes_spark: Option<bool>,
    /// `(½)^D ∏ Spark(A_d)`. Holds for randomly placed supports only, with
    /// no guarantee.
    pub eq31_bound: T,
    pub eq31_source: SparkSource,
    /// Test `k ≤ eq31_bound`.
    pub passes_eq31: bool,
}

/// Evaluates `k` against the spark, coherence and random-support bounds.
///
/// `sparks` supplies exact per-mode sparks; without them the spark criterion
/// is absent and the random-support bound uses `Spark(A_d) = M_d`.
pub fn uniqueness_check<T: Scalar>(
    k: usize,
    dicts: &[DenseMatrix<T>],
    sparks: Option<&[usize]>,
) -> UniquenessVerdict<T> {
    let half = lit::<T>(0.5);
    let kt = T::from_usize(k).expect("k fits the scalar type");
    let coherence = kron_coherence(dicts).ok();
    let coherence_bound = coherence.map(|mu| {
        if mu > T::zero() {
            half * (T::one() + T::one() / mu)
        } else {
            T::infinity()
        }
    });
    let passes_coherence = coherence_bound.is_some_and(|b| kt < b);

    let spark_bound = sparks.map(|s| half * T::from_usize(kron_spark_bound_from(s)).unwrap());
    let passes_spark = spark_bound.map(|b| kt <= b);

    let (per_mode, eq31_source): (Vec<usize>, _) = match sparks {
        Some(s) => (s.to_vec(), SparkSource::Computed),
        None => (
            dicts.iter().map(|a| a.rows()).collect(),
            SparkSource::RowCount,
        ),
    };
    let eq31_bound = per_mode
        .iter()
        .fold(T::one(), |acc, &s| acc * half * T::from_usize(s).unwrap());

    UniquenessVerdict {
        k,
        coherence,
        coherence_bound,
        passes_coherence,
        spark_bound,
        passes_spark,
        eq31_bound,
        eq31_source,
        passes_eq31: kt <= eq31_bound,
    }
}
