//! Independent reference computations shared by the property suites.
//!
//! Nothing here calls the library's mode products, Kronecker routines or
//! solvers; index arithmetic is written out directly.

#![allow(dead_code)]

use hdsl0::{
    coherence, kron_chain, kron_coherence, kron_spark_bound, recover, spark_bruteforce,
    spark_coherence_bound, Config, DictionarySet, Matrix, SeededRng, Tensor,
};

pub fn gaussian(rng: &mut SeededRng, m: usize, n: usize) -> Matrix {
    Matrix::from_fn(m, n, |_, _| rng.normal())
}

pub fn gaussian_t(rng: &mut SeededRng, shape: &[usize]) -> Tensor {
    let len = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..len).map(|_| rng.normal()).collect()).unwrap()
}

/// Small integer entries in {-1, 0, 1}, redrawing zero columns. These hit
/// exact linear dependencies often.
pub fn ternary(rng: &mut SeededRng, m: usize, n: usize) -> Matrix {
    let mut a = Matrix::zeros(m, n);
    for c in 0..n {
        loop {
            let col: Vec<f64> = (0..m)
                .map(|_| {
                    let u = rng.normal();
                    if u < -0.5 {
                        -1.0
                    } else if u > 0.5 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            if col.iter().any(|v| *v != 0.0) {
                for (r, v) in col.into_iter().enumerate() {
                    a.set(r, c, v);
                }
                break;
            }
        }
    }
    a
}

pub fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for d in (0..shape.len()).rev() {
        idx[d] = flat % shape[d];
        flat /= shape[d];
    }
    idx
}

/// `Y[i] = Σ_j X[j] ∏_d A_d[i_d, j_d]`, summed over every index of `X`.
pub fn full_sum_product(x: &Tensor, dicts: &[Matrix]) -> Tensor {
    let y_shape: Vec<usize> = dicts.iter().map(Matrix::rows).collect();
    let y_len: usize = y_shape.iter().product();
    let data = (0..y_len)
        .map(|yi| {
            let i = unravel(yi, &y_shape);
            (0..x.len())
                .map(|xj| {
                    let j = unravel(xj, x.shape());
                    dicts
                        .iter()
                        .enumerate()
                        .fold(x.data()[xj], |acc, (d, a)| acc * a.get(i[d], j[d]))
                })
                .sum()
        })
        .collect();
    Tensor::new(y_shape, data).unwrap()
}

/// Entry-by-entry Kronecker product.
pub fn kron_naive(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows() * b.rows(), a.cols() * b.cols(), |r, c| {
        a.get(r / b.rows(), c / b.cols()) * b.get(r % b.rows(), c % b.cols())
    })
}

pub fn kron_naive_chain(mats: &[Matrix]) -> Matrix {
    let mut acc = mats[0].clone();
    for m in &mats[1..] {
        acc = kron_naive(&acc, m);
    }
    acc
}

pub fn matvec(a: &Matrix, x: &[f64]) -> Vec<f64> {
    (0..a.rows())
        .map(|r| a.row(r).iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

pub fn matmul_naive(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
    })
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

/// Least-squares residual `min_c ‖y − Σ c_i a_i‖²` over the given columns,
/// via normal equations and partially pivoted elimination.
pub fn lstsq_residual(a: &Matrix, cols: &[usize], y: &[f64]) -> f64 {
    let k = cols.len();
    let ynorm: f64 = y.iter().map(|v| v * v).sum();
    if k == 0 {
        return ynorm;
    }
    let col = |c: usize| a.column(c);
    let cs: Vec<Vec<f64>> = cols.iter().map(|&c| col(c)).collect();
    let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, v)| u * v).sum::<f64>();
    let mut m: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row: Vec<f64> = (0..k).map(|j| dot(&cs[i], &cs[j])).collect();
            row.push(dot(&cs[i], y));
            row
        })
        .collect();
    for p in 0..k {
        let piv = (p..k)
            .max_by(|&i, &j| m[i][p].abs().total_cmp(&m[j][p].abs()))
            .unwrap();
        m.swap(p, piv);
        if m[p][p].abs() < 1e-14 {
            return f64::NAN;
        }
        for i in p + 1..k {
            let f = m[i][p] / m[p][p];
            for j in p..=k {
                m[i][j] -= f * m[p][j];
            }
        }
    }
    let mut c = vec![0.0; k];
    for p in (0..k).rev() {
        let s: f64 = (p + 1..k).map(|j| m[p][j] * c[j]).sum();
        c[p] = (m[p][k] - s) / m[p][p];
    }
    let fit: Vec<f64> = (0..y.len())
        .map(|r| (0..k).map(|i| c[i] * cs[i][r]).sum())
        .collect();
    y.iter().zip(&fit).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
    fn go(
        start: usize,
        n: usize,
        k: usize,
        cur: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]) -> bool,
    ) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for i in start..n {
            cur.push(i);
            if go(i + 1, n, k, cur, f) {
                return true;
            }
            cur.pop();
        }
        false
    }
    go(0, n, k, &mut Vec::with_capacity(k), f)
}

/// Smallest support whose columns reproduce `y` exactly, searching sizes
/// `0..=kmax`. Returns every minimizer of that size.
pub fn l0_minimizers(a: &Matrix, y: &[f64], kmax: usize) -> Vec<Vec<usize>> {
    let ynorm: f64 = y.iter().map(|v| v * v).sum();
    let tol = 1e-20f64.max(1e-18 * ynorm);
    for k in 0..=kmax {
        let mut found = Vec::new();
        combinations(a.cols(), k, &mut |s| {
            if lstsq_residual(a, s, y) <= tol {
                found.push(s.to_vec());
            }
            false
        });
        if !found.is_empty() {
            return found;
        }
    }
    Vec::new()
}

/// Indices whose magnitude exceeds `frac · max|x|`.
pub fn support_of(x: &[f64], frac: f64) -> Vec<usize> {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    (0..x.len())
        .filter(|&i| m > 0.0 && x[i].abs() > frac * m)
        .collect()
}

// ---------------------------------------------------------------------------
// Checks shared with the acceptance target. Each returns the observed error
// (or `Err` with a description) for one seeded case.

/// Mode products against the full-sum definition.
pub fn check_mode_product_oracle(seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed);
    let d = 1 + (seed % 3) as usize;
    let shape: Vec<usize> = (0..d)
        .map(|_| 1 + (rng.normal().abs() * 2.0) as usize % 4)
        .collect();
    let dicts: Vec<Matrix> = shape
        .iter()
        .map(|&n| {
            let m = 1 + (rng.normal().abs() * 2.0) as usize % 4;
            gaussian(&mut rng, m, n)
        })
        .collect();
    let x = gaussian_t(&mut rng, &shape);
    let got = x.multi_mode_product(&dicts).unwrap();
    let want = full_sum_product(&x, &dicts);
    assert_eq!(got.shape(), want.shape());
    max_diff(got.data(), want.data())
}

/// `vec(X ×₀ A₀ … ) = (A₀ ⊗ …) vec(X)` with an entry-wise Kronecker product.
pub fn check_kron_vec(seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed);
    let d = 1 + (seed % 3) as usize;
    let shape: Vec<usize> = (0..d).map(|i| 2 + (i + seed as usize) % 3).collect();
    let dicts: Vec<Matrix> = shape
        .iter()
        .map(|&n| gaussian(&mut rng, 1 + n / 2, n))
        .collect();
    let x = gaussian_t(&mut rng, &shape);
    let y = x.multi_mode_product(&dicts).unwrap();
    let big = kron_naive_chain(&dicts);
    let lib_big = kron_chain(&dicts).unwrap();
    max_diff(y.data(), &matvec(&big, x.data())).max(max_diff(big.data(), lib_big.data()))
}

/// Matricize then fold for every mode; must be bit-exact.
pub fn check_fold_roundtrip(seed: u64) -> bool {
    let mut rng = SeededRng::new(seed);
    let d = 1 + (seed % 4) as usize;
    let shape: Vec<usize> = (0..d).map(|i| 1 + (i * 7 + seed as usize) % 4).collect();
    let x = gaussian_t(&mut rng, &shape);
    (0..d).all(|m| {
        let mat = x.mode_matricize(m).unwrap();
        Tensor::mode_fold(&mat, m, &shape).unwrap() == x
    }) && Tensor::tensorize(x.vectorize(), &shape).unwrap() == x
}

/// `‖A A† − I‖_max` for a random wide matrix.
pub fn check_pinv_identity(seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed);
    let m = 1 + (seed % 12) as usize;
    let n = m + (seed % 9) as usize;
    let a = gaussian(&mut rng, m, n);
    let p = hdsl0::right_pinv(&a).unwrap();
    let prod = matmul_naive(&a, p.matrix());
    max_diff(prod.data(), Matrix::identity(m).data())
}

/// `‖Δ/σ² − g‖ / ‖Δ/σ²‖` with `g` the central-difference gradient of the
/// smoothed norm.
pub fn check_gradient(seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed);
    let sigma = 0.2 + rng.normal().abs();
    let x = gaussian_t(&mut rng, &[3, 2, 2]);
    let delta = hdsl0::smoothed_norm_delta(&x, sigma);
    let (mut err, mut norm) = (0.0f64, 0.0f64);
    for i in 0..x.len() {
        let h = 1e-6 * x.data()[i].abs().max(1.0);
        let mut xp = x.clone();
        xp.data_mut()[i] += h;
        let mut xm = x.clone();
        xm.data_mut()[i] -= h;
        let fd = (hdsl0::smoothed_norm(&xp, sigma) - hdsl0::smoothed_norm(&xm, sigma)) / (2.0 * h);
        let an = delta.data()[i] / (sigma * sigma);
        err += (an - fd) * (an - fd);
        norm += an * an;
    }
    (err / norm).sqrt()
}

/// Relative residual after projecting a random infeasible point.
pub fn check_projection(seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed);
    let d = 1 + (seed % 3) as usize;
    let dicts: Vec<Matrix> = (0..d).map(|_| gaussian(&mut rng, 3, 5)).collect();
    let set = DictionarySet::new(dicts).unwrap();
    let y = gaussian_t(&mut rng, &set.y_shape());
    let x = gaussian_t(&mut rng, &set.x_shape());
    let p = hdsl0::project(&x, &y, &set).unwrap();
    set.residual(&p, &y).unwrap().frobenius_norm() / y.frobenius_norm()
}

/// Tensor recovery against recovery with the explicit Kronecker dictionary.
pub fn check_flattening(seed: u64, shape_x: &[usize], shape_y: &[usize], cfg: &Config) -> f64 {
    let mut rng = SeededRng::new(seed);
    let dicts: Vec<Matrix> = shape_y
        .iter()
        .zip(shape_x)
        .map(|(&m, &n)| gaussian(&mut rng, m, n))
        .collect();
    let n: usize = shape_x.iter().product();
    let mut x = Tensor::zeros(shape_x).unwrap();
    for &i in &rng.distinct_indices(n, (n / 8).max(1)) {
        x.data_mut()[i] = rng.normal();
    }
    let y = Tensor::new(
        shape_y.to_vec(),
        matvec(&kron_naive_chain(&dicts), x.data()),
    )
    .unwrap();
    let flat = DictionarySet::new(vec![kron_naive_chain(&dicts)]).unwrap();
    let set = DictionarySet::new(dicts).unwrap();
    let a = recover(&y, &set, cfg).unwrap();
    let b = recover(&y.clone().reshape(&[y.len()]).unwrap(), &flat, cfg).unwrap();
    assert_eq!(a.inner_iterations, b.inner_iterations);
    max_diff(a.x_hat.data(), b.x_hat.data())
}

/// One tiny instance solved both ways.
pub struct L0Outcome {
    pub seed: u64,
    pub shape_x: Vec<usize>,
    pub recovered: Vec<usize>,
    /// Every sparsest exact solution found by enumeration.
    pub exhaustive: Vec<Vec<usize>>,
    pub rel_residual: f64,
}

impl L0Outcome {
    pub fn agrees(&self) -> bool {
        self.exhaustive.len() == 1 && self.recovered == self.exhaustive[0]
    }

    /// The recovered support lies in one mode fiber through the true
    /// nonzero (all indices differ from it in the same single mode).
    pub fn within_fiber(&self) -> bool {
        if self.exhaustive.len() != 1 || self.exhaustive[0].len() != 1 {
            return false;
        }
        let t = unravel(self.exhaustive[0][0], &self.shape_x);
        let mut mode = None;
        for &r in &self.recovered {
            let i = unravel(r, &self.shape_x);
            let diff: Vec<usize> = (0..i.len()).filter(|&d| i[d] != t[d]).collect();
            match diff.as_slice() {
                [] => {}
                [d] if mode.is_none_or(|m| m == *d) => mode = Some(*d),
                _ => return false,
            }
        }
        true
    }
}

/// Noiseless recovery on a tiny instance against exhaustive ℓ0 search.
/// `None` when the instance violates `K < ½(1 + 1/μ)`.
pub fn check_l0_oracle(seed: u64) -> Option<L0Outcome> {
    let mut rng = SeededRng::new(seed);
    let (shape_x, shape_y): (Vec<usize>, Vec<usize>) = match seed % 3 {
        0 => (vec![8], vec![6]),
        1 => (vec![4, 4], vec![3, 3]),
        _ => (vec![2, 2, 4], vec![2, 2, 3]),
    };
    let k = 1 + (seed % 2) as usize;
    let dicts: Vec<Matrix> = shape_y
        .iter()
        .zip(&shape_x)
        .map(|(&m, &n)| gaussian(&mut rng, m, n))
        .collect();
    let mu = kron_coherence(&dicts).unwrap();
    if !((k as f64) < 0.5 * (1.0 + 1.0 / mu)) {
        return None;
    }
    let n: usize = shape_x.iter().product();
    let mut x = vec![0.0; n];
    for &i in &rng.distinct_indices(n, k) {
        x[i] = rng.normal().signum() * (0.5 + rng.normal().abs());
    }
    let big = kron_naive_chain(&dicts);
    let y = matvec(&big, &x);
    let exhaustive = l0_minimizers(&big, &y, k);
    let set = DictionarySet::new(dicts).unwrap();
    let yt = Tensor::new(shape_y, y).unwrap();
    let rep = recover(&yt, &set, &Config::default()).unwrap();
    let rel_residual =
        set.residual(&rep.x_hat, &yt).unwrap().frobenius_norm() / yt.frobenius_norm();
    Some(L0Outcome {
        seed,
        shape_x,
        recovered: support_of(rep.x_hat.data(), 0.05),
        exhaustive,
        rel_residual,
    })
}

/// The first `count` instances (in seed order) that satisfy the coherence
/// condition.
pub fn l0_instances(count: usize) -> Vec<L0Outcome> {
    (0u64..).filter_map(check_l0_oracle).take(count).collect()
}

/// Random small dictionary set exercising the coherence/spark relations.
pub fn small_dictionary_set(seed: u64) -> Vec<Matrix> {
    let mut rng = SeededRng::new(seed);
    let d = 1 + (seed % 2) as usize;
    (0..d)
        .map(|_| {
            let m = if d == 1 {
                2 + rng.distinct_indices(2, 1)[0]
            } else {
                2
            };
            let n = m + 1 + rng.distinct_indices(2, 1)[0];
            if seed % 3 == 0 {
                gaussian(&mut rng, m, n)
            } else {
                ternary(&mut rng, m, n)
            }
        })
        .collect()
}

/// Checks `1 + 1/μ ≤ spark`, `spark(⊗) ≤ min spark` and `μ(⊗) = max μ`
/// on one dictionary set.
pub fn check_uniqueness_relations(seed: u64) -> Result<(), String> {
    let dicts = small_dictionary_set(seed);
    for a in &dicts {
        let spark = spark_bruteforce(a, 20).map_err(|e| e.to_string())?;
        if let Some(b) = spark_coherence_bound(a).map_err(|e| e.to_string())? {
            if b > spark as f64 + 1e-9 {
                return Err(format!("coherence bound {b} exceeds spark {spark}"));
            }
        }
    }
    let big = kron_naive_chain(&dicts);
    let mu_big = coherence(&big).map_err(|e| e.to_string())?;
    let mu = kron_coherence(&dicts).map_err(|e| e.to_string())?;
    if (mu_big - mu).abs() > 1e-12 {
        return Err(format!("coherence of product {mu_big} vs max {mu}"));
    }
    let spark_big = spark_bruteforce(&big, 20).map_err(|e| e.to_string())?;
    let bound = kron_spark_bound(&dicts, 20).map_err(|e| e.to_string())?;
    if spark_big > bound {
        return Err(format!(
            "spark of product {spark_big} exceeds min spark {bound}"
        ));
    }
    Ok(())
}
