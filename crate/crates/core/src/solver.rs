//! Smoothed-l0 recovery of a sparse tensor from Kronecker-structured
//! measurements `Y = X ×₀ A₀ ×₁ A₁ … ×_{D-1} A_{D-1}`.
//!
//! The zero-norm is replaced by `F_σ(X) = N − Σ exp(−x²/2σ²)` and σ is
//! annealed geometrically toward `sigma_min`. Each σ stage runs a fixed number
//! of steepest-descent steps, each followed by a projection back onto the
//! measurement-consistent set through the per-mode right pseudoinverses.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{right_pinv, PseudoInverse};
use crate::matrix::DenseMatrix;
use crate::scalar::{lit, Scalar};
use crate::tensor::DenseTensor;

/// SNR reported when the reconstruction error vanishes.
pub const SNR_CAP_DB: f64 = 300.0;

/// Ordered per-mode dictionaries with their right pseudoinverses.
#[derive(Debug, Clone)]
pub struct DictionarySet<T> {
    dicts: Vec<DenseMatrix<T>>,
    pinvs: Vec<PseudoInverse<T>>,
}

impl<T: Scalar> DictionarySet<T> {
    /// Validates the dictionaries and caches `A_d†` for each.
    ///
    /// Every dictionary must have no more rows than columns and full row rank.
    /// Square dictionaries (e.g. identities) are accepted.
    pub fn new(dicts: Vec<DenseMatrix<T>>) -> Result<Self> {
        if dicts.is_empty() {
            return Err(Error::DimensionMismatch {
                op: "DictionarySet::new",
                detail: "at least one dictionary is required".into(),
            });
        }
        let mut pinvs = Vec::with_capacity(dicts.len());
        for (index, a) in dicts.iter().enumerate() {
            if a.rows() > a.cols() {
                return Err(Error::NotWide {
                    index,
                    rows: a.rows(),
                    cols: a.cols(),
                });
            }
            pinvs.push(right_pinv(a)?);
        }
        Ok(Self { dicts, pinvs })
    }

    pub fn order(&self) -> usize {
        self.dicts.len()
    }

    pub fn dicts(&self) -> &[DenseMatrix<T>] {
        &self.dicts
    }

    pub fn pinvs(&self) -> &[PseudoInverse<T>] {
        &self.pinvs
    }

    /// Extents `(N_0, …, N_{D-1})` of the unknown tensor.
    pub fn x_shape(&self) -> Vec<usize> {
        self.dicts.iter().map(|a| a.cols()).collect()
    }

    /// Extents `(M_0, …, M_{D-1})` of the measurement tensor.
    pub fn y_shape(&self) -> Vec<usize> {
        self.dicts.iter().map(|a| a.rows()).collect()
    }

    /// `X ×₀ A₀ … ×_{D-1} A_{D-1}`.
    pub fn forward(&self, x: &DenseTensor<T>) -> Result<DenseTensor<T>> {
        self.check_shape(x.shape(), &self.x_shape(), "forward")?;
        x.multi_mode_product(&self.dicts)
    }

    /// `R ×₀ A₀† … ×_{D-1} A_{D-1}†`.
    pub fn back_project(&self, r: &DenseTensor<T>) -> Result<DenseTensor<T>> {
        self.check_shape(r.shape(), &self.y_shape(), "back_project")?;
        r.multi_mode_product(self.pinvs.iter().map(PseudoInverse::matrix))
    }

    /// `Y − forward(X)`.
    pub fn residual(&self, x: &DenseTensor<T>, y: &DenseTensor<T>) -> Result<DenseTensor<T>> {
        self.check_shape(y.shape(), &self.y_shape(), "residual")?;
        y.sub(&self.forward(x)?)
    }

    fn check_shape(&self, got: &[usize], want: &[usize], op: &'static str) -> Result<()> {
        if got != want {
            return Err(Error::DimensionMismatch {
                op,
                detail: format!("tensor shape {got:?}, dictionaries expect {want:?}"),
            });
        }
        Ok(())
    }
}

/// Parameters of the annealed steepest-descent recovery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    pub sigma_min: T,
    pub sigma_decay: T,
    /// Steepest-descent steps per σ stage.
    pub inner_iters: usize,
    pub step_mu: T,
    /// Residual energy budget `‖Y − X×A‖²` tolerated in noisy mode.
    pub epsilon: T,
    /// Project only when the residual energy exceeds `epsilon`.
    pub noisy: bool,
    /// First σ of the schedule; `None` uses `2 · max|X₀|`.
    pub sigma_initial: Option<T>,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            sigma_min: lit(0.004),
            sigma_decay: lit(0.9),
            inner_iters: 5,
            step_mu: lit(0.5),
            epsilon: lit(0.01),
            noisy: false,
            sigma_initial: None,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn noisy() -> Self {
        Self {
            noisy: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.sigma_min > T::zero()) || !self.sigma_min.is_finite() {
            return bad("sigma_min must be positive");
        }
        if !(self.sigma_decay > T::zero() && self.sigma_decay < T::one()) {
            return bad("sigma_decay must lie in (0, 1)");
        }
        if self.inner_iters == 0 {
            return bad("inner_iters must be at least 1");
        }
        if !(self.step_mu > T::zero()) || !self.step_mu.is_finite() {
            return bad("step_mu must be positive");
        }
        if !(self.epsilon >= T::zero()) {
            return bad("epsilon must be nonnegative");
        }
        if let Some(s) = self.sigma_initial {
            if !(s > T::zero()) || !s.is_finite() {
                return bad("sigma_initial must be positive");
            }
        }
        Ok(())
    }

    /// Geometric schedule `σ₁·decayʲ` kept while above `sigma_min`, closed by
    /// one stage at `sigma_min` itself.
    pub fn sigma_schedule(&self, sigma_first: T) -> Vec<T> {
        let mut out = Vec::new();
        let mut s = sigma_first;
        while s > self.sigma_min {
            out.push(s);
            s *= self.sigma_decay;
        }
        out.push(self.sigma_min);
        out
    }
}

/// Outcome of [`recover`].
#[derive(Debug, Clone)]
pub struct RecoveryReport<T> {
    pub x_hat: DenseTensor<T>,
    /// σ used by each outer stage, strictly decreasing.
    pub sigma_trace: Vec<T>,
    pub outer_stages: usize,
    pub inner_iterations: usize,
    pub projections: usize,
    /// Final `‖Y − X̂ ×₀ A₀ … ×_{D-1} A_{D-1}‖²`.
    pub residual_energy: T,
    pub elapsed_s: f64,
}

/// `N − Σ exp(−x²/2σ²)`.
pub fn smoothed_norm<T: Scalar>(x: &DenseTensor<T>, sigma: T) -> T {
    let two_s2 = lit::<T>(2.0) * sigma * sigma;
    let n = T::from_usize(x.len()).expect("tensor size fits the scalar type");
    n - x
        .data()
        .iter()
        .map(|v| (-(*v * *v) / two_s2).exp())
        .sum::<T>()
}

/// Descent direction `δ = x · exp(−x²/2σ²)`, i.e. `σ² ∂F_σ/∂x`.
pub fn smoothed_norm_delta<T: Scalar>(x: &DenseTensor<T>, sigma: T) -> DenseTensor<T> {
    let two_s2 = lit::<T>(2.0) * sigma * sigma;
    x.map(|v| v * (-(v * v) / two_s2).exp())
}

/// Minimum-energy feasible start `X₀ = Y ×₀ A₀† … ×_{D-1} A_{D-1}†`.
pub fn initialize<T: Scalar>(
    y: &DenseTensor<T>,
    dicts: &DictionarySet<T>,
) -> Result<DenseTensor<T>> {
    dicts.back_project(y)
}

/// Projects `x` onto `{X : forward(X) = Y}`: `X − R ×₀ A₀† …` with
/// `R = Y − forward(X)`.
pub fn project<T: Scalar>(
    x: &DenseTensor<T>,
    y: &DenseTensor<T>,
    dicts: &DictionarySet<T>,
) -> Result<DenseTensor<T>> {
    let r = dicts.residual(x, y)?;
    x.lin_comb(T::one(), &dicts.back_project(&r)?, T::one())
}

/// Runs the annealed smoothed-l0 recovery.
///
/// The number of iterations is fixed by the σ schedule; there is no early
/// exit.
pub fn recover<T: Scalar>(
    y: &DenseTensor<T>,
    dicts: &DictionarySet<T>,
    cfg: &SolverConfig<T>,
) -> Result<RecoveryReport<T>> {
    cfg.validate()?;
    let start = Instant::now();
    let mut x = initialize(y, dicts)?;
    let sigma_first = cfg
        .sigma_initial
        .unwrap_or_else(|| lit::<T>(2.0) * x.max_abs());
    let sigma_trace = cfg.sigma_schedule(sigma_first);
    let mut inner_iterations = 0;
    let mut projections = 0;

    for &sigma in &sigma_trace {
        let two_s2 = lit::<T>(2.0) * sigma * sigma;
        for _ in 0..cfg.inner_iters {
            for v in x.data_mut() {
                let xv = *v;
                *v = xv - cfg.step_mu * (xv * (-(xv * xv) / two_s2).exp());
            }
            let r = dicts.residual(&x, y)?;
            if !cfg.noisy || r.frobenius_norm_sq() > cfg.epsilon {
                x = x.lin_comb(T::one(), &dicts.back_project(&r)?, T::one())?;
                projections += 1;
            }
            inner_iterations += 1;
        }
    }

    let residual_energy = dicts.residual(&x, y)?.frobenius_norm_sq();
    Ok(RecoveryReport {
        x_hat: x,
        outer_stages: sigma_trace.len(),
        sigma_trace,
        inner_iterations,
        projections,
        residual_energy,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

/// `20 log₁₀(‖X‖ / ‖X − X̂‖)`, capped at [`SNR_CAP_DB`].
pub fn snr_db<T: Scalar>(x_true: &DenseTensor<T>, x_hat: &DenseTensor<T>) -> Result<T> {
    let err = x_true.sub(x_hat)?.frobenius_norm();
    let sig = x_true.frobenius_norm();
    if sig == T::zero() {
        return Err(Error::ZeroSignal);
    }
    let cap = lit::<T>(SNR_CAP_DB);
    if err == T::zero() {
        return Ok(cap);
    }
    Ok((lit::<T>(20.0) * (sig / err).log10()).min(cap))
}
