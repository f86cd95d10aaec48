//! Random problem instances and their flattened equivalents.

use anyhow::{ensure, Result};
use hdsl0::{gaussian_matrix, kron_chain_capped, DenseTensor, Matrix, SeededRng, Tensor};

/// How much Gaussian noise to add to the clean measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    /// Fixed per-entry standard deviation.
    Std(f64),
    /// Standard deviation chosen so that the measurements have this SNR (dB).
    MeasurementSnrDb(f64),
}

impl Default for NoiseLevel {
    fn default() -> Self {
        NoiseLevel::MeasurementSnrDb(60.0)
    }
}

/// One synthetic recovery problem.
#[derive(Debug, Clone)]
pub struct Instance {
    pub x_true: Tensor,
    pub dicts: Vec<Matrix>,
    pub y: Tensor,
    /// Per-entry noise standard deviation actually applied to `y`.
    pub noise_std: f64,
}

/// Draws Gaussian dictionaries, a `k`-sparse tensor with standard normal
/// values at uniformly random positions, and noisy measurements.
///
/// Draw order from `rng`: dictionaries (mode order, row-major), support
/// positions, support values, then noise in storage order of `y`.
pub fn generate_instance(
    rng: &mut SeededRng,
    extents_x: &[usize],
    extents_y: &[usize],
    k: usize,
    noise: NoiseLevel,
) -> Result<Instance> {
    ensure!(
        !extents_x.is_empty() && extents_x.len() == extents_y.len(),
        "extents of X ({extents_x:?}) and Y ({extents_y:?}) must have the same nonzero order"
    );
    for (d, (&n, &m)) in extents_x.iter().zip(extents_y).enumerate() {
        ensure!(m >= 1 && n >= 1, "degenerate extent in mode {d}");
        ensure!(
            m <= n,
            "mode {d}: measurement extent {m} exceeds signal extent {n}"
        );
    }
    let total: usize = extents_x.iter().product();
    ensure!(k <= total, "sparsity {k} exceeds the {total} entries of X");

    let dicts: Vec<Matrix> = extents_y
        .iter()
        .zip(extents_x)
        .map(|(&m, &n)| gaussian_matrix(rng, m, n))
        .collect();

    let mut x_true = Tensor::zeros(extents_x)?;
    let positions = rng.distinct_indices(total, k);
    for &p in &positions {
        x_true.data_mut()[p] = rng.normal();
    }

    let mut y = x_true.multi_mode_product(&dicts)?;
    let noise_std = match noise {
        NoiseLevel::Std(s) => s,
        NoiseLevel::MeasurementSnrDb(db) => {
            let rms = (y.frobenius_norm_sq() / y.len() as f64).sqrt();
            rms * 10f64.powf(-db / 20.0)
        }
    };
    ensure!(
        noise_std >= 0.0 && noise_std.is_finite(),
        "invalid noise level {noise_std}"
    );
    if noise_std > 0.0 {
        for v in y.data_mut() {
            *v += noise_std * rng.normal();
        }
    }
    Ok(Instance {
        x_true,
        dicts,
        y,
        noise_std,
    })
}

/// A problem expressed with fewer, larger dictionaries.
#[derive(Debug, Clone)]
pub struct FlatProblem {
    pub dicts: Vec<Matrix>,
    pub x_shape: Vec<usize>,
    pub y_shape: Vec<usize>,
}

impl FlatProblem {
    /// Reshapes a tensor-form measurement into this problem's layout.
    pub fn flatten_y(&self, y: &Tensor) -> Result<Tensor> {
        Ok(y.clone().reshape(&self.y_shape)?)
    }

    /// Maps a solution back to the original tensor shape.
    pub fn unflatten_x(&self, x: Tensor, shape: &[usize]) -> Result<Tensor> {
        Ok(DenseTensor::reshape(x, shape)?)
    }
}

/// Flattened counterparts of a tensor problem. Each is an error when its
/// Kronecker dictionary would exceed the element cap.
#[derive(Debug)]
pub struct EquivalentProblems {
    /// One dictionary `A₀ ⊗ … ⊗ A_{D-1}` acting on `vec(X)`.
    pub flat_1d: hdsl0::Result<FlatProblem>,
    /// Dictionaries `{A₀, A₁ ⊗ … ⊗ A_{D-1}}` acting on `X` viewed as
    /// `N₀ × (N₁⋯N_{D-1})`.
    pub flat_2d: hdsl0::Result<FlatProblem>,
}

/// Builds the 1-D and 2-D equivalents of the problem given by `dicts`.
///
/// Storage order is last-index-fastest, so reshaping `X` and `Y` is exactly
/// consistent with these Kronecker factor orders.
pub fn build_equivalent_problems(dicts: &[Matrix], cap: usize) -> Result<EquivalentProblems> {
    ensure!(
        dicts.len() >= 2,
        "equivalent problems need at least two modes"
    );
    let n_total: usize = dicts.iter().map(Matrix::cols).product();
    let m_total: usize = dicts.iter().map(Matrix::rows).product();

    let flat_1d = kron_chain_capped(dicts, cap).map(|a| FlatProblem {
        dicts: vec![a],
        x_shape: vec![n_total],
        y_shape: vec![m_total],
    });

    let (first, rest) = dicts.split_first().expect("checked above");
    let flat_2d = kron_chain_capped(rest, cap).map(|tail| FlatProblem {
        x_shape: vec![first.cols(), tail.cols()],
        y_shape: vec![first.rows(), tail.rows()],
        dicts: vec![first.clone(), tail],
    });
    Ok(EquivalentProblems { flat_1d, flat_2d })
}
