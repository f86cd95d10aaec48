//! Seeded, platform-stable random streams.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

/// Deterministic random stream keyed by a 64-bit seed.
///
/// Backed by ChaCha12, whose output is identical on every platform.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha12Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// One standard normal sample.
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// `count` distinct indices drawn uniformly from `0..len`, in draw order.
    pub fn distinct_indices(&mut self, len: usize, count: usize) -> Vec<usize> {
        index::sample(&mut self.inner, len, count).into_vec()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a coordinate path, e.g.
/// `(experiment, point, trial)`. Distinct paths give unrelated streams.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Stable 64-bit tag for a string label (FNV-1a).
pub fn label_tag(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// `m × n` matrix of i.i.d. standard normal entries, filled row-major.
pub fn gaussian_matrix<T: Scalar>(rng: &mut SeededRng, m: usize, n: usize) -> DenseMatrix<T> {
    let data = (0..m * n)
        .map(|_| T::from_f64_lossy(rng.normal()))
        .collect();
    DenseMatrix::new(m, n, data).expect("extents must be positive")
}

/// Tensor of i.i.d. standard normal entries, filled in storage order.
pub fn gaussian_tensor<T: Scalar>(rng: &mut SeededRng, shape: &[usize]) -> DenseTensor<T> {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| T::from_f64_lossy(rng.normal())).collect();
    DenseTensor::new(shape.to_vec(), data).expect("extents must be positive")
}
