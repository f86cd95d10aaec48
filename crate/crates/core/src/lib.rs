//! Sparse recovery of D-dimensional tensors from Kronecker-structured
//! compressed measurements.
//!
//! A sparse tensor `X` of shape `N₀ × … × N_{D-1}` is observed through one wide
//! dictionary per mode, `Y = X ×₀ A₀ ×₁ A₁ … ×_{D-1} A_{D-1}`. [`recover`]
//! estimates `X` with annealed smoothed-l0 minimization working directly on
//! the tensor, never forming the Kronecker dictionary `A₀ ⊗ … ⊗ A_{D-1}`.
//!
//! All numeric code is generic over [`Scalar`] (`f32`/`f64`); the `f64`
//! aliases at the crate root are what the benchmarks use.

pub mod error;
pub mod linalg;
pub mod matrix;
pub mod random;
pub mod scalar;
pub mod solver;
pub mod tensor;
pub mod textio;
pub mod uniqueness;

pub use error::{Error, Result};
pub use linalg::{gram, matmul, matmul_transpose_a, right_pinv, solve_spd, PseudoInverse};
pub use matrix::{
    kron_chain, kron_chain_capped, kronecker, kronecker_capped, DenseMatrix, DEFAULT_KRON_CAP,
};
pub use random::{derive_seed, gaussian_matrix, gaussian_tensor, label_tag, SeededRng};
pub use scalar::Scalar;
pub use solver::{
    initialize, project, recover, smoothed_norm, smoothed_norm_delta, snr_db, DictionarySet,
    RecoveryReport, SolverConfig, SNR_CAP_DB,
};
pub use tensor::DenseTensor;
pub use uniqueness::{
    coherence, kron_coherence, kron_spark_bound, kron_spark_bound_from, spark_bruteforce,
    spark_coherence_bound, uniqueness_check, SparkSource, UniquenessVerdict, DEFAULT_SPARK_CAP,
};

pub type Tensor = DenseTensor<f64>;
pub type Matrix = DenseMatrix<f64>;
pub type Dictionaries = DictionarySet<f64>;
pub type Config = SolverConfig<f64>;
pub type Report = RecoveryReport<f64>;
pub type Verdict = UniquenessVerdict<f64>;
