// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("kernel `{0}` is singular and has no transition density")]
    NoDensity(String),

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("partitions differ: {0}")]
    PartitionMismatch(String),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("matrix product overflowed at step {step}; use a smaller re-orthonormalization period")]
    Overflow { step: usize },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("time {0} is not on the integration grid")]
    OffGrid(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
