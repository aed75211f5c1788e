// SPDX-License-Identifier: Apache-2.0

//! Numerics for random dynamical systems.
//!
//! Noise kernels and random maps over flat phase spaces, Ulam approximations
//! of stationary measures, Lyapunov spectra of matrix cocycles, random metric
//! entropy, and Euler–Maruyama stochastic flows. The [`harness`] module runs
//! these from a TOML experiment config.

pub mod entropy;
pub mod error;
pub mod flows;
pub mod harness;
pub mod kernels;
pub mod lyapunov;
pub mod measures;
pub mod skew;
pub mod space;

pub use entropy::{EntropyEstimate, Partition};
pub use error::{Error, Result};
pub use flows::{NoisePath, SdeSystem};
pub use kernels::TransitionKernel;
pub use lyapunov::{LyapunovSpectrum, MatrixCocycle};
pub use measures::{BinnedMeasure, Grid, UlamOperator};
pub use skew::{NoiseSequence, RandomSystem, SkewState};
pub use space::{BaseMap, DynamicalMap, Point, StateSpace};
