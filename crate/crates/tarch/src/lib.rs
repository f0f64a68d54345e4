//! Stability analysis for threshold AR-ARCH time series.
//!
//! A threshold AR-ARCH model drives a time series by a piecewise-linear
//! conditional mean and a piecewise conditional volatility, with the regime
//! chosen by sign conditions on lagged values. Whether such a model is
//! stable (geometrically ergodic) is decided by the Lyapunov exponent of its
//! homogeneous part, and that exponent is the stationary average of a
//! one-step log magnitude multiplier along a *collapsed* Markov chain living
//! on the unit sphere.
//!
//! This crate simulates the collapsed chain, estimates the Lyapunov exponent
//! with error bars, checks moment growth conditions, solves for the tail
//! index, and cross-validates everything against closed-form criteria and an
//! independent companion-matrix estimator.
//!
//! ```
//! use tarch::model::ModelSpec;
//! use tarch::dist::ErrorDist;
//! use tarch::rng::RandomStream;
//! use tarch::collapsed;
//!
//! // ARCH(1) with unit loading and gaussian errors: log rho = E log|e| < 0,
//! // so the model is geometrically ergodic.
//! let spec = ModelSpec::arch(1.0, vec![1.0]).unwrap();
//! let dist = ErrorDist::gaussian();
//! let mut stream = RandomStream::from_seed(7).substream("model-sim");
//! let est = collapsed::lyapunov_estimate(&spec, &dist, 50_000, 1_000, &mut stream).unwrap();
//! assert!(est.mean + 3.0 * est.stderr < 0.0);
//! ```

// validation guards use the negated-comparison form deliberately: `!(x > 0.0)`
// rejects NaN where `x <= 0.0` would accept it
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collapsed;
pub mod config;
pub mod dist;
pub mod error;
pub mod fullchain;
pub mod matrixprod;
pub mod model;
pub mod moments;
pub mod quad;
pub mod rng;
pub mod sphere;
pub mod stats;

pub use error::{Result, TarchError};
