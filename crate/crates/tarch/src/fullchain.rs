//! Direct simulation of the full threshold AR-ARCH chain and the empirical
//! drift diagnostic.
//!
//! The empirical drift (1/n) E log(||X_n|| / ||X_0||) from large initial
//! states converges to the Lyapunov exponent as the radius and horizon grow;
//! measuring it closes the loop between the collapsed-chain estimate and the
//! observable behavior of the raw recursion.

use crate::dist::ErrorDist;
use crate::error::{Result, TarchError};
use crate::model::ModelSpec;
use crate::rng::RandomStream;
use crate::sphere::SphereState;
use crate::stats;
use rayon::prelude::*;
use serde::Serialize;

/// Norm threshold past which a path is declared numerically exploded.
/// Transience is a legitimate finding, so this is a marker, not an error.
pub const EXPLOSION_THRESHOLD: f64 = 1e300;

/// A simulated trajectory of the time series.
#[derive(Clone, Debug, Serialize)]
pub struct PathRecord {
    /// xi_1, ..., xi_n (values after the initial window)
    pub values: Vec<f64>,
    /// initial lag vector (xi_0, xi_{-1}, ..., xi_{-p+1})
    pub x0: Vec<f64>,
    /// norms ||X_t|| of the sliding lag vector, aligned with `values`
    pub norms: Vec<f64>,
    /// step at which the norm first exceeded the explosion threshold
    pub exploded_at: Option<usize>,
    pub stream_key: u64,
}

/// Runs the recursion xi_t = a(X_{t-1}) + b(X_{t-1}) e_t for n steps with
/// errors from the stream. No clipping: overflow terminates with a marker.
pub fn simulate(
    spec: &ModelSpec,
    dist: &ErrorDist,
    x0: &[f64],
    n: usize,
    stream: &mut RandomStream,
) -> Result<PathRecord> {
    let errors = dist.sample_n(stream, n);
    simulate_with_errors(spec, x0, &errors, stream.key())
}

/// Same recursion with an injected error sequence (deterministic tests,
/// shared-noise comparisons).
pub fn simulate_with_errors(spec: &ModelSpec, x0: &[f64], errors: &[f64], stream_key: u64) -> Result<PathRecord> {
    let p = spec.p();
    if x0.len() != p {
        return Err(TarchError::Domain(format!("x0 has length {}, expected {p}", x0.len())));
    }
    let mut state: Vec<f64> = x0.to_vec();
    let mut values = Vec::with_capacity(errors.len());
    let mut norms = Vec::with_capacity(errors.len());
    let mut exploded_at = None;
    for (t, &e) in errors.iter().enumerate() {
        let (a, b) = spec.ab(&state)?;
        let xi = a + b * e;
        // slide the lag window
        state.rotate_right(1);
        state[0] = xi;
        let norm = state.iter().map(|x| x * x).sum::<f64>().sqrt();
        values.push(xi);
        norms.push(norm);
        if !norm.is_finite() || norm > EXPLOSION_THRESHOLD {
            exploded_at = Some(t + 1);
            break;
        }
    }
    Ok(PathRecord {
        values,
        x0: x0.to_vec(),
        norms,
        exploded_at,
        stream_key,
    })
}

/// One row of the empirical drift table.
#[derive(Clone, Debug, Serialize)]
pub struct DriftRow {
    pub radius: f64,
    pub n: usize,
    /// replicate average of (1/n) log(||X_n|| / ||X_0||)
    pub mean_drift: f64,
    pub stderr: f64,
    /// worst (largest) replicate drift, bracketing the limsup from above
    pub max_drift: f64,
    pub replicates: usize,
    pub explosions: usize,
    pub restarts: usize,
}

/// Empirical drift table over initial radii.
#[derive(Clone, Debug, Serialize)]
pub struct DriftTable {
    pub rows: Vec<DriftRow>,
    pub stream_key: u64,
}

/// Estimates the drift (1/n) log(||X_n||/||X_0||) from fresh uniformly drawn
/// directions at each radius. Paths that explode contribute the drift up to
/// the explosion step; paths that hit the exact zero state restart with a
/// fresh direction (counted).
pub fn empirical_drift(
    spec: &ModelSpec,
    dist: &ErrorDist,
    radii: &[f64],
    n: usize,
    replicates: usize,
    stream: &RandomStream,
) -> Result<DriftTable> {
    assert!(n >= 1);
    let rows: Result<Vec<DriftRow>> = radii
        .iter()
        .enumerate()
        .map(|(ri, &radius)| {
            let rstream = stream.split(ri as u64);
            let results: Result<Vec<(f64, bool, usize)>> = (0..replicates)
                .into_par_iter()
                .map(|rep| {
                    let mut s = rstream.split(rep as u64);
                    let mut restarts = 0usize;
                    loop {
                        let dir = SphereState::uniform(spec.p(), &mut s);
                        let x0: Vec<f64> = dir.coords().iter().map(|c| c * radius).collect();
                        let path = simulate(spec, dist, &x0, n, &mut s)?;
                        let steps = path.norms.len();
                        let final_norm = *path.norms.last().expect("n >= 1");
                        if final_norm == 0.0 {
                            restarts += 1;
                            continue;
                        }
                        let drift = (final_norm.ln() - radius.ln()) / steps as f64;
                        return Ok((drift, path.exploded_at.is_some(), restarts));
                    }
                })
                .collect();
            let results = results?;
            let drifts: Vec<f64> = results.iter().map(|r| r.0).collect();
            let (mean, se) = stats::mean_and_stderr(&drifts);
            Ok(DriftRow {
                radius,
                n,
                mean_drift: mean,
                stderr: se,
                max_drift: drifts.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                replicates,
                explosions: results.iter().filter(|r| r.1).count(),
                restarts: results.iter().map(|r| r.2).sum(),
            })
        })
        .collect();
    Ok(DriftTable {
        rows: rows?,
        stream_key: stream.key(),
    })
}
