//! The collapsed chain on the unit sphere: simulation, Lyapunov exponent
//! estimation, the near-equilibrium function, and stationarity diagnostics.
//!
//! Projecting the homogeneous chain onto the sphere gives a Markov chain on a
//! compact state space. It is uniformly ergodic under the standing
//! assumptions, so ergodic averages of the log magnitude multiplier converge
//! quickly and the Lyapunov exponent of the full model comes with honest
//! error bars from a bounded, fast-mixing chain.

use crate::dist::{ErrorDist, QuadSettings};
use crate::error::{Result, TarchError};
use crate::model::ModelSpec;
use crate::rng::RandomStream;
use crate::sphere::SphereState;
use crate::stats::{self, KahanSum};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

/// Clamp for log of a vanishing magnitude multiplier, roughly the log of the
/// smallest normal double. Keeps ergodic averages finite; the count of
/// clamped steps is reported so pathological models are visible.
pub const LOG_CLAMP: f64 = -690.0;

/// One collapsed-chain step. Returns the next state and the magnitude
/// multiplier w, or `None` when w = 0 exactly (a measure-zero event the
/// chain driver resolves by redraw/restart).
pub fn step(spec: &ModelSpec, theta: &SphereState, u: f64) -> Result<Option<(SphereState, f64)>> {
    let z = spec.innovation(theta, u)?;
    let w = (z * z + theta.trailing_sq()).sqrt();
    if w == 0.0 {
        return Ok(None);
    }
    let p = theta.dim();
    let mut v = Vec::with_capacity(p);
    v.push(z / w);
    for t in &theta.coords()[..p - 1] {
        v.push(t / w);
    }
    Ok(Some((SphereState::new(v)?, w)))
}

/// Book-keeping shared by all chain drivers.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ChainCounters {
    /// log w clamped at the underflow floor
    pub underflow: u64,
    /// w = 0 events resolved by the redraw/restart rule
    pub degenerate: u64,
}

/// Advances the chain one step, applying the degenerate-step rule: redraw
/// the error once; if w is still 0, restart uniformly on the sphere. Returns
/// (z, w) for the realized transition.
///
/// Degenerate multipliers form a null set under the standing assumptions, so
/// a long unbroken run of them means the model violates those assumptions
/// (w identically 0 somewhere); that is reported as an error instead of
/// spinning forever.
pub(crate) fn drive_step(
    spec: &ModelSpec,
    dist: &ErrorDist,
    theta: &mut SphereState,
    stream: &mut RandomStream,
    counters: &mut ChainCounters,
) -> Result<(f64, f64)> {
    let mut consecutive = 0u64;
    loop {
        for _attempt in 0..2 {
            let u = dist.sample(stream);
            if let Some((next, w)) = step(spec, theta, u)? {
                let z = spec.innovation(theta, u)?;
                *theta = next;
                return Ok((z, w));
            }
            counters.degenerate += 1;
            consecutive += 1;
        }
        if consecutive >= 128 {
            return Err(TarchError::DegenerateChain { events: consecutive });
        }
        *theta = SphereState::uniform(spec.p(), stream);
    }
}

/// Monte Carlo estimate of the Lyapunov exponent with diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct LyapEstimate {
    /// ergodic average of log w (the log growth rate estimate)
    pub mean: f64,
    /// batch-means standard error
    pub stderr: f64,
    pub n_steps: usize,
    pub burn_in: usize,
    pub batches: usize,
    pub replicates: usize,
    pub underflow_count: u64,
    pub degenerate_count: u64,
    /// stream derivation key, for reproducibility records
    pub stream_key: u64,
    /// underflow fraction below 1e-4
    pub clean: bool,
    /// more than 1% of steps clamped: estimate should not be trusted
    pub unreliable: bool,
}

const BATCHES: usize = 50;

enum Functional {
    /// log w(theta, e)
    LogMagnitude,
    /// log( |z(theta, e)| / |theta_1| )
    LogInnovationRatio,
}

fn run_chain(
    spec: &ModelSpec,
    dist: &ErrorDist,
    n_steps: usize,
    burn_in: usize,
    stream: &mut RandomStream,
    functional: Functional,
) -> Result<(Vec<f64>, ChainCounters)> {
    let mut theta = SphereState::uniform(spec.p(), stream);
    let mut counters = ChainCounters::default();
    for _ in 0..burn_in {
        drive_step(spec, dist, &mut theta, stream, &mut counters)?;
    }
    let mut samples = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let theta_first = theta.coords()[0];
        let (z, w) = drive_step(spec, dist, &mut theta, stream, &mut counters)?;
        let value = match functional {
            Functional::LogMagnitude => {
                let lw = w.ln();
                if lw < LOG_CLAMP {
                    counters.underflow += 1;
                    LOG_CLAMP
                } else {
                    lw
                }
            }
            Functional::LogInnovationRatio => {
                let lz = z.abs().ln().max(LOG_CLAMP);
                let lt = theta_first.abs().ln().max(LOG_CLAMP);
                if lz == LOG_CLAMP || lt == LOG_CLAMP {
                    counters.underflow += 1;
                }
                lz - lt
            }
        };
        samples.push(value);
    }
    Ok((samples, counters))
}

fn estimate_from_chain(
    spec: &ModelSpec,
    dist: &ErrorDist,
    n_steps: usize,
    burn_in: usize,
    stream: &mut RandomStream,
    functional: Functional,
) -> Result<LyapEstimate> {
    if n_steps < BATCHES * 2 {
        return Err(TarchError::Domain(format!(
            "n_steps = {n_steps} too small for {BATCHES} batches"
        )));
    }
    let key = stream.key();
    let (samples, counters) = run_chain(spec, dist, n_steps, burn_in, stream, functional)?;
    let (mean, stderr) = stats::batch_means(&samples, BATCHES);
    let frac = counters.underflow as f64 / n_steps as f64;
    Ok(LyapEstimate {
        mean,
        stderr,
        n_steps,
        burn_in,
        batches: BATCHES,
        replicates: 1,
        underflow_count: counters.underflow,
        degenerate_count: counters.degenerate,
        stream_key: key,
        clean: frac < 1e-4,
        unreliable: frac > 0.01,
    })
}

/// Estimates log rho as the ergodic average of log w along the collapsed
/// chain, started uniformly on the sphere. Intended use is n_steps >= 1e4
/// and burn_in >= 1e3; smaller values are allowed for quick checks.
pub fn lyapunov_estimate(
    spec: &ModelSpec,
    dist: &ErrorDist,
    n_steps: usize,
    burn_in: usize,
    stream: &mut RandomStream,
) -> Result<LyapEstimate> {
    estimate_from_chain(spec, dist, n_steps, burn_in, stream, Functional::LogMagnitude)
}

/// Alternative estimator: ergodic average of log(|z|/|theta_1|). Under the
/// stationary law, z/w is distributed as the first sphere coordinate, so
/// this converges to the same limit; agreement with [`lyapunov_estimate`]
/// is a consistency check on the simulation.
pub fn lyapunov_estimate_alt(
    spec: &ModelSpec,
    dist: &ErrorDist,
    n_steps: usize,
    burn_in: usize,
    stream: &mut RandomStream,
) -> Result<LyapEstimate> {
    estimate_from_chain(spec, dist, n_steps, burn_in, stream, Functional::LogInnovationRatio)
}

fn merge_replicates(parts: Vec<LyapEstimate>, key: u64) -> LyapEstimate {
    let r = parts.len();
    let mean = parts.iter().map(|e| e.mean).sum::<f64>() / r as f64;
    let stderr = parts.iter().map(|e| e.stderr * e.stderr).sum::<f64>().sqrt() / r as f64;
    let underflow: u64 = parts.iter().map(|e| e.underflow_count).sum();
    let degenerate: u64 = parts.iter().map(|e| e.degenerate_count).sum();
    let n_total: usize = parts.iter().map(|e| e.n_steps).sum();
    let frac = underflow as f64 / n_total as f64;
    LyapEstimate {
        mean,
        stderr,
        n_steps: n_total,
        burn_in: parts[0].burn_in,
        batches: parts.iter().map(|e| e.batches).sum(),
        replicates: r,
        underflow_count: underflow,
        degenerate_count: degenerate,
        stream_key: key,
        clean: frac < 1e-4,
        unreliable: frac > 0.01,
    }
}

/// Replicated estimator: independent chains on split streams, merged by
/// averaging. Deterministic given (stream, replicates), independent of
/// scheduling.
pub fn lyapunov_replicated(
    spec: &ModelSpec,
    dist: &ErrorDist,
    n_steps: usize,
    burn_in: usize,
    replicates: usize,
    stream: &RandomStream,
    alt: bool,
) -> Result<LyapEstimate> {
    assert!(replicates >= 1);
    let per = n_steps / replicates;
    let parts: Result<Vec<LyapEstimate>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut s = stream.split(i as u64);
            if alt {
                lyapunov_estimate_alt(spec, dist, per, burn_in, &mut s)
            } else {
                lyapunov_estimate(spec, dist, per, burn_in, &mut s)
            }
        })
        .collect();
    Ok(merge_replicates(parts?, stream.key()))
}

/// The near-equilibrium function: a truncated sum of conditional
/// expectations of q(theta) = E log w(theta, e), tabulated on a sphere grid
/// with nearest-grid-point evaluation. Interpolation across thresholds would
/// smear the discontinuity, so lookups snap to the grid.
#[derive(Clone, Debug)]
pub struct NuFunction {
    t_horizon: usize,
    points: Vec<SphereState>,
    values: Vec<f64>,
    /// Monte Carlo stderr of each tabulated value (0 for exact tables)
    stderrs: Vec<f64>,
    inner_samples: usize,
}

impl NuFunction {
    pub fn from_table(points: Vec<SphereState>, values: Vec<f64>, t_horizon: usize, inner_samples: usize) -> Self {
        let stderrs = vec![0.0; values.len()];
        Self::from_table_with_stderr(points, values, stderrs, t_horizon, inner_samples)
    }

    pub fn from_table_with_stderr(
        points: Vec<SphereState>,
        values: Vec<f64>,
        stderrs: Vec<f64>,
        t_horizon: usize,
        inner_samples: usize,
    ) -> Self {
        assert_eq!(points.len(), values.len());
        assert_eq!(points.len(), stderrs.len());
        assert!(!points.is_empty());
        assert!(
            values.iter().all(|v| v.is_finite()),
            "near-equilibrium values must be finite"
        );
        Self {
            t_horizon,
            points,
            values,
            stderrs,
            inner_samples,
        }
    }

    /// The zero function; useful as a null reference.
    pub fn zero(p: usize) -> Self {
        let mut v = vec![0.0; p];
        v[0] = 1.0;
        Self {
            t_horizon: 0,
            points: vec![SphereState::new(v).unwrap()],
            values: vec![0.0],
            stderrs: vec![0.0],
            inner_samples: 0,
        }
    }

    /// Nearest-grid-point evaluation.
    pub fn eval(&self, theta: &SphereState) -> f64 {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, pt) in self.points.iter().enumerate() {
            let d = pt.dist(theta);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        self.values[best]
    }

    pub fn t_horizon(&self) -> usize {
        self.t_horizon
    }

    pub fn inner_samples(&self) -> usize {
        self.inner_samples
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest Monte Carlo stderr across the table; the level below which
    /// deviations from the tabulated function are indistinguishable from
    /// estimation noise.
    pub fn max_stderr(&self) -> f64 {
        self.stderrs.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn grid(&self) -> (&[SphereState], &[f64]) {
        (&self.points, &self.values)
    }
}

/// Expected log magnitude multiplier q(theta) = E log w(theta, e), by
/// quadrature. Cached per (a*, b*, trailing^2) triple; on two-state and
/// piecewise-constant models the cache makes repeated visits free.
fn q_value(
    spec: &ModelSpec,
    dist: &ErrorDist,
    theta: &SphereState,
    quad: QuadSettings,
    cache: &mut HashMap<(u64, u64, u64), f64>,
) -> Result<f64> {
    let alpha = spec.a_hom(theta.coords())?;
    let beta = spec.b_hom(theta.coords())?;
    let s2 = theta.trailing_sq();
    let key = (alpha.to_bits(), beta.to_bits(), s2.to_bits());
    if let Some(v) = cache.get(&key) {
        return Ok(*v);
    }
    let v = if alpha == 0.0 && beta == 0.0 && s2 == 0.0 {
        LOG_CLAMP
    } else {
        dist.log_norm_moment(alpha, beta, s2, quad)?
    };
    cache.insert(key, v);
    Ok(v)
}

/// Builds the near-equilibrium function on the given grid: for every grid
/// point, a Monte Carlo estimate of the truncated sum
/// `sum_{t=0}^{T-1} E( q(theta_t) | theta_0 = grid point )`,
/// with q evaluated by quadrature at every visited state.
pub fn build_nu(
    spec: &ModelSpec,
    dist: &ErrorDist,
    t_horizon: usize,
    grid: &[SphereState],
    inner_samples: usize,
    stream: &RandomStream,
    quad: QuadSettings,
) -> Result<NuFunction> {
    assert!(t_horizon >= 1);
    assert!(!grid.is_empty());
    let table: Result<Vec<(f64, f64)>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, start)| {
            let mut s = stream.split(i as u64);
            let mut cache = HashMap::new();
            let mut counters = ChainCounters::default();
            let mut per_chain = Vec::with_capacity(inner_samples);
            for _ in 0..inner_samples {
                let mut theta = start.clone();
                let mut total = KahanSum::new();
                for t in 0..t_horizon {
                    total.add(q_value(spec, dist, &theta, quad, &mut cache)?);
                    if t + 1 < t_horizon {
                        drive_step(spec, dist, &mut theta, &mut s, &mut counters)?;
                    }
                }
                per_chain.push(total.value());
            }
            let (mean, se) = stats::mean_and_stderr(&per_chain);
            Ok((mean, if se.is_finite() { se } else { 0.0 }))
        })
        .collect();
    let table = table?;
    let (values, stderrs): (Vec<f64>, Vec<f64>) = table.into_iter().unzip();
    Ok(NuFunction::from_table_with_stderr(
        grid.to_vec(),
        values,
        stderrs,
        t_horizon,
        inner_samples,
    ))
}

/// Per-probe row of the near-equilibrium check.
#[derive(Clone, Debug, Serialize)]
pub struct NearEqRow {
    pub theta: Vec<f64>,
    /// Monte Carlo estimate of E( nu(theta_1) - nu(theta) + log w | theta )
    pub estimate: f64,
    pub stderr: f64,
    /// estimate minus the reference log rho
    pub deviation: f64,
}

/// Result of probing the near-equilibrium equation, doubling as a
/// drift-based ergodicity verdict: if the one-step expectation is negative
/// (3 sigma) at every probe, the bounded function nu witnesses geometric
/// ergodicity.
#[derive(Clone, Debug, Serialize)]
pub struct NearEquilibriumReport {
    pub rows: Vec<NearEqRow>,
    pub max_abs_deviation: f64,
    /// largest one-step expectation over the probes
    pub sup_estimate: f64,
    /// estimate + 3 stderr < 0 at every probe
    pub drift_negative: bool,
    pub log_rho_ref: f64,
}

/// Probes E( nu(theta_1) - nu(theta) + log w(theta, e) | theta ) at each
/// probe point and compares against a Lyapunov exponent estimate.
pub fn near_equilibrium_check(
    spec: &ModelSpec,
    dist: &ErrorDist,
    nu: &NuFunction,
    probes: &[SphereState],
    log_rho: f64,
    inner_samples: usize,
    stream: &RandomStream,
) -> Result<NearEquilibriumReport> {
    let rows: Result<Vec<NearEqRow>> = probes
        .par_iter()
        .enumerate()
        .map(|(i, theta)| {
            let mut s = stream.split(i as u64);
            let mut counters = ChainCounters::default();
            let nu_here = nu.eval(theta);
            let mut vals = Vec::with_capacity(inner_samples);
            for _ in 0..inner_samples {
                let mut next = theta.clone();
                let (_z, w) = drive_step(spec, dist, &mut next, &mut s, &mut counters)?;
                let lw = w.ln().max(LOG_CLAMP);
                vals.push(nu.eval(&next) - nu_here + lw);
            }
            let (mean, se) = stats::mean_and_stderr(&vals);
            Ok(NearEqRow {
                theta: theta.coords().to_vec(),
                estimate: mean,
                stderr: se,
                deviation: mean - log_rho,
            })
        })
        .collect();
    let rows = rows?;
    let max_abs_deviation = rows.iter().fold(0.0f64, |m, r| m.max(r.deviation.abs()));
    let sup_estimate = rows.iter().fold(f64::NEG_INFINITY, |m, r| m.max(r.estimate));
    let drift_negative = rows.iter().all(|r| r.estimate + 3.0 * r.stderr < 0.0);
    Ok(NearEquilibriumReport {
        rows,
        max_abs_deviation,
        sup_estimate,
        drift_negative,
        log_rho_ref: log_rho,
    })
}

/// Distributional stationarity diagnostic.
///
/// Under the stationary law, the one-step ratio z/w has the same
/// distribution as the first sphere coordinate. Two independent thinned runs
/// supply samples of each; a two-sample KS distance at a threshold
/// calibrated for the thinning decides the verdict. The elementwise identity
/// (the next state's first coordinate IS z/w) is checked separately as a
/// sanity bound.
#[derive(Clone, Debug, Serialize)]
pub struct StationarityReport {
    pub samples_per_run: usize,
    pub thin: usize,
    pub ks_distance: f64,
    pub ks_threshold: f64,
    pub ks_pass: bool,
    /// max |theta'_1 - z/w| along the first run (definitional identity)
    pub max_identity_dev: f64,
    pub frac_first_coord_positive: f64,
}

pub fn stationarity_diagnostic(
    spec: &ModelSpec,
    dist: &ErrorDist,
    n: usize,
    burn_in: usize,
    thin: usize,
    stream: &RandomStream,
) -> Result<StationarityReport> {
    assert!(thin >= 1);
    let mut s1 = stream.split(0);
    let mut s2 = stream.split(1);
    let mut counters = ChainCounters::default();

    // run 1: first coordinates, plus the elementwise identity check
    let mut theta = SphereState::uniform(spec.p(), &mut s1);
    for _ in 0..burn_in {
        drive_step(spec, dist, &mut theta, &mut s1, &mut counters)?;
    }
    let mut coords = Vec::with_capacity(n);
    let mut max_dev: f64 = 0.0;
    let mut positives = 0usize;
    for i in 0..n * thin {
        let (z, w) = drive_step(spec, dist, &mut theta, &mut s1, &mut counters)?;
        let first = theta.coords()[0];
        max_dev = max_dev.max((first - z / w).abs());
        if i % thin == thin - 1 {
            coords.push(first);
            if first > 0.0 {
                positives += 1;
            }
        }
    }

    // run 2: independent stream, one-step ratios at thinned times
    let mut theta2 = SphereState::uniform(spec.p(), &mut s2);
    for _ in 0..burn_in {
        drive_step(spec, dist, &mut theta2, &mut s2, &mut counters)?;
    }
    let mut ratios = Vec::with_capacity(n);
    for i in 0..n * thin {
        let (z, w) = drive_step(spec, dist, &mut theta2, &mut s2, &mut counters)?;
        if i % thin == thin - 1 {
            ratios.push(z / w);
        }
    }

    let d = stats::ks_two_sample(&coords, &ratios);
    // c = 1.95 rejects at roughly the 0.1% level for independent samples;
    // thinning by >= 50 on a uniformly ergodic chain is close enough
    let c = 1.95;
    let threshold = c * (((coords.len() + ratios.len()) as f64) / ((coords.len() * ratios.len()) as f64)).sqrt();
    Ok(StationarityReport {
        samples_per_run: n,
        thin,
        ks_distance: d,
        ks_threshold: threshold,
        ks_pass: d < threshold,
        max_identity_dev: max_dev,
        frac_first_coord_positive: positives as f64 / n as f64,
    })
}

/// Runs a short chain and returns (state after each step, log w of the
/// step); used for plot-ready traces.
pub fn trace(
    spec: &ModelSpec,
    dist: &ErrorDist,
    n: usize,
    stream: &mut RandomStream,
) -> Result<Vec<(SphereState, f64)>> {
    let mut theta = SphereState::uniform(spec.p(), stream);
    let mut counters = ChainCounters::default();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (_z, w) = drive_step(spec, dist, &mut theta, stream, &mut counters)?;
        out.push((theta.clone(), w.ln().max(LOG_CLAMP)));
    }
    Ok(out)
}

/// Transition counts of the two-state chain (p = 1 only): the collapsed
/// chain then lives on {-1, +1} and its transition frequencies have
/// closed-form limits.
#[derive(Clone, Debug, Serialize)]
pub struct TwoStateCounts {
    pub visits_minus: u64,
    pub visits_plus: u64,
    /// transitions from -1 to +1
    pub minus_to_plus: u64,
    /// transitions from +1 to -1
    pub plus_to_minus: u64,
}

pub fn two_state_transition_counts(
    spec: &ModelSpec,
    dist: &ErrorDist,
    n: usize,
    burn_in: usize,
    stream: &mut RandomStream,
) -> Result<TwoStateCounts> {
    if spec.p() != 1 {
        return Err(TarchError::Domain("two-state reduction requires p = 1".into()));
    }
    let mut counters = ChainCounters::default();
    let mut theta = SphereState::uniform(1, stream);
    for _ in 0..burn_in {
        drive_step(spec, dist, &mut theta, stream, &mut counters)?;
    }
    let mut counts = TwoStateCounts {
        visits_minus: 0,
        visits_plus: 0,
        minus_to_plus: 0,
        plus_to_minus: 0,
    };
    for _ in 0..n {
        let from = theta.coords()[0];
        debug_assert!((from.abs() - 1.0).abs() <= 1e-12, "p=1 chain must visit only +/-1");
        drive_step(spec, dist, &mut theta, stream, &mut counters)?;
        let to = theta.coords()[0];
        if from < 0.0 {
            counts.visits_minus += 1;
            if to > 0.0 {
                counts.minus_to_plus += 1;
            }
        } else {
            counts.visits_plus += 1;
            if to < 0.0 {
                counts.plus_to_minus += 1;
            }
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::sphere_grid;
    use approx::assert_abs_diff_eq;

    const E_LOG_ABS_GAUSSIAN: f64 = -0.635_181_422_730_739_1;

    fn q_default() -> QuadSettings {
        QuadSettings::default()
    }

    #[test]
    fn step_formula_p2() {
        let spec = ModelSpec::arch(0.0, vec![1.0, 1.0]).unwrap();
        let theta = SphereState::new(vec![1.0, 0.0]).unwrap();
        // u = 3 gives z = 3: next state (3, 1)/sqrt(10)
        let (next, w) = step(&spec, &theta, 3.0).unwrap().unwrap();
        assert_abs_diff_eq!(w, 10.0f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(next.coords()[0], 3.0 / 10.0f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(next.coords()[1], 1.0 / 10.0f64.sqrt(), epsilon = 1e-14);

        // z = 0: the trailing component carries, w = 1
        let (next, w) = step(&spec, &theta, 0.0).unwrap().unwrap();
        assert_abs_diff_eq!(w, 1.0, epsilon = 0.0);
        assert_eq!(next.coords(), &[0.0, 1.0]);
    }

    #[test]
    fn step_p1_lands_on_sign_of_innovation() {
        let spec = ModelSpec::tar_arch1(0.0, 1.0, 0.5, 0.5, 1.0, 1.0).unwrap();
        let theta = SphereState::new(vec![1.0]).unwrap();
        let (next, _) = step(&spec, &theta, -10.0).unwrap().unwrap();
        assert_eq!(next.coords(), &[-1.0]);
        let (next, _) = step(&spec, &theta, 10.0).unwrap().unwrap();
        assert_eq!(next.coords(), &[1.0]);
    }

    #[test]
    fn degenerate_step_is_signalled() {
        let spec = ModelSpec::arch(1.0, vec![1.0, 1.0]).unwrap();
        let theta = SphereState::new(vec![0.0, 1.0]).unwrap();
        // from (0, 1): z = b*(theta) u = 0 at u = 0 and trailing = theta_1 = 0
        assert!(step(&spec, &theta, 0.0).unwrap().is_none());
    }

    #[test]
    fn state_stays_on_sphere() {
        let spec = ModelSpec::tarch_delay1(1.0, 1.0, vec![0.5, 0.9], vec![1.2, 0.4]).unwrap();
        let dist = ErrorDist::gaussian();
        let mut stream = RandomStream::from_seed(3).substream("sphere-inv");
        let mut theta = SphereState::uniform(2, &mut stream);
        let mut counters = ChainCounters::default();
        for _ in 0..5_000 {
            drive_step(&spec, &dist, &mut theta, &mut stream, &mut counters).unwrap();
            assert!(theta.norm_error() <= 1e-12);
        }
    }

    #[test]
    fn arch1_estimate_matches_closed_form() {
        // log rho = log b + E log|e| with b = 1
        let spec = ModelSpec::arch(1.0, vec![1.0]).unwrap();
        let dist = ErrorDist::gaussian();
        let mut stream = RandomStream::from_seed(11).substream("model-sim");
        let est = lyapunov_estimate(&spec, &dist, 200_000, 2_000, &mut stream).unwrap();
        assert!(est.clean);
        assert!(
            (est.mean - E_LOG_ABS_GAUSSIAN).abs() <= 3.0 * est.stderr,
            "mean = {}, want {} within 3 x {}",
            est.mean,
            E_LOG_ABS_GAUSSIAN,
            est.stderr
        );
    }

    #[test]
    fn p1_alt_estimator_is_identical_in_samples() {
        // for p = 1, w = |z| and |theta_1| = 1, so both functionals agree
        let spec = ModelSpec::arch(1.0, vec![1.0]).unwrap();
        let dist = ErrorDist::gaussian();
        let mut s1 = RandomStream::from_seed(5).substream("a");
        let mut s2 = RandomStream::from_seed(5).substream("a");
        let e1 = lyapunov_estimate(&spec, &dist, 20_000, 500, &mut s1).unwrap();
        let e2 = lyapunov_estimate_alt(&spec, &dist, 20_000, 500, &mut s2).unwrap();
        assert_abs_diff_eq!(e1.mean, e2.mean, epsilon = 1e-12);
    }

    #[test]
    fn estimators_agree_for_arch2() {
        let dist = ErrorDist::gaussian();
        // one contracting model, one expanding model
        for (bvec, expect_positive) in [(vec![0.5, 0.5], false), (vec![2.0, 2.0], true)] {
            let spec = ModelSpec::arch(1.0, bvec).unwrap();
            let root = RandomStream::from_seed(17).substream("agree");
            let e1 = lyapunov_replicated(&spec, &dist, 400_000, 2_000, 4, &root.substream("w"), false).unwrap();
            let e2 = lyapunov_replicated(&spec, &dist, 400_000, 2_000, 4, &root.substream("alt"), true).unwrap();
            let combined = (e1.stderr * e1.stderr + e2.stderr * e2.stderr).sqrt();
            assert!(
                (e1.mean - e2.mean).abs() <= 4.0 * combined,
                "w-form {} vs ratio-form {} (4 sigma = {})",
                e1.mean,
                e2.mean,
                4.0 * combined
            );
            assert_eq!(e1.mean > 0.0, expect_positive);
        }
    }

    #[test]
    fn nu_two_state_difference_converges_to_the_closed_form() {
        // for p = 1 the tabulated function (up to its additive constant)
        // converges to the closed-form values as the horizon grows
        let (a1, a2, b1, b2) = (0.3, -0.2, 0.8, 0.6);
        let spec = ModelSpec::tar_arch1(0.0, 1.0, a1, a2, b1, b2).unwrap();
        let dist = ErrorDist::gaussian();
        let an = crate::moments::order1_analysis(a1, a2, b1, b2, &dist, 1.0, QuadSettings::default()).unwrap();
        let grid = vec![
            SphereState::new(vec![-1.0]).unwrap(),
            SphereState::new(vec![1.0]).unwrap(),
        ];
        let stream = RandomStream::from_seed(59).substream("nu-p1");
        let nu = build_nu(&spec, &dist, 50, &grid, 20_000, &stream, QuadSettings::default()).unwrap();
        let (_, values) = nu.grid();
        let half_diff = (values[1] - values[0]) / 2.0;
        let noise = 4.0 * nu.max_stderr();
        assert!(
            (half_diff - an.nu_plus).abs() <= noise,
            "nu difference {} vs closed form {} (allowance {})",
            half_diff,
            an.nu_plus,
            noise
        );
    }

    #[test]
    fn intercepts_do_not_enter_the_collapsed_chain() {
        let dist = ErrorDist::gaussian();
        let spec_a = ModelSpec::tar_arch1(0.0, 0.5, 0.3, -0.2, 0.8, 1.1).unwrap();
        let spec_b = ModelSpec::tar_arch1(5.0, 5.0, 0.3, -0.2, 0.8, 1.1).unwrap();
        let mut s1 = RandomStream::from_seed(23).substream("scale");
        let mut s2 = RandomStream::from_seed(23).substream("scale");
        let e1 = lyapunov_estimate(&spec_a, &dist, 20_000, 500, &mut s1).unwrap();
        let e2 = lyapunov_estimate(&spec_b, &dist, 20_000, 500, &mut s2).unwrap();
        assert_eq!(e1.mean.to_bits(), e2.mean.to_bits());
    }

    #[test]
    fn p1_scaling_law_is_exact_pathwise() {
        // pure ARCH(1): scaling b by c shifts every log w sample by log c
        let dist = ErrorDist::gaussian();
        let c = 3.0;
        let spec_1 = ModelSpec::arch(1.0, vec![0.7]).unwrap();
        let spec_c = ModelSpec::arch(1.0, vec![0.7 * c]).unwrap();
        let mut s1 = RandomStream::from_seed(9).substream("scale-law");
        let mut s2 = RandomStream::from_seed(9).substream("scale-law");
        let e1 = lyapunov_estimate(&spec_1, &dist, 20_000, 500, &mut s1).unwrap();
        let e2 = lyapunov_estimate(&spec_c, &dist, 20_000, 500, &mut s2).unwrap();
        assert_abs_diff_eq!(e2.mean - e1.mean, c.ln(), epsilon = 1e-10);
    }

    #[test]
    fn nu_with_t1_is_q_on_the_grid() {
        let spec = ModelSpec::arch(1.0, vec![0.5, 0.5]).unwrap();
        let dist = ErrorDist::gaussian();
        let grid = sphere_grid(2, 32, 1e-6, spec.hyperplanes(), 1e-6);
        let stream = RandomStream::from_seed(31).substream("nu");
        let nu = build_nu(&spec, &dist, 1, &grid, 8, &stream, q_default()).unwrap();
        let (points, values) = nu.grid();
        let mut cache = HashMap::new();
        for (pt, v) in points.iter().zip(values) {
            let q = q_value(&spec, &dist, pt, q_default(), &mut cache).unwrap();
            assert_abs_diff_eq!(*v, q, epsilon = 1e-9);
        }
    }

    #[test]
    fn nu_symmetric_under_reflection_for_symmetric_models() {
        let spec = ModelSpec::arch(1.0, vec![0.6, 0.6]).unwrap();
        let dist = ErrorDist::gaussian();
        let base = sphere_grid(2, 16, 1e-3, &[], 1e-3);
        let mut grid = base.clone();
        for s in &base {
            let neg: Vec<f64> = s.coords().iter().map(|x| -x).collect();
            grid.push(SphereState::new(neg).unwrap());
        }
        let stream = RandomStream::from_seed(37).substream("nu-sym");
        let nu = build_nu(&spec, &dist, 5, &grid, 3000, &stream, q_default()).unwrap();
        let (_, values) = nu.grid();
        let n = base.len();
        for i in 0..n {
            let diff = (values[i] - values[n + i]).abs();
            assert!(diff < 0.08, "nu asymmetry {diff} at grid point {i}");
        }
    }

    #[test]
    fn near_equilibrium_with_zero_nu_measures_q_deviation() {
        let spec = ModelSpec::arch(1.0, vec![0.5, 0.5]).unwrap();
        let dist = ErrorDist::gaussian();
        let probes = sphere_grid(2, 8, 1e-3, &[], 1e-3);
        let stream = RandomStream::from_seed(41).substream("ne-zero");
        let nu = NuFunction::zero(2);
        let report = near_equilibrium_check(&spec, &dist, &nu, &probes, 0.0, 20_000, &stream).unwrap();
        // with nu = 0 and reference 0, each row estimates q(theta) directly
        let mut cache = HashMap::new();
        for row in &report.rows {
            let theta = SphereState::new(row.theta.clone()).unwrap();
            let q = q_value(&spec, &dist, &theta, q_default(), &mut cache).unwrap();
            assert!(
                (row.estimate - q).abs() <= 4.0 * row.stderr,
                "estimate {} vs q {} (se {})",
                row.estimate,
                row.stderr,
                q
            );
        }
    }

    #[test]
    fn p1_state_frequencies_match_the_two_state_law() {
        // occupation frequencies of +/-1 converge to p1/(p1+p2), p2/(p1+p2);
        // oracle values by quadrature through the closed-form analysis
        let (a1, a2, b1, b2) = (0.4, -0.3, 0.9, 0.7);
        let spec = ModelSpec::tar_arch1(0.0, 1.0, a1, a2, b1, b2).unwrap();
        let dist = ErrorDist::gaussian();
        let an = crate::moments::order1_analysis(a1, a2, b1, b2, &dist, 1.0, QuadSettings::default()).unwrap();
        let mut stream = RandomStream::from_seed(53).substream("pi");
        let n = 60_000;
        let counts = two_state_transition_counts(&spec, &dist, n, 2_000, &mut stream).unwrap();
        let freq_plus = counts.visits_plus as f64 / n as f64;
        // dependent samples: inflate the binomial stderr by the two-state
        // chain's integrated autocorrelation time (closed form)
        let act = (2.0 - an.p1 - an.p2) / (an.p1 + an.p2);
        let se = (an.pi_plus * an.pi_minus / n as f64).sqrt() * act.max(1.0).sqrt();
        assert!(
            (freq_plus - an.pi_plus).abs() <= 3.0 * se,
            "freq {} vs pi_plus {} (3 se = {})",
            freq_plus,
            an.pi_plus,
            3.0 * se
        );
    }

    #[test]
    fn stationarity_identity_and_ks() {
        let spec = ModelSpec::arch(1.0, vec![0.5, 0.5]).unwrap();
        let dist = ErrorDist::gaussian();
        let stream = RandomStream::from_seed(47).substream("stat");
        let rep = stationarity_diagnostic(&spec, &dist, 400, 2_000, 50, &stream).unwrap();
        assert!(rep.max_identity_dev <= 1e-12);
        assert!(rep.ks_pass, "ks = {} threshold = {}", rep.ks_distance, rep.ks_threshold);
        // symmetric errors: sign balance near 1/2 (3 binomial sigma)
        let se = 0.5 / (rep.samples_per_run as f64).sqrt();
        assert!((rep.frac_first_coord_positive - 0.5).abs() <= 3.0 * se + 0.05);
    }
}
