//! Moment-condition machinery: growth rates of r-th moment products along
//! the collapsed chain, sphere weight functions for the weighted drift
//! condition, the tail index solver, and the closed-form criteria.
//!
//! The r-th moment of the model's stationary law is governed by
//! g(r) = lim_n sup_theta ( E prod_{t<=n} w(theta_t, e_t)^r )^(1/n):
//! finite r-th moments go with g(r) < 1, and the tail index is the root of
//! g(r) = 1. Expectations of such products are dominated by rare large
//! excursions, so the estimator here propagates a particle population with
//! systematic resampling and reads the expectation off the per-step
//! normalizing constants (all in log space). A naive average of independent
//! chain products has relative variance growing like (g(2r)/g(r)^2)^n and is
//! useless near the tail root; the resampled estimator is unbiased for the
//! same quantity with variance growing only linearly in n.
//!
//! ```
//! use tarch::moments::drift_test_function;
//!
//! // contraction factor and weights from drift coefficients:
//! // d_1 = 1 and beta d_i = c_i + d_{i+1} by construction
//! let c = [0.25, 0.25];
//! let tf = drift_test_function(&c).unwrap();
//! assert!((tf.d[0] - 1.0).abs() < 1e-12);
//! assert!((tf.beta * tf.d[1] - c[1]).abs() < 1e-12);
//! ```

use crate::collapsed::{self, LOG_CLAMP};
use crate::dist::{ErrorDist, QuadSettings, Side};
use crate::error::{Result, TarchError};
use crate::model::ModelSpec;
use crate::rng::RandomStream;
use crate::sphere::{self, SphereState};
use crate::stats::{self, KahanSum};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Tuning for the growth-rate estimator.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GrowthParams {
    pub r: f64,
    /// product horizon; the geometric rate is fitted on [n_max/2, n_max]
    pub n_max: usize,
    /// particles per start per replicate
    pub particles: usize,
    /// independent replicates; the stderr is their spread
    pub replicates: usize,
    /// additive inflation of w (used by the weight construction), usually 0
    pub delta: f64,
}

impl GrowthParams {
    pub fn new(r: f64) -> Self {
        Self {
            r,
            n_max: 24,
            particles: 256,
            replicates: 8,
            delta: 0.0,
        }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_particles(mut self, particles: usize) -> Self {
        self.particles = particles;
        self
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentVerdict {
    FiniteMoment,
    InfiniteMoment,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GrowthRow {
    pub n: usize,
    /// worst-over-starts estimate of E(prod w^r)^(1/n)
    pub g_n: f64,
}

/// Growth-rate estimate of the r-th moment products.
#[derive(Clone, Debug, Serialize)]
pub struct MomentGrowth {
    pub r: f64,
    pub rows: Vec<GrowthRow>,
    /// fitted geometric rate over the last half of the n-range
    pub g_hat: f64,
    /// replicate-spread standard error of g_hat
    pub stderr: f64,
    pub verdict: MomentVerdict,
    pub starts: usize,
    pub particles: usize,
    pub replicates: usize,
    pub stream_key: u64,
}

/// Systematic resampling: one uniform draw, N equally spaced positions over
/// the cumulative normalized weights. Weights are given in log space.
fn systematic_resample<R: Rng + ?Sized>(states: &mut Vec<SphereState>, log_weights: &[f64], rng: &mut R) {
    let n = states.len();
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return; // all weights vanished; keep the population as is
    }
    let weights: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>();
    let mut out = Vec::with_capacity(n);
    let mut cum = weights[0];
    let mut idx = 0usize;
    for k in 0..n {
        let target = (k as f64 + u) / n as f64 * total;
        while cum < target && idx + 1 < n {
            idx += 1;
            cum += weights[idx];
        }
        out.push(states[idx].clone());
    }
    *states = out;
}

/// Per-(start, replicate) table of log E(prod_{t<=n} (delta + w)^r),
/// n = 1..n_max, via the particle system.
fn particle_log_product_table(
    spec: &ModelSpec,
    dist: &ErrorDist,
    start: &SphereState,
    params: &GrowthParams,
    stream: &mut RandomStream,
) -> Result<Vec<f64>> {
    let n_particles = params.particles;
    let mut states = vec![start.clone(); n_particles];
    let mut log_norm = KahanSum::new();
    let mut table = Vec::with_capacity(params.n_max);
    let mut counters = collapsed::ChainCounters::default();
    let mut log_weights = vec![0.0f64; n_particles];
    for _ in 1..=params.n_max {
        for (state, lw) in states.iter_mut().zip(log_weights.iter_mut()) {
            let (_z, w) = collapsed::drive_step(spec, dist, state, stream, &mut counters)?;
            *lw = params.r * (params.delta + w).ln().max(LOG_CLAMP);
        }
        let c = stats::log_mean_exp(&log_weights);
        log_norm.add(c);
        table.push(log_norm.value());
        systematic_resample(&mut states, &log_weights, stream);
    }
    Ok(table)
}

fn fit_rate(table: &[f64], n_max: usize) -> f64 {
    // least squares on the last half of the n-range
    let lo = (n_max / 2).max(1);
    let xs: Vec<f64> = (lo..=n_max).map(|n| n as f64).collect();
    let ys: Vec<f64> = (lo..=n_max).map(|n| table[n - 1]).collect();
    let (slope, _) = stats::ls_slope(&xs, &ys);
    slope.exp()
}

/// Estimates the growth rate g(r) of the worst-case moment products over the
/// given start set.
pub fn growth_rate(
    spec: &ModelSpec,
    dist: &ErrorDist,
    params: &GrowthParams,
    start_set: &[SphereState],
    stream: &RandomStream,
) -> Result<MomentGrowth> {
    if params.r > dist.r0() {
        return Err(TarchError::InfiniteMoment {
            r: params.r,
            r0: dist.r0(),
        });
    }
    if !(params.r > 0.0) {
        return Err(TarchError::Domain("moment order must be positive".into()));
    }
    if params.n_max < 4 {
        return Err(TarchError::Domain("n_max must be at least 4".into()));
    }
    if start_set.is_empty() {
        return Err(TarchError::Domain("start set must be nonempty".into()));
    }

    // tables[rep][start][n-1] of log E(prod w^r)
    let tables: Result<Vec<Vec<Vec<f64>>>> = (0..params.replicates)
        .into_par_iter()
        .map(|rep| {
            start_set
                .iter()
                .enumerate()
                .map(|(si, start)| {
                    let mut s = stream.split(rep as u64).split(si as u64);
                    particle_log_product_table(spec, dist, start, params, &mut s)
                })
                .collect()
        })
        .collect();
    let tables = tables?;

    // replicate-level rates from each replicate's own worst-start curve
    let rep_rates: Vec<f64> = tables
        .iter()
        .map(|per_start| {
            let worst: Vec<f64> = (0..params.n_max)
                .map(|t| {
                    per_start
                        .iter()
                        .map(|tab| tab[t])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            fit_rate(&worst, params.n_max)
        })
        .collect();
    let (_, stderr) = stats::mean_and_stderr(&rep_rates);

    // merged curve: average the product expectations over replicates
    // (in the linear domain), then take the worst start
    let mut merged_worst = Vec::with_capacity(params.n_max);
    for t in 0..params.n_max {
        let mut worst = f64::NEG_INFINITY;
        for si in 0..start_set.len() {
            let logs: Vec<f64> = tables.iter().map(|rep| rep[si][t]).collect();
            worst = worst.max(stats::log_mean_exp(&logs));
        }
        merged_worst.push(worst);
    }
    let g_hat = fit_rate(&merged_worst, params.n_max);
    let rows: Vec<GrowthRow> = merged_worst
        .iter()
        .enumerate()
        .map(|(t, lm)| GrowthRow {
            n: t + 1,
            g_n: (lm / (t + 1) as f64).exp(),
        })
        .collect();

    let verdict = if g_hat + 3.0 * stderr < 1.0 {
        MomentVerdict::FiniteMoment
    } else if g_hat - 3.0 * stderr > 1.0 {
        MomentVerdict::InfiniteMoment
    } else {
        MomentVerdict::Inconclusive
    };

    Ok(MomentGrowth {
        r: params.r,
        rows,
        g_hat,
        stderr,
        verdict,
        starts: start_set.len(),
        particles: params.particles,
        replicates: params.replicates,
        stream_key: stream.key(),
    })
}

/// Sphere grid plus draws from a long stationary run: the start set used to
/// approximate the sup over the sphere (a lower bound on it). Near-duplicate
/// starts are dropped; a max over redundant noisy estimates of the same
/// quantity would only add selection bias.
pub fn default_start_set(
    spec: &ModelSpec,
    dist: &ErrorDist,
    grid_points: usize,
    stationary_draws: usize,
    stream: &RandomStream,
) -> Result<Vec<SphereState>> {
    let mut set = sphere::sphere_grid(spec.p(), grid_points, 1e-6, spec.hyperplanes(), 1e-6);
    if stationary_draws > 0 {
        let mut s = stream.substream("start-set");
        let mut theta = SphereState::uniform(spec.p(), &mut s);
        let mut counters = collapsed::ChainCounters::default();
        for _ in 0..2_000 {
            collapsed::drive_step(spec, dist, &mut theta, &mut s, &mut counters)?;
        }
        for _ in 0..stationary_draws {
            for _ in 0..50 {
                collapsed::drive_step(spec, dist, &mut theta, &mut s, &mut counters)?;
            }
            if set.iter().all(|existing| existing.dist(&theta) > 1e-9) {
                set.push(theta.clone());
            }
        }
    }
    Ok(set)
}

/// A positive weight function on the sphere, tabulated on a grid with
/// nearest-point evaluation.
#[derive(Clone, Debug)]
pub struct SphereWeight {
    points: Vec<SphereState>,
    values: Vec<f64>,
    pub n: usize,
    pub delta: f64,
    pub r: f64,
    pub bounds_ok: bool,
}

impl SphereWeight {
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

    pub fn grid(&self) -> (&[SphereState], &[f64]) {
        (&self.points, &self.values)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Builds the weight function lambda(theta) as the geometric mean of the
/// first n-1 delta-inflated product expectations from theta:
/// lambda = prod_{t=1}^{n-1} q_t(theta)^(1/n) with
/// q_t(theta) = E( prod_{s<=t} (delta + w_s)^r | theta_0 = theta ).
/// n = 1 gives the constant weight 1 (empty product).
#[allow(clippy::too_many_arguments)]
pub fn build_sphere_weight(
    spec: &ModelSpec,
    dist: &ErrorDist,
    r: f64,
    n: usize,
    delta: f64,
    grid: &[SphereState],
    inner_samples: usize,
    stream: &RandomStream,
) -> Result<SphereWeight> {
    assert!(n >= 1);
    assert!(!grid.is_empty());
    if !(delta > 0.0) && n > 1 {
        return Err(TarchError::WeightConstruction("delta must be positive".into()));
    }
    let values: Result<Vec<f64>> = grid
        .par_iter()
        .enumerate()
        .map(|(gi, start)| {
            if n == 1 {
                return Ok(1.0);
            }
            let mut s = stream.split(gi as u64);
            let mut counters = collapsed::ChainCounters::default();
            // log_products[c][t] accumulated per chain
            let mut per_t: Vec<Vec<f64>> = vec![Vec::with_capacity(inner_samples); n - 1];
            for _ in 0..inner_samples {
                let mut theta = start.clone();
                let mut acc = KahanSum::new();
                for t in 1..n {
                    let (_z, w) = collapsed::drive_step(spec, dist, &mut theta, &mut s, &mut counters)?;
                    acc.add(r * (delta + w).ln().max(LOG_CLAMP));
                    per_t[t - 1].push(acc.value());
                }
            }
            let mut log_lambda = KahanSum::new();
            for t_vals in &per_t {
                log_lambda.add(stats::log_mean_exp(t_vals));
            }
            Ok((log_lambda.value() / n as f64).exp())
        })
        .collect();
    let values = values?;

    // bound check: delta^t <= q_t <= K6^t gives
    // delta^((n-1)/2) <= lambda <= K6^((n-1)/2); estimate K6 from the grid
    // as the largest one-step inflated moment
    let bounds_ok = if n == 1 {
        true
    } else {
        let k6: Result<f64> = grid
            .iter()
            .map(|theta| {
                let alpha = spec.a_hom(theta.coords())?;
                let beta = spec.b_hom(theta.coords())?;
                let s2 = theta.trailing_sq();
                // E (delta + sqrt(z^2 + s2))^r bounded above by
                // E (delta + |z| + sqrt(s2))^r; cheap overestimate via the
                // affine moment with shifted intercept
                let shifted = dist.abs_power_moment_affine(alpha.abs() + delta + s2.sqrt(), beta.abs(), r, QuadSettings::default())?;
                Ok(shifted)
            })
            .try_fold(0.0f64, |m, v: Result<f64>| Ok(m.max(v?)));
        let k6 = k6?;
        let lo = delta.powf((n as f64 - 1.0) / 2.0);
        let hi = k6.powf((n as f64 - 1.0) / 2.0);
        values.iter().all(|v| *v >= lo * (1.0 - 1e-9) && *v <= hi * (1.0 + 1e-9))
    };

    Ok(SphereWeight {
        points: grid.to_vec(),
        values,
        n,
        delta,
        r,
        bounds_ok,
    })
}

/// Picks the inflation delta for the weight construction: start at
/// 0.01 x median(w) under a pilot run and halve until the inflated growth
/// rate stays below 1, up to 20 halvings.
pub fn choose_delta(
    spec: &ModelSpec,
    dist: &ErrorDist,
    params: &GrowthParams,
    start_set: &[SphereState],
    stream: &RandomStream,
) -> Result<(f64, MomentGrowth)> {
    let mut s = stream.substream("delta-pilot");
    let mut theta = SphereState::uniform(spec.p(), &mut s);
    let mut counters = collapsed::ChainCounters::default();
    let mut ws = Vec::with_capacity(4096);
    for _ in 0..4096 {
        let (_z, w) = collapsed::drive_step(spec, dist, &mut theta, &mut s, &mut counters)?;
        ws.push(w);
    }
    ws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = ws[ws.len() / 2];
    let mut delta = 0.01 * median;
    for _ in 0..20 {
        let inflated = GrowthParams { delta, ..*params };
        let growth = growth_rate(spec, dist, &inflated, start_set, &stream.substream("delta-eval"))?;
        if growth.g_hat + 2.0 * growth.stderr < 1.0 {
            return Ok((delta, growth));
        }
        delta /= 2.0;
    }
    Err(TarchError::WeightConstruction(format!(
        "no delta with inflated growth rate below 1 after 20 halvings (model may have no finite r = {} moment)",
        params.r
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CondVerdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftCheckRow {
    pub theta: Vec<f64>,
    pub estimate: f64,
    pub stderr: f64,
}

/// Monte Carlo check of the weighted one-step drift condition
/// sup_theta E( lambda(theta_1)/lambda(theta) w(theta, e)^r ) < 1.
#[derive(Clone, Debug, Serialize)]
pub struct DriftCheck {
    pub rows: Vec<DriftCheckRow>,
    pub sup_estimate: f64,
    /// max - min of the probe means (constancy diagnostic)
    pub spread: f64,
    pub verdict: CondVerdict,
}

pub fn weighted_drift_check(
    spec: &ModelSpec,
    dist: &ErrorDist,
    r: f64,
    lambda: &(dyn Fn(&SphereState) -> f64 + Sync),
    probes: &[SphereState],
    inner_samples: usize,
    stream: &RandomStream,
) -> Result<DriftCheck> {
    let rows: Result<Vec<DriftCheckRow>> = probes
        .par_iter()
        .enumerate()
        .map(|(i, theta)| {
            let mut s = stream.split(i as u64);
            let mut counters = collapsed::ChainCounters::default();
            let lam_here = lambda(theta);
            let mut vals = Vec::with_capacity(inner_samples);
            for _ in 0..inner_samples {
                let mut next = theta.clone();
                let (_z, w) = collapsed::drive_step(spec, dist, &mut next, &mut s, &mut counters)?;
                vals.push(lambda(&next) / lam_here * w.powf(r));
            }
            let (mean, se) = stats::mean_and_stderr(&vals);
            Ok(DriftCheckRow {
                theta: theta.coords().to_vec(),
                estimate: mean,
                stderr: se,
            })
        })
        .collect();
    let rows = rows?;
    let sup = rows.iter().fold(f64::NEG_INFINITY, |m, r| m.max(r.estimate));
    let min = rows.iter().fold(f64::INFINITY, |m, r| m.min(r.estimate));
    let verdict = if rows.iter().all(|r| r.estimate + 3.0 * r.stderr < 1.0) {
        CondVerdict::Holds
    } else if rows.iter().any(|r| r.estimate - 3.0 * r.stderr > 1.0) {
        CondVerdict::Fails
    } else {
        CondVerdict::Inconclusive
    };
    Ok(DriftCheck {
        rows,
        sup_estimate: sup,
        spread: sup - min,
        verdict,
    })
}

/// Tail-index solution: the moment order at which the product growth rate
/// crosses 1.
#[derive(Clone, Debug, Serialize)]
pub struct KappaIteration {
    pub r: f64,
    pub g: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KappaSolution {
    pub kappa: f64,
    pub g_at_kappa: f64,
    pub bracket: (f64, f64),
    pub iterations: Vec<KappaIteration>,
    pub converged: bool,
    /// evaluations were nondecreasing in r up to noise
    pub monotone: bool,
    pub stream_key: u64,
}

/// Bracketed root-find on r -> g(r): common random numbers across
/// evaluations, bisection on the measured sign of g - 1.
pub fn solve_kappa(
    spec: &ModelSpec,
    dist: &ErrorDist,
    bracket: (f64, f64),
    tol: f64,
    template: &GrowthParams,
    start_set: &[SphereState],
    stream: &RandomStream,
) -> Result<KappaSolution> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(TarchError::Domain(format!("invalid bracket ({lo}, {hi})")));
    }
    // no positive root exists unless the model contracts
    let mut lstream = stream.substream("kappa-lyap");
    let lyap = collapsed::lyapunov_estimate(spec, dist, 50_000, 2_000, &mut lstream)?;
    if lyap.mean >= 0.0 {
        return Err(TarchError::NonContractive { log_rho: lyap.mean });
    }

    let eval_stream = stream.substream("kappa-eval"); // same stream per call: CRN
    let mut iterations = Vec::new();
    let eval = |r: f64, iterations: &mut Vec<KappaIteration>| -> Result<(f64, f64)> {
        let params = GrowthParams { r, ..*template };
        let growth = growth_rate(spec, dist, &params, start_set, &eval_stream)?;
        iterations.push(KappaIteration {
            r,
            g: growth.g_hat,
            stderr: growth.stderr,
        });
        Ok((growth.g_hat, growth.stderr))
    };

    let (g_lo, _) = eval(lo, &mut iterations)?;
    let (g_hi, _) = eval(hi, &mut iterations)?;
    if !(g_lo < 1.0 && g_hi > 1.0) {
        return Err(TarchError::Bracket { lo, hi, g_lo, g_hi });
    }

    let (mut a, mut b) = (lo, hi);
    let (mut g_a, mut g_b) = (g_lo, g_hi);
    let mut converged = false;
    for _ in 0..40 {
        let mid = 0.5 * (a + b);
        let (g, _se) = eval(mid, &mut iterations)?;
        if (g - 1.0).abs() <= tol {
            converged = true;
        }
        if g < 1.0 {
            a = mid;
            g_a = g;
        } else {
            b = mid;
            g_b = g;
        }
        if converged || b - a < 1e-4 {
            break;
        }
    }
    // log-linear interpolation inside the final bracket, then one
    // confirming evaluation at the interpolated point
    let kappa = if g_a < 1.0 && g_b > 1.0 {
        a + (b - a) * (-g_a.ln()) / (g_b.ln() - g_a.ln())
    } else {
        0.5 * (a + b)
    };
    let (g_mid, _) = eval(kappa, &mut iterations)?;
    converged = converged || (g_mid - 1.0).abs() <= tol;

    // monotonicity audit over the recorded evaluations
    let mut sorted = iterations.clone();
    sorted.sort_by(|x, y| x.r.partial_cmp(&y.r).unwrap());
    let monotone = sorted
        .windows(2)
        .all(|w| w[1].g >= w[0].g - 2.0 * (w[0].stderr + w[1].stderr));

    Ok(KappaSolution {
        kappa,
        g_at_kappa: g_mid,
        bracket,
        iterations,
        converged,
        monotone,
        stream_key: stream.key(),
    })
}

/// Report for the simple functional-coefficient moment bound.
#[derive(Clone, Debug, Serialize)]
pub struct FcarMomentReport {
    pub r: f64,
    /// 1 for the r <= 1 branch, 2 for 1 < r <= 2
    pub branch: u8,
    pub c: Vec<f64>,
    pub sum_c: f64,
    pub holds: bool,
    pub abs_moment: f64,
}

/// Evaluates the simple sufficient moment condition from coefficient bounds
/// |a(x)| <= a_0 + sum a_i |x_i|, b(x)^2 <= b_0^2 + sum b_i^2 x_i^2:
/// r <= 1 uses c_i = a_i^r + b_i^r E|e|^r; 1 < r <= 2 (symmetric errors;
/// for r = 2, mean zero) uses c_i = a_i (sum a_k)^(r-1) + b_i^r E|e|^r.
pub fn fcar_moment_condition(
    avec_bound: &[f64],
    bvec_bound: &[f64],
    dist: &ErrorDist,
    r: f64,
    q: QuadSettings,
) -> Result<FcarMomentReport> {
    if avec_bound.len() != bvec_bound.len() || avec_bound.is_empty() {
        return Err(TarchError::Domain("coefficient bound vectors must have equal nonzero length".into()));
    }
    if avec_bound.iter().chain(bvec_bound).any(|v| !(*v >= 0.0)) {
        return Err(TarchError::Domain("coefficient bounds must be nonnegative".into()));
    }
    if !(r > 0.0 && r <= 2.0) {
        return Err(TarchError::Domain(format!("condition applies for 0 < r <= 2, got {r}")));
    }
    let abs_moment = dist.abs_power_moment(r, q)?;
    let (branch, c): (u8, Vec<f64>) = if r <= 1.0 {
        (
            1,
            avec_bound
                .iter()
                .zip(bvec_bound)
                .map(|(a, b)| a.powf(r) + b.powf(r) * abs_moment)
                .collect(),
        )
    } else {
        if r < 2.0 && !dist.is_symmetric() {
            return Err(TarchError::Domain("1 < r < 2 requires errors symmetric about 0".into()));
        }
        if r == 2.0 && !dist.mean_zero() {
            return Err(TarchError::Domain("r = 2 requires E(e) = 0".into()));
        }
        let sum_a: f64 = avec_bound.iter().sum();
        let factor = if sum_a > 0.0 { sum_a.powf(r - 1.0) } else { 0.0 };
        (
            2,
            avec_bound
                .iter()
                .zip(bvec_bound)
                .map(|(a, b)| a * factor + b.powf(r) * abs_moment)
                .collect(),
        )
    };
    let sum_c: f64 = c.iter().sum();
    Ok(FcarMomentReport {
        r,
        branch,
        c,
        sum_c,
        holds: sum_c < 1.0,
        abs_moment,
    })
}

/// The exponential test function behind the simple moment bound.
#[derive(Clone, Debug, Serialize)]
pub struct TestFunction {
    /// contraction factor, the unique root in (0,1) of sum beta^-i c_i = 1
    pub beta: f64,
    /// weights d_i = sum_{j>=i} beta^(i-j-1) c_j, with d_1 = 1
    pub d: Vec<f64>,
}

/// Builds (beta, d) from drift coefficients c with sum c_i < 1: beta solves
/// sum_i beta^(-i) c_i = 1 and the weights satisfy beta d_i = c_i + d_{i+1}
/// with d_1 = 1 and d_{p+1} = 0.
pub fn drift_test_function(c: &[f64]) -> Result<TestFunction> {
    if c.is_empty() {
        return Err(TarchError::Domain("need at least one coefficient".into()));
    }
    if c.iter().any(|v| !(*v >= 0.0)) {
        return Err(TarchError::Domain("coefficients must be nonnegative".into()));
    }
    let sum: f64 = c.iter().sum();
    if !(sum < 1.0) || sum == 0.0 {
        return Err(TarchError::Domain(format!(
            "sum of coefficients must be in (0, 1), got {sum}"
        )));
    }
    let phi = |beta: f64| -> f64 {
        c.iter()
            .enumerate()
            .map(|(i, ci)| ci * beta.powi(-(i as i32 + 1)))
            .sum::<f64>()
            - 1.0
    };
    // phi is decreasing in beta with phi(1) = sum - 1 < 0; walk down to a
    // positive endpoint, then bisect
    let mut lo = 0.5;
    while phi(lo) <= 0.0 {
        lo /= 2.0;
        if lo < 1e-300 {
            return Err(TarchError::Domain("failed to bracket the contraction factor".into()));
        }
    }
    let mut hi = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = 0.5 * (lo + hi);
    let p = c.len();
    let mut d = vec![0.0; p];
    for i in 1..=p {
        let mut s = KahanSum::new();
        for (j, cj) in c.iter().enumerate().skip(i - 1) {
            // beta^(i - j - 1) with i, j one-based: exponent i - (j+1) - 1
            s.add(cj * beta.powi(i as i32 - (j as i32 + 1) - 1));
        }
        d[i - 1] = s.value();
    }
    Ok(TestFunction { beta, d })
}

/// Explicit r-th moment condition for the threshold ARCH(p) model with
/// delay 1, plus the per-regime test-function weights it induces.
#[derive(Clone, Debug, Serialize)]
pub struct TarchDelay1Report {
    pub r: f64,
    /// P(e < 0), P(e > 0)
    pub p1: f64,
    pub p2: f64,
    /// E(|e|^r ; e < 0), E(|e|^r ; e > 0)
    pub e1: f64,
    pub e2: f64,
    pub abs_moment: f64,
    /// left-hand side of the moment condition
    pub lhs: f64,
    pub holds: bool,
    pub beta: Option<f64>,
    /// `d[j][i]`: weight of |x_{i+1}|^r in regime j (0: first coord <= 0)
    pub d: Option<[Vec<f64>; 2]>,
    /// worst violation of the defining identities
    pub max_identity_err: Option<f64>,
}

/// Checks b_{11}^r E_1 + b_{21}^r E_2 + sum_{i>=2} (b_{1i}^r p_1 +
/// b_{2i}^r p_2) E|e|^r < 1 and, when it holds, constructs the per-regime
/// weights d_{ji} and verifies their recursions to reporting precision.
pub fn tarch_delay1_moment_condition(
    b1vec: &[f64],
    b2vec: &[f64],
    dist: &ErrorDist,
    r: f64,
    q: QuadSettings,
) -> Result<TarchDelay1Report> {
    let p = b1vec.len();
    if p == 0 || b2vec.len() != p {
        return Err(TarchError::Domain("loading vectors must have equal nonzero length".into()));
    }
    if b1vec.iter().chain(b2vec).any(|b| !(*b > 0.0)) {
        return Err(TarchError::Domain("all loadings must be strictly positive".into()));
    }
    if !(r > 0.0 && r <= 2.0) {
        return Err(TarchError::Domain(format!("condition applies for 0 < r <= 2, got {r}")));
    }
    let p1 = dist.tail_prob(0.0, Side::Minus);
    let p2 = dist.tail_prob(0.0, Side::Plus);
    let e1 = dist.partial_power_moment(0.0, 1.0, r, Side::Minus, q)?;
    let e2 = dist.partial_power_moment(0.0, 1.0, r, Side::Plus, q)?;
    let abs_moment = dist.abs_power_moment(r, q)?;

    let mut c = Vec::with_capacity(p);
    c.push(b1vec[0].powf(r) * e1 + b2vec[0].powf(r) * e2);
    for i in 1..p {
        c.push((b1vec[i].powf(r) * p1 + b2vec[i].powf(r) * p2) * abs_moment);
    }
    let lhs: f64 = c.iter().sum();
    let holds = lhs < 1.0;

    if !holds {
        return Ok(TarchDelay1Report {
            r,
            p1,
            p2,
            e1,
            e2,
            abs_moment,
            lhs,
            holds,
            beta: None,
            d: None,
            max_identity_err: None,
        });
    }

    let tf = drift_test_function(&c)?;
    let beta = tf.beta;
    let mut d = [vec![0.0; p], vec![0.0; p]];
    for (j, bvec) in [b1vec, b2vec].iter().enumerate() {
        // tail sums of the c-recursion, shared by both regimes
        d[j][p - 1] = bvec[p - 1].powf(r) * abs_moment / beta;
        for i in (0..p - 1).rev() {
            let mut tail = KahanSum::new();
            for (k, ck) in c.iter().enumerate().skip(i + 1) {
                // beta^(i - k - 1) with both zero-based: (i+1) - (k+1) - 1
                tail.add(ck * beta.powi(i as i32 - k as i32 - 1));
            }
            d[j][i] = bvec[i].powf(r) * abs_moment / beta + tail.value();
        }
    }

    // identity audit: d11 E1 + d21 E2 = E|e|^r, the boundary relation at
    // i = p, and the interior recursion at i < p
    let mixed = d[0][0] * e1 + d[1][0] * e2;
    let mut err: f64 = (mixed - abs_moment).abs() / abs_moment.max(1e-300);
    for j in 0..2 {
        let bvec = if j == 0 { b1vec } else { b2vec };
        let lhs_p = bvec[p - 1].powf(r) * mixed;
        err = err.max((lhs_p - beta * d[j][p - 1]).abs() / (beta * d[j][p - 1]).max(1e-300));
        for i in 0..p - 1 {
            let lhs_i = bvec[i].powf(r) * mixed + d[0][i + 1] * p1 + d[1][i + 1] * p2;
            err = err.max((lhs_i - beta * d[j][i]).abs() / (beta * d[j][i]).max(1e-300));
        }
    }

    Ok(TarchDelay1Report {
        r,
        p1,
        p2,
        e1,
        e2,
        abs_moment,
        lhs,
        holds,
        beta: Some(beta),
        d: Some(d),
        max_identity_err: Some(err),
    })
}

impl TarchDelay1Report {
    /// The induced sphere weight: lambda(theta) = sum_i d_{ji} |theta_i|^r
    /// with the regime chosen by the sign of the first coordinate.
    pub fn weight_fn(&self) -> Option<impl Fn(&SphereState) -> f64 + Sync + '_> {
        let d = self.d.as_ref()?;
        let r = self.r;
        Some(move |theta: &SphereState| {
            let j = if theta.coords()[0] < 0.0 { 0 } else { 1 };
            theta
                .coords()
                .iter()
                .zip(&d[j])
                .map(|(x, di)| di * x.abs().powf(r))
                .sum()
        })
    }
}

/// Closed-form first-order analysis of the two-state collapsed chain.
#[derive(Clone, Debug, Serialize)]
pub struct Order1Analysis {
    pub r: f64,
    /// P(a1 - b1 e < 0), P(a2 + b2 e < 0)
    pub p1: f64,
    pub p2: f64,
    /// stationary weights of the states -1 and +1
    pub pi_minus: f64,
    pub pi_plus: f64,
    pub log_rho: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    /// `e_matrix[i-1][j-1]` = E(|a_i + (-1)^i b_i e|^r ; (-1)^j (..) > 0)
    pub e_matrix: [[f64; 2]; 2],
    /// the two inequalities of the weighted moment condition
    pub cond_weighted_pair: (bool, bool),
    pub cond_weighted: bool,
    /// stationary-expectation condition E(w^r) < 1 under the two-state law
    pub cond_stationary: bool,
}

/// First-order threshold model: closed-form stationary law, Lyapunov
/// exponent, near-equilibrium values and r-th moment conditions, all by
/// quadrature.
pub fn order1_analysis(
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
    dist: &ErrorDist,
    r: f64,
    q: QuadSettings,
) -> Result<Order1Analysis> {
    if !(b1 > 0.0 && b2 > 0.0) {
        return Err(TarchError::Domain("volatility loadings must be positive".into()));
    }
    if r > dist.r0() {
        return Err(TarchError::InfiniteMoment { r, r0: dist.r0() });
    }
    let p1 = dist.tail_prob(a1 / b1, Side::Plus);
    let p2 = dist.tail_prob(-a2 / b2, Side::Minus);
    let total = p1 + p2;
    let pi_minus = p2 / total;
    let pi_plus = p1 / total;
    let l1 = dist.log_abs_moment(a1, -b1, q)?;
    let l2 = dist.log_abs_moment(a2, b2, q)?;
    let log_rho = (p2 * l1 + p1 * l2) / total;
    let nu_plus = (l2 - l1) / (2.0 * total);
    let nu_minus = -nu_plus;

    let e11 = dist.partial_power_moment(a1, -b1, r, Side::Minus, q)?;
    let e12 = dist.partial_power_moment(a1, -b1, r, Side::Plus, q)?;
    let e21 = dist.partial_power_moment(a2, b2, r, Side::Minus, q)?;
    let e22 = dist.partial_power_moment(a2, b2, r, Side::Plus, q)?;

    let first = e12.max(e22) < 1.0;
    let second = e11 * e21 < (1.0 - e12) * (1.0 - e22);
    let stationary = (p2 * (e11 + e12) + p1 * (e21 + e22)) / total < 1.0;

    Ok(Order1Analysis {
        r,
        p1,
        p2,
        pi_minus,
        pi_plus,
        log_rho,
        nu_plus,
        nu_minus,
        e_matrix: [[e11, e12], [e21, e22]],
        cond_weighted_pair: (first, second),
        cond_weighted: first && second,
        cond_stationary: stationary,
    })
}

impl Order1Analysis {
    /// Open interval of admissible weight ratios gamma = lambda(+1)/lambda(-1)
    /// when the weighted condition holds.
    pub fn gamma_interval(&self) -> Option<(f64, f64)> {
        if !self.cond_weighted {
            return None;
        }
        let [[e11, e12], [e21, e22]] = self.e_matrix;
        let lo = e21 / (1.0 - e22);
        let hi = if e11 > 0.0 { (1.0 - e12) / e11 } else { f64::INFINITY };
        Some((lo, hi))
    }
}
