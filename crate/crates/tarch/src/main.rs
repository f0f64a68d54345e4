//! Batch front door: parse a model config, dispatch analyses, emit
//! machine-readable reports and plot-ready CSV.
//!
//! Exit codes: 0 = analysis ran, verdict definitive and positive;
//! 1 = definitive negative (assumption failure, transient model, condition
//! fails, disagreement); 2 = usage or configuration error; 3 = inconclusive.

use clap::{Parser, Subcommand};
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use tarch::collapsed::{self, LyapEstimate};
use tarch::config::RunConfig;
use tarch::dist::{ErrorDist, QuadSettings};
use tarch::error::TarchError;
use tarch::fullchain;
use tarch::matrixprod::{self, NormKind};
use tarch::model::ModelSpec;
use tarch::moments::{self, GrowthParams, MomentVerdict};
use tarch::rng::RandomStream;

#[derive(Parser)]
#[command(name = "tarch", version, about = "Stability analysis of threshold AR-ARCH models")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the TOML run configuration
    #[arg(long, short = 'c', global = true)]
    config: Option<PathBuf>,

    /// Override the config seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Cap the rayon worker count (does not change results)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for report.json and CSV traces
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Run even if the assumption checks fail
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Check the standing model/error assumptions
    Check,
    /// Estimate the Lyapunov exponent of the collapsed chain
    Lyapunov,
    /// Moment growth rate and closed-form moment conditions
    Moments,
    /// Solve for the tail index (root of the growth rate at 1)
    Kappa,
    /// Closed-form analysis of a first-order threshold model
    Order1,
    /// Cross-validate all Lyapunov estimators against each other
    Crosscheck,
    /// Simulate the raw time series to CSV
    Simulate,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    config: &'a RunConfig,
    report: T,
}

struct Ctx {
    config: RunConfig,
    spec: ModelSpec,
    dist: ErrorDist,
    root: RandomStream,
    out: Option<PathBuf>,
    force: bool,
}

impl Ctx {
    fn quad(&self) -> QuadSettings {
        QuadSettings {
            abs_tol: self.config.analysis.quad_tol,
            ..QuadSettings::default()
        }
    }

    fn emit<T: Serialize>(&self, command: &str, report: T, exit: u8) -> Result<u8, TarchError> {
        let env = Envelope {
            command,
            seed: self.config.seed,
            config: &self.config,
            report,
        };
        let json = serde_json::to_string_pretty(&env).expect("report serialization");
        println!("{json}");
        if let Some(dir) = &self.out {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("report.json"), json.as_bytes())?;
        }
        Ok(exit)
    }

    fn write_csv(&self, name: &str, header: &str, rows: &[String]) -> Result<(), TarchError> {
        if let Some(dir) = &self.out {
            std::fs::create_dir_all(dir)?;
            let mut f = std::fs::File::create(dir.join(name))?;
            writeln!(f, "{header}")?;
            for row in rows {
                writeln!(f, "{row}")?;
            }
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // a second build_global in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            let usage = matches!(
                err,
                TarchError::Config(_) | TarchError::MissingRegime { .. } | TarchError::Domain(_) | TarchError::Io(_)
            );
            eprintln!("error: {err}");
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

fn run(cli: &Cli) -> Result<u8, TarchError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| TarchError::Config("--config PATH is required".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let spec = config.build_model()?;
    let dist = config.build_dist()?;
    let root = RandomStream::from_seed(config.seed);
    let ctx = Ctx {
        config,
        spec,
        dist,
        root,
        out: cli.out.clone(),
        force: cli.force,
    };
    match cli.command {
        Command::Check => cmd_check(&ctx),
        Command::Lyapunov => cmd_lyapunov(&ctx),
        Command::Moments => cmd_moments(&ctx),
        Command::Kappa => cmd_kappa(&ctx),
        Command::Order1 => cmd_order1(&ctx),
        Command::Crosscheck => cmd_crosscheck(&ctx),
        Command::Simulate => cmd_simulate(&ctx),
    }
}

fn cmd_check(ctx: &Ctx) -> Result<u8, TarchError> {
    let report = ctx.spec.check_assumptions(&ctx.dist);
    let exit = if report.passed() { 0 } else { 1 };
    ctx.emit("check", report, exit)
}

#[derive(Serialize)]
struct LyapunovReport {
    assumptions_passed: bool,
    forced: bool,
    log_rho: LyapEstimate,
    log_rho_alt: LyapEstimate,
    estimators_agree: bool,
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    inconclusive_reason: Option<String>,
}

fn lyapunov_pair(ctx: &Ctx) -> Result<(LyapEstimate, LyapEstimate), TarchError> {
    let a = &ctx.config.analysis;
    let stream = ctx.root.substream("model-sim");
    let est = collapsed::lyapunov_replicated(
        &ctx.spec,
        &ctx.dist,
        a.n_steps,
        a.burn_in,
        a.replicates,
        &stream.substream("w-form"),
        false,
    )?;
    let alt = collapsed::lyapunov_replicated(
        &ctx.spec,
        &ctx.dist,
        a.n_steps,
        a.burn_in,
        a.replicates,
        &stream.substream("ratio-form"),
        true,
    )?;
    Ok((est, alt))
}

fn cmd_lyapunov(ctx: &Ctx) -> Result<u8, TarchError> {
    let assumptions = ctx.spec.check_assumptions(&ctx.dist);
    if !assumptions.passed() && !ctx.force {
        return ctx.emit(
            "lyapunov",
            serde_json::json!({
                "verdict": "assumptions-failed",
                "assumptions": assumptions,
            }),
            1,
        );
    }
    let (est, alt) = lyapunov_pair(ctx)?;
    let combined = (est.stderr.powi(2) + alt.stderr.powi(2)).sqrt();
    let estimators_agree = (est.mean - alt.mean).abs() <= 4.0 * combined;

    let (verdict, reason, exit): (&'static str, Option<String>, u8) = if est.unreliable || alt.unreliable {
        (
            "inconclusive",
            Some("more than 1% of log w samples hit the underflow clamp".into()),
            3,
        )
    } else if est.mean + 3.0 * est.stderr < 0.0 {
        ("geometrically-ergodic", None, 0)
    } else if est.mean - 3.0 * est.stderr > 0.0 {
        ("transient", None, 1)
    } else {
        (
            "inconclusive",
            Some("0 lies within 3 stderr of the Lyapunov estimate".into()),
            3,
        )
    };

    if ctx.out.is_some() {
        let mut s = ctx.root.substream("model-sim").substream("trace");
        let steps = collapsed::trace(&ctx.spec, &ctx.dist, 10_000.min(ctx.config.analysis.n_steps), &mut s)?;
        let rows: Vec<String> = steps
            .iter()
            .enumerate()
            .map(|(t, (theta, log_w))| {
                let coords = theta.coords().iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(",");
                format!("{t},{coords},{log_w}")
            })
            .collect();
        let coord_header = (1..=ctx.spec.p()).map(|i| format!("theta_{i}")).collect::<Vec<_>>().join(",");
        ctx.write_csv("trace.csv", &format!("t,{coord_header},log_w"), &rows)?;
    }

    ctx.emit(
        "lyapunov",
        LyapunovReport {
            assumptions_passed: assumptions.passed(),
            forced: ctx.force,
            log_rho: est,
            log_rho_alt: alt,
            estimators_agree,
            verdict,
            inconclusive_reason: reason,
        },
        exit,
    )
}

#[derive(Serialize)]
struct MomentsReport {
    growth: moments::MomentGrowth,
    #[serde(skip_serializing_if = "Option::is_none")]
    fcar: Option<moments::FcarMomentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fcar_note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tarch_delay1: Option<moments::TarchDelay1Report>,
    verdict: MomentVerdict,
}

/// Coefficient bounds |a(x)| <= a0 + sum a_i |x_i|, b^2 <= b0^2 + sum b_i^2 x_i^2
/// taken as the regime-wise maxima.
fn coefficient_bounds(spec: &ModelSpec) -> (Vec<f64>, Vec<f64>) {
    let p = spec.p();
    let mut a = vec![0.0f64; p];
    let mut b = vec![0.0f64; p];
    for (_, c) in spec.regimes() {
        for i in 0..p {
            a[i] = a[i].max(c.avec[i].abs());
            b[i] = b[i].max(c.bvec[i]);
        }
    }
    (a, b)
}

/// Detects the delay-1 threshold ARCH shape: two regimes split on the sign
/// of the first coordinate, zero conditional mean, positive loadings.
fn tarch_delay1_shape(spec: &ModelSpec) -> Option<(Vec<f64>, Vec<f64>)> {
    if spec.hyperplanes().len() != 1 {
        return None;
    }
    let mut plane = vec![0.0; spec.p()];
    plane[0] = 1.0;
    if spec.hyperplanes()[0] != plane {
        return None;
    }
    let mut b1 = None;
    let mut b2 = None;
    for (pattern, c) in spec.regimes() {
        // negated comparison keeps NaN loadings out
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if c.avec.iter().any(|a| *a != 0.0) || c.bvec.iter().any(|b| !(*b > 0.0)) {
            return None;
        }
        match pattern.as_slice() {
            [-1] => b1 = Some(c.bvec.clone()),
            [1] => b2 = Some(c.bvec.clone()),
            _ => return None,
        }
    }
    Some((b1?, b2?))
}

fn cmd_moments(ctx: &Ctx) -> Result<u8, TarchError> {
    let a = &ctx.config.analysis;
    let stream = ctx.root.substream("moments");
    let params = GrowthParams::new(a.r)
        .with_n_max(a.n_max)
        .with_particles(a.particles)
        .with_replicates(a.growth_replicates);
    let start_set = moments::default_start_set(&ctx.spec, &ctx.dist, a.grid_points, a.stationary_starts, &stream)?;
    let growth = moments::growth_rate(&ctx.spec, &ctx.dist, &params, &start_set, &stream.substream("growth"))?;

    let (abound, bbound) = coefficient_bounds(&ctx.spec);
    let (fcar, fcar_note) = match moments::fcar_moment_condition(&abound, &bbound, &ctx.dist, a.r, ctx.quad()) {
        Ok(rep) => (Some(rep), None),
        Err(e) => (None, Some(format!("{e}"))),
    };
    let tarch_delay1 = match tarch_delay1_shape(&ctx.spec) {
        Some((b1, b2)) if a.r <= 2.0 => {
            Some(moments::tarch_delay1_moment_condition(&b1, &b2, &ctx.dist, a.r, ctx.quad())?)
        }
        _ => None,
    };

    if ctx.out.is_some() {
        let rows: Vec<String> = growth.rows.iter().map(|r| format!("{},{}", r.n, r.g_n)).collect();
        ctx.write_csv("growth_curve.csv", "n,g_n", &rows)?;
    }

    let verdict = growth.verdict;
    let exit = match verdict {
        MomentVerdict::FiniteMoment => 0,
        MomentVerdict::InfiniteMoment => 1,
        MomentVerdict::Inconclusive => 3,
    };
    ctx.emit(
        "moments",
        MomentsReport {
            growth,
            fcar,
            fcar_note,
            tarch_delay1,
            verdict,
        },
        exit,
    )
}

fn cmd_kappa(ctx: &Ctx) -> Result<u8, TarchError> {
    let a = &ctx.config.analysis;
    let stream = ctx.root.substream("moments");
    let template = GrowthParams::new(a.r)
        .with_n_max(a.n_max)
        .with_particles(a.particles)
        .with_replicates(a.growth_replicates);
    let start_set = moments::default_start_set(&ctx.spec, &ctx.dist, a.grid_points, a.stationary_starts, &stream)?;
    match moments::solve_kappa(
        &ctx.spec,
        &ctx.dist,
        (a.bracket[0], a.bracket[1]),
        a.kappa_tol,
        &template,
        &start_set,
        &stream.substream("kappa"),
    ) {
        Ok(sol) => {
            let rows: Vec<String> = sol
                .iterations
                .iter()
                .map(|it| format!("{},{},{}", it.r, it.g, it.stderr))
                .collect();
            ctx.write_csv("kappa_curve.csv", "r,g,stderr", &rows)?;
            let exit = if sol.converged { 0 } else { 3 };
            ctx.emit("kappa", sol, exit)
        }
        Err(TarchError::NonContractive { log_rho }) => ctx.emit(
            "kappa",
            serde_json::json!({
                "error": "non-contractive",
                "detail": "no positive tail index exists: the Lyapunov exponent estimate is nonnegative",
                "log_rho": log_rho,
            }),
            1,
        ),
        Err(TarchError::Bracket { lo, hi, g_lo, g_hi }) => ctx.emit(
            "kappa",
            serde_json::json!({
                "error": "bracket",
                "detail": "growth rates at the bracket ends do not straddle 1",
                "bracket": [lo, hi],
                "g_lo": g_lo,
                "g_hi": g_hi,
            }),
            2,
        ),
        Err(e) => Err(e),
    }
}

fn cmd_order1(ctx: &Ctx) -> Result<u8, TarchError> {
    if ctx.spec.p() != 1 || ctx.spec.hyperplanes().len() != 1 {
        return Err(TarchError::Config(
            "order1 requires p = 1 with the single threshold at zero".into(),
        ));
    }
    let mut a1b1 = None;
    let mut a2b2 = None;
    for (pattern, c) in ctx.spec.regimes() {
        match pattern.as_slice() {
            [-1] => a1b1 = Some((c.avec[0], c.bvec[0])),
            [1] => a2b2 = Some((c.avec[0], c.bvec[0])),
            _ => {}
        }
    }
    let (a1, b1) = a1b1.ok_or_else(|| TarchError::Config("missing regime for pattern [-1]".into()))?;
    let (a2, b2) = a2b2.ok_or_else(|| TarchError::Config("missing regime for pattern [1]".into()))?;
    let analysis = moments::order1_analysis(a1, a2, b1, b2, &ctx.dist, ctx.config.analysis.r, ctx.quad())?;
    let exit = if analysis.log_rho < 0.0 {
        0
    } else if analysis.log_rho > 0.0 {
        1
    } else {
        3
    };
    ctx.emit("order1", analysis, exit)
}

#[derive(Serialize)]
struct CrosscheckReport {
    log_rho: LyapEstimate,
    log_rho_alt: LyapEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<matrixprod::GammaEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_note: Option<String>,
    drift: fullchain::DriftTable,
    agree_estimators: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    agree_gamma: Option<bool>,
    agree_drift: bool,
    all_agree: bool,
}

/// Pure ARCH detection: a single regime with zero conditional mean.
fn pure_arch_loadings(spec: &ModelSpec) -> Option<Vec<f64>> {
    let mut regimes = spec.regimes();
    let (_, c) = regimes.next()?;
    if regimes.next().is_some() || c.avec.iter().any(|a| *a != 0.0) {
        return None;
    }
    Some(c.bvec.clone())
}

fn cmd_crosscheck(ctx: &Ctx) -> Result<u8, TarchError> {
    let a = &ctx.config.analysis;
    let (est, alt) = lyapunov_pair(ctx)?;
    let combined = (est.stderr.powi(2) + alt.stderr.powi(2)).sqrt();
    let agree_estimators = (est.mean - alt.mean).abs() <= 4.0 * combined;

    let (gamma, gamma_note, agree_gamma) = match pure_arch_loadings(&ctx.spec) {
        Some(b_coeffs) if b_coeffs.iter().all(|b| *b > 0.0) => {
            let g = matrixprod::top_lyapunov_exponent(
                &b_coeffs,
                &ctx.dist,
                a.gamma_n,
                a.gamma_replicates,
                &ctx.root.substream("matrix"),
                NormKind::Frobenius,
            )?;
            if ctx.out.is_some() {
                let mut s = ctx.root.substream("matrix").substream("trace");
                let mut prod = matrixprod::CompanionProduct::new(b_coeffs.clone(), NormKind::Frobenius);
                let mut rows = Vec::new();
                for t in 1..=10_000usize {
                    prod.absorb(ctx.dist.sample(&mut s));
                    if t % 50 == 0 {
                        rows.push(format!("{t},{}", prod.average_log_norm()));
                    }
                }
                ctx.write_csv("gamma_trace.csv", "t,avg_log_norm", &rows)?;
            }
            let se = (g.stderr / 2.0).hypot(est.stderr);
            let agree = (g.gamma / 2.0 - est.mean).abs() <= 4.0 * se;
            (Some(g), None, Some(agree))
        }
        _ => (
            None,
            Some("matrix-product branch skipped: model is not pure ARCH with positive loadings".into()),
            None,
        ),
    };

    let drift = fullchain::empirical_drift(
        &ctx.spec,
        &ctx.dist,
        &a.radii,
        a.drift_n,
        a.drift_replicates,
        &ctx.root.substream("drift"),
    )?;
    let last = drift.rows.last().ok_or_else(|| TarchError::Config("radii must be nonempty".into()))?;
    let se = last.stderr.hypot(est.stderr);
    let agree_drift = (last.mean_drift - est.mean).abs() <= 4.0 * se;

    if ctx.out.is_some() {
        let rows: Vec<String> = drift
            .rows
            .iter()
            .map(|r| format!("{},{},{},{},{}", r.radius, r.n, r.mean_drift, r.stderr, r.max_drift))
            .collect();
        ctx.write_csv("drift_table.csv", "radius,n,mean_drift,stderr,max_drift", &rows)?;
    }

    let all_agree = agree_estimators && agree_gamma.unwrap_or(true) && agree_drift;
    let exit = if all_agree { 0 } else { 1 };
    ctx.emit(
        "crosscheck",
        CrosscheckReport {
            log_rho: est,
            log_rho_alt: alt,
            gamma,
            gamma_note,
            drift,
            agree_estimators,
            agree_gamma,
            agree_drift,
            all_agree,
        },
        exit,
    )
}

fn cmd_simulate(ctx: &Ctx) -> Result<u8, TarchError> {
    let a = &ctx.config.analysis;
    let x0 = a.x0.clone().unwrap_or_else(|| vec![1.0; ctx.spec.p()]);
    let mut stream = ctx.root.substream("simulate");
    let path = fullchain::simulate(&ctx.spec, &ctx.dist, &x0, a.sim_n, &mut stream)?;

    let mut csv = String::from("t,xi,norm\n");
    for (t, (xi, norm)) in path.values.iter().zip(&path.norms).enumerate() {
        csv.push_str(&format!("{},{},{}\n", t + 1, xi, norm));
    }
    if let Some(t) = path.exploded_at {
        csv.push_str(&format!("# numerically exploded at t = {t}\n"));
    }
    match &ctx.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("path.csv"), csv.as_bytes())?;
            ctx.emit(
                "simulate",
                serde_json::json!({
                    "n": path.values.len(),
                    "exploded_at": path.exploded_at,
                    "final_norm": path.norms.last(),
                    "csv": "path.csv",
                }),
                0,
            )
        }
        None => {
            print!("{csv}");
            Ok(0)
        }
    }
}
