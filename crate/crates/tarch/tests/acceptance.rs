//! Acceptance suite: one test per criterion, each printing a PASS line when
//! its assertions hold. Every oracle is independent of the simulation path
//! it checks (closed forms, quadrature, or hand-rolled reference
//! integration). Run with `cargo test --test acceptance -- --nocapture` to
//! see the lines.

use tarch::collapsed::{self, NuFunction};
use tarch::dist::{ErrorDist, QuadSettings};
use tarch::fullchain;
use tarch::matrixprod::{self, NormKind};
use tarch::model::ModelSpec;
use tarch::moments::{self, GrowthParams, MomentVerdict};
use tarch::rng::RandomStream;
use tarch::sphere::{sphere_grid, SphereState};

const Q: QuadSettings = QuadSettings {
    abs_tol: 1e-9,
    rel_tol: 1e-10,
    max_intervals: 20_000,
};

/// E log|e| for the standard gaussian, frozen from the independent Simpson
/// oracle below (closed form -(euler_gamma + ln 2)/2).
const E_LOG_ABS_GAUSSIAN: f64 = -0.635_181_422_730_739_1;

/// Independent reference oracle: composite Simpson integration of
/// 2 * ln(u) * phi(u) on (0, 9], graded toward the log singularity.
fn simpson_log_moment_oracle() -> f64 {
    let phi = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let f = |u: f64| 2.0 * u.ln() * phi(u);
    let mut total = 0.0;
    // geometric panels [9 * 2^-(k+1), 9 * 2^-k], each integrated by Simpson
    let mut hi = 9.0f64;
    for _ in 0..60 {
        let lo = hi / 2.0;
        let m = 256;
        let h = (hi - lo) / m as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..m {
            let x = lo + i as f64 * h;
            s += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        total += s * h / 3.0;
        hi = lo;
    }
    total
}

fn combined(se1: f64, se2: f64) -> f64 {
    se1.hypot(se2)
}

// ---------------------------------------------------------------------------
// 1. ARCH(1) boundary: value at b = 1 and the zero-crossing bracket, under
//    30 seconds single-threaded.
// ---------------------------------------------------------------------------
#[test]
fn criterion_1_arch1_boundary() {
    let start = std::time::Instant::now();
    let oracle = simpson_log_moment_oracle();
    assert!(
        (oracle - E_LOG_ABS_GAUSSIAN).abs() < 1e-9,
        "reference oracle drifted: {oracle}"
    );

    let dist = ErrorDist::gaussian();
    let run = |b: f64, seed: u64| {
        let spec = ModelSpec::arch(1.0, vec![b]).unwrap();
        let mut stream = RandomStream::from_seed(seed).substream("acc1");
        collapsed::lyapunov_estimate(&spec, &dist, 1_000_000, 10_000, &mut stream).unwrap()
    };

    let est = run(1.0, 11);
    assert!(est.clean);
    assert!(
        (est.mean - E_LOG_ABS_GAUSSIAN).abs() <= 4.0 * est.stderr,
        "log rho at b=1: {} vs {} (4 se = {})",
        est.mean,
        E_LOG_ABS_GAUSSIAN,
        4.0 * est.stderr
    );

    // zero-crossing bracket around b* = exp(-E log|e|) ~ 1.8874; at b* the
    // exponent is 0 exactly
    let b_star = (-E_LOG_ABS_GAUSSIAN).exp();
    assert!(b_star > 1.85 && b_star < 1.93);
    let at_star = run(b_star, 14);
    assert!(
        at_star.mean.abs() <= 3.0 * at_star.stderr,
        "log rho at b* should be statistically zero: {} +- {}",
        at_star.mean,
        at_star.stderr
    );
    let lo = run(1.85, 12);
    let hi = run(1.93, 13);
    assert!(
        lo.mean + 3.0 * lo.stderr < 0.0,
        "log rho at b=1.85 should be negative: {} +- {}",
        lo.mean,
        lo.stderr
    );
    assert!(
        hi.mean - 3.0 * hi.stderr > 0.0,
        "log rho at b=1.93 should be positive: {} +- {}",
        hi.mean,
        hi.stderr
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "runtime {elapsed:?} exceeds 30 s");
    println!(
        "ACCEPTANCE 1 PASS: ARCH(1) boundary (log rho {:.6} vs {:.6}, crossing in [1.85, 1.93], {:.1?})",
        est.mean, E_LOG_ABS_GAUSSIAN, elapsed
    );
}

// ---------------------------------------------------------------------------
// 2. Estimator triangle for ARCH(2): collapsed, ratio-form, matrix products
//    and full-chain drift all pairwise agree within 4 combined stderr.
// ---------------------------------------------------------------------------
#[test]
fn criterion_2_estimator_triangle() {
    let spec = ModelSpec::arch(1.0, vec![0.5, 0.5]).unwrap();
    let dist = ErrorDist::gaussian();
    let root = RandomStream::from_seed(22).substream("acc2");

    let est = collapsed::lyapunov_replicated(&spec, &dist, 600_000, 5_000, 4, &root.substream("w"), false).unwrap();
    let alt = collapsed::lyapunov_replicated(&spec, &dist, 600_000, 5_000, 4, &root.substream("alt"), true).unwrap();
    let gamma =
        matrixprod::top_lyapunov_exponent(&[0.5, 0.5], &dist, 100_000, 8, &root.substream("matrix"), NormKind::Frobenius)
            .unwrap();
    let drift_table = fullchain::empirical_drift(&spec, &dist, &[1e8], 20, 800, &root.substream("drift")).unwrap();
    let drift = &drift_table.rows[0];

    let pairs = [
        ("collapsed vs ratio", est.mean, est.stderr, alt.mean, alt.stderr),
        ("collapsed vs gamma/2", est.mean, est.stderr, gamma.gamma / 2.0, gamma.stderr / 2.0),
        ("collapsed vs drift", est.mean, est.stderr, drift.mean_drift, drift.stderr),
        ("ratio vs gamma/2", alt.mean, alt.stderr, gamma.gamma / 2.0, gamma.stderr / 2.0),
        ("ratio vs drift", alt.mean, alt.stderr, drift.mean_drift, drift.stderr),
        ("gamma/2 vs drift", gamma.gamma / 2.0, gamma.stderr / 2.0, drift.mean_drift, drift.stderr),
    ];
    for (name, m1, s1, m2, s2) in pairs {
        let tol = 4.0 * combined(s1, s2);
        assert!(
            (m1 - m2).abs() <= tol,
            "{name}: {m1} vs {m2} differ by {} > {tol}",
            (m1 - m2).abs()
        );
    }
    println!(
        "ACCEPTANCE 2 PASS: estimator triangle (collapsed {:.5}, ratio {:.5}, gamma/2 {:.5}, drift {:.5})",
        est.mean,
        alt.mean,
        gamma.gamma / 2.0,
        drift.mean_drift
    );
}

// ---------------------------------------------------------------------------
// 3. First-order closed forms: transition frequencies, Lyapunov exponent and
//    the exact near-equilibrium function on 20 random parameter draws.
// ---------------------------------------------------------------------------
#[test]
fn criterion_3_order1_closed_form() {
    use rand::Rng;
    let dist = ErrorDist::gaussian();
    let mut param_stream = RandomStream::from_seed(33).substream("acc3-params");
    let run_stream = RandomStream::from_seed(34).substream("acc3-runs");

    for draw in 0..20 {
        let a1 = -1.0 + 2.0 * param_stream.random::<f64>();
        let a2 = -1.0 + 2.0 * param_stream.random::<f64>();
        let b1 = 0.3 + 1.2 * param_stream.random::<f64>();
        let b2 = 0.3 + 1.2 * param_stream.random::<f64>();
        let an = moments::order1_analysis(a1, a2, b1, b2, &dist, 1.0, Q).unwrap();
        let spec = ModelSpec::tar_arch1(0.0, 1.0, a1, a2, b1, b2).unwrap();

        // transition frequencies vs (p1, p2) within 3 binomial stderr
        let mut s = run_stream.split(draw as u64);
        let counts = collapsed::two_state_transition_counts(&spec, &dist, 40_000, 1_000, &mut s).unwrap();
        let freq_minus = counts.minus_to_plus as f64 / counts.visits_minus as f64;
        let freq_plus = counts.plus_to_minus as f64 / counts.visits_plus as f64;
        let se1 = (an.p1 * (1.0 - an.p1) / counts.visits_minus as f64).sqrt();
        let se2 = (an.p2 * (1.0 - an.p2) / counts.visits_plus as f64).sqrt();
        assert!(
            (freq_minus - an.p1).abs() <= 3.0 * se1,
            "draw {draw}: -1 -> +1 frequency {freq_minus} vs p1 {} (3 se = {})",
            an.p1,
            3.0 * se1
        );
        assert!(
            (freq_plus - an.p2).abs() <= 3.0 * se2,
            "draw {draw}: +1 -> -1 frequency {freq_plus} vs p2 {} (3 se = {})",
            an.p2,
            3.0 * se2
        );

        // Lyapunov estimate vs the closed form within 4 stderr
        let mut s = run_stream.split(1_000 + draw as u64);
        let est = collapsed::lyapunov_estimate(&spec, &dist, 40_000, 1_000, &mut s).unwrap();
        assert!(
            (est.mean - an.log_rho).abs() <= 4.0 * est.stderr,
            "draw {draw}: log rho {} vs closed form {} (4 se = {})",
            est.mean,
            an.log_rho,
            4.0 * est.stderr
        );

        // exact nu makes the near-equilibrium deviation statistically zero
        let probes = vec![
            SphereState::new(vec![-1.0]).unwrap(),
            SphereState::new(vec![1.0]).unwrap(),
        ];
        let nu = NuFunction::from_table(probes.clone(), vec![an.nu_minus, an.nu_plus], 0, 0);
        let report = collapsed::near_equilibrium_check(
            &spec,
            &dist,
            &nu,
            &probes,
            an.log_rho,
            20_000,
            &run_stream.split(2_000 + draw as u64),
        )
        .unwrap();
        for row in &report.rows {
            assert!(
                row.deviation.abs() <= 4.0 * row.stderr,
                "draw {draw}: near-equilibrium deviation {} at theta {:?} (4 se = {})",
                row.deviation,
                row.theta,
                4.0 * row.stderr
            );
        }
    }
    println!("ACCEPTANCE 3 PASS: first-order closed forms on 20 random parameter draws");
}

// ---------------------------------------------------------------------------
// 4. Delay-specific TARCH(2) and the uniform-coefficient ARCH(2) with
//    scale-mixture errors share the Lyapunov exponent.
// ---------------------------------------------------------------------------
#[test]
fn criterion_4_mixture_equivalence() {
    let root = RandomStream::from_seed(44).substream("acc4");
    for (k, (b1, b2)) in [(0.5, 0.9), (0.3, 1.2)].into_iter().enumerate() {
        let tarch = ModelSpec::tarch_delay1(1.0, 1.0, vec![b1, b1], vec![b2, b2]).unwrap();
        let gaussian = ErrorDist::gaussian();
        let arch = ModelSpec::arch(1.0, vec![1.0, 1.0]).unwrap();
        let mixture = ErrorDist::scale_mixture(ErrorDist::gaussian(), (0.5, 0.5), (b1, b2)).unwrap();

        let e1 = collapsed::lyapunov_replicated(
            &tarch,
            &gaussian,
            600_000,
            5_000,
            4,
            &root.substream("tarch").split(k as u64),
            false,
        )
        .unwrap();
        let e2 = collapsed::lyapunov_replicated(
            &arch,
            &mixture,
            600_000,
            5_000,
            4,
            &root.substream("mixture").split(k as u64),
            false,
        )
        .unwrap();
        let tol = 4.0 * combined(e1.stderr, e2.stderr);
        assert!(
            (e1.mean - e2.mean).abs() <= tol,
            "(b1, b2) = ({b1}, {b2}): {} vs {} differ by {} > {tol}",
            e1.mean,
            e2.mean,
            (e1.mean - e2.mean).abs()
        );
    }
    println!("ACCEPTANCE 4 PASS: delay-specific TARCH(2) matches mixture-error ARCH(2)");
}

// ---------------------------------------------------------------------------
// 5. Moment boundary tracking for delay-1 TARCH(2) at r = 2, plus the
//    constancy of the weighted drift expectation under the induced weights.
// ---------------------------------------------------------------------------
#[test]
fn criterion_5_moment_boundary() {
    let dist = ErrorDist::gaussian();
    let root = RandomStream::from_seed(55).substream("acc5");
    let params = GrowthParams::new(2.0).with_n_max(16).with_particles(1024).with_replicates(8);

    // closed-form rate: the contraction factor beta solving
    // c (1/beta + 1/beta^2) = 1 with c = 2 b^2 E e^2 / 2 = b^2
    let beta_oracle = |b: f64| {
        let c = b * b;
        (c + (c * c + 4.0 * c).sqrt()) / 2.0
    };

    for (b, expect_finite) in [(0.6, true), (0.8, false)] {
        let spec = ModelSpec::tarch_delay1(1.0, 1.0, vec![b, b], vec![b, b]).unwrap();
        let start_set = moments::default_start_set(&spec, &dist, 32, 16, &root.substream("starts")).unwrap();
        let growth = moments::growth_rate(&spec, &dist, &params, &start_set, &root.substream("growth")).unwrap();
        let oracle = beta_oracle(b);
        assert!(
            (growth.g_hat - oracle).abs() <= 4.0 * growth.stderr + 0.02,
            "b = {b}: g_hat {} vs oracle {oracle} (se {})",
            growth.g_hat,
            growth.stderr
        );
        if expect_finite {
            assert_eq!(growth.verdict, MomentVerdict::FiniteMoment, "b = {b}: {:?}", growth.verdict);
        } else {
            assert_eq!(growth.verdict, MomentVerdict::InfiniteMoment, "b = {b}: {:?}", growth.verdict);
        }
    }

    // r = 2 equality: under the induced weights the one-step weighted drift
    // expectation is the same constant beta at every probe point
    let b = 0.6;
    let spec = ModelSpec::tarch_delay1(1.0, 1.0, vec![b, b], vec![b, b]).unwrap();
    let rep = moments::tarch_delay1_moment_condition(&[b, b], &[b, b], &dist, 2.0, Q).unwrap();
    assert!(rep.holds);
    let beta = rep.beta.unwrap();
    assert!((beta - beta_oracle(b)).abs() < 1e-10);
    let weight = rep.weight_fn().unwrap();
    let mut probes = sphere_grid(2, 12, 1e-3, spec.hyperplanes(), 1e-3);
    probes.push(SphereState::new(vec![-0.6, 0.8]).unwrap());
    let check = moments::weighted_drift_check(&spec, &dist, 2.0, &weight, &probes, 60_000, &root.substream("drift"))
        .unwrap();
    assert_eq!(check.verdict, moments::CondVerdict::Holds);
    let max_se = check.rows.iter().fold(0.0f64, |m, r| m.max(r.stderr));
    for row in &check.rows {
        assert!(
            (row.estimate - beta).abs() <= 4.0 * row.stderr,
            "probe {:?}: estimate {} vs beta {beta} ({} se)",
            row.theta,
            row.estimate,
            row.stderr
        );
    }
    assert!(
        check.spread <= 4.0 * std::f64::consts::SQRT_2 * max_se,
        "probe spread {} too large for constancy (max se {max_se})",
        check.spread
    );
    println!(
        "ACCEPTANCE 5 PASS: moment boundary at 2b^2 = 1 and constant weighted drift (beta {:.4}, spread {:.4})",
        beta, check.spread
    );
}

// ---------------------------------------------------------------------------
// 6. Tail index solver vs the scalar oracle root of b^kappa E|e|^kappa = 1.
// ---------------------------------------------------------------------------
#[test]
fn criterion_6_tail_index() {
    let dist = ErrorDist::gaussian();
    let root = RandomStream::from_seed(66).substream("acc6");

    // oracle: quadrature moment + bisection, independent of the simulator
    let oracle_root = |b: f64, lo: f64, hi: f64| {
        let g = |r: f64| b.powf(r) * dist.abs_power_moment(r, Q).unwrap();
        assert!(g(lo) < 1.0 && g(hi) > 1.0);
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    // b = 1: kappa = 2 exactly (E e^2 = 1)
    let kappa_1 = oracle_root(1.0, 0.5, 4.0);
    assert!((kappa_1 - 2.0).abs() < 1e-9);
    let spec = ModelSpec::arch(1.0, vec![1.0]).unwrap();
    let starts = sphere_grid(1, 2, 0.0, &[], 0.0);
    let template = GrowthParams::new(2.0).with_particles(8192).with_replicates(8).with_n_max(16);
    let sol = moments::solve_kappa(&spec, &dist, (0.5, 4.0), 0.01, &template, &starts, &root.substream("b1")).unwrap();
    assert!(sol.converged);
    assert!(
        (sol.kappa - kappa_1).abs() <= 0.05,
        "b = 1: kappa {} vs oracle {kappa_1}",
        sol.kappa
    );

    // b = 0.5: heavy root near 10.17
    let kappa_half = oracle_root(0.5, 8.0, 12.0);
    let spec = ModelSpec::arch(1.0, vec![0.5]).unwrap();
    let template = GrowthParams::new(2.0).with_particles(32_768).with_replicates(8).with_n_max(12);
    let sol = moments::solve_kappa(&spec, &dist, (8.0, 12.0), 0.01, &template, &starts, &root.substream("bhalf")).unwrap();
    assert!(sol.converged);
    assert!(
        (sol.kappa - kappa_half).abs() <= 0.05,
        "b = 0.5: kappa {} vs oracle {kappa_half}",
        sol.kappa
    );
    println!(
        "ACCEPTANCE 6 PASS: tail index solver (b=1: {:.4} vs {:.4}; b=0.5: {:.4} vs {:.4})",
        2.0, kappa_1, sol.kappa, kappa_half
    );
}

// ---------------------------------------------------------------------------
// 7. Algebraic identities: test-function construction, delay-1 weight
//    recursions, and the squared-state recursion.
// ---------------------------------------------------------------------------
#[test]
fn criterion_7_algebraic_identities() {
    use rand::Rng;
    let mut stream = RandomStream::from_seed(77).substream("acc7");

    // 100 random valid coefficient vectors
    for _ in 0..100 {
        let p = 1 + (stream.random::<u64>() % 5) as usize;
        let raw: Vec<f64> = (0..p).map(|_| stream.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let scale = 0.05 + 0.9 * stream.random::<f64>();
        let c: Vec<f64> = raw.iter().map(|x| x * scale / total.max(1e-9)).collect();
        let tf = moments::drift_test_function(&c).unwrap();
        assert!((tf.d[0] - 1.0).abs() <= 1e-12, "d1 = {}", tf.d[0]);
        for (i, ci) in c.iter().enumerate() {
            let next = if i + 1 < p { tf.d[i + 1] } else { 0.0 };
            let gap = (tf.beta * tf.d[i] - (ci + next)).abs();
            assert!(gap <= 1e-12, "recursion gap {gap} at i = {i}");
        }
    }

    // delay-1 weight identities to 1e-10 on asymmetric parameter sets
    let dist = ErrorDist::gaussian();
    for (b1, b2, r) in [
        (vec![0.5, 0.4, 0.3], vec![0.6, 0.2, 0.35], 2.0),
        (vec![0.4, 0.7], vec![0.8, 0.3], 1.3),
        (vec![0.6], vec![0.5], 2.0),
    ] {
        let rep = moments::tarch_delay1_moment_condition(&b1, &b2, &dist, r, Q).unwrap();
        assert!(rep.holds);
        assert!(
            rep.max_identity_err.unwrap() <= 1e-10,
            "identity error {}",
            rep.max_identity_err.unwrap()
        );
    }

    // squared-state recursion over 1e3 steps
    let b = vec![1.0, 1.0];
    let spec = ModelSpec::arch(0.0, b.clone()).unwrap();
    let mut s = RandomStream::from_seed(78).substream("acc7-trec");
    let check = matrixprod::squared_state_crosscheck(&spec, &b, &dist, 1_000, &mut s).unwrap();
    assert!(check.max_state_dev <= 1e-8, "state deviation {}", check.max_state_dev);
    assert!(check.max_w2_dev <= 1e-8, "w^2 deviation {}", check.max_w2_dev);

    println!("ACCEPTANCE 7 PASS: algebraic identities (test function, delay-1 weights, squared-state recursion)");
}

// ---------------------------------------------------------------------------
// 8. Small-r link: (g(r) - 1)/r at r = 1e-3 tracks the Lyapunov exponent on
//    three suite models.
// ---------------------------------------------------------------------------
#[test]
fn criterion_8_small_r_link() {
    let dist = ErrorDist::gaussian();
    let root = RandomStream::from_seed(88).substream("acc8");

    let models: Vec<(&str, ModelSpec)> = vec![
        ("arch1", ModelSpec::arch(1.0, vec![1.0]).unwrap()),
        ("arch2", ModelSpec::arch(1.0, vec![0.5, 0.5]).unwrap()),
        ("tar-arch1", ModelSpec::tar_arch1(0.0, 1.0, 0.3, -0.2, 0.8, 0.6).unwrap()),
    ];
    for (i, (name, spec)) in models.iter().enumerate() {
        let stream = root.split(i as u64);
        let est = collapsed::lyapunov_replicated(spec, &dist, 400_000, 5_000, 4, &stream.substream("lyap"), false)
            .unwrap();
        let starts = moments::default_start_set(spec, &dist, 16, 8, &stream.substream("starts")).unwrap();
        // the first model also exercises the smaller exponent
        let orders: &[f64] = if i == 0 { &[1e-3, 1e-4] } else { &[1e-3] };
        for &r in orders {
            let params = GrowthParams::new(r).with_particles(2048).with_replicates(8).with_n_max(24);
            let growth = moments::growth_rate(spec, &dist, &params, &starts, &stream.substream("growth")).unwrap();
            let linked = (growth.g_hat - 1.0) / r;
            let mc_error = 4.0 * combined(growth.stderr / r, est.stderr);
            let tol = 0.05 * est.mean.abs() + mc_error;
            assert!(
                (linked - est.mean).abs() <= tol,
                "{name} at r = {r}: (g-1)/r = {linked} vs log rho = {} (tol {tol})",
                est.mean
            );
        }
    }
    println!("ACCEPTANCE 8 PASS: small-r growth link on three suite models");
}

// ---------------------------------------------------------------------------
// 9. Determinism: every CLI command rerun with the same config and seed
//    produces byte-identical stdout, independent of the thread cap.
// ---------------------------------------------------------------------------
#[test]
fn criterion_9_cli_determinism() {
    use std::process::Command;

    let dir = std::env::temp_dir().join(format!("tarch-acc9-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let small = r#"
seed = 90
[model]
p = 2
hyperplanes = [[1.0, 0.0]]
[[model.regimes]]
pattern = [-1]
a = [0.0, 0.0]
b0 = 1.0
b = [0.5, 0.5]
[[model.regimes]]
pattern = [1]
a = [0.1, 0.0]
b0 = 1.0
b = [0.7, 0.4]
[error]
family = "gaussian"
[analysis]
n_steps = 20000
burn_in = 500
replicates = 2
particles = 128
growth_replicates = 4
n_max = 8
grid_points = 8
stationary_starts = 4
bracket = [0.5, 4.0]
kappa_tol = 0.05
radii = [1e6]
drift_n = 15
drift_replicates = 50
sim_n = 300
"#;
    let order1 = r#"
seed = 91
[model]
p = 1
hyperplanes = [[1.0]]
[[model.regimes]]
pattern = [-1]
a = [0.3]
b0 = 1.0
b = [0.8]
[[model.regimes]]
pattern = [1]
a = [-0.2]
b0 = 1.0
b = [0.6]
[error]
family = "gaussian"
"#;
    let arch1 = r#"
seed = 92
[model]
p = 1
[[model.regimes]]
a = [0.0]
b0 = 1.0
b = [0.9]
[error]
family = "gaussian"
[analysis]
n_steps = 20000
burn_in = 500
replicates = 2
particles = 256
growth_replicates = 4
n_max = 8
grid_points = 4
stationary_starts = 2
bracket = [1.0, 8.0]
kappa_tol = 0.05
"#;
    let small_path = dir.join("small.toml");
    let order1_path = dir.join("order1.toml");
    let arch1_path = dir.join("arch1.toml");
    std::fs::write(&small_path, small).unwrap();
    std::fs::write(&order1_path, order1).unwrap();
    std::fs::write(&arch1_path, arch1).unwrap();

    let bin = env!("CARGO_BIN_EXE_tarch");
    let run = |cmd: &str, cfg: &std::path::Path, threads: &str| {
        let output = Command::new(bin)
            .args([cmd, "--config", cfg.to_str().unwrap(), "--threads", threads])
            .output()
            .expect("CLI run");
        (output.stdout, output.status.code())
    };

    let cases: Vec<(&str, &std::path::Path)> = vec![
        ("check", &small_path),
        ("lyapunov", &small_path),
        ("moments", &small_path),
        ("kappa", &arch1_path),
        ("order1", &order1_path),
        ("crosscheck", &small_path),
        ("simulate", &small_path),
    ];
    for (cmd, cfg) in cases {
        let (out1, code1) = run(cmd, cfg, "2");
        let (out2, code2) = run(cmd, cfg, "2");
        assert_eq!(code1, code2, "{cmd}: exit codes differ");
        assert!(!out1.is_empty(), "{cmd}: empty stdout");
        assert_eq!(out1, out2, "{cmd}: reruns are not byte-identical");
        // a different thread cap must not change the bytes either
        let (out3, _) = run(cmd, cfg, "4");
        assert_eq!(out1, out3, "{cmd}: output depends on the thread cap");
    }

    std::fs::remove_dir_all(&dir).ok();
    println!("ACCEPTANCE 9 PASS: byte-identical CLI reports across reruns and thread caps");
}
