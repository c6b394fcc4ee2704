//! Acceptance suite: one test per criterion, each printing a pass line with
//! its measured quantities (run with `--nocapture` to see them).

use sie::calculus::{isometry_check, l2_norm_at, sup_l2_norm, AdaptedProcess};
use sie::coefficients::{BoundPolicy, Coefficient, TimeFn};
use sie::conditions::{check_banach, check_schauder, InitialLaw, SieProblem, Verdict};
use sie::fredholm::{solve_fredholm, FredholmProblem, Kernel};
use sie::math::{mean_and_se, sample_std};
use sie::paths::{BrownianEnsemble, TimeGrid};
use sie::picard::{
    apply_operator, contraction_probe, equicontinuity_probe, euler_maruyama, random_ball_element,
    residual, solve_picard, PicardOptions,
};
use std::sync::{LazyLock, Mutex, MutexGuard};
use std::time::Instant;

/// Criteria with wall-clock budgets take this lock so they are not timed
/// while competing with each other for cores.
static TIMED: LazyLock<Mutex<()>> = LazyLock::new(|| Mutex::new(()));

fn timed_slot() -> MutexGuard<'static, ()> {
    TIMED.lock().unwrap_or_else(|e| e.into_inner())
}

fn gbm_problem() -> SieProblem {
    SieProblem::new(
        0.0,
        1.0,
        InitialLaw::Constant(1.0),
        Coefficient::Linear(TimeFn::Const(0.05)),
        Coefficient::Linear(TimeFn::Const(0.2)),
    )
    .unwrap()
}

fn constant_problem() -> SieProblem {
    SieProblem::new(
        0.0,
        1.0,
        InitialLaw::Constant(1.0),
        Coefficient::Constant(1.0),
        Coefficient::Constant(1.0),
    )
    .unwrap()
}

#[test]
fn c01_ito_isometry() {
    let _slot = timed_slot();
    let grid = TimeGrid::new(0.0, 1.0, 1000).unwrap();
    let n = 100_000;
    let ensemble = BrownianEnsemble::sample(&grid, n, 20_250_101).unwrap();
    for name in ["one", "t", "B"] {
        let started = Instant::now();
        let integrand = match name {
            "one" => AdaptedProcess::constant(&grid, n, 1.0).unwrap(),
            "t" => AdaptedProcess::from_time_fn(&grid, n, |t| t).unwrap(),
            _ => AdaptedProcess::brownian_paths(&ensemble),
        };
        let rep = isometry_check(&integrand, &ensemble, 0.02).unwrap();
        let elapsed = started.elapsed().as_secs_f64();
        let gap = (rep.lhs - rep.rhs).abs();
        assert!(
            gap <= 4.0 * rep.diff_std_error,
            "integrand {name}: |lhs-rhs| = {gap} > 4 se = {}",
            4.0 * rep.diff_std_error
        );
        assert!(elapsed < 10.0, "integrand {name} took {elapsed:.1} s");
        println!(
            "criterion 1 [{name}]: PASS - lhs {:.6}, rhs {:.6}, gap {:.2e} <= 4se {:.2e}, {elapsed:.2} s",
            rep.lhs,
            rep.rhs,
            gap,
            4.0 * rep.diff_std_error
        );
    }
}

#[test]
fn c02_contraction_bound() {
    let _slot = timed_slot();
    let started = Instant::now();
    let problem = gbm_problem();
    let grid = TimeGrid::new(0.0, 1.0, 64).unwrap();
    let mut ratios = Vec::new();
    for seed in [71u64, 72, 73, 74, 75] {
        let ensemble = BrownianEnsemble::sample(&grid, 20_000, seed).unwrap();
        let ratio = contraction_probe(&problem, &ensemble, 32, 2.0, seed ^ 0xabcd).unwrap();
        ratios.push(ratio);
    }
    let elapsed = started.elapsed().as_secs_f64();
    let max_ratio = ratios.iter().cloned().fold(0.0f64, f64::max);
    let spread = sample_std(&ratios);
    assert!(
        max_ratio <= 0.2 + 4.0 * spread,
        "max probe ratio {max_ratio} > 0.2 + 4 sd = {}",
        0.2 + 4.0 * spread
    );
    assert!(elapsed < 30.0, "probe study took {elapsed:.1} s");
    println!(
        "criterion 2: PASS - ratios {ratios:.4?}, max {max_ratio:.4} <= 0.2 + 4 sd ({:.4}), {elapsed:.1} s",
        0.2 + 4.0 * spread
    );
}

#[test]
fn c03_geometric_convergence() {
    let problem = gbm_problem();
    let grid = TimeGrid::new(0.0, 1.0, 512).unwrap();
    let ensemble = BrownianEnsemble::sample(&grid, 20_000, 88).unwrap();
    let res = solve_picard(&problem, &ensemble, &PicardOptions::new(1e-6, 30, 89)).unwrap();
    assert!(
        res.converged,
        "not converged in {} iterations",
        res.iterations
    );
    assert!(
        res.iterations <= 12,
        "{} iterations exceeds 12",
        res.iterations
    );
    let mut worst = 0.0f64;
    for w in res.history.windows(2) {
        if w[0] > 0.0 {
            let ratio = w[1] / w[0];
            worst = worst.max(ratio);
            assert!(ratio <= 0.23, "update ratio {ratio} exceeds 0.23");
        }
    }
    println!(
        "criterion 3: PASS - converged in {} iterations, worst update ratio {worst:.4} <= 0.23",
        res.iterations
    );
}

#[test]
fn c04_ball_containment() {
    let problem = constant_problem();
    // exact boundary arithmetic: lhs = rhs = 9 bit-for-bit
    let rep = check_schauder(&problem, 3.0, &BoundPolicy::AnalyticOnly).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    assert_eq!(rep.get("lhs"), Some(9.0));
    assert_eq!(rep.get("rhs"), Some(9.0));
    let grid = TimeGrid::new(0.0, 1.0, 128).unwrap();
    let ensemble = BrownianEnsemble::sample(&grid, 4_000, 91).unwrap();
    let h = problem.initial_law().sample(ensemble.n_paths(), 92);
    let mut worst = 0.0f64;
    for idx in 0..100 {
        let x = random_ball_element(&ensemble, 3.0, 93, idx).unwrap();
        let sx = sup_l2_norm(&x).unwrap().value;
        assert!(sx <= 3.0 * (1.0 + 1e-9), "generator escaped the ball: {sx}");
        let ax = apply_operator(&problem, &x, &ensemble, &h).unwrap();
        let est = sup_l2_norm(&ax).unwrap();
        worst = worst.max(est.value - 4.0 * est.std_error);
        assert!(
            est.value <= 3.0 + 4.0 * est.std_error,
            "image norm {} > 3 + 4 se {}",
            est.value,
            3.0 + 4.0 * est.std_error
        );
    }
    println!(
        "criterion 4: PASS - boundary lhs = rhs = 9 exact, 100 images inside the ball (worst margin base {worst:.4} <= 3)"
    );
}

#[test]
fn c05_equicontinuity_modulus() {
    let problem = constant_problem();
    let grid = TimeGrid::new(0.0, 1.0, 128).unwrap();
    let ensemble = BrownianEnsemble::sample(&grid, 4_000, 95).unwrap();
    // d = 1 for the constant problem: bound 2 (1 + b - a) d^2 = 4
    let bound = 2.0 * (1.0 + 1.0 - 0.0) * 1.0;
    let moduli: Vec<f64> = (0..10)
        .map(|idx| {
            equicontinuity_probe(
                &problem,
                &ensemble,
                &random_ball_element(&ensemble, 3.0, 96, idx).unwrap(),
                3.0,
            )
            .unwrap()
        })
        .collect();
    let (mean, _) = mean_and_se(&moduli);
    let rel_spread = if mean > 0.0 {
        sample_std(&moduli) / mean
    } else {
        0.0
    };
    let cap = bound * (1.0 + 4.0 * rel_spread);
    for (i, m) in moduli.iter().enumerate() {
        assert!(*m <= cap, "element {i}: modulus {m} > {cap}");
    }
    println!(
        "criterion 5: PASS - 10 moduli in [{:.3}, {:.3}] <= bound {bound} * (1 + 4 rel-sd) = {cap:.3}",
        moduli.iter().cloned().fold(f64::INFINITY, f64::min),
        moduli.iter().cloned().fold(0.0, f64::max)
    );
}

#[test]
fn c06_gbm_oracle() {
    let _slot = timed_slot();
    let started = Instant::now();
    let problem = gbm_problem();
    let (rate, vol) = (0.05f64, 0.2f64);

    // moment table at m = 512, n = 2e4
    let grid = TimeGrid::new(0.0, 1.0, 512).unwrap();
    let n = 20_000;
    let ensemble = BrownianEnsemble::sample(&grid, n, 20_250_202).unwrap();
    let opts = PicardOptions::new(1e-8, 40, 777);
    let res = solve_picard(&problem, &ensemble, &opts).unwrap();
    assert!(res.converged);
    let terminals: Vec<f64> = (0..n).map(|p| res.solution.value(p, grid.m())).collect();
    let (mean, se_mean) = mean_and_se(&terminals);
    let mean_exact = rate.exp();
    assert!(
        (mean - mean_exact).abs() <= 4.0 * se_mean,
        "E[X_1] = {mean} vs {mean_exact} (4 se = {})",
        4.0 * se_mean
    );
    let squares: Vec<f64> = terminals.iter().map(|x| x * x).collect();
    let (m2, se_m2) = mean_and_se(&squares);
    let m2_exact = (2.0 * rate + vol * vol).exp();
    assert!(
        (m2 - m2_exact).abs() <= 4.0 * se_m2,
        "E[X_1^2] = {m2} vs {m2_exact} (4 se = {})",
        4.0 * se_m2
    );

    // strong-error ladder on bridge-coupled ensembles, dt = 2^-4 .. 2^-8
    let h_seed = 909u64;
    let h = problem.initial_law().sample(n, h_seed);
    let base = TimeGrid::new(0.0, 1.0, 16).unwrap();
    let mut coupled = BrownianEnsemble::sample(&base, n, 20_250_203).unwrap();
    let mut rms_errors = Vec::new();
    let mut dts = Vec::new();
    for level in 0..5 {
        if level > 0 {
            coupled = coupled.refine(2, 4000 + level as u64).unwrap();
        }
        let res = solve_picard(&problem, &coupled, &PicardOptions::new(1e-9, 60, h_seed)).unwrap();
        assert!(res.converged);
        let m = coupled.grid().m();
        let exponent = rate - 0.5 * vol * vol;
        let sq: Vec<f64> = (0..n)
            .map(|p| {
                let exact = h[p] * (exponent + vol * coupled.path_values_row(p)[m]).exp();
                let e = res.solution.value(p, m) - exact;
                e * e
            })
            .collect();
        let (msq, _) = mean_and_se(&sq);
        rms_errors.push(msq.sqrt());
        dts.push(coupled.grid().dt());
    }
    // least-squares slope of log2(rms) against log2(dt)
    let xs: Vec<f64> = dts.iter().map(|d| d.log2()).collect();
    let ys: Vec<f64> = rms_errors.iter().map(|e| e.log2()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let slope = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| (x - xm) * (y - ym))
        .sum::<f64>()
        / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
    assert!(
        (0.35..=0.65).contains(&slope),
        "strong-error slope {slope} outside [0.35, 0.65]; rms = {rms_errors:?}"
    );
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "study took {elapsed:.1} s");
    println!(
        "criterion 6: PASS - E[X_1] {mean:.5} (exact {mean_exact:.5}), E[X_1^2] {m2:.5} (exact {m2_exact:.5}), slope {slope:.3}, {elapsed:.1} s"
    );
}

#[test]
fn c07_fredholm_oracle() {
    let _slot = timed_slot();
    let started = Instant::now();
    let problem = FredholmProblem::new(
        0.0,
        1.0,
        1.0,
        Kernel::AffineU {
            p: TimeFn::Poly(vec![0.0, 1.0]),
            q: TimeFn::Poly(vec![0.0, 1.0]),
            gamma: 0.25,
        },
    )
    .unwrap();
    let (solution, record) = solve_fredholm(&problem, 256, 1e-12, 100).unwrap();
    assert!(record.converged);
    let mut max_err = 0.0f64;
    for (x, u) in solution.nodes.iter().zip(solution.values.iter()) {
        max_err = max_err.max((u - (x / 2.0 + 1.0 / 12.0)).abs());
    }
    assert!(max_err <= 1e-10, "max node error {max_err}");
    let mut worst_rate = 0.0f64;
    for w in record.history.windows(2) {
        if w[0] > 0.0 {
            worst_rate = worst_rate.max(w[1] / w[0]);
        }
    }
    assert!(
        worst_rate <= 0.25 + 1e-6,
        "iteration rate {worst_rate} above (b-a)|lambda|L"
    );
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 1.0, "solve took {elapsed:.3} s");
    println!(
        "criterion 7: PASS - max node error {max_err:.2e} <= 1e-10, rate {worst_rate:.4} <= 0.25 + 1e-6, {elapsed:.3} s"
    );
}

#[test]
fn c08_condition_checker_arithmetic() {
    let policy = BoundPolicy::AnalyticOnly;
    let sie = |h: f64, coef: f64| {
        SieProblem::new(
            0.0,
            1.0,
            InitialLaw::Constant(h),
            Coefficient::Constant(coef),
            Coefficient::Constant(coef),
        )
        .unwrap()
    };
    // ball condition, three instances, bitwise
    let rep = check_schauder(&sie(1.0, 1.0), 3.0, &policy).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    assert_eq!(rep.get("lhs").unwrap().to_bits(), 9.0f64.to_bits());
    assert_eq!(rep.get("rhs").unwrap().to_bits(), 9.0f64.to_bits());

    let rep = check_schauder(&sie(1.0, 1.0), 2.9, &policy).unwrap();
    assert_eq!(rep.verdict, Verdict::Fail);
    assert_eq!(rep.get("rhs").unwrap().to_bits(), (2.9f64 * 2.9).to_bits());

    // boundary instance at the smallest representable radius reaching 6
    let mut r6 = 6.0f64.sqrt();
    while r6 * r6 < 6.0 {
        r6 = r6.next_up();
    }
    let rep = check_schauder(&sie(0.0, 1.0), r6, &policy).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    assert_eq!(rep.get("lhs").unwrap().to_bits(), 6.0f64.to_bits());

    // contraction condition, three instances, bitwise against the same
    // closed-form expression
    let linear = |k: f64| {
        SieProblem::new(
            0.0,
            1.0,
            InitialLaw::Constant(0.0),
            Coefficient::Linear(TimeFn::Const(k)),
            Coefficient::Linear(TimeFn::Const(k)),
        )
        .unwrap()
    };
    let rep = check_banach(&linear(0.1), &policy);
    assert_eq!(rep.verdict, Verdict::Pass);
    let expect: f64 = 2.0 * 0.1 * 0.1 * (1.0 + 1.0 - 0.0) * (1.0 - 0.0);
    assert_eq!(rep.get("lhs").unwrap().to_bits(), expect.to_bits());
    assert!((rep.get("k").unwrap() - 0.2).abs() < 1e-15);

    let rep = check_banach(&linear(0.5), &policy);
    assert_eq!(rep.verdict, Verdict::Fail);
    assert_eq!(rep.get("lhs").unwrap().to_bits(), 1.0f64.to_bits());

    let rep = check_banach(&gbm_problem(), &policy);
    assert_eq!(rep.verdict, Verdict::Pass);
    assert_eq!(rep.get("c").unwrap().to_bits(), 0.2f64.to_bits());
    let expect: f64 = 2.0 * 0.2 * 0.2 * (1.0 + 1.0 - 0.0) * (1.0 - 0.0);
    assert_eq!(rep.get("lhs").unwrap().to_bits(), expect.to_bits());
    println!("criterion 8: PASS - six worked instances reproduce with zero tolerance");
}

/// Drop a wall-clock column (by header name) from a CSV so payloads can be
/// compared byte-for-byte.
fn strip_column(csv: &str, drop: &str) -> String {
    let mut out = String::new();
    let mut drop_idx = None;
    for (ln, line) in csv.lines().enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if ln == 0 {
            drop_idx = cells.iter().position(|c| *c == drop);
        }
        let kept: Vec<&str> = cells
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != drop_idx)
            .map(|(_, c)| *c)
            .collect();
        out.push_str(&kept.join(","));
        out.push('\n');
    }
    out
}

#[test]
fn c09_reproducibility() {
    let _slot = timed_slot();
    let bin = env!("CARGO_BIN_EXE_sie");
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("exp.toml");
    std::fs::write(
        &config_path,
        r#"
[problem]
kind = "sie"
a = 0.0
b = 1.0
drift = "linear:const:0.05"
diffusion = "linear:const:0.2"
initial = "constant:1.0"

[grid]
m = 64
n_paths = 2000
seed = 42

[solver]
tol = 1e-8
max_iter = 40

[checks]
run = ["schauder", "banach"]
radius = 3.0

[gbm]
ladder = [8, 16, 32]
"#,
    )
    .unwrap();

    let run = |cmd: &str, out: &std::path::Path, threads: &str| {
        let status = std::process::Command::new(bin)
            .args([
                cmd,
                "--config",
                config_path.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--threads",
                threads,
            ])
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success(), "{cmd} exited with {status:?}");
    };

    let payload = |dir: &std::path::Path, name: &str| -> String {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        if name == "history.csv" {
            strip_column(&text, "elapsed_ms")
        } else {
            text
        }
    };

    for (cmd, artifacts) in [
        ("solve", vec!["history.csv", "moments.csv"]),
        ("check", vec!["conditions.csv"]),
        ("gbm", vec!["strong_error.csv", "gbm_moments.csv"]),
    ] {
        let runs = [
            dir.path().join(format!("{cmd}_t1_a")),
            dir.path().join(format!("{cmd}_t1_b")),
            dir.path().join(format!("{cmd}_t4")),
        ];
        run(cmd, &runs[0], "1");
        run(cmd, &runs[1], "1");
        run(cmd, &runs[2], "4");
        for name in &artifacts {
            let reference = payload(&runs[0], name);
            assert!(!reference.is_empty());
            assert_eq!(
                reference,
                payload(&runs[1], name),
                "{cmd}/{name}: rerun differs"
            );
            assert_eq!(
                reference,
                payload(&runs[2], name),
                "{cmd}/{name}: thread count leaks"
            );
        }
    }
    println!("criterion 9: PASS - solve/check/gbm payloads byte-identical across reruns and thread counts 1 vs 4");
}

#[test]
fn c10_picard_euler_maruyama_equivalence() {
    let problem = gbm_problem();
    let grid = TimeGrid::new(0.0, 1.0, 256).unwrap();
    let ensemble = BrownianEnsemble::sample(&grid, 2_000, 97).unwrap();
    let tol = 1e-8;
    let opts = PicardOptions::new(tol, 40, 98);
    let res = solve_picard(&problem, &ensemble, &opts).unwrap();
    assert!(res.converged);
    let h = problem.initial_law().sample(ensemble.n_paths(), 98);
    let em = euler_maruyama(&problem, &ensemble, &h).unwrap();
    let k = res.theoretical_k.unwrap();
    let gap = sup_l2_norm(&res.solution.sub(&em).unwrap()).unwrap().value;
    let cap = tol * (1.0 + k) / (1.0 - k);
    assert!(gap <= cap, "solution-vs-recursion gap {gap} > {cap}");
    let em_residual = residual(&problem, &em, &ensemble, &h).unwrap().value;
    let em_scale = l2_norm_at(&em, grid.m()).unwrap().value;
    assert!(
        em_residual <= 1e-10 * (1.0 + em_scale),
        "recursion residual {em_residual} not at rounding level"
    );
    println!(
        "criterion 10: PASS - gap {gap:.2e} <= tol (1+k)/(1-k) = {cap:.2e}, recursion residual {em_residual:.1e}"
    );
}
