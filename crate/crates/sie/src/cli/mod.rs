//! Batch experiment driver behind the `sie` binary.
//!
//! Every command reads one strict TOML config, writes CSV artifacts plus a
//! run manifest into the output directory, and maps its outcome onto a fixed
//! exit-code table:
//!
//! | code | meaning                          |
//! |------|----------------------------------|
//! | 0    | success (all checks passed)      |
//! | 1    | unexpected error (i/o, internal) |
//! | 2    | config parse/validation error    |
//! | 3    | a requested check failed         |
//! | 4    | a requested check unavailable    |
//! | 5    | solver did not converge          |
//! | 6    | numeric failure (NaN/Inf)        |
//!
//! CSV floats are printed with 17 significant digits so files round-trip
//! exactly; reruns with the same config and seed are byte-identical except
//! for wall-clock columns (`elapsed_ms`) and manifest timestamps.

mod config;

pub use config::*;

use crate::calculus::{l2_norm_at, AdaptedProcess};
use crate::coefficients::{BoundPolicy, Coefficient, TimeFn};
use crate::conditions::{
    check_banach, check_fredholm_banach, check_fredholm_schauder, check_schauder, ConditionReport,
    InitialLaw, SieProblem, Verdict,
};
use crate::error::SieError;
use crate::fredholm::{solve_fredholm, FredholmProblem, Kernel};
use crate::math::{exact_mean, ExactSum};
use crate::paths::{BrownianEnsemble, TimeGrid};
use crate::picard::{solve_picard, InitialIterate, PicardOptions};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;
pub const EXIT_CHECK_UNAVAILABLE: i32 = 4;
pub const EXIT_NOT_CONVERGED: i32 = 5;
pub const EXIT_NUMERIC_FAILURE: i32 = 6;

/// Salt applied to the master seed for initial-condition draws, so h and the
/// Brownian increments never share counter streams.
const H_SEED_SALT: u64 = 0x517c_c1b7_2722_0a95;

pub fn h_seed(master: u64) -> u64 {
    master ^ H_SEED_SALT
}

/// Salt for bridge-refinement draws, per ladder level.
fn bridge_seed(master: u64, level: usize) -> u64 {
    master ^ 0x2545_f491_4f6c_dd1d_u64.wrapping_mul(level as u64 + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Check,
    Solve,
    Gbm,
    Fredholm,
    Isometry,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Solve => "solve",
            Command::Gbm => "gbm",
            Command::Fredholm => "fredholm",
            Command::Isometry => "isometry",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub config_path: PathBuf,
    pub seed_override: Option<u64>,
    pub out_override: Option<PathBuf>,
}

enum RunError {
    Config(String),
    Numeric { path: usize, index: usize },
    Other(String),
}

impl From<SieError> for RunError {
    fn from(e: SieError) -> Self {
        match e {
            SieError::NumericFailure { path, index } => RunError::Numeric { path, index },
            SieError::Parse(msg) => RunError::Config(msg),
            other => RunError::Other(other.to_string()),
        }
    }
}

type RunResult<T> = std::result::Result<T, RunError>;

/// 17-significant-digit float formatting; round-trips any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_sha256: String,
    seed: u64,
    started_unix: u64,
    finished_unix: u64,
    artifacts: Vec<String>,
}

struct RunContext {
    config: ExperimentConfig,
    config_sha256: String,
    seed: u64,
    out_dir: PathBuf,
    started_unix: u64,
    artifacts: Vec<String>,
}

impl RunContext {
    fn write_artifact(&mut self, name: &str, contents: &str) -> RunResult<()> {
        std::fs::write(self.out_dir.join(name), contents)
            .map_err(|e| RunError::Other(format!("writing {name}: {e}")))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, command: Command) -> RunResult<()> {
        let manifest = RunManifest {
            tool: "sie",
            version: env!("CARGO_PKG_VERSION"),
            command: command.name(),
            config_sha256: self.config_sha256.clone(),
            seed: self.seed,
            started_unix: self.started_unix,
            finished_unix: unix_now(),
            artifacts: std::mem::take(&mut self.artifacts),
        };
        let text = toml::to_string(&manifest)
            .map_err(|e| RunError::Other(format!("manifest serialization: {e}")))?;
        std::fs::write(self.out_dir.join("run_manifest.toml"), text)
            .map_err(|e| RunError::Other(format!("writing manifest: {e}")))?;
        Ok(())
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn prepare(opts: &RunOptions) -> RunResult<RunContext> {
    let bytes = std::fs::read(&opts.config_path).map_err(|e| {
        RunError::Config(format!("cannot read {}: {e}", opts.config_path.display()))
    })?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| RunError::Config("config is not valid UTF-8".into()))?;
    let config = ExperimentConfig::from_toml(&text).map_err(RunError::Config)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let config_sha256 = hasher.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    });
    let seed = opts
        .seed_override
        .or(config.grid.as_ref().map(|g| g.seed))
        .unwrap_or(0);
    let out_dir = opts
        .out_override
        .clone()
        .or_else(|| config.output.as_ref().map(|o| PathBuf::from(&o.dir)))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| RunError::Other(format!("cannot create {}: {e}", out_dir.display())))?;
    Ok(RunContext {
        config,
        config_sha256,
        seed,
        out_dir,
        started_unix: unix_now(),
        artifacts: Vec::new(),
    })
}

pub fn run(command: Command, opts: &RunOptions) -> i32 {
    match run_inner(command, opts) {
        Ok(code) => code,
        Err(RunError::Config(msg)) => {
            eprintln!("config error: {msg}");
            EXIT_CONFIG
        }
        Err(RunError::Numeric { path, index }) => {
            eprintln!("numeric failure at path {path}, index {index}");
            EXIT_NUMERIC_FAILURE
        }
        Err(RunError::Other(msg)) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    }
}

fn run_inner(command: Command, opts: &RunOptions) -> RunResult<i32> {
    let ctx = prepare(opts)?;
    match command {
        Command::Check => cmd_check(ctx),
        Command::Solve => cmd_solve(ctx),
        Command::Gbm => cmd_gbm(ctx),
        Command::Fredholm => cmd_fredholm(ctx),
        Command::Isometry => cmd_isometry(ctx),
    }
}

fn parse_coefficient(text: Option<&String>, what: &str) -> RunResult<Coefficient> {
    let text = text.ok_or_else(|| RunError::Config(format!("[problem] {what} is required")))?;
    text.parse::<Coefficient>()
        .map_err(|e| RunError::Config(format!("{what} descriptor: {e}")))
}

fn sie_problem(cfg: &ExperimentConfig) -> RunResult<SieProblem> {
    if cfg.problem.kind != ProblemKind::Sie {
        return Err(RunError::Config(
            "this command needs [problem] kind = \"sie\"".into(),
        ));
    }
    let drift = parse_coefficient(cfg.problem.drift.as_ref(), "drift")?;
    let diffusion = parse_coefficient(cfg.problem.diffusion.as_ref(), "diffusion")?;
    let law: InitialLaw = cfg
        .problem
        .initial
        .as_ref()
        .ok_or_else(|| RunError::Config("[problem] initial is required".into()))?
        .parse()
        .map_err(|e: SieError| RunError::Config(format!("initial descriptor: {e}")))?;
    SieProblem::new(cfg.problem.a, cfg.problem.b, law, drift, diffusion)
        .map_err(|e| RunError::Config(e.to_string()))
}

fn fredholm_problem(cfg: &ExperimentConfig) -> RunResult<FredholmProblem> {
    if cfg.problem.kind != ProblemKind::Fredholm {
        return Err(RunError::Config(
            "this command needs [problem] kind = \"fredholm\"".into(),
        ));
    }
    let section = cfg
        .fredholm
        .as_ref()
        .ok_or_else(|| RunError::Config("missing [fredholm] section".into()))?;
    let kernel: Kernel = section
        .kernel
        .parse()
        .map_err(|e: SieError| RunError::Config(format!("kernel descriptor: {e}")))?;
    FredholmProblem::new(cfg.problem.a, cfg.problem.b, section.lambda, kernel)
        .map_err(|e| RunError::Config(e.to_string()))
}

fn grid_section(cfg: &ExperimentConfig) -> RunResult<&GridSection> {
    cfg.grid
        .as_ref()
        .ok_or_else(|| RunError::Config("missing [grid] section".into()))
}

fn build_ensemble(cfg: &ExperimentConfig, seed: u64) -> RunResult<BrownianEnsemble> {
    let grid_cfg = grid_section(cfg)?;
    let grid = TimeGrid::new(cfg.problem.a, cfg.problem.b, grid_cfg.m)
        .map_err(|e| RunError::Config(e.to_string()))?;
    Ok(BrownianEnsemble::sample(&grid, grid_cfg.n_paths, seed)?)
}

fn bound_policy(cfg: &ExperimentConfig, seed: u64) -> BoundPolicy {
    match cfg.checks.as_ref() {
        Some(c) if c.heuristic_bounds => BoundPolicy::AllowHeuristic {
            n_samples: c.heuristic_samples,
            seed,
        },
        _ => BoundPolicy::AnalyticOnly,
    }
}

fn checks_exit_code(reports: &[ConditionReport]) -> i32 {
    if reports.iter().any(|r| r.verdict == Verdict::Fail) {
        EXIT_CHECK_FAILED
    } else if reports.iter().any(|r| r.verdict == Verdict::Unavailable) {
        EXIT_CHECK_UNAVAILABLE
    } else {
        EXIT_OK
    }
}

fn write_condition_reports(ctx: &mut RunContext, reports: &[ConditionReport]) -> RunResult<()> {
    let mut csv = String::from("theorem,verdict,intermediates\n");
    for rep in reports {
        csv.push_str(&rep.to_csv_row());
        csv.push('\n');
        ctx.write_artifact(&format!("{}.txt", rep.kind.label()), &rep.to_kv_block())?;
        println!("check {}: {}", rep.kind.label(), rep.verdict.label());
    }
    ctx.write_artifact("conditions.csv", &csv)
}

fn cmd_check(mut ctx: RunContext) -> RunResult<i32> {
    let checks = ctx
        .config
        .checks
        .clone()
        .ok_or_else(|| RunError::Config("missing [checks] section".into()))?;
    if checks.run.is_empty() {
        return Err(RunError::Config(
            "[checks] run must name at least one check".into(),
        ));
    }
    let policy = bound_policy(&ctx.config, ctx.seed);
    let mut reports = Vec::new();
    match ctx.config.problem.kind {
        ProblemKind::Sie => {
            let problem = sie_problem(&ctx.config)?;
            for name in &checks.run {
                match name.as_str() {
                    "schauder" => {
                        let r = checks.radius.ok_or_else(|| {
                            RunError::Config("[checks] radius is required for schauder".into())
                        })?;
                        reports.push(
                            check_schauder(&problem, r, &policy)
                                .map_err(|e| RunError::Config(e.to_string()))?,
                        );
                    }
                    "banach" => reports.push(check_banach(&problem, &policy)),
                    other => {
                        return Err(RunError::Config(format!("unknown check '{other}'")));
                    }
                }
            }
        }
        ProblemKind::Fredholm => {
            let problem = fredholm_problem(&ctx.config)?;
            let radius = checks
                .radius
                .or(ctx.config.fredholm.as_ref().and_then(|f| f.radius));
            for name in &checks.run {
                match name.as_str() {
                    "schauder" => {
                        let r = radius.ok_or_else(|| {
                            RunError::Config("a radius is required for schauder".into())
                        })?;
                        reports.push(
                            check_fredholm_schauder(&problem, r, &policy)
                                .map_err(|e| RunError::Config(e.to_string()))?,
                        );
                    }
                    "banach" => reports.push(check_fredholm_banach(&problem, &policy)),
                    other => {
                        return Err(RunError::Config(format!("unknown check '{other}'")));
                    }
                }
            }
        }
    }
    write_condition_reports(&mut ctx, &reports)?;
    let code = checks_exit_code(&reports);
    ctx.finish(Command::Check)?;
    Ok(code)
}

fn picard_options(cfg: &ExperimentConfig, seed: u64) -> RunResult<PicardOptions> {
    let solver = cfg
        .solver
        .as_ref()
        .ok_or_else(|| RunError::Config("missing [solver] section".into()))?;
    let initial = match solver.initial_iterate.as_str() {
        "h" => InitialIterate::InitialConstant,
        "zero" => InitialIterate::Zero,
        other => {
            return Err(RunError::Config(format!(
                "initial_iterate must be \"h\" or \"zero\", got '{other}'"
            )));
        }
    };
    Ok(PicardOptions {
        tol: solver.tol,
        max_iter: solver.max_iter,
        initial,
        damping: solver.damping,
        seed_h: h_seed(seed),
    })
}

fn history_csv(history: &[f64], damping: f64, final_residual: f64, elapsed_ms: &[f64]) -> String {
    let mut out = String::from("iter,update_norm,residual,elapsed_ms\n");
    for (i, (h, ms)) in history.iter().zip(elapsed_ms.iter()).enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            fmt_f64(*h),
            fmt_f64(h / damping),
            fmt_f64(*ms)
        );
    }
    let total_ms: f64 = elapsed_ms.iter().sum();
    let last = history.last().copied().unwrap_or(0.0);
    let _ = writeln!(
        out,
        "final,{},{},{}",
        fmt_f64(last),
        fmt_f64(final_residual),
        fmt_f64(total_ms)
    );
    out
}

/// Per-node solution moments: the mean with its Monte Carlo standard error,
/// and the empirical L2 norm.
fn moments_csv(solution: &AdaptedProcess) -> RunResult<String> {
    let grid = solution.grid().clone();
    let n = solution.n_paths();
    let w = grid.m() + 1;
    let mut sums = vec![ExactSum::new(); w];
    let mut sumsqs = vec![ExactSum::new(); w];
    for p in 0..n {
        let row = solution.row(p);
        for j in 0..w {
            sums[j].add(row[j]);
            sumsqs[j].add(row[j] * row[j]);
        }
    }
    let mut out = String::from("t,mean,l2_norm,std_error\n");
    for j in 0..w {
        let est = l2_norm_at(solution, j)?;
        let sum = sums[j].value();
        let mean = sum / n as f64;
        let se = if n > 1 {
            ((sumsqs[j].value() - sum * sum / n as f64).max(0.0) / (n as f64 - 1.0) / n as f64)
                .sqrt()
        } else {
            0.0
        };
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(grid.node(j)),
            fmt_f64(mean),
            fmt_f64(est.value),
            fmt_f64(se)
        );
    }
    Ok(out)
}

fn cmd_solve(mut ctx: RunContext) -> RunResult<i32> {
    let problem = sie_problem(&ctx.config)?;
    let ensemble = build_ensemble(&ctx.config, ctx.seed)?;
    let opts = picard_options(&ctx.config, ctx.seed)?;
    let res = solve_picard(&problem, &ensemble, &opts)?;
    ctx.write_artifact(
        "history.csv",
        &history_csv(
            &res.history,
            opts.damping,
            res.final_residual.value,
            &res.iter_elapsed_ms,
        ),
    )?;
    ctx.write_artifact("moments.csv", &moments_csv(&res.solution)?)?;
    println!(
        "solve: {} after {} iterations (residual {:.3e})",
        if res.converged {
            "converged"
        } else {
            "not converged"
        },
        res.iterations,
        res.final_residual.value
    );
    let code = if res.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    };
    ctx.finish(Command::Solve)?;
    Ok(code)
}

fn time_fn_constant(tf: &TimeFn) -> Option<f64> {
    match tf {
        TimeFn::Const(c) => Some(*c),
        TimeFn::Poly(cs) if cs.iter().skip(1).all(|&c| c == 0.0) => Some(cs[0]),
        _ => None,
    }
}

fn linear_constant(coef: &Coefficient, what: &str) -> RunResult<f64> {
    if let Coefficient::Linear(tf) = coef {
        if let Some(c) = time_fn_constant(tf) {
            return Ok(c);
        }
    }
    Err(RunError::Config(format!(
        "{what} must be linear with a constant rate (linear:const:<c>) for the gbm study"
    )))
}

fn cmd_gbm(mut ctx: RunContext) -> RunResult<i32> {
    let problem = sie_problem(&ctx.config)?;
    let rate = linear_constant(problem.drift(), "drift")?;
    let vol = linear_constant(problem.diffusion(), "diffusion")?;
    let grid_cfg = grid_section(&ctx.config)?.clone();
    let ladder = ctx
        .config
        .gbm
        .clone()
        .unwrap_or(GbmSection { ladder: vec![] })
        .ladder;
    let ladder = if ladder.is_empty() {
        vec![16, 32, 64, 128, 256]
    } else {
        ladder
    };
    for w in ladder.windows(2) {
        if w[1] % w[0] != 0 || w[1] / w[0] < 2 {
            return Err(RunError::Config(format!(
                "ladder entries must grow by integer factors >= 2, got {} -> {}",
                w[0], w[1]
            )));
        }
    }
    let (a, b) = (problem.a(), problem.b());
    let span = b - a;
    let law = problem.initial_law().clone();
    let h_samples = law.sample(grid_cfg.n_paths, h_seed(ctx.seed));
    let solver_tol = ctx.config.solver.as_ref().map(|s| s.tol).unwrap_or(1e-8);
    let solver_max_iter = ctx.config.solver.as_ref().map(|s| s.max_iter).unwrap_or(60);
    let mut all_converged = true;

    // coupled resolution ladder for the strong-error table
    let base_grid = TimeGrid::new(a, b, ladder[0]).map_err(|e| RunError::Config(e.to_string()))?;
    let mut ensemble = BrownianEnsemble::sample(&base_grid, grid_cfg.n_paths, ctx.seed)?;
    let mut strong = String::from("dt,rms_error,n_paths\n");
    for (level, &steps) in ladder.iter().enumerate() {
        if level > 0 {
            let factor = steps / ladder[level - 1];
            ensemble = ensemble.refine(factor, bridge_seed(ctx.seed, level))?;
        }
        let mut opts = PicardOptions::new(solver_tol, solver_max_iter, h_seed(ctx.seed));
        opts.initial = InitialIterate::InitialConstant;
        let res = solve_picard(&problem, &ensemble, &opts)?;
        all_converged &= res.converged;
        let m = ensemble.grid().m();
        let exponent = rate - 0.5 * vol * vol;
        let sq_errors: Vec<f64> = (0..ensemble.n_paths())
            .map(|p| {
                let terminal_b = ensemble.path_values_row(p)[m];
                let exact = h_samples[p] * (exponent * span + vol * terminal_b).exp();
                let err = res.solution.value(p, m) - exact;
                err * err
            })
            .collect();
        let rms = exact_mean(sq_errors.iter().copied()).sqrt();
        let _ = writeln!(
            strong,
            "{},{},{}",
            fmt_f64(ensemble.grid().dt()),
            fmt_f64(rms),
            grid_cfg.n_paths
        );
        println!("gbm ladder m={steps}: rms error {rms:.6e}");
    }
    ctx.write_artifact("strong_error.csv", &strong)?;

    // moment table at the configured grid resolution
    let moment_ensemble = build_ensemble(&ctx.config, ctx.seed)?;
    let mut opts = PicardOptions::new(solver_tol, solver_max_iter, h_seed(ctx.seed));
    opts.initial = InitialIterate::InitialConstant;
    let res = solve_picard(&problem, &moment_ensemble, &opts)?;
    all_converged &= res.converged;
    let sol = &res.solution;
    let grid = sol.grid().clone();
    let n = sol.n_paths();
    let w = grid.m() + 1;
    let mut out = String::from(
        "t,mean,mean_exact,mean_std_error,second_moment,second_moment_exact,second_moment_std_error\n",
    );
    let h_mean = law.mean_value();
    let h_m2 = law.second_moment();
    for j in 0..w {
        let col: Vec<f64> = (0..n).map(|p| sol.value(p, j)).collect();
        let squares: Vec<f64> = col.iter().map(|v| v * v).collect();
        let (mean, se_mean) = crate::math::mean_and_se(&col);
        let (m2, se_m2) = crate::math::mean_and_se(&squares);
        let t = grid.node(j) - a;
        let mean_exact = h_mean * (rate * t).exp();
        let m2_exact = h_m2 * ((2.0 * rate + vol * vol) * t).exp();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(grid.node(j)),
            fmt_f64(mean),
            fmt_f64(mean_exact),
            fmt_f64(se_mean),
            fmt_f64(m2),
            fmt_f64(m2_exact),
            fmt_f64(se_m2)
        );
    }
    ctx.write_artifact("gbm_moments.csv", &out)?;
    let code = if all_converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    };
    ctx.finish(Command::Gbm)?;
    Ok(code)
}

fn cmd_fredholm(mut ctx: RunContext) -> RunResult<i32> {
    let problem = fredholm_problem(&ctx.config)?;
    let section = ctx
        .config
        .fredholm
        .clone()
        .expect("checked by fredholm_problem");
    let policy = bound_policy(&ctx.config, ctx.seed);
    let mut reports = vec![check_fredholm_banach(&problem, &policy)];
    if let Some(r) = section.radius {
        reports.push(
            check_fredholm_schauder(&problem, r, &policy)
                .map_err(|e| RunError::Config(e.to_string()))?,
        );
    }
    write_condition_reports(&mut ctx, &reports)?;
    // conditions are sufficient, not necessary: solve regardless and report
    let (solution, record) =
        solve_fredholm(&problem, section.n_quad, section.tol, section.max_iter)?;
    let mut sol_csv = String::from("x,u\n");
    for (x, u) in solution.nodes.iter().zip(solution.values.iter()) {
        let _ = writeln!(sol_csv, "{},{}", fmt_f64(*x), fmt_f64(*u));
    }
    ctx.write_artifact("solution.csv", &sol_csv)?;
    let mut hist = String::from("iter,update_norm,residual\n");
    for (i, h) in record.history.iter().enumerate() {
        let _ = writeln!(hist, "{},{},{}", i + 1, fmt_f64(*h), fmt_f64(*h));
    }
    let _ = writeln!(
        hist,
        "final,{},{}",
        fmt_f64(record.history.last().copied().unwrap_or(0.0)),
        fmt_f64(record.final_residual)
    );
    ctx.write_artifact("history.csv", &hist)?;
    println!(
        "fredholm: {} after {} iterations (residual {:.3e})",
        if record.converged {
            "converged"
        } else {
            "not converged"
        },
        record.iterations,
        record.final_residual
    );
    // the solve is global; ball membership is reported, never required
    if let Some(r) = section.radius {
        let norm = solution.max_norm();
        println!(
            "solution max norm {norm:.6} ({} the radius-{r} ball)",
            if norm <= r { "inside" } else { "outside" }
        );
    }
    let code = if record.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    };
    ctx.finish(Command::Fredholm)?;
    Ok(code)
}

fn cmd_isometry(mut ctx: RunContext) -> RunResult<i32> {
    if ctx.config.problem.kind != ProblemKind::Sie {
        return Err(RunError::Config(
            "isometry needs [problem] kind = \"sie\"".into(),
        ));
    }
    let section = ctx
        .config
        .isometry
        .clone()
        .ok_or_else(|| RunError::Config("missing [isometry] section".into()))?;
    if section.integrands.is_empty() {
        return Err(RunError::Config(
            "[isometry] integrands must be non-empty".into(),
        ));
    }
    let ensemble = build_ensemble(&ctx.config, ctx.seed)?;
    let grid_cfg = grid_section(&ctx.config)?.clone();
    let mut csv =
        String::from("integrand,lhs,rhs,rel_error,diff_std_error,tolerance,pass,n_paths,m,seed\n");
    let mut all_pass = true;
    for name in &section.integrands {
        let integrand = match name.as_str() {
            "one" => AdaptedProcess::constant(ensemble.grid(), ensemble.n_paths(), 1.0)?,
            "t" => AdaptedProcess::from_time_fn(ensemble.grid(), ensemble.n_paths(), |t| t)?,
            "B" => AdaptedProcess::brownian_paths(&ensemble),
            other => {
                return Err(RunError::Config(format!(
                    "unknown integrand '{other}' (registry: one, t, B)"
                )));
            }
        };
        let rep = crate::calculus::isometry_check(&integrand, &ensemble, section.tolerance)?;
        all_pass &= rep.pass;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            name,
            fmt_f64(rep.lhs),
            fmt_f64(rep.rhs),
            fmt_f64(rep.rel_error),
            fmt_f64(rep.diff_std_error),
            fmt_f64(rep.tolerance),
            rep.pass,
            rep.n_paths,
            grid_cfg.m,
            ctx.seed
        );
        println!(
            "isometry {}: lhs {:.6} rhs {:.6} ({})",
            name, rep.lhs, rep.rhs, rep.pass
        );
    }
    ctx.write_artifact("isometry.csv", &csv)?;
    let code = if all_pass { EXIT_OK } else { EXIT_CHECK_FAILED };
    ctx.finish(Command::Isometry)?;
    Ok(code)
}
