//! Machine-checkable existence and uniqueness conditions.
//!
//! Each checker reports every intermediate quantity it touched, a verdict,
//! and a one-line message. A verdict is `pass` only when every bound that
//! entered the inequality has analytic provenance; with sampled bounds the
//! best attainable verdict is `pass_heuristic`. Inequality strictness
//! follows the underlying statements: the ball conditions are non-strict
//! (<=), the contraction conditions strict (<).

use crate::coefficients::{BoundPolicy, Coefficient, Provenance};
use crate::error::{Result, SieError};
use crate::fredholm::FredholmProblem;
use crate::rng;
use std::fmt;
use std::str::FromStr;

/// Law of the initial condition h, with closed-form moments.
///
/// Descriptors: `constant:<x0>`, `normal:<mean>,<var>`,
/// `lognormal:<mu>,<sigma2>`.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialLaw {
    Constant(f64),
    Normal { mean: f64, var: f64 },
    LogNormal { mu: f64, sigma2: f64 },
}

impl InitialLaw {
    /// E[h^2], exact per kind.
    pub fn second_moment(&self) -> f64 {
        match self {
            InitialLaw::Constant(x0) => x0 * x0,
            InitialLaw::Normal { mean, var } => mean * mean + var,
            InitialLaw::LogNormal { mu, sigma2 } => (2.0 * mu + 2.0 * sigma2).exp(),
        }
    }

    /// E[h], exact per kind.
    pub fn mean_value(&self) -> f64 {
        match self {
            InitialLaw::Constant(x0) => *x0,
            InitialLaw::Normal { mean, .. } => *mean,
            InitialLaw::LogNormal { mu, sigma2 } => (mu + 0.5 * sigma2).exp(),
        }
    }

    /// One draw per path, keyed by (seed, path).
    pub fn sample(&self, n_paths: usize, seed: u64) -> Vec<f64> {
        (0..n_paths)
            .map(|p| match self {
                InitialLaw::Constant(x0) => *x0,
                InitialLaw::Normal { mean, var } => {
                    mean + var.sqrt() * rng::normal_cell(seed, p as u64, 0)
                }
                InitialLaw::LogNormal { mu, sigma2 } => {
                    (mu + sigma2.sqrt() * rng::normal_cell(seed, p as u64, 0)).exp()
                }
            })
            .collect()
    }
}

impl fmt::Display for InitialLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialLaw::Constant(x0) => write!(f, "constant:{x0}"),
            InitialLaw::Normal { mean, var } => write!(f, "normal:{mean},{var}"),
            InitialLaw::LogNormal { mu, sigma2 } => write!(f, "lognormal:{mu},{sigma2}"),
        }
    }
}

impl FromStr for InitialLaw {
    type Err = SieError;

    fn from_str(s: &str) -> Result<Self> {
        let (head, rest) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| SieError::Parse(format!("bad initial law '{s}'")))?;
        let nums: Vec<f64> = rest
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| SieError::Parse(format!("bad number '{p}'")))
            })
            .collect::<Result<_>>()?;
        match (head.trim(), nums.as_slice()) {
            ("constant", [x0]) => Ok(InitialLaw::Constant(*x0)),
            ("normal", [mean, var]) if *var >= 0.0 => Ok(InitialLaw::Normal {
                mean: *mean,
                var: *var,
            }),
            ("lognormal", [mu, sigma2]) if *sigma2 >= 0.0 => Ok(InitialLaw::LogNormal {
                mu: *mu,
                sigma2: *sigma2,
            }),
            _ => Err(SieError::Parse(format!("bad initial law '{s}'"))),
        }
    }
}

/// The stochastic integral equation
/// X_t = h + int_a^t sigma(s, X_s) dB(s) + int_a^t f(s, X_s) ds.
#[derive(Clone, Debug)]
pub struct SieProblem {
    a: f64,
    b: f64,
    h: InitialLaw,
    drift: Coefficient,
    diffusion: Coefficient,
}

impl SieProblem {
    pub fn new(
        a: f64,
        b: f64,
        h: InitialLaw,
        drift: Coefficient,
        diffusion: Coefficient,
    ) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || a >= b {
            return Err(SieError::InvalidInterval { a, b });
        }
        Ok(SieProblem {
            a,
            b,
            h,
            drift,
            diffusion,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn initial_law(&self) -> &InitialLaw {
        &self.h
    }

    pub fn drift(&self) -> &Coefficient {
        &self.drift
    }

    pub fn diffusion(&self) -> &Coefficient {
        &self.diffusion
    }
}

/// Which condition a report refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditionKind {
    SchauderSie,
    BanachSie,
    SchauderFredholm,
    BanachFredholm,
}

impl ConditionKind {
    pub fn label(&self) -> &'static str {
        match self {
            ConditionKind::SchauderSie => "schauder_sie",
            ConditionKind::BanachSie => "banach_sie",
            ConditionKind::SchauderFredholm => "schauder_fredholm",
            ConditionKind::BanachFredholm => "banach_fredholm",
        }
    }

    /// Whether the inequality lhs ? rhs is strict.
    pub fn strict(&self) -> bool {
        matches!(
            self,
            ConditionKind::BanachSie | ConditionKind::BanachFredholm
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    PassHeuristic,
    Fail,
    Unavailable,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::PassHeuristic => "pass_heuristic",
            Verdict::Fail => "fail",
            Verdict::Unavailable => "unavailable",
        }
    }

    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass | Verdict::PassHeuristic)
    }
}

/// Verdict plus every intermediate quantity, in insertion order.
#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub kind: ConditionKind,
    pub verdict: Verdict,
    pub intermediates: Vec<(String, f64)>,
    pub message: String,
}

impl ConditionReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.intermediates
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| *v)
    }

    /// Re-evaluate the stated inequality from the stored lhs/rhs. Returns
    /// None when the report has no lhs/rhs (unavailable verdicts).
    pub fn recheck(&self) -> Option<bool> {
        let lhs = self.get("lhs")?;
        let rhs = self.get("rhs")?;
        Some(if self.kind.strict() {
            lhs < rhs
        } else {
            lhs <= rhs
        })
    }

    /// Flat key=value block, one entry per line.
    pub fn to_kv_block(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("condition={}\n", self.kind.label()));
        out.push_str(&format!("verdict={}\n", self.verdict.label()));
        for (k, v) in &self.intermediates {
            out.push_str(&format!("{k}={v:.16e}\n"));
        }
        out.push_str(&format!("message={}\n", self.message));
        out
    }

    /// One CSV row: kind, verdict, then all intermediates in one quoted
    /// field of semicolon-separated name=value pairs.
    pub fn to_csv_row(&self) -> String {
        let pairs: Vec<String> = self
            .intermediates
            .iter()
            .map(|(k, v)| format!("{k}={v:.16e}"))
            .collect();
        format!(
            "{},{},\"{}\"",
            self.kind.label(),
            self.verdict.label(),
            pairs.join(";")
        )
    }
}

/// Existence condition for the stochastic equation on the ball of radius r:
/// 3 E[h^2] + 3 (1 + b - a)(b - a) d^2 <= r^2, with
/// d = max(sup |f|, sup |sigma|) over [a, b] x {|x| <= r}.
pub fn check_schauder(
    problem: &SieProblem,
    r: f64,
    policy: &BoundPolicy,
) -> Result<ConditionReport> {
    if r.is_nan() || r <= 0.0 || !r.is_finite() {
        return Err(SieError::InvalidParameter(format!(
            "radius must be positive, got {r}"
        )));
    }
    let (a, b) = (problem.a(), problem.b());
    let e_h2 = problem.initial_law().second_moment();
    let f_bounds = problem.drift().resolve_bounds(a, b, r, policy);
    let s_bounds = problem.diffusion().resolve_bounds(a, b, r, policy);
    let mut intermediates = vec![
        ("a".to_string(), a),
        ("b".to_string(), b),
        ("r".to_string(), r),
        ("e_h2".to_string(), e_h2),
    ];
    let (f_sup, s_sup) = match (f_bounds.sup_on_ball, s_bounds.sup_on_ball) {
        (Some(f), Some(s)) => (f, s),
        (f, s) => {
            let mut missing = Vec::new();
            if f.is_none() {
                missing.push("drift");
            }
            if s.is_none() {
                missing.push("diffusion");
            }
            return Ok(ConditionReport {
                kind: ConditionKind::SchauderSie,
                verdict: Verdict::Unavailable,
                intermediates,
                message: format!(
                    "no sup bound for {} under current policy",
                    missing.join(" and ")
                ),
            });
        }
    };
    let d = f_sup.value.max(s_sup.value);
    let lhs = 3.0 * e_h2 + 3.0 * (1.0 + b - a) * (b - a) * d * d;
    let rhs = r * r;
    intermediates.push(("sup_f".to_string(), f_sup.value));
    intermediates.push(("sup_sigma".to_string(), s_sup.value));
    intermediates.push(("d".to_string(), d));
    intermediates.push(("lhs".to_string(), lhs));
    intermediates.push(("rhs".to_string(), rhs));
    let heuristic = f_sup.provenance == Provenance::SampledHeuristic
        || s_sup.provenance == Provenance::SampledHeuristic;
    let (verdict, message) = if lhs <= rhs {
        if heuristic {
            (
                Verdict::PassHeuristic,
                "ball condition holds with sampled bounds".to_string(),
            )
        } else {
            (Verdict::Pass, "ball condition holds".to_string())
        }
    } else {
        (
            Verdict::Fail,
            format!("ball condition fails: {lhs} > {rhs}"),
        )
    };
    Ok(ConditionReport {
        kind: ConditionKind::SchauderSie,
        verdict,
        intermediates,
        message,
    })
}

/// Contraction condition for the stochastic equation:
/// k^2 = 2 c^2 (1 + b - a)(b - a) < 1 with c = max of the two Lipschitz
/// constants.
pub fn check_banach(problem: &SieProblem, policy: &BoundPolicy) -> ConditionReport {
    let (a, b) = (problem.a(), problem.b());
    // Lipschitz bounds are state-global for the registry; the unit ball is
    // only the sampling window for heuristic fallbacks.
    let f_bounds = problem.drift().resolve_bounds(a, b, 1.0, policy);
    let s_bounds = problem.diffusion().resolve_bounds(a, b, 1.0, policy);
    let mut intermediates = vec![("a".to_string(), a), ("b".to_string(), b)];
    let (k1, k2) = match (f_bounds.lipschitz, s_bounds.lipschitz) {
        (Some(k1), Some(k2)) => (k1, k2),
        (f, s) => {
            let mut missing = Vec::new();
            if f.is_none() {
                missing.push("drift");
            }
            if s.is_none() {
                missing.push("diffusion");
            }
            return ConditionReport {
                kind: ConditionKind::BanachSie,
                verdict: Verdict::Unavailable,
                intermediates,
                message: format!(
                    "no Lipschitz constant for {} under current policy",
                    missing.join(" and ")
                ),
            };
        }
    };
    let c = k1.value.max(k2.value);
    let k_squared = 2.0 * c * c * (1.0 + b - a) * (b - a);
    let k = k_squared.sqrt();
    intermediates.push(("k1".to_string(), k1.value));
    intermediates.push(("k2".to_string(), k2.value));
    intermediates.push(("c".to_string(), c));
    intermediates.push(("lhs".to_string(), k_squared));
    intermediates.push(("rhs".to_string(), 1.0));
    intermediates.push(("k".to_string(), k));
    let heuristic = k1.provenance == Provenance::SampledHeuristic
        || k2.provenance == Provenance::SampledHeuristic;
    let (verdict, message) = if k_squared < 1.0 {
        if heuristic {
            (
                Verdict::PassHeuristic,
                format!("contractive with sampled constants, k = {k}"),
            )
        } else {
            (Verdict::Pass, format!("contractive, k = {k}"))
        }
    } else {
        (
            Verdict::Fail,
            format!("not contractive: k^2 = {k_squared} >= 1"),
        )
    };
    ConditionReport {
        kind: ConditionKind::BanachSie,
        verdict,
        intermediates,
        message,
    }
}

/// Existence condition for the deterministic equation: |lambda| M <= r with
/// (b - a) M = max |F| over [a, b]^2 x {|u| <= r}.
pub fn check_fredholm_schauder(
    problem: &FredholmProblem,
    r: f64,
    policy: &BoundPolicy,
) -> Result<ConditionReport> {
    if r.is_nan() || r <= 0.0 || !r.is_finite() {
        return Err(SieError::InvalidParameter(format!(
            "radius must be positive, got {r}"
        )));
    }
    let (a, b) = (problem.a(), problem.b());
    let lambda = problem.lambda();
    let mut intermediates = vec![
        ("a".to_string(), a),
        ("b".to_string(), b),
        ("lambda".to_string(), lambda),
        ("r".to_string(), r),
    ];
    let (max_abs_f, heuristic) = match problem.kernel().max_abs(a, b, r) {
        Some(v) => (v, false),
        None => match policy {
            BoundPolicy::AllowHeuristic { n_samples, seed } => (
                problem
                    .kernel()
                    .estimate_max_abs(a, b, r, *n_samples, *seed),
                true,
            ),
            BoundPolicy::AnalyticOnly => {
                return Ok(ConditionReport {
                    kind: ConditionKind::SchauderFredholm,
                    verdict: Verdict::Unavailable,
                    intermediates,
                    message: "no analytic kernel sup under current policy".to_string(),
                });
            }
        },
    };
    let m_cal = max_abs_f / (b - a);
    let lhs = lambda.abs() * m_cal;
    intermediates.push(("max_abs_f".to_string(), max_abs_f));
    intermediates.push(("m".to_string(), m_cal));
    intermediates.push(("lhs".to_string(), lhs));
    intermediates.push(("rhs".to_string(), r));
    let (verdict, message) = if lhs <= r {
        if heuristic {
            (
                Verdict::PassHeuristic,
                "ball condition holds with sampled kernel sup".to_string(),
            )
        } else {
            (Verdict::Pass, "ball condition holds".to_string())
        }
    } else {
        (Verdict::Fail, format!("ball condition fails: {lhs} > {r}"))
    };
    Ok(ConditionReport {
        kind: ConditionKind::SchauderFredholm,
        verdict,
        intermediates,
        message,
    })
}

/// Uniqueness condition for the deterministic equation:
/// (b - a) |lambda| L < 1 with L a bound on |dF/du|.
pub fn check_fredholm_banach(problem: &FredholmProblem, policy: &BoundPolicy) -> ConditionReport {
    let (a, b) = (problem.a(), problem.b());
    let lambda = problem.lambda();
    let mut intermediates = vec![
        ("a".to_string(), a),
        ("b".to_string(), b),
        ("lambda".to_string(), lambda),
    ];
    let (l_cal, heuristic) = match problem.kernel().u_derivative_bound(a, b) {
        Some(v) => (v, false),
        None => match policy {
            BoundPolicy::AllowHeuristic { n_samples, seed } => (
                problem
                    .kernel()
                    .estimate_u_lipschitz(a, b, *n_samples, *seed),
                true,
            ),
            BoundPolicy::AnalyticOnly => {
                return ConditionReport {
                    kind: ConditionKind::BanachFredholm,
                    verdict: Verdict::Unavailable,
                    intermediates,
                    message: "no analytic u-derivative bound under current policy".to_string(),
                };
            }
        },
    };
    let lhs = (b - a) * lambda.abs() * l_cal;
    intermediates.push(("l".to_string(), l_cal));
    intermediates.push(("lhs".to_string(), lhs));
    intermediates.push(("rhs".to_string(), 1.0));
    let (verdict, message) = if lhs < 1.0 {
        if heuristic {
            (
                Verdict::PassHeuristic,
                "contractive with sampled kernel slope".to_string(),
            )
        } else {
            (Verdict::Pass, "contractive".to_string())
        }
    } else {
        (Verdict::Fail, format!("not contractive: {lhs} >= 1"))
    };
    ConditionReport {
        kind: ConditionKind::BanachFredholm,
        verdict,
        intermediates,
        message,
    }
}

const MIN_RADIUS_MAX: f64 = 1e6;
const MIN_RADIUS_TOL: f64 = 1e-9;

/// Smallest radius r for which `check_schauder` passes, found by a coarse
/// feasibility sweep followed by bisection to absolute tolerance 1e-9.
/// Returns Ok(None) when no radius below 1e6 is feasible (state-proportional
/// coefficients can defeat the ball condition for every r).
pub fn min_radius(problem: &SieProblem) -> Result<Option<f64>> {
    let (a, b) = (problem.a(), problem.b());
    let e_h2 = problem.initial_law().second_moment();
    let d_of_r = |r: f64| -> Result<f64> {
        let df = problem
            .drift()
            .analytic_sup_bound(a, b, r)
            .ok_or_else(|| SieError::BoundUnavailable("drift sup has no closed form".into()))?;
        let ds = problem
            .diffusion()
            .analytic_sup_bound(a, b, r)
            .ok_or_else(|| SieError::BoundUnavailable("diffusion sup has no closed form".into()))?;
        Ok(df.max(ds))
    };
    let feasible = |r: f64| -> Result<bool> {
        let d = d_of_r(r)?;
        Ok(3.0 * e_h2 + 3.0 * (1.0 + b - a) * (b - a) * d * d <= r * r)
    };
    // Sweep a log grid for the first feasible radius. The registry's d(r) is
    // nondecreasing and piecewise affine in r, so a sign change between
    // neighbouring grid points brackets the feasibility boundary.
    if e_h2 == 0.0 && d_of_r(0.0)? == 0.0 {
        // degenerate problem: zero initial condition and coefficients that
        // vanish on the zero ball
    }
    let mut prev = 0.0f64;
    let mut prev_ok = feasible(prev)?;
    if prev_ok {
        return Ok(Some(0.0));
    }
    let grid_points = 1400usize;
    let (lo_exp, hi_exp) = (-6.0f64, MIN_RADIUS_MAX.log10());
    let mut bracket = None;
    for i in 0..=grid_points {
        let r = 10f64.powf(lo_exp + (hi_exp - lo_exp) * i as f64 / grid_points as f64);
        let ok = feasible(r)?;
        if ok && !prev_ok {
            bracket = Some((prev, r));
            break;
        }
        prev = r;
        prev_ok = ok;
    }
    let (mut lo, mut hi) = match bracket {
        Some(x) => x,
        None => return Ok(None),
    };
    while hi - lo > MIN_RADIUS_TOL {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}
