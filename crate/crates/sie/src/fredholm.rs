//! Deterministic integral equation u(x) = lambda * int_a^b F(x, y, u(y)) dy
//! solved by composite-trapezoid quadrature and fixed-point iteration.

use crate::coefficients::TimeFn;
use crate::error::{Result, SieError};
use crate::rng;
use std::fmt;
use std::str::FromStr;

/// Kernel registry with closed-form sup and u-slope metadata.
///
/// Descriptors:
/// `separable:(<timefn>):(<timefn>)` for p(x) q(y),
/// `affine:(<timefn>):(<timefn>):<gamma>` for p(x) q(y) + gamma u,
/// `sinu:(<timefn>):(<timefn>)` for p(x) q(y) sin(u).
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    /// p(x) * q(y)
    Separable { p: TimeFn, q: TimeFn },
    /// p(x) * q(y) + gamma * u
    AffineU { p: TimeFn, q: TimeFn, gamma: f64 },
    /// p(x) * q(y) * sin(u)
    SinU { p: TimeFn, q: TimeFn },
}

impl Kernel {
    pub fn evaluate(&self, x: f64, y: f64, u: f64) -> f64 {
        match self {
            Kernel::Separable { p, q } => p.eval(x) * q.eval(y),
            Kernel::AffineU { p, q, gamma } => p.eval(x) * q.eval(y) + gamma * u,
            Kernel::SinU { p, q } => p.eval(x) * q.eval(y) * u.sin(),
        }
    }

    /// Exact max of |p(x) q(y)| over independent x, y in [a, b].
    fn product_max_abs(p: &TimeFn, q: &TimeFn, a: f64, b: f64) -> Option<f64> {
        let (plo, phi) = p.range(a, b)?;
        let (qlo, qhi) = q.range(a, b)?;
        let mut m = 0.0f64;
        for pv in [plo, phi] {
            for qv in [qlo, qhi] {
                m = m.max((pv * qv).abs());
            }
        }
        Some(m)
    }

    /// Max of |F| over x, y in [a, b], |u| <= r, where the time-function
    /// registry has closed-form ranges.
    pub fn max_abs(&self, a: f64, b: f64, r: f64) -> Option<f64> {
        match self {
            Kernel::Separable { p, q } => Self::product_max_abs(p, q, a, b),
            Kernel::AffineU { p, q, gamma } => {
                Self::product_max_abs(p, q, a, b).map(|m| m + gamma.abs() * r)
            }
            Kernel::SinU { p, q } => {
                let cap = if r >= std::f64::consts::FRAC_PI_2 {
                    1.0
                } else {
                    r.sin()
                };
                Self::product_max_abs(p, q, a, b).map(|m| m * cap)
            }
        }
    }

    /// Global bound on |dF/du|.
    pub fn u_derivative_bound(&self, a: f64, b: f64) -> Option<f64> {
        match self {
            Kernel::Separable { .. } => Some(0.0),
            Kernel::AffineU { gamma, .. } => Some(gamma.abs()),
            // |p q cos(u)| <= max |p q|
            Kernel::SinU { p, q } => Self::product_max_abs(p, q, a, b),
        }
    }

    /// Sampled fallback for `max_abs`.
    pub fn estimate_max_abs(&self, a: f64, b: f64, r: f64, n_samples: usize, seed: u64) -> f64 {
        let mut m = 0.0f64;
        for i in 0..n_samples as u64 {
            let x = a + (b - a) * rng::uniform_cell(seed, i, 0);
            let y = a + (b - a) * rng::uniform_cell(seed, i, 1);
            let u = -r + 2.0 * r * rng::uniform_cell(seed, i, 2);
            m = m.max(self.evaluate(x, y, u).abs());
        }
        m
    }

    /// Sampled fallback for `u_derivative_bound` (max difference quotient in u).
    pub fn estimate_u_lipschitz(&self, a: f64, b: f64, n_samples: usize, seed: u64) -> f64 {
        let mut m = 0.0f64;
        for i in 0..n_samples as u64 {
            let x = a + (b - a) * rng::uniform_cell(seed, i, 0);
            let y = a + (b - a) * rng::uniform_cell(seed, i, 1);
            let u = -10.0 + 20.0 * rng::uniform_cell(seed, i, 2);
            let v = -10.0 + 20.0 * rng::uniform_cell(seed, i, 3);
            if u != v {
                m = m.max((self.evaluate(x, y, u) - self.evaluate(x, y, v)).abs() / (u - v).abs());
            }
        }
        m
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Separable { p, q } => write!(f, "separable:({p}):({q})"),
            Kernel::AffineU { p, q, gamma } => write!(f, "affine:({p}):({q}):{gamma}"),
            Kernel::SinU { p, q } => write!(f, "sinu:({p}):({q})"),
        }
    }
}

impl FromStr for Kernel {
    type Err = SieError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s
            .split_once(':')
            .ok_or_else(|| SieError::Parse(format!("bad kernel '{s}'")))?;
        let parts = crate::coefficients::split_top(rest, ':');
        let timefn =
            |part: &str| -> Result<TimeFn> { crate::coefficients::strip_parens(part)?.parse() };
        match (head.trim(), parts.as_slice()) {
            ("separable", [p, q]) => Ok(Kernel::Separable {
                p: timefn(p)?,
                q: timefn(q)?,
            }),
            ("affine", [p, q, gamma]) => Ok(Kernel::AffineU {
                p: timefn(p)?,
                q: timefn(q)?,
                gamma: gamma
                    .trim()
                    .parse()
                    .map_err(|_| SieError::Parse(format!("bad gamma '{gamma}'")))?,
            }),
            ("sinu", [p, q]) => Ok(Kernel::SinU {
                p: timefn(p)?,
                q: timefn(q)?,
            }),
            _ => Err(SieError::Parse(format!("unknown kernel '{s}'"))),
        }
    }
}

/// The deterministic problem (a, b, lambda, F).
#[derive(Clone, Debug)]
pub struct FredholmProblem {
    a: f64,
    b: f64,
    lambda: f64,
    kernel: Kernel,
}

impl FredholmProblem {
    pub fn new(a: f64, b: f64, lambda: f64, kernel: Kernel) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || a >= b {
            return Err(SieError::InvalidInterval { a, b });
        }
        if !lambda.is_finite() {
            return Err(SieError::InvalidParameter("lambda must be finite".into()));
        }
        Ok(FredholmProblem {
            a,
            b,
            lambda,
            kernel,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Composite-trapezoid abscissae for n_quad steps.
    pub fn quad_nodes(&self, n_quad: usize) -> Result<Vec<f64>> {
        if n_quad == 0 {
            return Err(SieError::InvalidSteps);
        }
        let h = (self.b - self.a) / n_quad as f64;
        let mut nodes: Vec<f64> = (0..=n_quad).map(|j| self.a + j as f64 * h).collect();
        nodes[n_quad] = self.b;
        Ok(nodes)
    }
}

/// Function sampled on quadrature nodes.
#[derive(Clone, Debug)]
pub struct GridFunction {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(SieError::NodeMismatch(format!(
                "{} nodes vs {} values",
                nodes.len(),
                values.len()
            )));
        }
        Ok(GridFunction { nodes, values })
    }

    pub fn zeros(nodes: Vec<f64>) -> Self {
        let values = vec![0.0; nodes.len()];
        GridFunction { nodes, values }
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }
}

/// One application of the integral operator on the trapezoid grid:
/// out(x_i) = lambda * sum_j w_j F(x_i, y_j, u(y_j)).
pub fn apply_fredholm(
    problem: &FredholmProblem,
    u: &GridFunction,
    n_quad: usize,
) -> Result<GridFunction> {
    let nodes = problem.quad_nodes(n_quad)?;
    if u.nodes.len() != nodes.len()
        || u.nodes.first() != nodes.first()
        || u.nodes.last() != nodes.last()
    {
        return Err(SieError::NodeMismatch(format!(
            "grid function has {} nodes, quadrature rule expects {}",
            u.nodes.len(),
            nodes.len()
        )));
    }
    let h = (problem.b() - problem.a()) / n_quad as f64;
    let lambda = problem.lambda();
    let values: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let mut acc = 0.0f64;
            for (j, (&y, &uy)) in nodes.iter().zip(u.values.iter()).enumerate() {
                let w = if j == 0 || j == n_quad { 0.5 * h } else { h };
                acc += w * problem.kernel().evaluate(x, y, uy);
            }
            lambda * acc
        })
        .collect();
    GridFunction::new(nodes, values)
}

/// Convergence record for the deterministic fixed-point iteration.
#[derive(Clone, Debug)]
pub struct FredholmRecord {
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm update per iteration.
    pub history: Vec<f64>,
    /// Max-norm of A u - u at the returned iterate.
    pub final_residual: f64,
    /// Geometric fit to the tail of `history` (needs >= 4 entries).
    pub empirical_rate: Option<f64>,
}

/// Fixed-point iteration u <- A u from u = 0 until the max-norm update
/// drops below tol. Non-convergence is reported, not thrown.
pub fn solve_fredholm(
    problem: &FredholmProblem,
    n_quad: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(GridFunction, FredholmRecord)> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(SieError::InvalidParameter("tol must be > 0".into()));
    }
    if max_iter == 0 {
        return Err(SieError::InvalidParameter("max_iter must be >= 1".into()));
    }
    let mut u = GridFunction::zeros(problem.quad_nodes(n_quad)?);
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let next = apply_fredholm(problem, &u, n_quad)?;
        let update = next.max_diff(&u);
        if !update.is_finite() {
            return Err(SieError::NumericFailure { path: 0, index: 0 });
        }
        history.push(update);
        u = next;
        if update <= tol {
            converged = true;
            break;
        }
    }
    let final_residual = apply_fredholm(problem, &u, n_quad)?.max_diff(&u);
    let empirical_rate = crate::picard::geometric_rate(&history);
    let record = FredholmRecord {
        iterations: history.len(),
        converged,
        history,
        final_residual,
        empirical_rate,
    };
    Ok((u, record))
}
