//! Drift and diffusion coefficients (s, x) -> value.
//!
//! The registry is closed on purpose: every kind carries closed-form
//! Lipschitz constants and ball sup bounds, which is what makes the
//! existence/uniqueness condition checkers trustworthy. Arbitrary closures
//! would force sampled bounds everywhere, and sampled bounds can only ever
//! produce `pass (heuristic)` verdicts.
//!
//! Textual descriptors (used by the CLI config, grammar in the README):
//!
//! ```text
//! coefficient := constant:<f>
//!              | linear:<timefn>                 g(s) * x
//!              | affine:(<timefn>):(<timefn>)    slope(s) * x + offset(s)
//!              | clipped:<f>:(<coefficient>)     clamp to [-bound, bound]
//! timefn      := const:<f>
//!              | poly:<c0>[,<c1>,...]            c0 + c1 s + c2 s^2 + ...
//!              | sin:<amp>,<freq>,<phase>        amp * sin(freq s + phase)
//! ```

use crate::error::{Result, SieError};
use crate::rng;
use std::fmt;
use std::str::FromStr;

/// Scalar function of time from a small closed registry.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeFn {
    Const(f64),
    /// Coefficients in increasing degree: c0 + c1 s + c2 s^2 + ...
    Poly(Vec<f64>),
    /// amp * sin(freq * s + phase)
    Sin {
        amp: f64,
        freq: f64,
        phase: f64,
    },
}

impl TimeFn {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            TimeFn::Const(c) => *c,
            TimeFn::Poly(coeffs) => {
                let mut acc = 0.0;
                for &c in coeffs.iter().rev() {
                    acc = acc * s + c;
                }
                acc
            }
            TimeFn::Sin { amp, freq, phase } => amp * (freq * s + phase).sin(),
        }
    }

    /// Exact (min, max) over [a, b] where the registry has a closed form:
    /// polynomials up to cubic (endpoint + critical-point evaluation) and
    /// sinusoids (endpoint + extremal-phase containment).
    pub fn range(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        match self {
            TimeFn::Const(c) => Some((*c, *c)),
            TimeFn::Poly(coeffs) => {
                let deg = poly_degree(coeffs);
                if deg > 3 {
                    return None;
                }
                let mut candidates = vec![a, b];
                match deg {
                    2 => {
                        // derivative c1 + 2 c2 s
                        let (c1, c2) = (coeffs[1], coeffs[2]);
                        if c2 != 0.0 {
                            candidates.push(-c1 / (2.0 * c2));
                        }
                    }
                    3 => {
                        // derivative c1 + 2 c2 s + 3 c3 s^2
                        let (c1, c2, c3) = (coeffs[1], coeffs[2], coeffs[3]);
                        let (qa, qb, qc) = (3.0 * c3, 2.0 * c2, c1);
                        let disc = qb * qb - 4.0 * qa * qc;
                        if disc >= 0.0 && qa != 0.0 {
                            let sq = disc.sqrt();
                            candidates.push((-qb + sq) / (2.0 * qa));
                            candidates.push((-qb - sq) / (2.0 * qa));
                        }
                    }
                    _ => {}
                }
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for s in candidates {
                    if s >= a && s <= b {
                        let v = self.eval(s);
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                Some((lo, hi))
            }
            TimeFn::Sin { amp, freq, phase } => {
                let (mut t0, mut t1) = (freq * a + phase, freq * b + phase);
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                let (mut smin, mut smax) = if t1 - t0 >= std::f64::consts::TAU {
                    (-1.0, 1.0)
                } else {
                    let mut smin = t0.sin().min(t1.sin());
                    let mut smax = t0.sin().max(t1.sin());
                    if contains_angle(t0, t1, std::f64::consts::FRAC_PI_2) {
                        smax = 1.0;
                    }
                    if contains_angle(t0, t1, -std::f64::consts::FRAC_PI_2) {
                        smin = -1.0;
                    }
                    (smin, smax)
                };
                if *amp < 0.0 {
                    (smin, smax) = (smax, smin);
                }
                Some((amp * smin, amp * smax))
            }
        }
    }

    /// Exact max of |f| over [a, b] where `range` has a closed form.
    pub fn max_abs(&self, a: f64, b: f64) -> Option<f64> {
        self.range(a, b).map(|(lo, hi)| lo.abs().max(hi.abs()))
    }
}

fn poly_degree(coeffs: &[f64]) -> usize {
    coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
}

/// Does target + 2 pi k fall inside [t0, t1] for some integer k?
fn contains_angle(t0: f64, t1: f64, target: f64) -> bool {
    let tau = std::f64::consts::TAU;
    let k = ((t0 - target) / tau).ceil();
    target + k * tau <= t1
}

/// Drift or diffusion coefficient from the closed registry.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    /// g(s) * x
    Linear(TimeFn),
    /// slope(s) * x + offset(s)
    Affine {
        slope: TimeFn,
        offset: TimeFn,
    },
    /// Inner value clamped to [-bound, bound]
    Clipped {
        inner: Box<Coefficient>,
        bound: f64,
    },
}

/// How a reported bound was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    SampledHeuristic,
}

#[derive(Clone, Copy, Debug)]
pub struct BoundValue {
    pub value: f64,
    pub provenance: Provenance,
}

/// Lipschitz constant (in x) and sup bound on a ball, where available.
#[derive(Clone, Copy, Debug, Default)]
pub struct BoundInfo {
    pub lipschitz: Option<BoundValue>,
    pub sup_on_ball: Option<BoundValue>,
}

/// Whether condition checkers may fall back to sampled bounds.
#[derive(Clone, Copy, Debug)]
pub enum BoundPolicy {
    AnalyticOnly,
    AllowHeuristic { n_samples: usize, seed: u64 },
}

impl Coefficient {
    /// Evaluate at time s and state x. Total and finite for finite inputs.
    pub fn evaluate(&self, s: f64, x: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Linear(g) => g.eval(s) * x,
            Coefficient::Affine { slope, offset } => slope.eval(s) * x + offset.eval(s),
            Coefficient::Clipped { inner, bound } => inner.evaluate(s, x).clamp(-bound, *bound),
        }
    }

    /// Evaluate with a non-finite input guard.
    pub fn evaluate_checked(&self, s: f64, x: f64) -> Result<f64> {
        if !s.is_finite() || !x.is_finite() {
            return Err(SieError::InvalidParameter(format!(
                "non-finite coefficient input (s={s}, x={x})"
            )));
        }
        Ok(self.evaluate(s, x))
    }

    /// Closed-form Lipschitz constant in x over s in [a, b], or None when the
    /// registry has no closed form (polynomial time functions above cubic).
    pub fn analytic_lipschitz(&self, a: f64, b: f64) -> Option<f64> {
        match self {
            Coefficient::Constant(_) => Some(0.0),
            Coefficient::Linear(g) => g.max_abs(a, b),
            Coefficient::Affine { slope, .. } => slope.max_abs(a, b),
            // clamping is 1-Lipschitz, so the inner constant carries over
            Coefficient::Clipped { inner, .. } => inner.analytic_lipschitz(a, b),
        }
    }

    /// Closed-form sup of |value| over s in [a, b], |x| <= r.
    pub fn analytic_sup_bound(&self, a: f64, b: f64, r: f64) -> Option<f64> {
        match self {
            Coefficient::Constant(c) => Some(c.abs()),
            Coefficient::Linear(g) => g.max_abs(a, b).map(|m| m * r),
            Coefficient::Affine { slope, offset } => {
                match (slope.max_abs(a, b), offset.max_abs(a, b)) {
                    (Some(ms), Some(mo)) => Some(ms * r + mo),
                    _ => None,
                }
            }
            Coefficient::Clipped { inner, bound } => Some(
                inner
                    .analytic_sup_bound(a, b, r)
                    .map_or(*bound, |s| s.min(*bound)),
            ),
        }
    }

    /// Sampled bounds: empirical max of |eval| over uniform draws from
    /// [a, b] x [-r, r] and the max difference quotient over sampled state
    /// pairs at shared times. Clearly labelled as heuristic.
    pub fn estimate_bounds(
        &self,
        a: f64,
        b: f64,
        r: f64,
        n_samples: usize,
        seed: u64,
    ) -> BoundInfo {
        let mut sup = 0.0f64;
        let mut lip = 0.0f64;
        for i in 0..n_samples as u64 {
            let s = a + (b - a) * rng::uniform_cell(seed, i, 0);
            let x = -r + 2.0 * r * rng::uniform_cell(seed, i, 1);
            let y = -r + 2.0 * r * rng::uniform_cell(seed, i, 2);
            let fx = self.evaluate(s, x);
            sup = sup.max(fx.abs()).max(self.evaluate(s, y).abs());
            if x != y {
                lip = lip.max((fx - self.evaluate(s, y)).abs() / (x - y).abs());
            }
        }
        BoundInfo {
            lipschitz: Some(BoundValue {
                value: lip,
                provenance: Provenance::SampledHeuristic,
            }),
            sup_on_ball: Some(BoundValue {
                value: sup,
                provenance: Provenance::SampledHeuristic,
            }),
        }
    }

    /// Analytic bounds where available, sampled fallbacks where the policy
    /// permits.
    pub fn resolve_bounds(&self, a: f64, b: f64, r: f64, policy: &BoundPolicy) -> BoundInfo {
        let mut info = BoundInfo {
            lipschitz: self.analytic_lipschitz(a, b).map(|value| BoundValue {
                value,
                provenance: Provenance::Analytic,
            }),
            sup_on_ball: self.analytic_sup_bound(a, b, r).map(|value| BoundValue {
                value,
                provenance: Provenance::Analytic,
            }),
        };
        if info.lipschitz.is_none() || info.sup_on_ball.is_none() {
            if let BoundPolicy::AllowHeuristic { n_samples, seed } = policy {
                let sampled = self.estimate_bounds(a, b, r, *n_samples, *seed);
                info.lipschitz = info.lipschitz.or(sampled.lipschitz);
                info.sup_on_ball = info.sup_on_ball.or(sampled.sup_on_ball);
            }
        }
        info
    }
}

impl fmt::Display for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeFn::Const(c) => write!(f, "const:{c}"),
            TimeFn::Poly(coeffs) => {
                write!(f, "poly:")?;
                for (i, c) in coeffs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
            TimeFn::Sin { amp, freq, phase } => write!(f, "sin:{amp},{freq},{phase}"),
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "constant:{c}"),
            Coefficient::Linear(g) => write!(f, "linear:{g}"),
            Coefficient::Affine { slope, offset } => write!(f, "affine:({slope}):({offset})"),
            Coefficient::Clipped { inner, bound } => write!(f, "clipped:{bound}:({inner})"),
        }
    }
}

/// Split on top-level `sep`, ignoring separators inside parentheses.
pub(crate) fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

pub(crate) fn strip_parens(s: &str) -> Result<&str> {
    let t = s.trim();
    if t.starts_with('(') && t.ends_with(')') && t.len() >= 2 {
        Ok(&t[1..t.len() - 1])
    } else {
        Err(SieError::Parse(format!(
            "expected parenthesized group, got '{s}'"
        )))
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| SieError::Parse(format!("bad number '{s}'")))
}

impl FromStr for TimeFn {
    type Err = SieError;

    fn from_str(s: &str) -> Result<Self> {
        let (head, rest) = s
            .split_once(':')
            .ok_or_else(|| SieError::Parse(format!("bad time function '{s}'")))?;
        match head.trim() {
            "const" => Ok(TimeFn::Const(parse_f64(rest)?)),
            "poly" => {
                let coeffs: Result<Vec<f64>> = rest.split(',').map(parse_f64).collect();
                let coeffs = coeffs?;
                if coeffs.is_empty() {
                    return Err(SieError::Parse(
                        "poly needs at least one coefficient".into(),
                    ));
                }
                Ok(TimeFn::Poly(coeffs))
            }
            "sin" => {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 3 {
                    return Err(SieError::Parse(format!(
                        "sin needs amp,freq,phase, got '{rest}'"
                    )));
                }
                Ok(TimeFn::Sin {
                    amp: parse_f64(parts[0])?,
                    freq: parse_f64(parts[1])?,
                    phase: parse_f64(parts[2])?,
                })
            }
            other => Err(SieError::Parse(format!(
                "unknown time function kind '{other}'"
            ))),
        }
    }
}

impl FromStr for Coefficient {
    type Err = SieError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s
            .split_once(':')
            .ok_or_else(|| SieError::Parse(format!("bad coefficient '{s}'")))?;
        match head.trim() {
            "constant" => Ok(Coefficient::Constant(parse_f64(rest)?)),
            "linear" => Ok(Coefficient::Linear(rest.parse()?)),
            "affine" => {
                let parts = split_top(rest, ':');
                if parts.len() != 2 {
                    return Err(SieError::Parse(format!(
                        "affine needs (slope):(offset), got '{rest}'"
                    )));
                }
                Ok(Coefficient::Affine {
                    slope: strip_parens(parts[0])?.parse()?,
                    offset: strip_parens(parts[1])?.parse()?,
                })
            }
            "clipped" => {
                let parts = split_top(rest, ':');
                if parts.len() != 2 {
                    return Err(SieError::Parse(format!(
                        "clipped needs bound:(inner), got '{rest}'"
                    )));
                }
                let bound = parse_f64(parts[0])?;
                if bound.is_nan() || bound < 0.0 {
                    return Err(SieError::Parse("clip bound must be >= 0".into()));
                }
                Ok(Coefficient::Clipped {
                    inner: Box::new(strip_parens(parts[1])?.parse()?),
                    bound,
                })
            }
            other => Err(SieError::Parse(format!(
                "unknown coefficient kind '{other}'"
            ))),
        }
    }
}
