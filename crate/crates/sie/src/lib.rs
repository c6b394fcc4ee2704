//! Monte Carlo toolkit for stochastic integral equations of the form
//!
//! ```text
//! X_t = h + int_a^t sigma(s, X_s) dB(s) + int_a^t f(s, X_s) ds
//! ```
//!
//! built around three pillars:
//!
//! - **Fixed-point solving.** The integral operator is applied to empirical
//!   path ensembles and iterated to its fixed point, with an explicit
//!   Euler-Maruyama recursion as an independent cross-check
//!   ([`picard`]).
//! - **Condition checking.** The existence condition
//!   `3 E[h^2] + 3 (1 + b - a)(b - a) d^2 <= r^2` and the uniqueness
//!   condition `2 c^2 (1 + b - a)(b - a) < 1` are evaluated with analytic
//!   coefficient bounds and full intermediate reporting ([`conditions`]),
//!   plus empirical probes of the contraction factor and the
//!   time-regularity modulus they predict ([`picard`]).
//! - **A deterministic counterpart.** The scalar equation
//!   `u(x) = lambda int_a^b F(x, y, u(y)) dy` under trapezoid quadrature,
//!   with the matching condition pair ([`fredholm`]).
//!
//! Everything is reproducible by construction: Brownian draws come from a
//! counter-based generator keyed by (seed, path, step), reductions use
//! exactly rounded summation, and reruns are bit-identical under any thread
//! count.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --example brownian_paths            # grids, ensembles, refinement
//! cargo run --example ito_isometry              # integrals and the isometry check
//! cargo run --example coefficient_bounds        # registry bounds, descriptors
//! cargo run --example condition_checks          # existence/uniqueness verdicts
//! cargo run --example picard_solve              # fixed-point solve + diagnostics
//! cargo run --example contraction_diagnostics   # probes vs theoretical constants
//! cargo run --example gbm_study                 # strong-convergence ladder
//! cargo run --example fredholm_solve            # deterministic counterpart
//! ```
//!
//! The `sie` binary drives batch experiments from strict TOML configs
//! (subcommands `check`, `solve`, `gbm`, `fredholm`, `isometry`); see the
//! README for the config grammar, CSV schemas and exit codes.
//!
//! # Quick start
//!
//! ```
//! use sie::calculus::{isometry_check, AdaptedProcess};
//! use sie::paths::{BrownianEnsemble, TimeGrid};
//!
//! let grid = TimeGrid::new(0.0, 1.0, 200).unwrap();
//! let ensemble = BrownianEnsemble::sample(&grid, 5_000, 42).unwrap();
//! let integrand = AdaptedProcess::brownian_paths(&ensemble);
//! let report = isometry_check(&integrand, &ensemble, 0.05).unwrap();
//! assert!((report.lhs - report.rhs).abs() <= 4.0 * report.diff_std_error);
//! ```

pub mod calculus;
pub mod cli;
pub mod coefficients;
pub mod conditions;
pub mod error;
pub mod fredholm;
pub mod math;
pub mod paths;
pub mod picard;
pub mod rng;

pub use error::SieError;
