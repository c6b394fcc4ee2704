//! Machine-check the existence condition (ball containment) and the
//! uniqueness condition (contraction) for a few problems, and invert the
//! ball condition for the smallest certified radius.

use sie::coefficients::{BoundPolicy, Coefficient, TimeFn};
use sie::conditions::{check_banach, check_schauder, min_radius, InitialLaw, SieProblem};

fn main() {
    let policy = BoundPolicy::AnalyticOnly;

    // linear growth + volatility on [0,1]
    let gbm = SieProblem::new(
        0.0,
        1.0,
        InitialLaw::Constant(1.0),
        Coefficient::Linear(TimeFn::Const(0.05)),
        Coefficient::Linear(TimeFn::Const(0.2)),
    )
    .unwrap();
    println!("--- contraction condition, linear rates (0.05, 0.2) ---");
    print!("{}", check_banach(&gbm, &policy).to_kv_block());

    println!("--- ball condition, constant coefficients, r = 3 ---");
    let constant = SieProblem::new(
        0.0,
        1.0,
        InitialLaw::Constant(1.0),
        Coefficient::Constant(1.0),
        Coefficient::Constant(1.0),
    )
    .unwrap();
    print!(
        "{}",
        check_schauder(&constant, 3.0, &policy)
            .unwrap()
            .to_kv_block()
    );

    println!("--- smallest certified radius ---");
    for (label, problem) in [
        ("constant coefficients, E[h^2] = 1", constant.clone()),
        (
            "zero initial condition",
            SieProblem::new(
                0.0,
                1.0,
                InitialLaw::Constant(0.0),
                Coefficient::Constant(1.0),
                Coefficient::Constant(1.0),
            )
            .unwrap(),
        ),
        (
            "state-proportional coefficients",
            SieProblem::new(
                0.0,
                1.0,
                InitialLaw::Constant(1.0),
                Coefficient::Linear(TimeFn::Const(1.0)),
                Coefficient::Linear(TimeFn::Const(1.0)),
            )
            .unwrap(),
        ),
    ] {
        match min_radius(&problem).unwrap() {
            Some(r) => println!("{label}: r_min = {r:.9}"),
            None => println!("{label}: infeasible for every radius below 1e6"),
        }
    }

    // a sampled-bound verdict is labelled as heuristic
    println!();
    println!("--- heuristic fallback (quartic rate, no closed form) ---");
    let quartic = SieProblem::new(
        0.0,
        1.0,
        InitialLaw::Constant(0.0),
        Coefficient::Linear(TimeFn::Poly(vec![0.0, 0.0, 0.0, 0.0, 0.1])),
        Coefficient::Constant(0.1),
    )
    .unwrap();
    let heuristic = BoundPolicy::AllowHeuristic {
        n_samples: 100_000,
        seed: 5,
    };
    let rep = check_schauder(&quartic, 2.0, &heuristic).unwrap();
    println!("verdict with sampling allowed: {}", rep.verdict.label());
    let rep = check_schauder(&quartic, 2.0, &policy).unwrap();
    println!("verdict analytic-only:         {}", rep.verdict.label());
}
