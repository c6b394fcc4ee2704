//! Probe the operator empirically: the worst contraction ratio over random
//! pairs in a ball, and the time-regularity modulus of operator images,
//! both compared with their closed-form bounds.

use sie::coefficients::{BoundPolicy, Coefficient, TimeFn};
use sie::conditions::{check_banach, InitialLaw, SieProblem};
use sie::paths::{BrownianEnsemble, TimeGrid};
use sie::picard::{contraction_probe, equicontinuity_probe, random_ball_element};

fn main() {
    let problem = SieProblem::new(
        0.0,
        1.0,
        InitialLaw::Constant(1.0),
        Coefficient::Linear(TimeFn::Const(0.05)),
        Coefficient::Linear(TimeFn::Const(0.2)),
    )
    .unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 64).unwrap();

    let k = check_banach(&problem, &BoundPolicy::AnalyticOnly)
        .get("k")
        .unwrap();
    println!("contraction constant from the uniqueness condition: k = {k:.4}");
    println!("(the Lipschitz maximum alone is c = 0.2)");
    println!();
    println!("worst sup-L2 ratio over 32 random pairs in the ball of radius 2:");
    for seed in [1u64, 2, 3] {
        let ensemble = BrownianEnsemble::sample(&grid, 10_000, seed).unwrap();
        let ratio = contraction_probe(&problem, &ensemble, 32, 2.0, seed ^ 0xff).unwrap();
        println!("  seed {seed}: {ratio:.4}  (<= k = {k:.4})");
    }

    // constant coefficients make the operator image's time regularity easy
    // to bound: squared increment norms per unit time stay below
    // 2 (1 + b - a) d^2
    let constant = SieProblem::new(
        0.0,
        1.0,
        InitialLaw::Constant(1.0),
        Coefficient::Constant(1.0),
        Coefficient::Constant(1.0),
    )
    .unwrap();
    let bound = 2.0 * (1.0 + 1.0) * 1.0;
    let ensemble = BrownianEnsemble::sample(&grid, 10_000, 9).unwrap();
    println!();
    println!("time-regularity modulus for 5 random ball elements (bound {bound}):");
    for idx in 0..5 {
        let x = random_ball_element(&ensemble, 3.0, 77, idx).unwrap();
        let modulus = equicontinuity_probe(&constant, &ensemble, &x, 3.0).unwrap();
        println!("  element {idx}: {modulus:.4}");
    }
}
