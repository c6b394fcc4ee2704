//! The coefficient registry: evaluation, descriptor parsing, and the
//! analytic Lipschitz/sup bounds the condition checkers consume, compared
//! against sampled estimates.

use sie::coefficients::Coefficient;

fn main() {
    let (a, b, r) = (0.0, 1.0, 3.0);
    let descriptors = [
        "constant:2.0",
        "linear:const:0.2",
        "linear:sin:1,6.2831853,0",
        "affine:(poly:0.25,-1,1):(const:0.5)",
        "clipped:0.6:(linear:poly:0,1)",
    ];

    println!(
        "{:<40} {:>10} {:>12} {:>10} {:>12}",
        "descriptor", "lipschitz", "(sampled)", "sup|r=3", "(sampled)"
    );
    for text in descriptors {
        let coef: Coefficient = text.parse().unwrap();
        let lip = coef.analytic_lipschitz(a, b);
        let sup = coef.analytic_sup_bound(a, b, r);
        let sampled = coef.estimate_bounds(a, b, r, 200_000, 7);
        println!(
            "{:<40} {:>10} {:>12.6} {:>10} {:>12.6}",
            text,
            lip.map_or("n/a".into(), |v| format!("{v:.6}")),
            sampled.lipschitz.unwrap().value,
            sup.map_or("n/a".into(), |v| format!("{v:.6}")),
            sampled.sup_on_ball.unwrap().value,
        );
    }

    println!();
    let coef: Coefficient = "linear:sin:1,6.2831853,0".parse().unwrap();
    println!(
        "evaluate linear:sin at (s=0.25, x=2): {}",
        coef.evaluate(0.25, 2.0)
    );
    println!("descriptor echo: {coef}");
    // quartic time functions have no closed-form extrema in this registry
    let quartic: Coefficient = "linear:poly:0,0,0,0,1".parse().unwrap();
    println!(
        "quartic analytic lipschitz: {:?} (sampled fallback: {:.4})",
        quartic.analytic_lipschitz(a, b),
        quartic
            .estimate_bounds(a, b, 1.0, 200_000, 8)
            .lipschitz
            .unwrap()
            .value
    );
}
