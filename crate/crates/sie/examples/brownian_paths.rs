//! Generate a reproducible Brownian ensemble, check its sample moments,
//! refine it with bridge insertion, and round-trip it through the binary
//! dump format.

use sie::math::{exact_mean, exact_sum};
use sie::paths::{BrownianEnsemble, TimeGrid};
use std::io::Cursor;

fn main() {
    let grid = TimeGrid::new(0.0, 1.0, 256).unwrap();
    let ensemble = BrownianEnsemble::sample(&grid, 50_000, 42).unwrap();
    println!(
        "ensemble: {} paths x {} steps, dt = {:.5}, seed = {}",
        ensemble.n_paths(),
        grid.m(),
        grid.dt(),
        ensemble.seed()
    );

    // terminal distribution: B(1) ~ Normal(0, 1)
    let terminals: Vec<f64> = (0..ensemble.n_paths())
        .map(|p| *ensemble.path_values_row(p).last().unwrap())
        .collect();
    let mean = exact_mean(terminals.iter().copied());
    let var =
        exact_sum(terminals.iter().map(|t| (t - mean) * (t - mean))) / (terminals.len() - 1) as f64;
    println!("B(1): sample mean {mean:+.5} (expect 0), sample variance {var:.5} (expect 1)");

    // determinism: same seed, same bits
    let again = BrownianEnsemble::sample(&grid, 50_000, 42).unwrap();
    println!(
        "regeneration bit-identical: {}",
        again.increments() == ensemble.increments()
    );

    // bridge refinement doubles the resolution while reproducing the coarse
    // path values
    let fine = ensemble.refine(4, 777).unwrap();
    let mut worst = 0.0f64;
    let mut exact_nodes = 0usize;
    let mut nodes = 0usize;
    for p in 0..200 {
        let cv = ensemble.path_values_row(p);
        let fv = fine.path_values_row(p);
        for j in 0..=grid.m() {
            let gap = (cv[j] - fv[4 * j]).abs();
            worst = worst.max(gap);
            exact_nodes += usize::from(cv[j].to_bits() == fv[4 * j].to_bits());
            nodes += 1;
        }
    }
    println!(
        "refinement x4: {} fine steps; coarse coupling worst |gap| {worst:.2e}, {exact_nodes}/{nodes} nodes bit-exact",
        fine.grid().m()
    );

    // binary dump round trip
    let mut buffer = Vec::new();
    ensemble.write_to(&mut buffer).unwrap();
    let restored = BrownianEnsemble::read_from(&mut Cursor::new(&buffer)).unwrap();
    println!(
        "dump: {} bytes, round trip identical: {}",
        buffer.len(),
        restored.increments() == ensemble.increments()
    );
}
