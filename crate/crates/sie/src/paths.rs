//! Brownian path ensembles on uniform time grids.
//!
//! Increments are the canonical storage: path values are derived as prefix
//! sums with B(a) = 0. Every draw comes from the counter-based generator in
//! [`crate::rng`], keyed by (seed, path, step), so regeneration is
//! bit-identical for a given (grid, n_paths, seed) under any thread count,
//! and sub-ranges of paths can be produced independently.

use crate::error::{Result, SieError};
use crate::rng;
use rayon::prelude::*;
use std::io::{Read, Write};

const DUMP_MAGIC: &[u8; 4] = b"SIEB";
const DUMP_VERSION: u32 = 1;

/// Largest increment db with fl(s + db) == target, up to the one-ulp cases
/// where no such float exists. The naive remainder target - s rounds, and
/// adding it back can land one ulp off; a couple of nextafter nudges repair
/// that.
fn closing_increment(s: f64, target: f64) -> f64 {
    let mut db = target - s;
    let mut best = db;
    let mut best_err = ((s + db) - target).abs();
    for _ in 0..4 {
        let reached = s + db;
        if reached == target {
            return db;
        }
        db = if reached < target {
            db.next_up()
        } else {
            db.next_down()
        };
        let err = ((s + db) - target).abs();
        if err < best_err {
            best = db;
            best_err = err;
        }
    }
    best
}

/// Uniform grid a = t_0 < t_1 < ... < t_m = b.
#[derive(Clone, Debug)]
pub struct TimeGrid {
    a: f64,
    b: f64,
    m: usize,
    nodes: Vec<f64>,
}

impl PartialEq for TimeGrid {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && self.m == other.m
    }
}

impl TimeGrid {
    /// Build a uniform grid with `m` steps on [a, b].
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || a >= b {
            return Err(SieError::InvalidInterval { a, b });
        }
        if m == 0 {
            return Err(SieError::InvalidSteps);
        }
        let dt = (b - a) / m as f64;
        let mut nodes: Vec<f64> = (0..=m).map(|j| a + j as f64 * dt).collect();
        nodes[m] = b;
        Ok(TimeGrid { a, b, m, nodes })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of steps (one less than the number of nodes).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Step size (b - a) / m.
    pub fn dt(&self) -> f64 {
        (self.b - self.a) / self.m as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, j: usize) -> f64 {
        self.nodes[j]
    }
}

/// Ensemble of Brownian increment rows over a shared grid.
#[derive(Clone, Debug)]
pub struct BrownianEnsemble {
    grid: TimeGrid,
    n_paths: usize,
    seed: u64,
    /// Row-major n_paths x m increments dB over each step.
    increments: Vec<f64>,
}

impl BrownianEnsemble {
    /// Draw `n_paths` independent Brownian paths: increment (p, i) is
    /// Normal(0, dt), keyed by (seed, p, i).
    pub fn sample(grid: &TimeGrid, n_paths: usize, seed: u64) -> Result<Self> {
        if n_paths == 0 {
            return Err(SieError::EmptyEnsemble);
        }
        let m = grid.m();
        let sqrt_dt = grid.dt().sqrt();
        let mut increments = vec![0.0f64; n_paths * m];
        increments
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(p, row)| {
                for (i, slot) in row.iter_mut().enumerate() {
                    *slot = sqrt_dt * rng::normal_cell(seed, p as u64, i as u64);
                }
            });
        Ok(BrownianEnsemble {
            grid: grid.clone(),
            n_paths,
            seed,
            increments,
        })
    }

    /// Rebuild an ensemble from raw parts (used by `read_from` and by tests
    /// that perturb increments).
    pub fn from_parts(
        grid: TimeGrid,
        n_paths: usize,
        seed: u64,
        increments: Vec<f64>,
    ) -> Result<Self> {
        if n_paths == 0 {
            return Err(SieError::EmptyEnsemble);
        }
        if increments.len() != n_paths * grid.m() {
            return Err(SieError::ShapeMismatch(format!(
                "expected {} increments, got {}",
                n_paths * grid.m(),
                increments.len()
            )));
        }
        Ok(BrownianEnsemble {
            grid,
            n_paths,
            seed,
            increments,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Increment row for path p (length m).
    pub fn row(&self, p: usize) -> &[f64] {
        let m = self.grid.m();
        &self.increments[p * m..(p + 1) * m]
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Path values B(t_0), ..., B(t_m) for path p, with B(a) = 0, as the
    /// sequential prefix sum of the increment row.
    pub fn path_values_row(&self, p: usize) -> Vec<f64> {
        let row = self.row(p);
        let mut values = Vec::with_capacity(row.len() + 1);
        let mut s = 0.0f64;
        values.push(s);
        for &db in row {
            s += db;
            values.push(s);
        }
        values
    }

    /// Bridge refinement: a new ensemble on the grid with m * factor steps
    /// whose prefix sums at coarse nodes reproduce this ensemble's path
    /// values to rounding accuracy (bit-exactly at almost every node).
    /// Interior nodes are conditional Brownian-bridge draws keyed by
    /// (seed, path, fine node index).
    pub fn refine(&self, factor: usize, seed: u64) -> Result<Self> {
        if factor < 2 {
            return Err(SieError::InvalidFactor { factor });
        }
        let coarse_m = self.grid.m();
        let fine_grid = TimeGrid::new(self.grid.a(), self.grid.b(), coarse_m * factor)?;
        let dt_f = fine_grid.dt();
        let fine_m = fine_grid.m();
        let mut increments = vec![0.0f64; self.n_paths * fine_m];
        increments
            .par_chunks_mut(fine_m)
            .enumerate()
            .for_each(|(p, out)| {
                let coarse = self.path_values_row(p);
                // Running fine prefix sum, maintained with the same operation
                // order as path_values_row so coarse nodes are hit exactly.
                let mut s = 0.0f64;
                for j in 0..coarse_m {
                    let target = coarse[j + 1];
                    for k in 1..factor {
                        let remaining = (factor - k + 1) as f64;
                        let mean = (target - s) / remaining;
                        let var = dt_f * (remaining - 1.0) / remaining;
                        let z = rng::normal_cell(seed, p as u64, (j * factor + k) as u64);
                        let db = mean + var.sqrt() * z;
                        out[j * factor + (k - 1)] = db;
                        s += db;
                    }
                    // The closing sub-step must land the consumer's prefix
                    // sum on the coarse value bit-exactly, so correct the
                    // naive remainder for the rounding of s + db.
                    let db = closing_increment(s, target);
                    out[j * factor + (factor - 1)] = db;
                    s += db;
                }
            });
        BrownianEnsemble::from_parts(fine_grid, self.n_paths, seed, increments)
    }

    /// Serialize: magic "SIEB", version u32, a, b as f64, m, n_paths, seed
    /// as u64, then row-major f64 increments, all little-endian.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&self.grid.a().to_le_bytes())?;
        w.write_all(&self.grid.b().to_le_bytes())?;
        w.write_all(&(self.grid.m() as u64).to_le_bytes())?;
        w.write_all(&(self.n_paths as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for v in &self.increments {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(SieError::DumpFormat("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != DUMP_VERSION {
            return Err(SieError::DumpFormat(format!(
                "unsupported version {version}"
            )));
        }
        let mut b8 = [0u8; 8];
        let mut next_f64 = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut b8)?;
            Ok(f64::from_le_bytes(b8))
        };
        let a = next_f64(r)?;
        let b = next_f64(r)?;
        let mut b8 = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let m = next_u64(r)? as usize;
        let n_paths = next_u64(r)? as usize;
        let seed = next_u64(r)?;
        let grid = TimeGrid::new(a, b, m)?;
        let mut increments = vec![0.0f64; n_paths * m];
        let mut buf = [0u8; 8];
        for v in increments.iter_mut() {
            r.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        BrownianEnsemble::from_parts(grid, n_paths, seed, increments)
    }
}
