//! Exactly rounded floating-point summation.
//!
//! Path-level reductions (norms, means, moment estimates) use Shewchuk's
//! partials algorithm, which returns the correctly rounded sum of any
//! sequence of f64 values. The result is independent of summand order, so
//! statistics are invariant under path reordering and identical for any
//! parallel work split.

/// Running exact-sum accumulator.
#[derive(Clone, Debug, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        ExactSum {
            partials: Vec::with_capacity(8),
        }
    }

    /// Add one value, maintaining a non-overlapping expansion of the exact sum.
    #[inline]
    pub fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for k in 0..self.partials.len() {
            let mut y = self.partials[k];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    /// Fold another accumulator's partials into this one. The combined
    /// expansion represents the exact sum of both inputs, so merge order
    /// cannot change the rounded result.
    pub fn merge(&mut self, other: ExactSum) {
        for p in other.partials {
            self.add(p);
        }
    }

    /// Correctly rounded value of the accumulated sum.
    pub fn value(&self) -> f64 {
        // Round from the top of the expansion; the half-ulp adjustment makes
        // ties break exactly as they would for the true real-valued sum.
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

/// Correctly rounded sum of an iterator of f64 values.
pub fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = ExactSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Mean with exact summation.
pub fn exact_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = ExactSum::new();
    let mut n = 0usize;
    for v in values {
        acc.add(v);
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        acc.value() / n as f64
    }
}

/// Sample mean and standard error of the mean for a slice of draws.
///
/// Returns (mean, se) with se = sqrt(var / n), var the unbiased sample
/// variance; se is 0 for fewer than two draws.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = exact_mean(values.iter().copied());
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = exact_sum(values.iter().map(|v| {
        let d = v - mean;
        d * d
    }));
    let var = (ss / (n - 1) as f64).max(0.0);
    (mean, (var / n as f64).sqrt())
}

/// Unbiased sample standard deviation.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = exact_mean(values.iter().copied());
    let ss = exact_sum(values.iter().map(|v| {
        let d = v - mean;
        d * d
    }));
    (ss / (n - 1) as f64).max(0.0).sqrt()
}
