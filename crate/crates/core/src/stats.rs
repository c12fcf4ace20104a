//! Small descriptive statistics used by reports and checks.

use rand::Rng;

use crate::rng::rng_from_seed;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (denominator `n - 1`); zero for fewer than two
/// values.
pub fn sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Linear-interpolation quantile of sorted data (`q` in `[0, 1]`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Closed interval estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Entirely below `other`.
    pub fn below(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }
}

/// Percentile bootstrap interval for the mean of `xs`.
pub fn bootstrap_mean_ci(xs: &[f64], level: f64, n_boot: usize, seed: u64) -> Interval {
    assert!(!xs.is_empty(), "bootstrap of empty data");
    let mut rng = rng_from_seed(seed);
    let n = xs.len();
    let mut means: Vec<f64> = (0..n_boot)
        .map(|_| (0..n).map(|_| xs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Interval {
        lo: quantile_sorted(&means, tail),
        hi: quantile_sorted(&means, 1.0 - tail),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn moments() {
        let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_abs_diff_eq!(mean(&xs), 5.0);
        assert_abs_diff_eq!(sd(&xs), (32.0f64 / 7.0).sqrt(), epsilon = 1e-12);
        assert_eq!(sd(&[1.0]), 0.0);
        assert!(mean(&[]).is_nan());
    }

    #[test]
    fn quantiles_interpolate() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert_abs_diff_eq!(quantile_sorted(&xs, 0.5), 2.5);
    }

    #[test]
    fn bootstrap_brackets_the_mean() {
        let xs: Vec<f64> = (0..200).map(|i| (i % 17) as f64).collect();
        let ci = bootstrap_mean_ci(&xs, 0.95, 2000, 1);
        assert!(ci.contains(mean(&xs)));
        assert!(ci.hi - ci.lo < 2.0);
        assert_eq!(ci, bootstrap_mean_ci(&xs, 0.95, 2000, 1));
        let constant = bootstrap_mean_ci(&[3.0; 10], 0.95, 100, 0);
        assert_eq!((constant.lo, constant.hi), (3.0, 3.0));
    }
}
