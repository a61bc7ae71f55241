//! Floating point helpers that work without `std`.

pub use libm::{ceil, cos, exp, fabs as abs, floor, lgamma, log, log2, pow, round, sqrt};

/// Natural logarithm of the beta function, `ln B(x, y)`.
pub fn ln_beta(x: f64, y: f64) -> f64 {
    lgamma(x) + lgamma(y) - lgamma(x + y)
}

/// Numerically stable `ln(sum(exp(v)))`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + log(values.iter().map(|v| exp(v - max)).sum::<f64>())
}

/// Mean and unbiased standard deviation of a sample.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, sqrt(ss / (n - 1) as f64))
}

/// Streaming mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct Running {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Running {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn sd(&self) -> f64 {
        sqrt(self.variance())
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            sqrt(self.variance() / self.count as f64)
        }
    }

    /// Combines two accumulators (Chan et al. parallel update).
    pub fn merge(&self, other: &Running) -> Running {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * self.count as f64 * other.count as f64 / count as f64;
        Running { count, mean, m2 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, 9.0, -3.0, 0.5];
        let mut r = Running::default();
        xs.iter().for_each(|&x| r.push(x));
        let (m, sd) = mean_sd(&xs);
        assert!((r.mean() - m).abs() < 1e-12);
        assert!((r.sd() - sd).abs() < 1e-12);

        let mut a = Running::default();
        let mut b = Running::default();
        xs[..2].iter().for_each(|&x| a.push(x));
        xs[2..].iter().for_each(|&x| b.push(x));
        let merged = a.merge(&b);
        assert!((merged.mean() - m).abs() < 1e-12);
        assert!((merged.sd() - sd).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = [-1000.0, -1000.0];
        assert!((log_sum_exp(&v) - (-1000.0 + core::f64::consts::LN_2)).abs() < 1e-12);
    }
}
