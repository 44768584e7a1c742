//! Running sample statistics.

/// Sample mean and variance by Welford's update. Feeding the same values in
/// the same order gives bit-identical results.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

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

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// `sample std / √count`.
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        libm::sqrt(self.variance() / self.count as f64)
    }
}

impl Extend<f64> for MeanAccumulator {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.push(x);
        }
    }
}

impl FromIterator<f64> for MeanAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        acc.extend(iter);
        acc
    }
}

/// Standard error `√(p(1-p)/n)` of a binomial proportion.
pub fn binomial_std_error(p: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    libm::sqrt((p * (1.0 - p)).max(0.0) / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_two_pass_formulas() {
        let xs = [1.0, 4.0, 2.5, -3.0, 7.25, 0.0];
        let acc: MeanAccumulator = xs.iter().copied().collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!((acc.mean() - mean).abs() < 1e-14);
        assert!((acc.variance() - var).abs() < 1e-12);
        assert!((acc.std_error() - libm::sqrt(var / n)).abs() < 1e-14);
        assert_eq!(acc.count(), 6);
    }

    #[test]
    fn degenerate_counts() {
        let mut acc = MeanAccumulator::new();
        assert_eq!(acc.std_error(), 0.0);
        acc.push(3.0);
        assert_eq!((acc.mean(), acc.variance()), (3.0, 0.0));
        assert_eq!(binomial_std_error(0.5, 0), 0.0);
        assert!((binomial_std_error(0.5, 100) - 0.05).abs() < 1e-15);
    }
}
