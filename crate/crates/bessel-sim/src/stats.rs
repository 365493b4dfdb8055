//! Summary statistics and Kolmogorov-Smirnov goodness-of-fit helpers.

/// Kahan compensated sum; used so parallel reductions stay stable.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

pub fn compensated_total(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = compensated_total(xs.iter().copied()) / n;
    let ss = compensated_total(xs.iter().map(|&x| (x - mean) * (x - mean)));
    let var = ss / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One-sample KS statistic of `xs` against the CDF `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut xs = xs.to_vec();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let lo = (f - i as f64 / n).abs();
        let hi = ((i as f64 + 1.0) / n - f).abs();
        d = d.max(lo).max(hi);
    }
    d
}

/// Two-sample KS statistic.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> f64 {
    let mut xs = xs.to_vec();
    let mut ys = ys.to_vec();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    ys.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = xs[i];
        let y = ys[j];
        if x <= y {
            i += 1;
        }
        if y <= x {
            j += 1;
        }
        let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        d = d.max(diff);
    }
    d
}

/// Asymptotic one-sample KS critical value at level `alpha`.
///
/// Uses c(0.01) = 1.628, c(0.05) = 1.358; other levels via the Kolmogorov
/// distribution inverse is not needed at desk scale.
pub fn ks_critical_one_sample(n: usize, alpha: f64) -> f64 {
    ks_c(alpha) / (n as f64).sqrt()
}

/// Asymptotic two-sample KS critical value at level `alpha`.
pub fn ks_critical_two_sample(n: usize, m: usize, alpha: f64) -> f64 {
    ks_c(alpha) * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

fn ks_c(alpha: f64) -> f64 {
    // c(alpha) = sqrt(-ln(alpha/2)/2)
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_c_known_values() {
        assert!((ks_c(0.01) - 1.628).abs() < 5e-3);
        assert!((ks_c(0.05) - 1.358).abs() < 5e-3);
    }

    #[test]
    fn two_sample_identical_is_zero() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        let b = vec![2.0, 1.0, 4.0, 3.0];
        assert_eq!(ks_two_sample(&a, &b), 0.0);
    }

    #[test]
    fn two_sample_simple_value() {
        let a = vec![1.0, 1.0, 4.0, 4.0];
        let b = vec![1.0, 1.0, 1.0, 4.0];
        assert!((ks_two_sample(&a, &b) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn one_sample_against_uniform() {
        // ecdf of {0.25, 0.75} against U(0,1): D = 0.25
        let xs = vec![0.25, 0.75];
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.25).abs() < 1e-12);
    }

    #[test]
    fn mean_stderr_constant_sample() {
        let (m, se) = mean_stderr(&[2.0; 10]);
        assert_eq!(m, 2.0);
        assert_eq!(se, 0.0);
    }
}
