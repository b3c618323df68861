//! Sample estimators, bootstrap standard errors and line fits.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;

/// Mean and variance of a sample, with the standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    /// Welford update.
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Two-pass estimate over a slice.
    pub fn from_slice(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let m2 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
        Self { n, mean, m2 }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (zero for fewer than two observations).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        math::sqrt(self.variance())
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        math::sqrt(self.variance() / self.n as f64)
    }

    pub fn rms(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        let mean_sq = self.mean * self.mean + self.m2 / self.n as f64;
        math::sqrt(mean_sq)
    }
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64) -> Self {
        Self { value, std_error }
    }

    pub fn of_mean(xs: &[f64]) -> Self {
        let m = Moments::from_slice(xs);
        Self::new(m.mean(), m.std_error())
    }

    /// `|value - target| <= k * std_error`
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// Unbiased sample covariance. `covariance(a, a)` is computed by the same
/// arithmetic as the variance.
pub fn covariance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    s / (n - 1) as f64
}

pub fn variance(a: &[f64]) -> f64 {
    covariance(a, a)
}

/// Sample correlation clamped to `[-1, 1]`; NaN when either side has zero variance.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let va = variance(a);
    let vb = variance(b);
    if va <= 0.0 || vb <= 0.0 {
        return f64::NAN;
    }
    (covariance(a, b) / math::sqrt(va * vb)).clamp(-1.0, 1.0)
}

/// Two-sided 97.5% Student-t quantile.
pub fn t_quantile_975(df: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179,
        2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
        2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    match df {
        0 => f64::INFINITY,
        1..=30 => TABLE[df - 1],
        _ => 1.959_964 + 2.372 / df as f64,
    }
}

/// Least-squares line with a 95% confidence interval on the slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl LineFit {
    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "a line fit needs two points");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let df = x.len() - 2;
    let slope_std_error = if df == 0 {
        0.0
    } else {
        let sse: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let e = b - intercept - slope * a;
                e * e
            })
            .sum();
        math::sqrt(sse / df as f64 / sxx)
    };
    let half = t_quantile_975(df.max(1)) * slope_std_error;
    LineFit {
        slope,
        intercept,
        slope_std_error,
        ci_low: slope - half,
        ci_high: slope + half,
    }
}

/// Fit of `ln y` on `ln x`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> LineFit {
    let lx: Vec<f64> = x.iter().map(|v| math::ln(*v)).collect();
    let ly: Vec<f64> = y.iter().map(|v| math::ln(*v)).collect();
    fit_line(&lx, &ly)
}

/// Bootstrap standard errors of a vector-valued statistic.
///
/// `statistic` receives the resampled row indices and writes one value per
/// component into its output buffer. Resampling draws from a ChaCha8 stream
/// keyed by `seed`, so the result is reproducible.
pub fn bootstrap_std_errors<F>(
    n_obs: usize,
    n_components: usize,
    resamples: usize,
    seed: u64,
    mut statistic: F,
) -> Vec<f64>
where
    F: FnMut(&[usize], &mut [f64]),
{
    assert!(n_obs > 0 && resamples >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = vec![0usize; n_obs];
    let mut out = vec![0.0; n_components];
    let mut acc = vec![Moments::new(); n_components];
    for _ in 0..resamples {
        for slot in idx.iter_mut() {
            *slot = rng.random_range(0..n_obs);
        }
        statistic(&idx, &mut out);
        for (m, v) in acc.iter_mut().zip(&out) {
            m.push(*v);
        }
    }
    acc.iter().map(Moments::std_dev).collect()
}
