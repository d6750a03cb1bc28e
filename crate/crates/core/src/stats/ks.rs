//! Kolmogorov-Smirnov tests with asymptotic p-values.

use super::{mean, sample_std, StatsError};

/// Significance level used by the reporting commands.
pub const DEFAULT_SIGNIFICANCE: f64 = 0.01;

const MIN_KS_SAMPLES: usize = 20;

/// Series terms kept when evaluating the Kolmogorov distribution.
const KOLMOGOROV_SERIES_TERMS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// Sup-norm distance between the compared CDFs.
    pub statistic: f64,
    pub p_value: f64,
    /// Significance level the decision refers to.
    pub rejected_at: f64,
}

impl KsResult {
    pub fn rejected(&self) -> bool {
        self.p_value < self.rejected_at
    }
}

/// Survival function of the Kolmogorov distribution,
/// Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2),
/// truncated to the first 100 terms. Below lambda = 0.05 the series has
/// not converged within 100 terms and the survival is 1 to far more than
/// double precision, so 1 is returned directly.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.05 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=KOLMOGOROV_SERIES_TERMS {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Phi(z) through the error function.
pub fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// One-sample KS statistic of an ascending-sorted slice against a
/// reference CDF: max of the upper/lower ECDF gaps at the sample points.
pub fn ks_statistic_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let upper = (i + 1) as f64 / n - f;
        let lower = f - i as f64 / n;
        d = d.max(upper).max(lower);
    }
    d
}

/// Tests the samples against a normal with their own mean and variance.
pub fn ks_test_normal(samples: &[f64], significance: f64) -> Result<KsResult, StatsError> {
    if samples.len() < MIN_KS_SAMPLES {
        return Err(StatsError::TooFewSamples {
            got: samples.len(),
            min: MIN_KS_SAMPLES,
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let m = mean(samples);
    let s = sample_std(samples);
    if !(s > 0.0) {
        return Err(StatsError::ZeroVariance);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let statistic = ks_statistic_sorted(&sorted, |x| standard_normal_cdf((x - m) / s));
    let lambda = (sorted.len() as f64).sqrt() * statistic;
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_sf(lambda),
        rejected_at: significance,
    })
}

/// Two-sample KS with the asymptotic p-value at effective sample size
/// n_a n_b / (n_a + n_b).
pub fn ks_test_two_sample(a: &[f64], b: &[f64], significance: f64) -> Result<KsResult, StatsError> {
    for side in [a, b] {
        if side.len() < MIN_KS_SAMPLES {
            return Err(StatsError::TooFewSamples {
                got: side.len(),
                min: MIN_KS_SAMPLES,
            });
        }
        if side.iter().any(|x| !x.is_finite()) {
            return Err(StatsError::NonFinite);
        }
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());

    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }

    let n_eff = na * nb / (na + nb);
    let lambda = n_eff.sqrt() * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
        rejected_at: significance,
    })
}
