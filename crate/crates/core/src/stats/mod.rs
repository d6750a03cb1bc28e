//! Forecast-error statistics: Epanechnikov kernel density estimates,
//! Kolmogorov-Smirnov tests, and truncated offset distributions for
//! inverse-transform sampling.
//!
//! Fitted error distributions stay kernel estimates throughout; there is
//! deliberately no Gaussian approximation path anywhere in this module,
//! since normality fails on real forecast errors.

mod kde;
mod ks;
mod truncated;

pub use kde::{
    epanechnikov_kernel, fit_kde, DistributionRecord, ErrorDistribution,
    EPANECHNIKOV_BANDWIDTH_FACTOR, KDE_CDF_GRID_POINTS, MIN_KDE_SAMPLES, NORMAL_IQR_SCALE,
};
pub use ks::{
    kolmogorov_sf, ks_statistic_sorted, ks_test_normal, ks_test_two_sample, standard_normal_cdf,
    KsResult, DEFAULT_SIGNIFICANCE,
};
pub use truncated::{offset_truncate, TruncatedOffsetDistribution};

use crate::cdf::CdfError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("samples contain a non-finite value")]
    NonFinite,
    #[error("samples have zero spread (std or IQR collapsed)")]
    ZeroVariance,
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("invalid truncation bounds [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("truncation leaves probability mass {mass:.3e} (< 1e-9)")]
    EmptyMass { mass: f64 },
    #[error("probability level outside range: {0}")]
    BadLevel(f64),
    #[error(transparent)]
    Cdf(#[from] CdfError),
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn sample_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Linear-interpolated quantile of an ascending-sorted slice (the common
/// `(n-1)q` positional rule).
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}
