//! Epanechnikov kernel density estimation over forecast-error samples.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{quantile_sorted, sample_std, StatsError};
use crate::cdf::DiscreteCdf;
use crate::weather::{HorizonClass, WeatherVariable};

/// Minimum sample count accepted by [`fit_kde`].
pub const MIN_KDE_SAMPLES: usize = 20;

/// Node count of the precomputed CDF grid over the support.
pub const KDE_CDF_GRID_POINTS: usize = 2048;

/// Plug-in bandwidth scale for the Epanechnikov kernel,
/// h = 2.345 * sigma_hat * n^(-1/5).
pub const EPANECHNIKOV_BANDWIDTH_FACTOR: f64 = 2.345;

/// IQR of a standard normal; converts IQR to a robust sigma estimate.
pub const NORMAL_IQR_SCALE: f64 = 1.349;

/// K(u) = 0.75 (1 - u^2) on |u| <= 1, zero outside.
pub fn epanechnikov_kernel(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        0.75 * (1.0 - u * u)
    }
}

/// Kernel density estimate for one variable and one horizon class.
///
/// The density is the plain kernel sum over the samples; the CDF is its
/// cumulative trapezoid on a uniform grid spanning the support
/// `[min - h, max + h]`, normalized to end at exactly 1.
#[derive(Debug, Clone)]
pub struct ErrorDistribution {
    variable: WeatherVariable,
    horizon: HorizonClass,
    samples: Vec<f64>, // ascending
    bandwidth: f64,
    support: (f64, f64),
    cdf: DiscreteCdf,
}

/// JSON sidecar form of a fitted distribution (audit + rebuild input).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionRecord {
    pub schema_version: u32,
    pub variable: WeatherVariable,
    pub horizon: HorizonClass,
    pub bandwidth: f64,
    pub samples: Vec<f64>,
}

pub const DISTRIBUTION_RECORD_SCHEMA: u32 = 1;

/// Fits the KDE with the plug-in bandwidth
/// h = 2.345 * min(std, IQR/1.349) * n^(-1/5).
pub fn fit_kde(
    variable: WeatherVariable,
    horizon: HorizonClass,
    samples: &[f64],
) -> Result<ErrorDistribution, StatsError> {
    if samples.len() < MIN_KDE_SAMPLES {
        return Err(StatsError::TooFewSamples {
            got: samples.len(),
            min: MIN_KDE_SAMPLES,
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

    let std = sample_std(&sorted);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let sigma = std.min(iqr / NORMAL_IQR_SCALE);
    if !(sigma > 0.0) {
        return Err(StatsError::ZeroVariance);
    }
    let h = EPANECHNIKOV_BANDWIDTH_FACTOR * sigma * (sorted.len() as f64).powf(-0.2);
    ErrorDistribution::from_sorted_samples(variable, horizon, sorted, h)
}

impl ErrorDistribution {
    fn from_sorted_samples(
        variable: WeatherVariable,
        horizon: HorizonClass,
        samples: Vec<f64>,
        bandwidth: f64,
    ) -> Result<Self, StatsError> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(StatsError::InvalidBandwidth(bandwidth));
        }
        let lo = samples[0] - bandwidth;
        let hi = samples[samples.len() - 1] + bandwidth;
        let mut dist = Self {
            variable,
            horizon,
            samples,
            bandwidth,
            support: (lo, hi),
            // placeholder, replaced below
            cdf: DiscreteCdf::new(vec![0.0, 1.0], vec![0.0, 1.0]).expect("valid"),
        };
        dist.cdf = dist.build_cdf()?;
        Ok(dist)
    }

    /// Cumulative trapezoid of the density over a uniform grid, scaled by
    /// its own total so the last node is exactly 1.
    fn build_cdf(&self) -> Result<DiscreteCdf, StatsError> {
        let (lo, hi) = self.support;
        let n = KDE_CDF_GRID_POINTS;
        let dx = (hi - lo) / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| lo + dx * i as f64).collect();
        let dens: Vec<f64> = xs.iter().map(|&x| self.density(x)).collect();
        let mut ps = Vec::with_capacity(n);
        let mut acc = 0.0;
        ps.push(0.0);
        for i in 1..n {
            acc += 0.5 * (dens[i - 1] + dens[i]) * dx;
            ps.push(acc);
        }
        let total = acc;
        if !(total > 0.0) {
            return Err(StatsError::ZeroVariance);
        }
        for p in &mut ps {
            *p /= total;
        }
        Ok(DiscreteCdf::new_normalized(xs, ps, 1e-9)?)
    }

    pub fn variable(&self) -> WeatherVariable {
        self.variable
    }

    pub fn horizon(&self) -> HorizonClass {
        self.horizon
    }

    /// Samples in ascending order.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `[min(sample) - h, max(sample) + h]`.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// density(x) = (1/(n h)) * sum K((x - s_i)/h). Only the samples
    /// within one bandwidth contribute; the sorted order makes that a
    /// contiguous range.
    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let start = self.samples.partition_point(|&s| s <= x - h);
        let end = self.samples.partition_point(|&s| s < x + h);
        let sum: f64 = self.samples[start..end]
            .iter()
            .map(|&s| epanechnikov_kernel((x - s) / h))
            .sum();
        sum / (self.samples.len() as f64 * h)
    }

    /// CDF via the precomputed grid; 0 below the support, 1 above.
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf.eval(x)
    }

    /// Leftmost x with CDF(x) >= q, by linear interpolation on the grid.
    pub fn quantile(&self, q: f64) -> Result<f64, StatsError> {
        Ok(self.cdf.quantile(q)?)
    }

    pub fn to_record(&self) -> DistributionRecord {
        DistributionRecord {
            schema_version: DISTRIBUTION_RECORD_SCHEMA,
            variable: self.variable,
            horizon: self.horizon,
            bandwidth: self.bandwidth,
            samples: self.samples.clone(),
        }
    }

    /// Rebuilds a distribution from its sidecar record with the stored
    /// bandwidth. Unlike [`fit_kde`] this accepts any nonempty sample
    /// list, so hand-written records (e.g. single-kernel checks) load.
    pub fn from_record(record: DistributionRecord) -> Result<Self, StatsError> {
        if record.samples.is_empty() {
            return Err(StatsError::TooFewSamples { got: 0, min: 1 });
        }
        if record.samples.iter().any(|x| !x.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        let mut samples = record.samples;
        samples.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Self::from_sorted_samples(record.variable, record.horizon, samples, record.bandwidth)
    }

    /// SHA-256 of the canonical sidecar JSON; identifies the fit in build
    /// manifests.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(&self.to_record()).expect("record serializes");
        let digest = Sha256::digest(&bytes);
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }
}
