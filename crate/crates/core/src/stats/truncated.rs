//! Offset + truncated error distributions: the law of `center + E`
//! conditioned on a physical interval, sampled by inverse transform.

use std::sync::Arc;

use super::{ErrorDistribution, StatsError};

/// Probability mass below which truncation is considered empty.
pub const MIN_TRUNCATION_MASS: f64 = 1e-9;

/// The sampling distribution for one weather variable at one operating
/// point: base error law shifted by the forecast value and conditioned
/// on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct TruncatedOffsetDistribution {
    base: Arc<ErrorDistribution>,
    center: f64,
    bounds: (f64, f64),
    /// Support after shifting and clipping.
    clipped: (f64, f64),
    /// Base-CDF values at the clipped support edges (error coordinates).
    f_lo: f64,
    f_hi: f64,
    /// Probability mass retained by the truncation; the renormalizer.
    mass: f64,
}

/// Conditions `center + E` on `bounds`; errors out when the shifted
/// support misses the bounds or retains mass below 1e-9.
pub fn offset_truncate(
    base: Arc<ErrorDistribution>,
    center: f64,
    bounds: (f64, f64),
) -> Result<TruncatedOffsetDistribution, StatsError> {
    let (lo, hi) = bounds;
    if lo.is_nan() || hi.is_nan() || !(lo < hi) {
        return Err(StatsError::InvalidBounds { lo, hi });
    }
    if !center.is_finite() {
        return Err(StatsError::InvalidBounds { lo: center, hi: center });
    }
    let (slo, shi) = base.support();
    let clipped_lo = (slo + center).max(lo);
    let clipped_hi = (shi + center).min(hi);
    if !(clipped_lo < clipped_hi) {
        return Err(StatsError::EmptyMass { mass: 0.0 });
    }
    let f_lo = base.cdf(clipped_lo - center);
    let f_hi = base.cdf(clipped_hi - center);
    let mass = f_hi - f_lo;
    if mass < MIN_TRUNCATION_MASS {
        return Err(StatsError::EmptyMass { mass });
    }
    Ok(TruncatedOffsetDistribution {
        base,
        center,
        bounds,
        clipped: (clipped_lo, clipped_hi),
        f_lo,
        f_hi,
        mass,
    })
}

impl TruncatedOffsetDistribution {
    pub fn base(&self) -> &ErrorDistribution {
        &self.base
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    /// Support after shifting and clipping to the bounds.
    pub fn support(&self) -> (f64, f64) {
        self.clipped
    }

    /// Retained probability mass (1 when the bounds cut nothing).
    pub fn renormalization(&self) -> f64 {
        self.mass
    }

    /// CDF of the truncated law; 0 at or below the clipped minimum, 1 at
    /// or above the clipped maximum.
    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.clipped;
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        ((self.base.cdf(x - self.center) - self.f_lo) / self.mass).clamp(0.0, 1.0)
    }

    /// Inverse-transform sample at level `u` in [0, 1); monotone in `u`
    /// and always inside the clipped support.
    pub fn sample(&self, u: f64) -> Result<f64, StatsError> {
        if !(0.0..1.0).contains(&u) {
            return Err(StatsError::BadLevel(u));
        }
        let p = self.f_lo + u * self.mass;
        let x = self.base.quantile(p.min(self.f_hi))? + self.center;
        let (lo, hi) = self.clipped;
        Ok(x.clamp(lo, hi))
    }
}
