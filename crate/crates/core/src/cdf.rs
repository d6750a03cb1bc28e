//! Discrete cumulative distribution curves.
//!
//! A [`DiscreteCdf`] is a piecewise-linear CDF given by strictly
//! increasing abscissae and nondecreasing probabilities. Evaluation and
//! inversion both use linear interpolation, so `quantile` is the exact
//! inverse of `eval` wherever the curve is strictly increasing. On
//! plateaus the inverse picks the leftmost crossing.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CdfError {
    #[error("curve needs at least 2 points, got {0}")]
    TooShort(usize),
    #[error("xs and ps lengths differ: {xs} vs {ps}")]
    LengthMismatch { xs: usize, ps: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("xs not strictly increasing at index {0}")]
    NotIncreasing(usize),
    #[error("ps decreasing at index {0}")]
    NotMonotone(usize),
    #[error("ps outside [0, 1] at index {idx}: {value}")]
    OutOfRange { idx: usize, value: f64 },
    #[error("curve does not span [0, 1]: first {first}, last {last}")]
    NotNormalized { first: f64, last: f64 },
    #[error("quantile level outside [0, 1]: {0}")]
    BadLevel(f64),
}

/// Tolerance for accepting accumulated rounding in probabilities before
/// snapping them back into [0, 1].
const P_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCdf {
    xs: Vec<f64>,
    ps: Vec<f64>,
}

impl DiscreteCdf {
    /// Builds a curve from monotone data. Probabilities may overshoot
    /// [0, 1] by at most `P_SLACK` (floating point accumulation) and are
    /// clamped back.
    pub fn new(xs: Vec<f64>, ps: Vec<f64>) -> Result<Self, CdfError> {
        if xs.len() != ps.len() {
            return Err(CdfError::LengthMismatch {
                xs: xs.len(),
                ps: ps.len(),
            });
        }
        if xs.len() < 2 {
            return Err(CdfError::TooShort(xs.len()));
        }
        for (i, (&x, &p)) in xs.iter().zip(&ps).enumerate() {
            if !x.is_finite() || !p.is_finite() {
                return Err(CdfError::NonFinite(i));
            }
            if i > 0 && x <= xs[i - 1] {
                return Err(CdfError::NotIncreasing(i));
            }
            if i > 0 && p < ps[i - 1] {
                return Err(CdfError::NotMonotone(i));
            }
            if !(-P_SLACK..=1.0 + P_SLACK).contains(&p) {
                return Err(CdfError::OutOfRange { idx: i, value: p });
            }
        }
        let ps = ps.into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
        Ok(Self { xs, ps })
    }

    /// Like [`DiscreteCdf::new`] but additionally requires the curve to
    /// start at probability 0 and end at 1 (within `tol`), snapping the
    /// endpoints exactly.
    pub fn new_normalized(xs: Vec<f64>, ps: Vec<f64>, tol: f64) -> Result<Self, CdfError> {
        let mut cdf = Self::new(xs, ps)?;
        let first = cdf.ps[0];
        let last = *cdf.ps.last().expect("len >= 2");
        if first.abs() > tol || (last - 1.0).abs() > tol {
            return Err(CdfError::NotNormalized { first, last });
        }
        cdf.ps[0] = 0.0;
        *cdf.ps.last_mut().expect("len >= 2") = 1.0;
        Ok(cdf)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ps(&self) -> &[f64] {
        &self.ps
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lower and upper ends of the represented support.
    pub fn support(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().expect("len >= 2"))
    }

    /// CDF value at `x`; constant extrapolation outside the node range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ps[0];
        }
        if x >= self.xs[n - 1] {
            return self.ps[n - 1];
        }
        // partition_point: first node strictly above x, in 1..n
        let hi = self.xs.partition_point(|&v| v <= x);
        let lo = hi - 1;
        let t = (x - self.xs[lo]) / (self.xs[hi] - self.xs[lo]);
        self.ps[lo] + t * (self.ps[hi] - self.ps[lo])
    }

    /// Leftmost `x` with `eval(x) >= q`, clamped to the node range.
    pub fn quantile(&self, q: f64) -> Result<f64, CdfError> {
        if !(0.0..=1.0).contains(&q) {
            return Err(CdfError::BadLevel(q));
        }
        let n = self.ps.len();
        let hi = self.ps.partition_point(|&p| p < q);
        if hi == 0 {
            return Ok(self.xs[0]);
        }
        if hi == n {
            // q above the recorded maximum (only when the curve tops out
            // just short of 1 from rounding)
            return Ok(self.xs[n - 1]);
        }
        let (plo, phi) = (self.ps[hi - 1], self.ps[hi]);
        if phi <= plo {
            return Ok(self.xs[hi]);
        }
        let t = (q - plo) / (phi - plo);
        Ok(self.xs[hi - 1] + t * (self.xs[hi] - self.xs[hi - 1]))
    }
}
