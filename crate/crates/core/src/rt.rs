//! Real-time uncertainty queries against a loaded database.
//!
//! A query names an operating point between grid nodes; the stored
//! CDFs around it are blended pointwise with the lookup weights, the
//! blend is inverted at the two tail levels, and the normalized limits
//! are scaled by the caller's nominal ampacity.

use thiserror::Error;

use crate::cdf::CdfError;
use crate::db::{ClampFlags, DbError, DistributionDb, LocatedCell};
use crate::mc::{CdfMeta, McError, NormalizedAmpacityCdf, OperatingPoint};
use crate::thermal::AmbientConditions;
use crate::weather::HorizonClass;

#[derive(Debug, Error)]
pub enum RtError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error(transparent)]
    Db(#[from] DbError),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error(transparent)]
    Cdf(#[from] CdfError),
}

/// One uncertainty request: forecast weather, horizon, conductor, and
/// the nominal ampacity the caller's rating system computed.
#[derive(Debug, Clone)]
pub struct UncertaintyQuery {
    pub ambient: AmbientConditions,
    pub horizon: HorizonClass,
    pub conductor: String,
    pub emissivity: f64,
    pub nominal_ampacity: f64,
    pub confidence: f64,
}

impl UncertaintyQuery {
    pub fn validate(&self) -> Result<(), RtError> {
        if !(self.nominal_ampacity > 0.0) || !self.nominal_ampacity.is_finite() {
            return Err(RtError::InvalidQuery(format!(
                "nominal ampacity {} A must be positive",
                self.nominal_ampacity
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(RtError::InvalidQuery(format!(
                "confidence {} outside (0, 1)",
                self.confidence
            )));
        }
        if !(0.0..=1.0).contains(&self.emissivity) {
            return Err(RtError::InvalidQuery(format!(
                "emissivity {} outside [0, 1]",
                self.emissivity
            )));
        }
        self.ambient
            .validate()
            .map_err(|e| RtError::InvalidQuery(e.to_string()))?;
        Ok(())
    }
}

/// Ampacity confidence interval around the nominal value.
#[derive(Debug, Clone)]
pub struct UncertaintyResult {
    pub i_th0: f64,
    pub lower: f64,
    pub upper: f64,
    pub confidence: f64,
    pub clamp_flags: ClampFlags,
    /// The blended CDF the limits were read from, for plotting.
    pub cdf: Option<NormalizedAmpacityCdf>,
}

fn blend(
    db: &DistributionDb,
    cell: &LocatedCell,
    point: OperatingPoint,
) -> Result<NormalizedAmpacityCdf, RtError> {
    let n = db.grid_r().len();
    let mut acc = vec![0.0f64; n];
    for &(index, weight) in &cell.nodes {
        for (a, v) in acc.iter_mut().zip(db.entry_values(index)) {
            *a += weight * (*v as f64);
        }
    }
    let manifest = db.manifest();
    Ok(NormalizedAmpacityCdf::new(
        db.grid_r().to_vec(),
        acc,
        CdfMeta {
            point,
            samples: manifest.samples_per_member,
            seed: manifest.seed,
        },
    )?)
}

fn query_point(query: &UncertaintyQuery) -> OperatingPoint {
    OperatingPoint {
        horizon: query.horizon,
        wind_speed_ms: query.ambient.wind_speed_ms,
        wind_angle_deg: query.ambient.wind_attack_deg,
        conductor: query.conductor.clone(),
        emissivity: query.emissivity,
        temperature_c: Some(query.ambient.temperature_c),
        solar_wm2: Some(query.ambient.solar_wm2),
    }
}

/// Pointwise convex combination of the stored CDFs around the query,
/// on the database's shared grid.
pub fn interpolate_cdf(
    db: &DistributionDb,
    query: &UncertaintyQuery,
) -> Result<NormalizedAmpacityCdf, RtError> {
    let cell = db.locate(
        query.horizon,
        &query.conductor,
        query.ambient.wind_speed_ms,
        query.ambient.wind_attack_deg,
        query.emissivity,
    )?;
    blend(db, &cell, query_point(query))
}

/// Inverts the CDF at the two tail levels and scales by the nominal
/// ampacity: with α = 1 − confidence, the limits sit at α/2 and
/// 1 − α/2.
pub fn confidence_limits(
    cdf: &NormalizedAmpacityCdf,
    i_th0: f64,
    confidence: f64,
) -> Result<(f64, f64), RtError> {
    if !(i_th0 > 0.0) || !i_th0.is_finite() {
        return Err(RtError::InvalidQuery(format!(
            "nominal ampacity {i_th0} A must be positive"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(RtError::InvalidQuery(format!(
            "confidence {confidence} outside (0, 1)"
        )));
    }
    let alpha = 1.0 - confidence;
    let r_lo = cdf.quantile(alpha / 2.0)?;
    let r_hi = cdf.quantile(1.0 - alpha / 2.0)?;
    Ok((r_lo * i_th0, r_hi * i_th0))
}

/// Full query path: locate, blend, invert; clamp flags report any
/// coordinate that fell outside the grid.
pub fn assess(db: &DistributionDb, query: &UncertaintyQuery) -> Result<UncertaintyResult, RtError> {
    query.validate()?;
    let cell = db.locate(
        query.horizon,
        &query.conductor,
        query.ambient.wind_speed_ms,
        query.ambient.wind_attack_deg,
        query.emissivity,
    )?;
    let cdf = blend(db, &cell, query_point(query))?;
    let (lower, upper) = confidence_limits(&cdf, query.nominal_ampacity, query.confidence)?;
    Ok(UncertaintyResult {
        i_th0: query.nominal_ampacity,
        lower,
        upper,
        confidence: query.confidence,
        clamp_flags: cell.clamp,
        cdf: Some(cdf),
    })
}
