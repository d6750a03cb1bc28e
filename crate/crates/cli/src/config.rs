//! Shared defaults loadable from a JSON config file; flags win.

use std::path::{Path, PathBuf};

use ampacity_uq_core::db::DatabaseAxes;
use ampacity_uq_core::weather::HorizonClass;
use serde::Deserialize;

use crate::fail::{Failure, ResultExt};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub measured: Option<PathBuf>,
    pub forecast: Option<PathBuf>,
    pub skin: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub db: Option<PathBuf>,
    pub dists: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub confidence: Option<f64>,
    pub significance: Option<f64>,
    pub conductor: Option<String>,
    pub emissivity: Option<f64>,
    pub line_azimuth_deg: Option<f64>,
    pub t_grid_c: Option<Vec<f64>>,
    pub s_grid_wm2: Option<Vec<f64>>,
    pub axes: Option<AxesOverride>,
}

/// Per-axis replacements for the default database axes.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxesOverride {
    pub horizons: Option<Vec<String>>,
    pub wind_speeds: Option<Vec<f64>>,
    pub wind_angles: Option<Vec<f64>>,
    pub conductors: Option<Vec<String>>,
    pub emissivities: Option<Vec<f64>>,
}

pub fn load(path: Option<&Path>) -> Result<RunConfig, Failure> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .or_usage(&format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).or_usage(&format!("parsing config {}", path.display()))
}

/// Axis overrides coming from command-line flags.
#[derive(Debug, Clone, Default)]
pub struct AxisFlags {
    pub horizons: Option<Vec<String>>,
    pub wind_speeds: Option<Vec<f64>>,
    pub wind_angles: Option<Vec<f64>>,
    pub conductors: Option<Vec<String>>,
    pub emissivities: Option<Vec<f64>>,
}

/// Default axes with any overridden axis replaced, flags beating config.
pub fn resolve_axes(
    flags: AxisFlags,
    cfg: Option<&AxesOverride>,
) -> Result<DatabaseAxes, Failure> {
    let mut axes = DatabaseAxes::default();
    let horizons = flags
        .horizons
        .or_else(|| cfg.and_then(|c| c.horizons.clone()));
    if let Some(names) = horizons {
        axes.horizons = names
            .iter()
            .map(|h| h.parse::<HorizonClass>())
            .collect::<Result<Vec<_>, _>>()
            .or_usage("parsing horizons override")?;
    }
    if let Some(v) = flags
        .wind_speeds
        .or_else(|| cfg.and_then(|c| c.wind_speeds.clone()))
    {
        axes.wind_speeds = v;
    }
    if let Some(v) = flags
        .wind_angles
        .or_else(|| cfg.and_then(|c| c.wind_angles.clone()))
    {
        axes.wind_angles = v;
    }
    if let Some(v) = flags
        .conductors
        .or_else(|| cfg.and_then(|c| c.conductors.clone()))
    {
        axes.conductors = v;
    }
    if let Some(v) = flags
        .emissivities
        .or_else(|| cfg.and_then(|c| c.emissivities.clone()))
    {
        axes.emissivities = v;
    }
    axes.validate().or_usage("axes override")?;
    Ok(axes)
}
