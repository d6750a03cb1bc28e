use std::path::PathBuf;

use ampacity_uq_core::db::BuildManifest;
use ampacity_uq_core::rt::{self, UncertaintyQuery};
use ampacity_uq_core::thermal::AmbientConditions;
use clap::Args;
use serde::Serialize;

use crate::config::RunConfig;
use crate::fail::{need, Failure, ResultExt};
use crate::io_util::{create, ensure_dir, write_json_pretty};
use crate::tables::{write_curve_csv, CDF_EXPORT_HEADER};

/// Summarize a database file.
#[derive(Debug, Args)]
pub struct DbInfoArgs {
    /// Database file.
    #[arg(long, value_name = "FILE")]
    pub db: Option<PathBuf>,
    /// Also write db_info.json here.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Export one interpolated CDF as CSV.
#[derive(Debug, Args)]
pub struct DbExportArgs {
    /// Database file.
    #[arg(long, value_name = "FILE")]
    pub db: Option<PathBuf>,
    /// Forecast horizon: nowcast, short_term or medium_term.
    #[arg(long)]
    pub horizon: Option<String>,
    /// Conductor name.
    #[arg(long)]
    pub conductor: Option<String>,
    /// Forecast wind speed, m/s.
    #[arg(long)]
    pub wind_speed: Option<f64>,
    /// Wind attack angle, deg.
    #[arg(long)]
    pub wind_angle: Option<f64>,
    /// Conductor emissivity.
    #[arg(long)]
    pub emissivity: Option<f64>,
    /// Directory receiving export_cdf.csv.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct DbInfo<'a> {
    path: String,
    file_bytes: u64,
    checksum: String,
    entries: usize,
    grid_points: usize,
    r_max: f64,
    manifest: &'a BuildManifest,
}

pub fn run_info(args: DbInfoArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let path = need("db", args.db.or_else(|| cfg.db.clone()))?;
    let db = super::load_db(Some(path.clone()))?;
    let file_bytes = std::fs::metadata(&path)
        .or_data(&format!("reading metadata of {}", path.display()))?
        .len();
    let info = DbInfo {
        path: path.display().to_string(),
        file_bytes,
        checksum: format!("{:016x}", db.file_checksum()),
        entries: db.entry_count(),
        grid_points: db.grid_r().len(),
        r_max: *db.grid_r().last().expect("grid is nonempty"),
        manifest: db.manifest(),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&info).or_internal("serializing db info")?
    );
    if let Some(out) = args.out.or_else(|| cfg.out.clone()) {
        ensure_dir(&out)?;
        write_json_pretty(&out.join("db_info.json"), &info)?;
    }
    Ok(())
}

pub fn run_export(args: DbExportArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let db = super::load_db(args.db.or_else(|| cfg.db.clone()))?;
    let horizon = super::parse_horizon(&need("horizon", args.horizon)?)?;
    let conductor = need("conductor", args.conductor.or_else(|| cfg.conductor.clone()))?;
    let wind_speed = need("wind-speed", args.wind_speed)?;
    let wind_angle = need("wind-angle", args.wind_angle)?;
    let emissivity = need("emissivity", args.emissivity.or(cfg.emissivity))?;
    let out = need("out", args.out.or_else(|| cfg.out.clone()))?;

    // Lookup only touches horizon, wind, angle, conductor and
    // emissivity; ambient temperature/solar and the nominal are inert
    // placeholders here.
    let query = UncertaintyQuery {
        ambient: AmbientConditions {
            temperature_c: 15.0,
            solar_wm2: 500.0,
            wind_speed_ms: wind_speed,
            wind_attack_deg: wind_angle,
        },
        horizon,
        conductor,
        emissivity,
        nominal_ampacity: 1.0,
        confidence: 0.5,
    };
    let cdf = rt::interpolate_cdf(&db, &query)
        .map_err(|e| super::classify_rt(e, "interpolating stored distributions"))?;
    let points: Vec<(f64, f64)> = cdf
        .grid()
        .iter()
        .copied()
        .zip(cdf.values().iter().copied())
        .collect();
    ensure_dir(&out)?;
    let path = out.join("export_cdf.csv");
    write_curve_csv(CDF_EXPORT_HEADER, &points, create(&path)?)
        .map_err(Failure::data)?;
    println!(
        "wrote {} ({} grid points, r up to {:.4})",
        path.display(),
        points.len(),
        cdf.r_max()
    );
    Ok(())
}
