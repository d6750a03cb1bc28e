use std::path::PathBuf;

use ampacity_uq_core::db::{ClampFlags, DistributionDb};
use ampacity_uq_core::rt::{self, UncertaintyQuery};
use ampacity_uq_core::thermal::{
    wind_attack_angle, AmbientConditions, ConductorCatalog, HeatBalanceModel,
};
use ampacity_uq_core::weather::{parse_measured_csv, HorizonClass};
use anyhow::anyhow;
use clap::Args;
use serde::Serialize;

use crate::config::RunConfig;
use crate::fail::{need, Failure, ResultExt};
use crate::io_util::{create, ensure_dir, open};
use crate::tables::{write_assess_csv, AssessRow};

/// Confidence limits for one query or a batch of weather rows.
#[derive(Debug, Args)]
pub struct AssessArgs {
    /// Database file.
    #[arg(long, value_name = "FILE")]
    pub db: Option<PathBuf>,
    /// Conductor catalog JSON; the built-in catalog when omitted.
    #[arg(long, value_name = "FILE")]
    pub catalog: Option<PathBuf>,
    /// Conductor name.
    #[arg(long)]
    pub conductor: Option<String>,
    /// Forecast horizon: nowcast, short_term or medium_term.
    #[arg(long)]
    pub horizon: Option<String>,
    /// Conductor emissivity; the catalog value when omitted.
    #[arg(long)]
    pub emissivity: Option<f64>,
    /// Confidence level (default 0.95).
    #[arg(long)]
    pub confidence: Option<f64>,
    /// Forecast ambient temperature, degC (single query).
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Forecast solar irradiance, W/m2 (single query).
    #[arg(long)]
    pub solar: Option<f64>,
    /// Forecast wind speed, m/s (single query).
    #[arg(long)]
    pub wind_speed: Option<f64>,
    /// Wind attack angle, deg (single query).
    #[arg(long)]
    pub wind_attack: Option<f64>,
    /// Nominal ampacity, A; computed from the heat balance when omitted.
    #[arg(long)]
    pub nominal: Option<f64>,
    /// Measured-weather CSV of time-stamped queries.
    #[arg(
        long,
        value_name = "CSV",
        conflicts_with_all = ["temperature", "solar", "wind_speed", "wind_attack", "nominal"]
    )]
    pub batch: Option<PathBuf>,
    /// Line azimuth for converting wind direction to attack angle
    /// (batch mode, default 0).
    #[arg(long)]
    pub line_azimuth: Option<f64>,
    /// Directory receiving assess.csv (batch mode).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SingleOutput<'a> {
    i_th0: f64,
    lower: f64,
    upper: f64,
    confidence: f64,
    clamp_flags: &'a ClampFlags,
    nominal_computed: bool,
}

pub fn run(args: AssessArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let db = super::load_db(args.db.clone().or_else(|| cfg.db.clone()))?;
    let catalog = super::load_catalog(args.catalog.clone().or_else(|| cfg.catalog.clone()))?;
    let conductor = need(
        "conductor",
        args.conductor.clone().or_else(|| cfg.conductor.clone()),
    )?;
    let horizon = super::parse_horizon(&need("horizon", args.horizon.clone())?)?;
    let confidence = args.confidence.or(cfg.confidence).unwrap_or(0.95);
    let emissivity = match args.emissivity.or(cfg.emissivity) {
        Some(e) => e,
        None => {
            catalog
                .get(&conductor)
                .or_data("conductor not in catalog; pass --emissivity")?
                .emissivity
        }
    };
    let model = HeatBalanceModel::default();

    if let Some(batch) = &args.batch {
        let out = need("out", args.out.clone().or_else(|| cfg.out.clone()))?;
        let line_azimuth = args.line_azimuth.or(cfg.line_azimuth_deg).unwrap_or(0.0);
        return run_batch(BatchRun {
            db: &db,
            catalog: &catalog,
            model: &model,
            conductor,
            horizon,
            emissivity,
            confidence,
            line_azimuth,
            batch: batch.clone(),
            out,
        });
    }

    let ambient = AmbientConditions {
        temperature_c: need("temperature", args.temperature)?,
        solar_wm2: need("solar", args.solar)?,
        wind_speed_ms: need("wind-speed", args.wind_speed)?,
        wind_attack_deg: need("wind-attack", args.wind_attack)?,
    };
    let (nominal, nominal_computed) = match args.nominal {
        Some(n) => (n, false),
        None => {
            ambient.validate().or_usage("ambient conditions")?;
            let spec = catalog
                .get(&conductor)
                .or_data("nominal not given and conductor not in catalog")?
                .with_emissivity(emissivity);
            (model.ampacity(&ambient, &spec), true)
        }
    };
    let query = UncertaintyQuery {
        ambient,
        horizon,
        conductor,
        emissivity,
        nominal_ampacity: nominal,
        confidence,
    };
    let result = rt::assess(&db, &query).map_err(|e| super::classify_rt(e, "assess"))?;
    let line = SingleOutput {
        i_th0: result.i_th0,
        lower: result.lower,
        upper: result.upper,
        confidence: result.confidence,
        clamp_flags: &result.clamp_flags,
        nominal_computed,
    };
    println!(
        "{}",
        serde_json::to_string(&line).or_internal("serializing result")?
    );
    Ok(())
}

struct BatchRun<'a> {
    db: &'a DistributionDb,
    catalog: &'a ConductorCatalog,
    model: &'a HeatBalanceModel,
    conductor: String,
    horizon: HorizonClass,
    emissivity: f64,
    confidence: f64,
    line_azimuth: f64,
    batch: PathBuf,
    out: PathBuf,
}

fn run_batch(run: BatchRun<'_>) -> Result<(), Failure> {
    let samples = parse_measured_csv(open(&run.batch)?)
        .or_data(&format!("parsing {}", run.batch.display()))?;
    let spec = run
        .catalog
        .get(&run.conductor)
        .or_data("conductor not in catalog")?
        .with_emissivity(run.emissivity);
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for (i, s) in samples.iter().enumerate() {
        let line = i + 2;
        let (Some(t), Some(sol), Some(v), Some(dir)) = (
            s.temperature,
            s.solar_irradiance,
            s.wind_speed,
            s.wind_direction,
        ) else {
            eprintln!("line {line}: missing weather fields, skipped");
            skipped += 1;
            continue;
        };
        let ambient = AmbientConditions {
            temperature_c: t,
            solar_wm2: sol,
            wind_speed_ms: v,
            wind_attack_deg: wind_attack_angle(run.line_azimuth, dir),
        };
        if let Err(e) = ambient.validate() {
            eprintln!("line {line}: {e}");
            skipped += 1;
            continue;
        }
        let nominal = run.model.ampacity(&ambient, &spec);
        if !(nominal > 0.0) {
            eprintln!("line {line}: nonpositive nominal ampacity");
            skipped += 1;
            continue;
        }
        let query = UncertaintyQuery {
            ambient,
            horizon: run.horizon,
            conductor: run.conductor.clone(),
            emissivity: run.emissivity,
            nominal_ampacity: nominal,
            confidence: run.confidence,
        };
        match rt::assess(run.db, &query) {
            Ok(res) => rows.push(AssessRow {
                time: s.timestamp,
                nominal_a: res.i_th0,
                lower_a: res.lower,
                upper_a: res.upper,
            }),
            Err(e) => {
                eprintln!("line {line}: {e}");
                skipped += 1;
            }
        }
    }
    ensure_dir(&run.out)?;
    let path = run.out.join("assess.csv");
    write_assess_csv(&rows, create(&path)?).map_err(Failure::data)?;
    println!(
        "assessed {} rows to {} ({} skipped)",
        rows.len(),
        path.display(),
        skipped
    );
    if rows.is_empty() {
        return Err(Failure::data(anyhow!(
            "no assessable rows in {}",
            run.batch.display()
        )));
    }
    if skipped > 0 {
        return Err(Failure::data(anyhow!("{skipped} rows skipped")));
    }
    Ok(())
}
