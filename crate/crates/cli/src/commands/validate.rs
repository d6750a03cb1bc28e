use std::path::PathBuf;

use ampacity_uq_core::thermal::{
    skin_temperature_error, wind_attack_angle, AmbientConditions, ConductorSpec,
    HeatBalanceModel,
};
use ampacity_uq_core::weather::{
    default_align_tolerance, parse_forecast_csv, parse_measured_csv,
};
use anyhow::anyhow;
use chrono::{DateTime, Utc};
use clap::Args;
use serde::Serialize;

use crate::config::RunConfig;
use crate::fail::{need, Failure, ResultExt};
use crate::io_util::{create, ensure_dir, open, write_json_pretty};
use crate::tables::{parse_skin_csv, write_error_series_csv, SkinSample};

/// Compare modeled conductor temperature against sensor readings.
#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Measured weather CSV.
    #[arg(long, value_name = "CSV")]
    pub measured: Option<PathBuf>,
    /// Forecast weather CSV; its zero-lead rows drive the second run.
    #[arg(long, value_name = "CSV")]
    pub forecast: Option<PathBuf>,
    /// Skin temperature CSV: timestamp,conductor_temp_c,current_a.
    #[arg(long, value_name = "CSV")]
    pub skin: Option<PathBuf>,
    /// Conductor catalog JSON; the built-in catalog when omitted.
    #[arg(long, value_name = "FILE")]
    pub catalog: Option<PathBuf>,
    /// Conductor name.
    #[arg(long)]
    pub conductor: Option<String>,
    /// Conductor emissivity; the catalog value when omitted.
    #[arg(long)]
    pub emissivity: Option<f64>,
    /// Line azimuth, deg (default 0).
    #[arg(long)]
    pub line_azimuth: Option<f64>,
    /// Directory receiving error series and skin_validation.json.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct SpreadStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub iqr: f64,
}

#[derive(Debug, Serialize)]
struct SkinValidation {
    skin_rows: usize,
    /// Errors are model minus sensor.
    sign_convention: &'static str,
    measured_driven: SpreadStats,
    forecast_driven: SpreadStats,
    larger_spread: &'static str,
}

/// Weather rows usable for the heat balance: all four variables present.
struct WeatherPoint {
    time: DateTime<Utc>,
    ambient_of: (f64, f64, f64, f64),
}

pub fn run(args: ValidateArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let measured_path = need("measured", args.measured.or_else(|| cfg.measured.clone()))?;
    let forecast_path = need("forecast", args.forecast.or_else(|| cfg.forecast.clone()))?;
    let skin_path = need("skin", args.skin.or_else(|| cfg.skin.clone()))?;
    let out = need("out", args.out.or_else(|| cfg.out.clone()))?;
    let conductor = need("conductor", args.conductor.or_else(|| cfg.conductor.clone()))?;
    let line_azimuth = args.line_azimuth.or(cfg.line_azimuth_deg).unwrap_or(0.0);

    let catalog = super::load_catalog(args.catalog.or_else(|| cfg.catalog.clone()))?;
    let base_spec = catalog.get(&conductor).or_data("conductor not in catalog")?;
    let emissivity = args
        .emissivity
        .or(cfg.emissivity)
        .unwrap_or(base_spec.emissivity);
    let spec = base_spec.with_emissivity(emissivity);

    let measured = parse_measured_csv(open(&measured_path)?)
        .or_data(&format!("parsing {}", measured_path.display()))?;
    let forecast = parse_forecast_csv(open(&forecast_path)?)
        .or_data(&format!("parsing {}", forecast_path.display()))?;
    let skin = parse_skin_csv(open(&skin_path)?).map_err(Failure::data)?;
    if skin.is_empty() {
        return Err(Failure::data(anyhow!(
            "no skin temperature rows in {}",
            skin_path.display()
        )));
    }

    let mut measured_points: Vec<WeatherPoint> = measured
        .iter()
        .filter_map(|s| {
            Some(WeatherPoint {
                time: s.timestamp,
                ambient_of: (
                    s.temperature?,
                    s.solar_irradiance?,
                    s.wind_speed?,
                    s.wind_direction?,
                ),
            })
        })
        .collect();
    measured_points.sort_by_key(|p| p.time);
    let mut nowcast_points: Vec<WeatherPoint> = forecast
        .iter()
        .filter(|f| f.lead() == chrono::Duration::zero())
        .filter_map(|f| {
            Some(WeatherPoint {
                time: f.valid_at,
                ambient_of: (
                    f.temperature?,
                    f.solar_irradiance?,
                    f.wind_speed?,
                    f.wind_direction?,
                ),
            })
        })
        .collect();
    nowcast_points.sort_by_key(|p| p.time);

    let model = HeatBalanceModel::default();
    let measured_run = model_series(&model, &spec, line_azimuth, &skin, &measured_points);
    let forecast_run = model_series(&model, &spec, line_azimuth, &skin, &nowcast_points);
    if measured_run.sensor.is_empty() || forecast_run.sensor.is_empty() {
        return Err(Failure::data(anyhow!(
            "unalignable series: {} rows matched measured weather, {} matched nowcasts",
            measured_run.sensor.len(),
            forecast_run.sensor.len()
        )));
    }

    let errors_measured = skin_temperature_error(&measured_run.sensor, &measured_run.computed)
        .or_internal("length mismatch")?;
    let errors_forecast = skin_temperature_error(&forecast_run.sensor, &forecast_run.computed)
        .or_internal("length mismatch")?;

    let measured_stats = spread_stats(&errors_measured);
    let forecast_stats = spread_stats(&errors_forecast);
    let larger_spread = if forecast_stats.iqr != measured_stats.iqr {
        if forecast_stats.iqr > measured_stats.iqr {
            "forecast_driven"
        } else {
            "measured_driven"
        }
    } else if forecast_stats.std >= measured_stats.std {
        "forecast_driven"
    } else {
        "measured_driven"
    };

    ensure_dir(&out)?;
    let series_a: Vec<(DateTime<Utc>, f64)> = measured_run
        .times
        .iter()
        .copied()
        .zip(errors_measured.iter().copied())
        .collect();
    let series_b: Vec<(DateTime<Utc>, f64)> = forecast_run
        .times
        .iter()
        .copied()
        .zip(errors_forecast.iter().copied())
        .collect();
    write_error_series_csv(&series_a, create(&out.join("skin_errors_measured.csv"))?)
        .map_err(Failure::data)?;
    write_error_series_csv(&series_b, create(&out.join("skin_errors_forecast.csv"))?)
        .map_err(Failure::data)?;

    let report = SkinValidation {
        skin_rows: skin.len(),
        sign_convention: "model_minus_sensor",
        measured_driven: measured_stats,
        forecast_driven: forecast_stats,
        larger_spread,
    };
    write_json_pretty(&out.join("skin_validation.json"), &report)?;

    println!(
        "measured-driven: n={} mean={:.3} std={:.3} iqr={:.3}",
        report.measured_driven.n,
        report.measured_driven.mean,
        report.measured_driven.std,
        report.measured_driven.iqr
    );
    println!(
        "forecast-driven: n={} mean={:.3} std={:.3} iqr={:.3}",
        report.forecast_driven.n,
        report.forecast_driven.mean,
        report.forecast_driven.std,
        report.forecast_driven.iqr
    );
    println!("larger spread: {larger_spread}");
    Ok(())
}

struct ModelRun {
    times: Vec<DateTime<Utc>>,
    sensor: Vec<f64>,
    computed: Vec<f64>,
}

/// Solves the heat balance at each skin reading against the nearest
/// weather row within the alignment tolerance; unmatched or unsolvable
/// rows are dropped.
fn model_series(
    model: &HeatBalanceModel,
    spec: &ConductorSpec,
    line_azimuth: f64,
    skin: &[SkinSample],
    weather: &[WeatherPoint],
) -> ModelRun {
    let tolerance = default_align_tolerance();
    let mut run = ModelRun {
        times: Vec::new(),
        sensor: Vec::new(),
        computed: Vec::new(),
    };
    if weather.is_empty() {
        return run;
    }
    for row in skin {
        if !(row.current_a > 0.0) || !row.current_a.is_finite() {
            continue;
        }
        let idx = nearest_index(weather, row.timestamp);
        let point = &weather[idx];
        let delta = if point.time >= row.timestamp {
            point.time - row.timestamp
        } else {
            row.timestamp - point.time
        };
        if delta > tolerance {
            continue;
        }
        let (t, s, v, dir) = point.ambient_of;
        let ambient = AmbientConditions {
            temperature_c: t,
            solar_wm2: s,
            wind_speed_ms: v,
            wind_attack_deg: wind_attack_angle(line_azimuth, dir),
        };
        if ambient.validate().is_err() {
            continue;
        }
        let Ok(temp) = model.solve_conductor_temperature(row.current_a, &ambient, spec) else {
            continue;
        };
        run.times.push(row.timestamp);
        run.sensor.push(row.conductor_temp_c);
        run.computed.push(temp);
    }
    run
}

fn nearest_index(weather: &[WeatherPoint], t: DateTime<Utc>) -> usize {
    let hi = weather.partition_point(|p| p.time <= t);
    if hi == 0 {
        return 0;
    }
    if hi == weather.len() {
        return weather.len() - 1;
    }
    let before = &weather[hi - 1];
    let after = &weather[hi];
    if (t - before.time) <= (after.time - t) {
        hi - 1
    } else {
        hi
    }
}

fn spread_stats(xs: &[f64]) -> SpreadStats {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    let mut sorted = xs.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let iqr = percentile(&sorted, 0.75) - percentile(&sorted, 0.25);
    SpreadStats { n, mean, std, iqr }
}

/// Linear-interpolation percentile of an ascending slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}
