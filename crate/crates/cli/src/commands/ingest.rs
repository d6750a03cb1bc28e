use std::collections::BTreeMap;
use std::path::PathBuf;

use ampacity_uq_core::weather::{
    align_pairs, compute_errors, default_align_tolerance, filter_solar_nonzero,
    parse_forecast_csv, parse_measured_csv, write_error_samples_csv, WeatherVariable,
};
use clap::Args;
use serde::Serialize;

use crate::config::RunConfig;
use crate::fail::{need, Failure, ResultExt};
use crate::io_util::{create, ensure_dir, open, write_json_pretty};

/// Align weather series and emit per-variable forecast error samples.
#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Measured weather CSV.
    #[arg(long, value_name = "CSV")]
    pub measured: Option<PathBuf>,
    /// Forecast weather CSV.
    #[arg(long, value_name = "CSV")]
    pub forecast: Option<PathBuf>,
    /// Directory receiving errors.csv and ingest_summary.json.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    pairs: usize,
    /// Pairs whose predicted solar irradiance is zero; dropped from the
    /// solar error cells only.
    excluded_zero_solar: usize,
    samples: BTreeMap<String, BTreeMap<String, usize>>,
}

pub fn run(args: IngestArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let measured_path = need("measured", args.measured.or_else(|| cfg.measured.clone()))?;
    let forecast_path = need("forecast", args.forecast.or_else(|| cfg.forecast.clone()))?;
    let out = need("out", args.out.or_else(|| cfg.out.clone()))?;

    let measured = parse_measured_csv(open(&measured_path)?)
        .or_data(&format!("parsing {}", measured_path.display()))?;
    let forecast = parse_forecast_csv(open(&forecast_path)?)
        .or_data(&format!("parsing {}", forecast_path.display()))?;

    let pairs = align_pairs(&measured, &forecast, default_align_tolerance());
    let solar_pairs = filter_solar_nonzero(&pairs);
    let excluded_zero_solar = pairs
        .iter()
        .filter(|(_, f)| matches!(f.solar_irradiance, Some(s) if s <= 0.0))
        .count();

    let mut all = Vec::new();
    for variable in WeatherVariable::ALL {
        let source = if variable == WeatherVariable::Solar {
            &solar_pairs
        } else {
            &pairs
        };
        all.extend(compute_errors(source, variable));
    }

    ensure_dir(&out)?;
    let errors_path = out.join("errors.csv");
    write_error_samples_csv(&all, create(&errors_path)?).or_data("writing errors.csv")?;

    let mut samples: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for e in &all {
        *samples
            .entry(e.variable.to_string())
            .or_default()
            .entry(e.horizon.to_string())
            .or_default() += 1;
    }
    let summary = IngestSummary {
        pairs: pairs.len(),
        excluded_zero_solar,
        samples,
    };
    write_json_pretty(&out.join("ingest_summary.json"), &summary)?;

    println!(
        "{} aligned pairs, {} error samples, {} zero-solar pairs excluded from solar cells",
        summary.pairs,
        all.len(),
        summary.excluded_zero_solar
    );
    for (variable, by_horizon) in &summary.samples {
        for (horizon, n) in by_horizon {
            println!("  {variable}/{horizon}: {n}");
        }
    }
    println!("wrote {}", errors_path.display());
    Ok(())
}
