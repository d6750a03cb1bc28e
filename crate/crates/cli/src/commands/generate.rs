use std::fs;
use std::path::PathBuf;

use ampacity_uq_core::synth::{self, SynthConfig};
use ampacity_uq_core::weather::{write_forecast_csv, write_measured_csv};
use clap::Args;

use crate::config::RunConfig;
use crate::fail::{need, Failure, ResultExt};
use crate::io_util::{create, ensure_dir};

/// Bundled generator parameters; see `fixtures/synth_default.json`.
pub const DEFAULT_FIXTURE: &str = include_str!("../../fixtures/synth_default.json");

/// Generate synthetic measured + forecast weather CSVs.
#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator fixture (JSON); the bundled defaults when omitted.
    #[arg(long, value_name = "FILE")]
    pub fixture: Option<PathBuf>,
    /// Generator seed; replaces the fixture's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Days of data; replaces the fixture's value.
    #[arg(long)]
    pub days: Option<u32>,
    /// Directory receiving measured.csv and forecast.csv.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn run(args: GenerateArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let seed = need("seed", args.seed.or(cfg.seed))?;
    let out = need("out", args.out.or_else(|| cfg.out.clone()))?;
    let text = match &args.fixture {
        Some(path) => {
            fs::read_to_string(path).or_data(&format!("reading fixture {}", path.display()))?
        }
        None => DEFAULT_FIXTURE.to_owned(),
    };
    let mut synth_cfg: SynthConfig =
        serde_json::from_str(&text).or_data("parsing generator fixture")?;
    synth_cfg.seed = seed;
    if let Some(days) = args.days {
        synth_cfg.days = days;
    }
    let data = synth::generate(&synth_cfg).or_data("generating synthetic weather")?;
    ensure_dir(&out)?;
    let measured_path = out.join("measured.csv");
    let forecast_path = out.join("forecast.csv");
    write_measured_csv(&data.measured, create(&measured_path)?)
        .or_data("writing measured.csv")?;
    write_forecast_csv(&data.forecasts, create(&forecast_path)?)
        .or_data("writing forecast.csv")?;
    println!(
        "wrote {} measured rows to {}",
        data.measured.len(),
        measured_path.display()
    );
    println!(
        "wrote {} forecast rows to {}",
        data.forecasts.len(),
        forecast_path.display()
    );
    Ok(())
}
