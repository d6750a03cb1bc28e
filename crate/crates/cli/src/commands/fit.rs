use std::path::{Path, PathBuf};

use ampacity_uq_core::stats::{
    fit_kde, ks_test_normal, ks_test_two_sample, DEFAULT_SIGNIFICANCE, MIN_KDE_SAMPLES,
};
use ampacity_uq_core::weather::{
    align_pairs, compute_errors, default_align_tolerance, filter_solar_nonzero,
    parse_forecast_csv, parse_measured_csv, HorizonClass, WeatherVariable,
};
use anyhow::anyhow;
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::fail::{need, Failure, ResultExt};
use crate::io_util::{ensure_dir, open, write_json_pretty};

/// Fit per-variable, per-horizon error distributions plus KS report.
#[derive(Debug, Args)]
pub struct FitErrorsArgs {
    /// Measured weather CSV.
    #[arg(long, value_name = "CSV")]
    pub measured: Option<PathBuf>,
    /// Forecast weather CSV.
    #[arg(long, value_name = "CSV")]
    pub forecast: Option<PathBuf>,
    /// Recorded in the report for build provenance.
    #[arg(long)]
    pub seed: Option<u64>,
    /// KS significance level (default 0.01).
    #[arg(long)]
    pub significance: Option<f64>,
    /// Directory receiving dist_*.json and ks_report.json.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Run the KS tests without fitting distributions.
#[derive(Debug, Args)]
pub struct KsReportArgs {
    /// Measured weather CSV.
    #[arg(long, value_name = "CSV")]
    pub measured: Option<PathBuf>,
    /// Forecast weather CSV.
    #[arg(long, value_name = "CSV")]
    pub forecast: Option<PathBuf>,
    /// KS significance level (default 0.01).
    #[arg(long)]
    pub significance: Option<f64>,
    /// Directory receiving ks_report.json.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

struct Cell {
    variable: WeatherVariable,
    horizon: HorizonClass,
    samples: Vec<f64>,
}

struct Cells {
    pairs: usize,
    excluded_zero_solar: usize,
    cells: Vec<Cell>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct KsReport {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub significance: f64,
    pub pairs: usize,
    pub excluded_zero_solar: usize,
    /// KS against a normal fitted to each cell's mean and spread.
    pub normality: Vec<NormalityRow>,
    /// Two-sample KS between horizons of the same variable.
    pub horizon_separation: Vec<SeparationRow>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NormalityRow {
    pub variable: String,
    pub horizon: String,
    pub samples: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub rejected: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SeparationRow {
    pub variable: String,
    pub horizon_a: String,
    pub horizon_b: String,
    pub statistic: f64,
    pub p_value: f64,
    pub rejected: bool,
}

fn collect_cells(measured_path: &Path, forecast_path: &Path) -> Result<Cells, Failure> {
    let measured = parse_measured_csv(open(measured_path)?)
        .or_data(&format!("parsing {}", measured_path.display()))?;
    let forecast = parse_forecast_csv(open(forecast_path)?)
        .or_data(&format!("parsing {}", forecast_path.display()))?;
    let pairs = align_pairs(&measured, &forecast, default_align_tolerance());
    let solar_pairs = filter_solar_nonzero(&pairs);
    let excluded_zero_solar = pairs
        .iter()
        .filter(|(_, f)| matches!(f.solar_irradiance, Some(s) if s <= 0.0))
        .count();
    let mut cells = Vec::new();
    for variable in WeatherVariable::ALL {
        let source = if variable == WeatherVariable::Solar {
            &solar_pairs
        } else {
            &pairs
        };
        let errors = compute_errors(source, variable);
        for horizon in HorizonClass::ALL {
            let samples: Vec<f64> = errors
                .iter()
                .filter(|e| e.horizon == horizon)
                .map(|e| e.value)
                .collect();
            cells.push(Cell {
                variable,
                horizon,
                samples,
            });
        }
    }
    Ok(Cells {
        pairs: pairs.len(),
        excluded_zero_solar,
        cells,
    })
}

fn check_cell_sizes(cells: &Cells) -> Result<(), Failure> {
    let short: Vec<String> = cells
        .cells
        .iter()
        .filter(|c| c.samples.len() < MIN_KDE_SAMPLES)
        .map(|c| {
            format!(
                "{}/{} has {} samples, need at least {}",
                c.variable,
                c.horizon,
                c.samples.len(),
                MIN_KDE_SAMPLES
            )
        })
        .collect();
    if short.is_empty() {
        Ok(())
    } else {
        Err(Failure::data(anyhow!(
            "insufficient samples: {}",
            short.join("; ")
        )))
    }
}

fn build_report(
    cells: &Cells,
    significance: f64,
    seed: Option<u64>,
) -> Result<KsReport, Failure> {
    let mut normality = Vec::new();
    for cell in &cells.cells {
        let res = ks_test_normal(&cell.samples, significance)
            .or_data(&format!("ks test for {}/{}", cell.variable, cell.horizon))?;
        normality.push(NormalityRow {
            variable: cell.variable.to_string(),
            horizon: cell.horizon.to_string(),
            samples: cell.samples.len(),
            statistic: res.statistic,
            p_value: res.p_value,
            rejected: res.rejected(),
        });
    }
    let mut horizon_separation = Vec::new();
    for variable in WeatherVariable::ALL {
        let of_var: Vec<&Cell> = cells
            .cells
            .iter()
            .filter(|c| c.variable == variable)
            .collect();
        for i in 0..of_var.len() {
            for j in (i + 1)..of_var.len() {
                let (a, b) = (of_var[i], of_var[j]);
                let res = ks_test_two_sample(&a.samples, &b.samples, significance).or_data(
                    &format!("ks test {} {} vs {}", variable, a.horizon, b.horizon),
                )?;
                horizon_separation.push(SeparationRow {
                    variable: variable.to_string(),
                    horizon_a: a.horizon.to_string(),
                    horizon_b: b.horizon.to_string(),
                    statistic: res.statistic,
                    p_value: res.p_value,
                    rejected: res.rejected(),
                });
            }
        }
    }
    Ok(KsReport {
        schema_version: 1,
        seed,
        significance,
        pairs: cells.pairs,
        excluded_zero_solar: cells.excluded_zero_solar,
        normality,
        horizon_separation,
    })
}

fn print_report(report: &KsReport) {
    println!(
        "{} aligned pairs, {} zero-solar pairs excluded from solar cells",
        report.pairs, report.excluded_zero_solar
    );
    for row in &report.normality {
        println!(
            "  {}/{}: n={} ks_p={:.3e}{}",
            row.variable,
            row.horizon,
            row.samples,
            row.p_value,
            if row.rejected { " (not normal)" } else { "" }
        );
    }
    for row in &report.horizon_separation {
        println!(
            "  {} {} vs {}: ks_p={:.3e}{}",
            row.variable,
            row.horizon_a,
            row.horizon_b,
            row.p_value,
            if row.rejected { " (distinct)" } else { "" }
        );
    }
}

pub fn run_fit(args: FitErrorsArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let measured = need("measured", args.measured.or_else(|| cfg.measured.clone()))?;
    let forecast = need("forecast", args.forecast.or_else(|| cfg.forecast.clone()))?;
    let seed = need("seed", args.seed.or(cfg.seed))?;
    let out = need("out", args.out.or_else(|| cfg.out.clone()))?;
    let significance = args
        .significance
        .or(cfg.significance)
        .unwrap_or(DEFAULT_SIGNIFICANCE);

    let cells = collect_cells(&measured, &forecast)?;
    check_cell_sizes(&cells)?;
    ensure_dir(&out)?;
    for cell in &cells.cells {
        let dist = fit_kde(cell.variable, cell.horizon, &cell.samples)
            .or_data(&format!("fitting {}/{}", cell.variable, cell.horizon))?;
        let path = out.join(format!("dist_{}_{}.json", cell.variable, cell.horizon));
        write_json_pretty(&path, &dist.to_record())?;
    }
    let report = build_report(&cells, significance, Some(seed))?;
    write_json_pretty(&out.join("ks_report.json"), &report)?;
    print_report(&report);
    println!(
        "wrote {} distributions and ks_report.json to {}",
        cells.cells.len(),
        out.display()
    );
    Ok(())
}

pub fn run_report(args: KsReportArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let measured = need("measured", args.measured.or_else(|| cfg.measured.clone()))?;
    let forecast = need("forecast", args.forecast.or_else(|| cfg.forecast.clone()))?;
    let out = need("out", args.out.or_else(|| cfg.out.clone()))?;
    let significance = args
        .significance
        .or(cfg.significance)
        .unwrap_or(DEFAULT_SIGNIFICANCE);

    let cells = collect_cells(&measured, &forecast)?;
    check_cell_sizes(&cells)?;
    let report = build_report(&cells, significance, None)?;
    ensure_dir(&out)?;
    write_json_pretty(&out.join("ks_report.json"), &report)?;
    print_report(&report);
    Ok(())
}
