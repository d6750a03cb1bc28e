use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::anyhow;
use chrono::{DateTime, Utc};
use clap::Args;
use serde::Serialize;

use crate::config::RunConfig;
use crate::fail::{need, Failure};
use crate::io_util::{create, ensure_dir, open, write_json_pretty};
use crate::tables::{parse_assess_csv, parse_load_csv, write_curve_csv, DIST_CURVE_HEADER};

/// Compare assessed ratings against a static seasonal rating.
#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Batch output of `assess` (assess.csv).
    #[arg(long, value_name = "CSV")]
    pub assessed: Option<PathBuf>,
    /// Static seasonal rating in amperes; "inf" for unbounded.
    #[arg(long, value_name = "AMPS")]
    pub static_ampacity: Option<String>,
    /// Optional measured line load CSV: timestamp,load_a.
    #[arg(long, value_name = "CSV")]
    pub load: Option<PathBuf>,
    /// Directory receiving compare_static.json and distribution CSVs.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct CompareReport {
    rows: usize,
    static_ampacity: String,
    fraction_lower_below_static: f64,
    fraction_nominal_above_static: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    load_rows_matched: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fraction_load_above_lower: Option<f64>,
}

fn parse_static(text: &str) -> Result<f64, Failure> {
    let lower = text.trim().to_ascii_lowercase();
    if matches!(lower.as_str(), "inf" | "+inf" | "infinity") {
        return Ok(f64::INFINITY);
    }
    let value: f64 = lower
        .parse()
        .map_err(|_| Failure::usage(anyhow!("bad --static-ampacity {text:?}")))?;
    if value.is_nan() || value < 0.0 {
        return Err(Failure::usage(anyhow!(
            "--static-ampacity must be nonnegative, got {text:?}"
        )));
    }
    Ok(value)
}

fn empirical_curve(values: &mut Vec<f64>) -> Vec<(f64, f64)> {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, (i + 1) as f64 / n))
        .collect()
}

pub fn run(args: CompareArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let assessed_path = need("assessed", args.assessed)?;
    let static_text = need("static-ampacity", args.static_ampacity)?;
    let out = need("out", args.out.or_else(|| cfg.out.clone()))?;
    let static_a = parse_static(&static_text)?;

    let rows = parse_assess_csv(open(&assessed_path)?).map_err(Failure::data)?;
    if rows.is_empty() {
        return Err(Failure::data(anyhow!(
            "empty batch in {}",
            assessed_path.display()
        )));
    }
    let n = rows.len();
    let below = rows.iter().filter(|r| r.lower_a < static_a).count();
    let above = rows.iter().filter(|r| r.nominal_a > static_a).count();

    let mut load_rows_matched = None;
    let mut fraction_load_above_lower = None;
    let mut matched_loads: Vec<f64> = Vec::new();
    if let Some(load_path) = &args.load {
        let load = parse_load_csv(open(load_path)?).map_err(Failure::data)?;
        let by_time: BTreeMap<DateTime<Utc>, f64> = rows.iter().map(|r| (r.time, r.lower_a)).collect();
        let mut matched = 0usize;
        let mut exceeding = 0usize;
        for (t, amps) in &load {
            if let Some(lower) = by_time.get(t) {
                matched += 1;
                matched_loads.push(*amps);
                if *amps > *lower {
                    exceeding += 1;
                }
            }
        }
        if matched == 0 {
            return Err(Failure::data(anyhow!(
                "no load rows share timestamps with the assessed batch"
            )));
        }
        load_rows_matched = Some(matched);
        fraction_load_above_lower = Some(exceeding as f64 / matched as f64);
    }

    ensure_dir(&out)?;
    let mut nominal: Vec<f64> = rows.iter().map(|r| r.nominal_a).collect();
    let mut lower: Vec<f64> = rows.iter().map(|r| r.lower_a).collect();
    write_curve_csv(
        DIST_CURVE_HEADER,
        &empirical_curve(&mut nominal),
        create(&out.join("nominal_cdf.csv"))?,
    )
    .map_err(Failure::data)?;
    write_curve_csv(
        DIST_CURVE_HEADER,
        &empirical_curve(&mut lower),
        create(&out.join("lower_cdf.csv"))?,
    )
    .map_err(Failure::data)?;
    if !matched_loads.is_empty() {
        write_curve_csv(
            DIST_CURVE_HEADER,
            &empirical_curve(&mut matched_loads),
            create(&out.join("load_cdf.csv"))?,
        )
        .map_err(Failure::data)?;
    }

    let report = CompareReport {
        rows: n,
        static_ampacity: static_text.trim().to_owned(),
        fraction_lower_below_static: below as f64 / n as f64,
        fraction_nominal_above_static: above as f64 / n as f64,
        load_rows_matched,
        fraction_load_above_lower,
    };
    write_json_pretty(&out.join("compare_static.json"), &report)?;

    println!(
        "lower limit below static for {:.2}% of {} rows",
        100.0 * report.fraction_lower_below_static,
        n
    );
    println!(
        "nominal above static for {:.2}% of rows",
        100.0 * report.fraction_nominal_above_static
    );
    if let (Some(m), Some(f)) = (report.load_rows_matched, report.fraction_load_above_lower) {
        println!(
            "load above lower limit for {:.2}% of {} matched rows",
            100.0 * f,
            m
        );
    }
    Ok(())
}
