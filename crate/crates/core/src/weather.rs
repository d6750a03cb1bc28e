//! Weather series ingestion and forecast-error extraction.
//!
//! Measured and forecast series arrive as CSV (schemas below), are
//! aligned by valid time, and reduced to per-variable error samples
//! `measured - predicted`, tagged with the forecast horizon class.
//!
//! Measured CSV header: `timestamp,temperature_c,solar_wm2,wind_speed_ms,wind_dir_deg`
//! Forecast CSV header: `issued_at,valid_at,temperature_c,solar_wm2,wind_speed_ms,wind_dir_deg`
//!
//! Timestamps are RFC 3339 UTC. Empty fields mean a missing value; the
//! row is kept and the gap is dropped pairwise when errors are computed.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MEASURED_HEADER: [&str; 5] = [
    "timestamp",
    "temperature_c",
    "solar_wm2",
    "wind_speed_ms",
    "wind_dir_deg",
];

pub const FORECAST_HEADER: [&str; 6] = [
    "issued_at",
    "valid_at",
    "temperature_c",
    "solar_wm2",
    "wind_speed_ms",
    "wind_dir_deg",
];

/// Forecast lead times beyond this are rejected at parse time.
pub const MAX_LEAD_HOURS: i64 = 72;

/// Nowcast/short-term boundary is lead 0; short/medium boundary is 12 h.
pub const SHORT_TERM_MAX_HOURS: i64 = 12;

/// Default matching tolerance: half the 5-minute measurement cadence.
pub fn default_align_tolerance() -> Duration {
    Duration::seconds(150)
}

#[derive(Debug, Error)]
pub enum WeatherError {
    #[error("i/o error")]
    Io(#[from] std::io::Error),
    #[error("csv error")]
    Csv(#[from] csv::Error),
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: field `{field}`: {reason}")]
    Field {
        line: u64,
        field: &'static str,
        reason: String,
    },
    #[error("line {line}: timestamps not strictly increasing")]
    OutOfOrder { line: u64 },
    #[error("line {line}: lead time {hours:.2} h outside [0, 72] h")]
    LeadOutOfRange { line: u64, hours: f64 },
    #[error("lead time {hours:.4} h outside [0, 72] h")]
    HorizonRange { hours: f64 },
    #[error("unknown horizon class `{0}`")]
    UnknownHorizon(String),
    #[error("unknown weather variable `{0}`")]
    UnknownVariable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeatherVariable {
    Temperature,
    Solar,
    WindSpeed,
    WindDirection,
}

impl WeatherVariable {
    pub const ALL: [WeatherVariable; 4] = [
        WeatherVariable::Temperature,
        WeatherVariable::Solar,
        WeatherVariable::WindSpeed,
        WeatherVariable::WindDirection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WeatherVariable::Temperature => "temperature",
            WeatherVariable::Solar => "solar",
            WeatherVariable::WindSpeed => "wind_speed",
            WeatherVariable::WindDirection => "wind_direction",
        }
    }
}

impl fmt::Display for WeatherVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeatherVariable {
    type Err = WeatherError;

    fn from_str(s: &str) -> Result<Self, WeatherError> {
        WeatherVariable::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| WeatherError::UnknownVariable(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonClass {
    Nowcast,
    ShortTerm,
    MediumTerm,
}

impl HorizonClass {
    pub const ALL: [HorizonClass; 3] = [
        HorizonClass::Nowcast,
        HorizonClass::ShortTerm,
        HorizonClass::MediumTerm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HorizonClass::Nowcast => "nowcast",
            HorizonClass::ShortTerm => "short_term",
            HorizonClass::MediumTerm => "medium_term",
        }
    }
}

impl fmt::Display for HorizonClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HorizonClass {
    type Err = WeatherError;

    fn from_str(s: &str) -> Result<Self, WeatherError> {
        HorizonClass::ALL
            .into_iter()
            .find(|h| h.as_str() == s)
            .ok_or_else(|| WeatherError::UnknownHorizon(s.to_owned()))
    }
}

/// One measured record. `None` marks a missing (empty) field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherSample {
    pub timestamp: DateTime<Utc>,
    pub temperature: Option<f64>,
    pub solar_irradiance: Option<f64>,
    pub wind_speed: Option<f64>,
    pub wind_direction: Option<f64>,
}

/// One forecast record: values predicted at `issued_at` for `valid_at`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastSample {
    pub issued_at: DateTime<Utc>,
    pub valid_at: DateTime<Utc>,
    pub temperature: Option<f64>,
    pub solar_irradiance: Option<f64>,
    pub wind_speed: Option<f64>,
    pub wind_direction: Option<f64>,
}

impl WeatherSample {
    pub fn value_of(&self, variable: WeatherVariable) -> Option<f64> {
        match variable {
            WeatherVariable::Temperature => self.temperature,
            WeatherVariable::Solar => self.solar_irradiance,
            WeatherVariable::WindSpeed => self.wind_speed,
            WeatherVariable::WindDirection => self.wind_direction,
        }
    }
}

impl ForecastSample {
    pub fn lead(&self) -> Duration {
        self.valid_at - self.issued_at
    }

    pub fn value_of(&self, variable: WeatherVariable) -> Option<f64> {
        match variable {
            WeatherVariable::Temperature => self.temperature,
            WeatherVariable::Solar => self.solar_irradiance,
            WeatherVariable::WindSpeed => self.wind_speed,
            WeatherVariable::WindDirection => self.wind_direction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub variable: WeatherVariable,
    pub value: f64,
    pub horizon: HorizonClass,
    pub valid_at: DateTime<Utc>,
}

pub fn parse_measured_csv<R: Read>(reader: R) -> Result<Vec<WeatherSample>, WeatherError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    check_header(&mut rdr, &MEASURED_HEADER)?;
    let mut out: Vec<WeatherSample> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        expect_fields(&record, MEASURED_HEADER.len(), line)?;
        let sample = WeatherSample {
            timestamp: parse_timestamp(&record[0], line, "timestamp")?,
            temperature: parse_opt_value(&record[1], line, "temperature_c", None)?,
            solar_irradiance: parse_opt_value(&record[2], line, "solar_wm2", Some(check_solar))?,
            wind_speed: parse_opt_value(&record[3], line, "wind_speed_ms", Some(check_wind))?,
            wind_direction: parse_opt_value(&record[4], line, "wind_dir_deg", Some(check_dir))?,
        };
        if let Some(prev) = out.last() {
            if sample.timestamp <= prev.timestamp {
                return Err(WeatherError::OutOfOrder { line });
            }
        }
        out.push(sample);
    }
    Ok(out)
}

pub fn parse_forecast_csv<R: Read>(reader: R) -> Result<Vec<ForecastSample>, WeatherError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    check_header(&mut rdr, &FORECAST_HEADER)?;
    let mut out: Vec<ForecastSample> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        expect_fields(&record, FORECAST_HEADER.len(), line)?;
        let sample = ForecastSample {
            issued_at: parse_timestamp(&record[0], line, "issued_at")?,
            valid_at: parse_timestamp(&record[1], line, "valid_at")?,
            temperature: parse_opt_value(&record[2], line, "temperature_c", None)?,
            solar_irradiance: parse_opt_value(&record[3], line, "solar_wm2", Some(check_solar))?,
            wind_speed: parse_opt_value(&record[4], line, "wind_speed_ms", Some(check_wind))?,
            wind_direction: parse_opt_value(&record[5], line, "wind_dir_deg", Some(check_dir))?,
        };
        let lead = sample.lead();
        if lead < Duration::zero() || lead > Duration::hours(MAX_LEAD_HOURS) {
            return Err(WeatherError::LeadOutOfRange {
                line,
                hours: duration_hours(lead),
            });
        }
        if let Some(prev) = out.last() {
            // file sorted by issue, then by valid time within an issue
            let ok = sample.issued_at > prev.issued_at
                || (sample.issued_at == prev.issued_at && sample.valid_at > prev.valid_at);
            if !ok {
                return Err(WeatherError::OutOfOrder { line });
            }
        }
        out.push(sample);
    }
    Ok(out)
}

pub fn write_measured_csv<W: Write>(
    samples: &[WeatherSample],
    writer: W,
) -> Result<(), WeatherError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(MEASURED_HEADER)?;
    for s in samples {
        wtr.write_record(&[
            format_timestamp(s.timestamp),
            format_opt(s.temperature),
            format_opt(s.solar_irradiance),
            format_opt(s.wind_speed),
            format_opt(s.wind_direction),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_forecast_csv<W: Write>(
    samples: &[ForecastSample],
    writer: W,
) -> Result<(), WeatherError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(FORECAST_HEADER)?;
    for s in samples {
        wtr.write_record(&[
            format_timestamp(s.issued_at),
            format_timestamp(s.valid_at),
            format_opt(s.temperature),
            format_opt(s.solar_irradiance),
            format_opt(s.wind_speed),
            format_opt(s.wind_direction),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Error-sample CSV: header `valid_at,variable,horizon,value`.
pub fn write_error_samples_csv<W: Write>(
    samples: &[ErrorSample],
    writer: W,
) -> Result<(), WeatherError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["valid_at", "variable", "horizon", "value"])?;
    for s in samples {
        wtr.write_record(&[
            format_timestamp(s.valid_at),
            s.variable.to_string(),
            s.horizon.to_string(),
            format!("{}", s.value),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn parse_error_samples_csv<R: Read>(reader: R) -> Result<Vec<ErrorSample>, WeatherError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    check_header(&mut rdr, &["valid_at", "variable", "horizon", "value"])?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        expect_fields(&record, 4, line)?;
        let value = parse_opt_value(&record[3], line, "value", None)?.ok_or_else(|| {
            WeatherError::Field {
                line,
                field: "value",
                reason: "must not be empty".into(),
            }
        })?;
        out.push(ErrorSample {
            valid_at: parse_timestamp(&record[0], line, "valid_at")?,
            variable: record[1].parse()?,
            horizon: record[2].parse()?,
            value,
        });
    }
    Ok(out)
}

/// Lead 0 is the nowcast; (0, 12 h] short-term; (12 h, 72 h] medium-term.
pub fn classify_horizon(lead: Duration) -> Result<HorizonClass, WeatherError> {
    if lead < Duration::zero() || lead > Duration::hours(MAX_LEAD_HOURS) {
        return Err(WeatherError::HorizonRange {
            hours: duration_hours(lead),
        });
    }
    if lead == Duration::zero() {
        Ok(HorizonClass::Nowcast)
    } else if lead <= Duration::hours(SHORT_TERM_MAX_HOURS) {
        Ok(HorizonClass::ShortTerm)
    } else {
        Ok(HorizonClass::MediumTerm)
    }
}

/// Matches each forecast sample to the nearest measured sample within
/// `tolerance` of its valid time. Within one forecast issue a measured
/// sample is used at most once; forecasts whose nearest sample is taken
/// or out of reach are dropped.
pub fn align_pairs(
    measured: &[WeatherSample],
    forecast: &[ForecastSample],
    tolerance: Duration,
) -> Vec<(WeatherSample, ForecastSample)> {
    let mut out = Vec::new();
    if measured.is_empty() {
        return out;
    }
    for group in forecast.chunk_by(|a, b| a.issued_at == b.issued_at) {
        let mut idx = 0usize;
        let mut last_used: Option<usize> = None;
        for f in group {
            while idx + 1 < measured.len()
                && abs_delta(measured[idx + 1].timestamp, f.valid_at)
                    < abs_delta(measured[idx].timestamp, f.valid_at)
            {
                idx += 1;
            }
            if abs_delta(measured[idx].timestamp, f.valid_at) <= tolerance
                && last_used != Some(idx)
            {
                out.push((measured[idx], *f));
                last_used = Some(idx);
            }
        }
    }
    out
}

/// `measured - predicted` for one variable; wind-direction differences
/// folded into (-180, 180]. Pairs missing the variable on either side are
/// skipped.
///
/// Panics if a pair carries a lead time outside [0, 72 h]; parsed
/// forecasts cannot, by the `ForecastSample` invariant.
pub fn compute_errors(
    pairs: &[(WeatherSample, ForecastSample)],
    variable: WeatherVariable,
) -> Vec<ErrorSample> {
    let mut out = Vec::new();
    for (m, f) in pairs {
        let (Some(mv), Some(fv)) = (m.value_of(variable), f.value_of(variable)) else {
            continue;
        };
        let horizon = classify_horizon(f.lead())
            .expect("ForecastSample invariant: lead within [0, 72 h]");
        let raw = mv - fv;
        let value = if variable == WeatherVariable::WindDirection {
            fold_half_circle(raw)
        } else {
            raw
        };
        out.push(ErrorSample {
            variable,
            value,
            horizon,
            valid_at: f.valid_at,
        });
    }
    out
}

/// Keeps only pairs whose *predicted* solar irradiance is present and
/// positive. Solar error fitting runs on this subset.
pub fn filter_solar_nonzero(
    pairs: &[(WeatherSample, ForecastSample)],
) -> Vec<(WeatherSample, ForecastSample)> {
    pairs
        .iter()
        .filter(|(_, f)| matches!(f.solar_irradiance, Some(s) if s > 0.0))
        .copied()
        .collect()
}

/// Folds an angular difference in degrees into (-180, 180].
pub fn fold_half_circle(delta_deg: f64) -> f64 {
    let mut x = delta_deg % 360.0;
    if x <= -180.0 {
        x += 360.0;
    } else if x > 180.0 {
        x -= 360.0;
    }
    x
}

fn abs_delta(a: DateTime<Utc>, b: DateTime<Utc>) -> Duration {
    if a >= b {
        a - b
    } else {
        b - a
    }
}

fn duration_hours(d: Duration) -> f64 {
    d.num_milliseconds() as f64 / 3_600_000.0
}

fn check_header<R: Read>(
    rdr: &mut csv::Reader<R>,
    expected: &[&str],
) -> Result<(), WeatherError> {
    let found = rdr.headers()?;
    if found.iter().ne(expected.iter().copied()) {
        return Err(WeatherError::Header {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

fn expect_fields(
    record: &csv::StringRecord,
    n: usize,
    line: u64,
) -> Result<(), WeatherError> {
    if record.len() != n {
        return Err(WeatherError::Field {
            line,
            field: "",
            reason: format!("expected {n} fields, found {}", record.len()),
        });
    }
    Ok(())
}

fn parse_timestamp(s: &str, line: u64, field: &'static str) -> Result<DateTime<Utc>, WeatherError> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|dt| dt.with_timezone(&Utc))
        .map_err(|e| WeatherError::Field {
            line,
            field,
            reason: format!("invalid RFC 3339 timestamp: {e}"),
        })
}

type RangeCheck = fn(f64) -> Result<(), String>;

fn check_solar(v: f64) -> Result<(), String> {
    if v < 0.0 {
        Err(format!("solar irradiance {v} below 0"))
    } else {
        Ok(())
    }
}

fn check_wind(v: f64) -> Result<(), String> {
    if v < 0.0 {
        Err(format!("wind speed {v} below 0"))
    } else {
        Ok(())
    }
}

fn check_dir(v: f64) -> Result<(), String> {
    if !(0.0..360.0).contains(&v) {
        Err(format!("wind direction {v} outside [0, 360)"))
    } else {
        Ok(())
    }
}

fn parse_opt_value(
    s: &str,
    line: u64,
    field: &'static str,
    check: Option<RangeCheck>,
) -> Result<Option<f64>, WeatherError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| WeatherError::Field {
        line,
        field,
        reason: format!("not a number: `{s}`"),
    })?;
    if !v.is_finite() {
        return Err(WeatherError::Field {
            line,
            field,
            reason: "not finite".into(),
        });
    }
    if let Some(check) = check {
        check(v).map_err(|reason| WeatherError::Field { line, field, reason })?;
    }
    Ok(Some(v))
}

fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn format_opt(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    fn measured_at(t: &str) -> WeatherSample {
        WeatherSample {
            timestamp: ts(t),
            temperature: Some(10.0),
            solar_irradiance: Some(100.0),
            wind_speed: Some(2.0),
            wind_direction: Some(200.0),
        }
    }

    fn forecast_at(issued: &str, valid: &str) -> ForecastSample {
        ForecastSample {
            issued_at: ts(issued),
            valid_at: ts(valid),
            temperature: Some(8.0),
            solar_irradiance: Some(90.0),
            wind_speed: Some(2.5),
            wind_direction: Some(190.0),
        }
    }

    #[test]
    fn parses_minimal_measured_file() {
        let csv = "timestamp,temperature_c,solar_wm2,wind_speed_ms,wind_dir_deg\n\
                   2019-01-01T00:00:00Z,1.5,0,3.2,270\n";
        let rows = parse_measured_csv(csv.as_bytes()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].temperature, Some(1.5));
        assert_eq!(rows[0].wind_direction, Some(270.0));
    }

    #[test]
    fn rejects_negative_wind_with_line_number() {
        let csv = "timestamp,temperature_c,solar_wm2,wind_speed_ms,wind_dir_deg\n\
                   2019-01-01T00:00:00Z,1.5,0,3.2,270\n\
                   2019-01-01T00:05:00Z,1.5,0,-1,270\n";
        let err = parse_measured_csv(csv.as_bytes()).unwrap_err();
        match err {
            WeatherError::Field { line, field, .. } => {
                assert_eq!(line, 3);
                assert_eq!(field, "wind_speed_ms");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_header() {
        let csv = "time,temperature_c,solar_wm2,wind_speed_ms,wind_dir_deg\n";
        assert!(matches!(
            parse_measured_csv(csv.as_bytes()),
            Err(WeatherError::Header { .. })
        ));
    }

    #[test]
    fn rejects_out_of_order_timestamps() {
        let csv = "timestamp,temperature_c,solar_wm2,wind_speed_ms,wind_dir_deg\n\
                   2019-01-01T00:05:00Z,1,0,1,0\n\
                   2019-01-01T00:00:00Z,1,0,1,0\n";
        assert!(matches!(
            parse_measured_csv(csv.as_bytes()),
            Err(WeatherError::OutOfOrder { line: 3 })
        ));
    }

    #[test]
    fn empty_fields_become_missing_values() {
        let csv = "timestamp,temperature_c,solar_wm2,wind_speed_ms,wind_dir_deg\n\
                   2019-01-01T00:00:00Z,,0,3.2,\n";
        let rows = parse_measured_csv(csv.as_bytes()).unwrap();
        assert_eq!(rows[0].temperature, None);
        assert_eq!(rows[0].wind_direction, None);
        assert_eq!(rows[0].wind_speed, Some(3.2));
    }

    #[test]
    fn forecast_lead_out_of_range_rejected() {
        let csv = "issued_at,valid_at,temperature_c,solar_wm2,wind_speed_ms,wind_dir_deg\n\
                   2019-01-04T00:00:00Z,2019-01-01T00:00:00Z,1,0,1,0\n";
        assert!(matches!(
            parse_forecast_csv(csv.as_bytes()),
            Err(WeatherError::LeadOutOfRange { .. })
        ));
        let csv = "issued_at,valid_at,temperature_c,solar_wm2,wind_speed_ms,wind_dir_deg\n\
                   2019-01-01T00:00:00Z,2019-01-04T00:00:01Z,1,0,1,0\n";
        assert!(matches!(
            parse_forecast_csv(csv.as_bytes()),
            Err(WeatherError::LeadOutOfRange { .. })
        ));
    }

    #[test]
    fn classify_horizon_boundaries() {
        use HorizonClass::*;
        assert_eq!(classify_horizon(Duration::zero()).unwrap(), Nowcast);
        assert_eq!(classify_horizon(Duration::seconds(1)).unwrap(), ShortTerm);
        assert_eq!(classify_horizon(Duration::hours(6)).unwrap(), ShortTerm);
        assert_eq!(classify_horizon(Duration::hours(12)).unwrap(), ShortTerm);
        assert_eq!(
            classify_horizon(Duration::hours(12) + Duration::seconds(1)).unwrap(),
            MediumTerm
        );
        assert_eq!(classify_horizon(Duration::hours(24)).unwrap(), MediumTerm);
        assert_eq!(classify_horizon(Duration::hours(72)).unwrap(), MediumTerm);
        assert!(classify_horizon(Duration::seconds(-1)).is_err());
        assert!(classify_horizon(Duration::hours(73)).is_err());
    }

    #[test]
    fn align_exact_timestamps_matches_all() {
        let measured: Vec<_> = (0..5)
            .map(|i| measured_at(&format!("2019-01-01T00:{:02}:00Z", 5 * i)))
            .collect();
        let forecast: Vec<_> = (0..5)
            .map(|i| forecast_at("2019-01-01T00:00:00Z", &format!("2019-01-01T00:{:02}:00Z", 5 * i)))
            .collect();
        let pairs = align_pairs(&measured, &forecast, default_align_tolerance());
        assert_eq!(pairs.len(), 5);
    }

    #[test]
    fn align_beyond_tolerance_matches_nothing() {
        let measured = vec![measured_at("2019-01-01T00:00:00Z")];
        let forecast = vec![forecast_at("2019-01-01T00:00:00Z", "2019-01-01T00:05:00Z")];
        let pairs = align_pairs(&measured, &forecast, Duration::seconds(150));
        assert!(pairs.is_empty());
    }

    #[test]
    fn align_within_half_tolerance_matches() {
        let measured = vec![measured_at("2019-01-01T00:00:00Z")];
        let forecast = vec![forecast_at("2019-01-01T00:00:00Z", "2019-01-01T00:01:15Z")];
        let pairs = align_pairs(&measured, &forecast, Duration::seconds(150));
        assert_eq!(pairs.len(), 1);
    }

    #[test]
    fn align_uses_each_measured_once_per_issue() {
        let measured = vec![measured_at("2019-01-01T00:00:00Z")];
        let forecast = vec![
            forecast_at("2019-01-01T00:00:00Z", "2019-01-01T00:00:00Z"),
            forecast_at("2019-01-01T00:00:00Z", "2019-01-01T00:01:00Z"),
            forecast_at("2019-01-01T00:05:00Z", "2019-01-01T00:01:00Z"),
        ];
        let pairs = align_pairs(&measured, &forecast, Duration::seconds(150));
        // first issue matches once, second issue may reuse the sample
        assert_eq!(pairs.len(), 2);
    }

    #[test]
    fn error_values_and_circular_fold() {
        let mut m = measured_at("2019-01-01T00:00:00Z");
        let mut f = forecast_at("2019-01-01T00:00:00Z", "2019-01-01T00:00:00Z");
        m.temperature = Some(10.0);
        f.temperature = Some(8.0);
        m.wind_direction = Some(350.0);
        f.wind_direction = Some(10.0);
        let pairs = vec![(m, f)];
        let t_err = compute_errors(&pairs, WeatherVariable::Temperature);
        assert_eq!(t_err[0].value, 2.0);
        assert_eq!(t_err[0].horizon, HorizonClass::Nowcast);
        let d_err = compute_errors(&pairs, WeatherVariable::WindDirection);
        assert_eq!(d_err[0].value, -20.0);
    }

    #[test]
    fn equal_pair_has_zero_error() {
        let m = measured_at("2019-01-01T00:00:00Z");
        let mut f = forecast_at("2019-01-01T00:00:00Z", "2019-01-01T00:00:00Z");
        f.temperature = m.temperature;
        let pairs = vec![(m, f)];
        assert_eq!(
            compute_errors(&pairs, WeatherVariable::Temperature)[0].value,
            0.0
        );
    }

    #[test]
    fn missing_values_dropped_pairwise() {
        let mut m = measured_at("2019-01-01T00:00:00Z");
        m.temperature = None;
        let f = forecast_at("2019-01-01T00:00:00Z", "2019-01-01T00:00:00Z");
        let pairs = vec![(m, f)];
        assert!(compute_errors(&pairs, WeatherVariable::Temperature).is_empty());
        assert_eq!(compute_errors(&pairs, WeatherVariable::WindSpeed).len(), 1);
    }

    #[test]
    fn solar_filter_keeps_positive_predictions() {
        let m = measured_at("2019-01-01T00:00:00Z");
        let mut night = forecast_at("2019-01-01T00:00:00Z", "2019-01-01T00:00:00Z");
        night.solar_irradiance = Some(0.0);
        let mut gap = night;
        gap.solar_irradiance = None;
        let day = forecast_at("2019-01-01T00:00:00Z", "2019-01-01T00:00:00Z");
        let pairs = vec![(m, night), (m, gap), (m, day)];
        let kept = filter_solar_nonzero(&pairs);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].1.solar_irradiance, Some(90.0));
        assert!(filter_solar_nonzero(&[(m, night)]).is_empty());
    }

    #[test]
    fn fold_half_circle_cases() {
        assert_eq!(fold_half_circle(340.0), -20.0);
        assert_eq!(fold_half_circle(-340.0), 20.0);
        assert_eq!(fold_half_circle(180.0), 180.0);
        assert_eq!(fold_half_circle(-180.0), 180.0);
        assert_eq!(fold_half_circle(540.0), 180.0);
        assert_eq!(fold_half_circle(0.0), 0.0);
    }

    #[test]
    fn measured_csv_round_trip() {
        let csv = "timestamp,temperature_c,solar_wm2,wind_speed_ms,wind_dir_deg\n\
                   2019-01-01T00:00:00Z,1.5,,3.2,270\n\
                   2019-01-01T00:05:00Z,-0.25,12.5,0,0\n";
        let rows = parse_measured_csv(csv.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_measured_csv(&rows, &mut buf).unwrap();
        let rows2 = parse_measured_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, rows2);
    }

    #[test]
    fn error_samples_csv_round_trip() {
        let samples = vec![
            ErrorSample {
                variable: WeatherVariable::WindSpeed,
                value: -0.53,
                horizon: HorizonClass::ShortTerm,
                valid_at: ts("2019-03-01T12:00:00Z"),
            },
            ErrorSample {
                variable: WeatherVariable::WindDirection,
                value: 180.0,
                horizon: HorizonClass::MediumTerm,
                valid_at: ts("2019-03-02T12:00:00Z"),
            },
        ];
        let mut buf = Vec::new();
        write_error_samples_csv(&samples, &mut buf).unwrap();
        assert_eq!(parse_error_samples_csv(buf.as_slice()).unwrap(), samples);
    }

    proptest! {
        #[test]
        fn horizon_partition_is_total(secs in 0i64..=72 * 3600) {
            classify_horizon(Duration::seconds(secs)).unwrap();
        }

        #[test]
        fn errors_are_antisymmetric(
            mv in -50.0f64..50.0,
            fv in -50.0f64..50.0,
            dir_m in 0.0f64..360.0,
            dir_f in 0.0f64..360.0,
        ) {
            let mut m = measured_at("2019-01-01T00:00:00Z");
            let mut f = forecast_at("2019-01-01T00:00:00Z", "2019-01-01T00:00:00Z");
            m.temperature = Some(mv);
            f.temperature = Some(fv);
            m.wind_direction = Some(dir_m);
            f.wind_direction = Some(dir_f);
            // swapped pair: measured and predicted values exchanged
            let mut m2 = m;
            let mut f2 = f;
            m2.temperature = Some(fv);
            f2.temperature = Some(mv);
            m2.wind_direction = Some(dir_f);
            f2.wind_direction = Some(dir_m);

            let e = compute_errors(&[(m, f)], WeatherVariable::Temperature)[0].value;
            let e_swapped = compute_errors(&[(m2, f2)], WeatherVariable::Temperature)[0].value;
            prop_assert_eq!(e, -e_swapped);

            let d = compute_errors(&[(m, f)], WeatherVariable::WindDirection)[0].value;
            let d_swapped = compute_errors(&[(m2, f2)], WeatherVariable::WindDirection)[0].value;
            // circular fold maps +/-180 both to 180, so compare magnitudes
            prop_assert!((d.abs() - d_swapped.abs()).abs() < 1e-9);
            if d.abs() < 179.9 {
                prop_assert!((d + d_swapped).abs() < 1e-9);
            }
        }

        #[test]
        fn fold_lands_in_half_open_interval(delta in -1000.0f64..1000.0) {
            let folded = fold_half_circle(delta);
            prop_assert!(folded > -180.0 && folded <= 180.0);
        }

        #[test]
        fn align_output_bounded(n_m in 0usize..30, n_f in 0usize..30) {
            let measured: Vec<_> = (0..n_m)
                .map(|i| {
                    let mut s = measured_at("2019-01-01T00:00:00Z");
                    s.timestamp = ts("2019-01-01T00:00:00Z") + Duration::seconds(300 * i as i64);
                    s
                })
                .collect();
            let forecast: Vec<_> = (0..n_f)
                .map(|i| {
                    let mut f = forecast_at("2019-01-01T00:00:00Z", "2019-01-01T00:00:00Z");
                    f.valid_at = ts("2019-01-01T00:00:00Z") + Duration::seconds(200 * i as i64);
                    f
                })
                .collect();
            let pairs = align_pairs(&measured, &forecast, Duration::seconds(150));
            prop_assert!(pairs.len() <= measured.len().min(forecast.len()));
        }
    }
}
