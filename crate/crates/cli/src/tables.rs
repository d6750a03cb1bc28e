//! Plot-ready CSV formats the pipeline emits; every writer here has a
//! matching parser so emitted files feed back into later commands.

use std::io::{Read, Write};

use anyhow::{anyhow, Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};

pub const ASSESS_HEADER: [&str; 4] = ["time", "nominal_a", "lower_a", "upper_a"];
pub const SKIN_HEADER: [&str; 3] = ["timestamp", "conductor_temp_c", "current_a"];
pub const ERROR_SERIES_HEADER: [&str; 2] = ["timestamp", "error_c"];
pub const LOAD_HEADER: [&str; 2] = ["timestamp", "load_a"];
pub const CDF_EXPORT_HEADER: [&str; 2] = ["r", "cdf"];
pub const DIST_CURVE_HEADER: [&str; 2] = ["value", "cum_prob"];

/// One assessed time point: nominal rating and confidence limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssessRow {
    pub time: DateTime<Utc>,
    pub nominal_a: f64,
    pub lower_a: f64,
    pub upper_a: f64,
}

/// One conductor skin-temperature sensor reading with line load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkinSample {
    pub timestamp: DateTime<Utc>,
    pub conductor_temp_c: f64,
    pub current_a: f64,
}

/// One row of a demo cadence replay.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoRow {
    pub time: DateTime<Utc>,
    pub kind: String,
    pub nominal_a: f64,
    pub lower_a: f64,
    pub upper_a: f64,
}

pub fn format_time(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn parse_time(s: &str, line: usize) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|t| t.with_timezone(&Utc))
        .with_context(|| format!("line {line}: bad timestamp {s:?}"))
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| anyhow!("line {line}: bad number {s:?}"))
}

fn check_header(got: &csv::StringRecord, want: &[&str]) -> Result<()> {
    let got: Vec<&str> = got.iter().collect();
    if got != want {
        return Err(anyhow!("expected header {want:?}, got {got:?}"));
    }
    Ok(())
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(input)
}

pub fn write_assess_csv<W: Write>(rows: &[AssessRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ASSESS_HEADER)?;
    for r in rows {
        w.write_record(&[
            format_time(r.time),
            r.nominal_a.to_string(),
            r.lower_a.to_string(),
            r.upper_a.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_assess_csv<R: Read>(input: R) -> Result<Vec<AssessRow>> {
    let mut rdr = reader(input);
    check_header(rdr.headers()?, &ASSESS_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != ASSESS_HEADER.len() {
            return Err(anyhow!("line {line}: expected {} fields", ASSESS_HEADER.len()));
        }
        out.push(AssessRow {
            time: parse_time(&rec[0], line)?,
            nominal_a: parse_f64(&rec[1], line)?,
            lower_a: parse_f64(&rec[2], line)?,
            upper_a: parse_f64(&rec[3], line)?,
        });
    }
    Ok(out)
}

pub fn write_skin_csv<W: Write>(rows: &[SkinSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SKIN_HEADER)?;
    for r in rows {
        w.write_record(&[
            format_time(r.timestamp),
            r.conductor_temp_c.to_string(),
            r.current_a.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_skin_csv<R: Read>(input: R) -> Result<Vec<SkinSample>> {
    let mut rdr = reader(input);
    check_header(rdr.headers()?, &SKIN_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != SKIN_HEADER.len() {
            return Err(anyhow!("line {line}: expected {} fields", SKIN_HEADER.len()));
        }
        out.push(SkinSample {
            timestamp: parse_time(&rec[0], line)?,
            conductor_temp_c: parse_f64(&rec[1], line)?,
            current_a: parse_f64(&rec[2], line)?,
        });
    }
    Ok(out)
}

pub fn write_error_series_csv<W: Write>(
    rows: &[(DateTime<Utc>, f64)],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ERROR_SERIES_HEADER)?;
    for (t, e) in rows {
        w.write_record(&[format_time(*t), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_error_series_csv<R: Read>(input: R) -> Result<Vec<(DateTime<Utc>, f64)>> {
    parse_time_value(input, &ERROR_SERIES_HEADER)
}

pub fn write_load_csv<W: Write>(rows: &[(DateTime<Utc>, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LOAD_HEADER)?;
    for (t, a) in rows {
        w.write_record(&[format_time(*t), a.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_load_csv<R: Read>(input: R) -> Result<Vec<(DateTime<Utc>, f64)>> {
    parse_time_value(input, &LOAD_HEADER)
}

fn parse_time_value<R: Read>(
    input: R,
    header: &[&str; 2],
) -> Result<Vec<(DateTime<Utc>, f64)>> {
    let mut rdr = reader(input);
    check_header(rdr.headers()?, header)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 2 {
            return Err(anyhow!("line {line}: expected 2 fields"));
        }
        out.push((parse_time(&rec[0], line)?, parse_f64(&rec[1], line)?));
    }
    Ok(out)
}

pub fn write_curve_csv<W: Write>(
    header: [&str; 2],
    points: &[(f64, f64)],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for (x, y) in points {
        w.write_record(&[x.to_string(), y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_curve_csv<R: Read>(header: [&str; 2], input: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = reader(input);
    check_header(rdr.headers()?, &header)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 2 {
            return Err(anyhow!("line {line}: expected 2 fields"));
        }
        out.push((parse_f64(&rec[0], line)?, parse_f64(&rec[1], line)?));
    }
    Ok(out)
}

pub fn parse_demo_csv<R: Read>(input: R) -> Result<Vec<DemoRow>> {
    let mut rdr = reader(input);
    check_header(rdr.headers()?, &ampacity_uq_service::DEMO_CSV_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 5 {
            return Err(anyhow!("line {line}: expected 5 fields"));
        }
        out.push(DemoRow {
            time: parse_time(&rec[0], line)?,
            kind: rec[1].to_string(),
            nominal_a: parse_f64(&rec[2], line)?,
            lower_a: parse_f64(&rec[3], line)?,
            upper_a: parse_f64(&rec[4], line)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn t(minute: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2019, 6, 1, 10, minute, 0).unwrap()
    }

    #[test]
    fn assess_rows_round_trip() {
        let rows = vec![
            AssessRow {
                time: t(0),
                nominal_a: 812.3456789012345,
                lower_a: 700.1,
                upper_a: 950.25,
            },
            AssessRow {
                time: t(5),
                nominal_a: 640.0,
                lower_a: 610.0,
                upper_a: 700.0,
            },
        ];
        let mut buf = Vec::new();
        write_assess_csv(&rows, &mut buf).unwrap();
        assert_eq!(parse_assess_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn skin_rows_round_trip() {
        let rows = vec![SkinSample {
            timestamp: t(1),
            conductor_temp_c: 43.21,
            current_a: 412.0,
        }];
        let mut buf = Vec::new();
        write_skin_csv(&rows, &mut buf).unwrap();
        assert_eq!(parse_skin_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn series_and_curve_round_trip() {
        let series = vec![(t(0), -0.25), (t(5), 1.5e-3)];
        let mut buf = Vec::new();
        write_error_series_csv(&series, &mut buf).unwrap();
        assert_eq!(parse_error_series_csv(buf.as_slice()).unwrap(), series);

        let curve = vec![(100.0, 0.1), (200.0, 0.9874563210001)];
        let mut buf = Vec::new();
        write_curve_csv(DIST_CURVE_HEADER, &curve, &mut buf).unwrap();
        assert_eq!(
            parse_curve_csv(DIST_CURVE_HEADER, buf.as_slice()).unwrap(),
            curve
        );

        let load = vec![(t(2), 512.5)];
        let mut buf = Vec::new();
        write_load_csv(&load, &mut buf).unwrap();
        assert_eq!(parse_load_csv(buf.as_slice()).unwrap(), load);
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let text = "time,nominal,lower_a,upper_a\n2019-06-01T10:00:00Z,1,2,3\n";
        let err = parse_assess_csv(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("expected header"));
    }

    #[test]
    fn bad_number_names_the_line() {
        let text = "time,nominal_a,lower_a,upper_a\n2019-06-01T10:00:00Z,abc,2,3\n";
        let err = parse_assess_csv(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn demo_rows_parse() {
        let text = "time,kind,nominal_a,lower_a,upper_a\n\
                    2019-06-01T10:00:00Z,realtime,800,750,900\n\
                    2019-06-01T10:05:00Z,forecast,790,700,910\n";
        let rows = parse_demo_csv(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].kind, "realtime");
        assert_eq!(rows[1].upper_a, 910.0);
    }
}
