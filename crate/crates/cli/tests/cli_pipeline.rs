mod common;

use std::fs;

use ampacity_uq_cli::commands::fit::KsReport;
use ampacity_uq_cli::tables::{
    parse_assess_csv, parse_curve_csv, parse_demo_csv, write_load_csv, CDF_EXPORT_HEADER,
    DIST_CURVE_HEADER,
};
use common::{exit_code, fixture, http_request, path_str, read_json, run, run_ok, ServeGuard};

#[test]
fn pipeline_fit_outputs() {
    let fx = fixture();
    assert!(fx.measured_csv().exists());
    assert!(fx.forecast_csv().exists());
    assert!(fx.db_path().exists());

    let mut dist_files = 0;
    for entry in fs::read_dir(fx.dists_dir()).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name.starts_with("dist_") && name.ends_with(".json") {
            dist_files += 1;
        }
    }
    assert_eq!(dist_files, 12, "four variables times three horizons");

    let report: KsReport =
        serde_json::from_value(read_json(&fx.dists_dir().join("ks_report.json"))).unwrap();
    assert_eq!(report.schema_version, 1);
    assert_eq!(report.seed, Some(1));
    assert_eq!(report.normality.len(), 12);
    assert!(report.pairs > 0);
    for row in &report.normality {
        assert!(row.samples >= 20, "{}/{}: {}", row.variable, row.horizon, row.samples);
        assert!(row.p_value >= 0.0 && row.p_value <= 1.0);
    }
    let vars: Vec<_> = report
        .horizon_separation
        .iter()
        .map(|r| r.variable.as_str())
        .collect();
    assert!(vars.contains(&"temperature") && vars.contains(&"wind_direction"));
}

#[test]
fn db_info_and_export() {
    let fx = fixture();
    let info: serde_json::Value =
        serde_json::from_str(&run_ok(&["db-info", "--db", &path_str(&fx.db_path())])).unwrap();
    assert_eq!(info["entries"], 4);
    assert_eq!(info["grid_points"], 1024);
    assert_eq!(info["checksum"].as_str().unwrap().len(), 16);
    assert_eq!(info["manifest"]["seed"], 7);

    let out = fx.scratch("export");
    run_ok(&[
        "db-export",
        "--db",
        &path_str(&fx.db_path()),
        "--horizon",
        "nowcast",
        "--conductor",
        "243-AL1/39",
        "--wind-speed",
        "0.5",
        "--wind-angle",
        "90",
        "--emissivity",
        "0.5",
        "--out",
        &path_str(&out),
    ]);
    let curve = parse_curve_csv(
        CDF_EXPORT_HEADER,
        fs::File::open(out.join("export_cdf.csv")).unwrap(),
    )
    .unwrap();
    assert_eq!(curve.len(), 1024);
    assert!(curve.windows(2).all(|w| w[0].0 < w[1].0));
    assert!(curve.windows(2).all(|w| w[0].1 <= w[1].1));
    assert!(curve.iter().all(|&(_, c)| (0.0..=1.0).contains(&c)));
    assert!((curve.last().unwrap().1 - 1.0).abs() < 1e-9);
}

#[test]
fn assess_single_query() {
    let fx = fixture();
    let db = path_str(&fx.db_path());
    let base = [
        "assess",
        "--db",
        db.as_str(),
        "--conductor",
        "243-AL1/39",
        "--horizon",
        "nowcast",
        "--emissivity",
        "0.5",
        "--temperature",
        "20",
        "--solar",
        "800",
        "--wind-speed",
        "1.0",
        "--wind-attack",
        "90",
    ];
    let v: serde_json::Value = serde_json::from_str(&run_ok(&base)).unwrap();
    assert!(v["i_th0"].as_f64().unwrap() > 0.0);
    let lower = v["lower"].as_f64().unwrap();
    let upper = v["upper"].as_f64().unwrap();
    assert!(0.0 < lower && lower <= upper);
    assert_eq!(v["confidence"], 0.95);
    assert_eq!(v["nominal_computed"], true);

    let mut with_nominal: Vec<&str> = base.to_vec();
    with_nominal.extend(["--nominal", "500", "--confidence", "0.9"]);
    let v: serde_json::Value = serde_json::from_str(&run_ok(&with_nominal)).unwrap();
    assert_eq!(v["i_th0"].as_f64().unwrap(), 500.0);
    assert_eq!(v["nominal_computed"], false);
    assert!(v["lower"].as_f64().unwrap() <= v["upper"].as_f64().unwrap());
}

#[test]
fn assess_batch_then_compare_static() {
    let fx = fixture();
    let out = fx.scratch("batch");
    let stdout = run_ok(&[
        "assess",
        "--db",
        &path_str(&fx.db_path()),
        "--conductor",
        "243-AL1/39",
        "--horizon",
        "short_term",
        "--emissivity",
        "0.5",
        "--batch",
        &path_str(&fx.measured_csv()),
        "--out",
        &path_str(&out),
    ]);
    assert!(stdout.contains("(0 skipped)"), "stdout: {stdout}");
    let rows = parse_assess_csv(fs::File::open(out.join("assess.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 7 * 288, "one row per five-minute sample");
    assert!(rows.iter().all(|r| r.lower_a <= r.upper_a && r.lower_a > 0.0));

    let cmp = fx.scratch("cmp_inf");
    run_ok(&[
        "compare-static",
        "--assessed",
        &path_str(&out.join("assess.csv")),
        "--static-ampacity",
        "inf",
        "--out",
        &path_str(&cmp),
    ]);
    let report = read_json(&cmp.join("compare_static.json"));
    assert_eq!(report["rows"], rows.len());
    assert_eq!(report["fraction_lower_below_static"], 1.0);
    assert_eq!(report["fraction_nominal_above_static"], 0.0);

    // A finite static rating plus a load series; fractions must equal a
    // direct recount over the same rows.
    let static_a = rows.iter().map(|r| r.nominal_a).sum::<f64>() / rows.len() as f64;
    let load: Vec<_> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let load = if i % 3 == 0 { r.lower_a * 1.1 } else { r.lower_a * 0.7 };
            (r.time, load)
        })
        .collect();
    let load_path = fx.scratch("cmp_load").join("load.csv");
    write_load_csv(&load, fs::File::create(&load_path).unwrap()).unwrap();
    let cmp2 = fx.scratch("cmp_finite");
    run_ok(&[
        "compare-static",
        "--assessed",
        &path_str(&out.join("assess.csv")),
        "--static-ampacity",
        &format!("{static_a}"),
        "--load",
        &path_str(&load_path),
        "--out",
        &path_str(&cmp2),
    ]);
    let report = read_json(&cmp2.join("compare_static.json"));
    let n = rows.len() as f64;
    let below = rows.iter().filter(|r| r.lower_a < static_a).count() as f64;
    let above = rows.iter().filter(|r| r.nominal_a > static_a).count() as f64;
    assert_eq!(report["fraction_lower_below_static"], below / n);
    assert_eq!(report["fraction_nominal_above_static"], above / n);
    assert_eq!(report["load_rows_matched"], rows.len());
    let exceeding = load
        .iter()
        .zip(&rows)
        .filter(|((_, l), r)| *l > r.lower_a)
        .count() as f64;
    assert_eq!(report["fraction_load_above_lower"], exceeding / n);

    let curve = parse_curve_csv(
        DIST_CURVE_HEADER,
        fs::File::open(cmp2.join("nominal_cdf.csv")).unwrap(),
    )
    .unwrap();
    assert_eq!(curve.len(), rows.len());
    assert!((curve.last().unwrap().1 - 1.0).abs() < 1e-12);
}

#[test]
fn exit_codes_by_failure_class() {
    let fx = fixture();

    // Usage errors: clap failures and missing required values.
    assert_eq!(exit_code(&run(&[])), 1);
    assert_eq!(exit_code(&run(&["generate", "--days", "two"])), 1);
    assert_eq!(exit_code(&run(&["generate", "--seed", "1", "--days", "1"])), 1);
    assert_eq!(exit_code(&run(&["no-such-command"])), 1);

    // Help and version are not failures.
    assert_eq!(exit_code(&run(&["--help"])), 0);
    assert_eq!(exit_code(&run(&["assess", "--help"])), 0);
    assert_eq!(exit_code(&run(&["--version"])), 0);

    // Data errors: missing inputs, files that do not parse, too little
    // data to fit, corrupted databases.
    let scratch = fx.scratch("exit_codes");
    let missing = path_str(&scratch.join("absent.csv"));
    let outdir = path_str(&scratch);
    assert_eq!(
        exit_code(&run(&[
            "ingest",
            "--measured",
            &missing,
            "--forecast",
            &missing,
            "--out",
            &outdir,
        ])),
        2
    );

    let day1 = scratch.join("day1");
    run_ok(&[
        "generate",
        "--seed",
        "3",
        "--days",
        "1",
        "--out",
        &path_str(&day1),
    ]);
    let out = run(&[
        "fit-errors",
        "--measured",
        &path_str(&day1.join("measured.csv")),
        "--forecast",
        &path_str(&day1.join("forecast.csv")),
        "--seed",
        "1",
        "--out",
        &path_str(&scratch.join("day1_dists")),
    ]);
    assert_eq!(exit_code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(stderr.contains("insufficient samples"), "stderr: {stderr}");

    let corrupt = scratch.join("corrupt.dtru");
    let mut bytes = fs::read(fx.db_path()).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    fs::write(&corrupt, &bytes).unwrap();
    assert_eq!(exit_code(&run(&["db-info", "--db", &path_str(&corrupt)])), 2);
    fs::write(&corrupt, b"not a database").unwrap();
    assert_eq!(exit_code(&run(&["db-info", "--db", &path_str(&corrupt)])), 2);

    // Invalid query ranges are usage errors.
    assert_eq!(
        exit_code(&run(&[
            "assess",
            "--db",
            &path_str(&fx.db_path()),
            "--conductor",
            "243-AL1/39",
            "--horizon",
            "nowcast",
            "--temperature",
            "20",
            "--solar",
            "800",
            "--wind-speed",
            "1.0",
            "--wind-attack",
            "90",
            "--nominal",
            "500",
            "--confidence",
            "1.5",
        ])),
        1
    );
    assert_eq!(
        exit_code(&run(&[
            "assess",
            "--db",
            &path_str(&fx.db_path()),
            "--conductor",
            "243-AL1/39",
            "--horizon",
            "noncast",
            "--temperature",
            "20",
            "--solar",
            "800",
            "--wind-speed",
            "1.0",
            "--wind-attack",
            "90",
        ])),
        1
    );
}

#[test]
fn serve_health_and_assess_endpoints() {
    let fx = fixture();
    let db = path_str(&fx.db_path());
    let guard = ServeGuard::spawn(&["--db", &db]);

    let (status, body) = http_request(&guard.addr, "GET", "/v1/health", None);
    assert_eq!(status, 200, "body: {body}");
    let health: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(health["status"], "ok");
    assert_eq!(health["entries"], 4);

    let req = serde_json::json!({
        "temperature_c": 20.0,
        "solar_wm2": 800.0,
        "wind_speed_ms": 1.0,
        "wind_attack_deg": 90.0,
        "horizon": "nowcast",
        "conductor": "243-AL1/39",
        "emissivity": 0.5,
        "confidence": 0.95,
    });
    let (status, body) = http_request(&guard.addr, "POST", "/v1/assess", Some(&req.to_string()));
    assert_eq!(status, 200, "body: {body}");
    let resp: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert!(resp["i_th0"].as_f64().unwrap() > 0.0);
    assert!(resp["lower"].as_f64().unwrap() <= resp["upper"].as_f64().unwrap());
    assert_eq!(resp["nominal_computed"], true);

    let mut bad = req.clone();
    bad["conductor"] = "no-such-wire".into();
    let (status, body) = http_request(&guard.addr, "POST", "/v1/assess", Some(&bad.to_string()));
    assert_eq!(status, 404, "body: {body}");

    let (status, _) = http_request(&guard.addr, "POST", "/v1/assess", Some("{not json"));
    assert!(status == 400 || status == 422, "status: {status}");

    drop(guard);
}

#[test]
fn serve_demo_cadence_replay() {
    let fx = fixture();
    let out = fx.scratch("demo");
    run_ok(&[
        "serve",
        "--db",
        &path_str(&fx.db_path()),
        "--demo-cadence",
        &path_str(&fx.measured_csv()),
        "--conductor",
        "243-AL1/39",
        "--emissivity",
        "0.5",
        "--out",
        &path_str(&out),
    ]);
    let rows = parse_demo_csv(fs::File::open(out.join("demo_cadence.csv")).unwrap()).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().any(|r| r.kind == "realtime"));
    assert!(rows.iter().any(|r| r.kind == "forecast"));
    assert!(rows.iter().all(|r| r.lower_a <= r.upper_a));
    assert!(rows.windows(2).all(|w| w[0].time <= w[1].time));
}

#[test]
fn generate_is_seed_deterministic() {
    let fx = fixture();
    let a = fx.scratch("gen_a");
    let b = fx.scratch("gen_b");
    let c = fx.scratch("gen_c");
    for (dir, seed) in [(&a, "42"), (&b, "42"), (&c, "43")] {
        run_ok(&[
            "generate",
            "--seed",
            seed,
            "--days",
            "2",
            "--out",
            &path_str(dir),
        ]);
    }
    let read = |d: &std::path::Path, f: &str| fs::read(d.join(f)).unwrap();
    assert_eq!(read(&a, "measured.csv"), read(&b, "measured.csv"));
    assert_eq!(read(&a, "forecast.csv"), read(&b, "forecast.csv"));
    assert_ne!(read(&a, "measured.csv"), read(&c, "measured.csv"));
}
