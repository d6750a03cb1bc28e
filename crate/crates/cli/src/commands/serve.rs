use std::io::Write as _;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use ampacity_uq_core::thermal::HeatBalanceModel;
use ampacity_uq_core::weather::parse_measured_csv;
use ampacity_uq_service::{run_demo_cadence, DemoConfig, ServiceState};
use clap::Args;

use crate::config::RunConfig;
use crate::fail::{need, Failure, ResultExt};
use crate::io_util::{create, ensure_dir, open};

/// Run the HTTP assessment service, or replay a demo cadence.
#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Database file.
    #[arg(long, value_name = "FILE", env = "AMPACITY_UQ_DB")]
    pub db: Option<PathBuf>,
    /// Listen address (default 127.0.0.1:8080).
    #[arg(long, value_name = "ADDR:PORT", env = "AMPACITY_UQ_LISTEN")]
    pub listen: Option<String>,
    /// Measured weather CSV to replay on the live cadence, then exit.
    #[arg(long, value_name = "CSV", env = "AMPACITY_UQ_DEMO_CADENCE")]
    pub demo_cadence: Option<PathBuf>,
    /// Conductor catalog JSON; the built-in catalog when omitted.
    #[arg(long, value_name = "FILE", env = "AMPACITY_UQ_CATALOG")]
    pub catalog: Option<PathBuf>,
    /// Conductor name (demo mode).
    #[arg(long, env = "AMPACITY_UQ_CONDUCTOR")]
    pub conductor: Option<String>,
    /// Conductor emissivity; the catalog value when omitted (demo mode).
    #[arg(long, env = "AMPACITY_UQ_EMISSIVITY")]
    pub emissivity: Option<f64>,
    /// Confidence level (demo mode, default 0.95).
    #[arg(long, env = "AMPACITY_UQ_CONFIDENCE")]
    pub confidence: Option<f64>,
    /// Line azimuth, deg (demo mode, default 0).
    #[arg(long, env = "AMPACITY_UQ_LINE_AZIMUTH")]
    pub line_azimuth: Option<f64>,
    /// Directory receiving demo_cadence.csv (demo mode).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

pub fn run(args: ServeArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let db = super::load_db(args.db.or_else(|| cfg.db.clone()))?;
    let catalog = super::load_catalog(args.catalog.or_else(|| cfg.catalog.clone()))?;
    let state = ServiceState::new(
        Some(Arc::new(db)),
        catalog.clone(),
        HeatBalanceModel::default(),
    );

    if let Some(demo_path) = args.demo_cadence {
        let conductor = need(
            "conductor",
            args.conductor.or_else(|| cfg.conductor.clone()),
        )?;
        let emissivity = match args.emissivity.or(cfg.emissivity) {
            Some(e) => e,
            None => {
                catalog
                    .get(&conductor)
                    .or_data("conductor not in catalog; pass --emissivity")?
                    .emissivity
            }
        };
        let demo_cfg = DemoConfig {
            conductor,
            emissivity,
            confidence: args.confidence.or(cfg.confidence).unwrap_or(0.95),
            line_azimuth_deg: args.line_azimuth.or(cfg.line_azimuth_deg).unwrap_or(0.0),
        };
        let measured = parse_measured_csv(open(&demo_path)?)
            .or_data(&format!("parsing {}", demo_path.display()))?;
        let out = need("out", args.out.or_else(|| cfg.out.clone()))?;
        ensure_dir(&out)?;
        let csv_path = out.join("demo_cadence.csv");
        let summary = run_demo_cadence(&state, &measured, &demo_cfg, create(&csv_path)?)
            .or_data("running demo cadence")?;
        println!(
            "wrote {} realtime and {} forecast rows to {}",
            summary.realtime_rows,
            summary.forecast_rows,
            csv_path.display()
        );
        return Ok(());
    }

    let listen = args
        .listen
        .unwrap_or_else(|| "127.0.0.1:8080".to_owned());
    let addr: SocketAddr = listen.parse().or_usage("parsing --listen")?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .or_internal("starting async runtime")?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .or_data(&format!("binding {addr}"))?;
        let local = listener.local_addr().or_internal("reading local address")?;
        println!("listening on http://{local}");
        std::io::stdout().flush().ok();
        ampacity_uq_service::serve(listener, Arc::new(state), async {
            tokio::signal::ctrl_c().await.ok();
        })
        .await
        .or_internal("server stopped")
    })
}
