//! HTTP front-end for ampacity uncertainty queries.
//!
//! Two endpoints over a database loaded at startup: `POST /v1/assess`
//! answers one uncertainty query, `GET /v1/health` reports the loaded
//! database. Responses for identical requests are byte-identical; the
//! handler wall time travels in the `x-assess-micros` header so the
//! body stays deterministic.

use std::future::Future;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::{HeaderName, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{Duration, SecondsFormat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use ampacity_uq_core::db::{ClampFlags, DbError, DistributionDb};
use ampacity_uq_core::rt::{assess, RtError, UncertaintyQuery};
use ampacity_uq_core::thermal::{
    wind_attack_angle, AmbientConditions, ConductorCatalog, HeatBalanceModel, ThermalError,
};
use ampacity_uq_core::weather::{HorizonClass, WeatherError, WeatherSample};

pub const TIMING_HEADER: &str = "x-assess-micros";

/// Shared read-only state behind the router.
pub struct ServiceState {
    db: Option<LoadedDb>,
    catalog: ConductorCatalog,
    model: HeatBalanceModel,
    started: Instant,
}

struct LoadedDb {
    db: Arc<DistributionDb>,
    fingerprint: String,
}

impl ServiceState {
    pub fn new(
        db: Option<Arc<DistributionDb>>,
        catalog: ConductorCatalog,
        model: HeatBalanceModel,
    ) -> Self {
        let db = db.map(|db| LoadedDb {
            fingerprint: format!("{:016x}", db.file_checksum()),
            db,
        });
        ServiceState {
            db,
            catalog,
            model,
            started: Instant::now(),
        }
    }

    pub fn db(&self) -> Option<&Arc<DistributionDb>> {
        self.db.as_ref().map(|l| &l.db)
    }
}

/// Wire form of one query. `nominal_ampacity` may be omitted; the
/// service then computes it from the thermal model and says so in the
/// response.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssessRequest {
    pub temperature_c: f64,
    pub solar_wm2: f64,
    pub wind_speed_ms: f64,
    pub wind_attack_deg: f64,
    pub horizon: HorizonClass,
    pub conductor: String,
    pub emissivity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_ampacity: Option<f64>,
    pub confidence: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssessResponse {
    pub i_th0: f64,
    pub lower: f64,
    pub upper: f64,
    pub confidence: f64,
    pub clamp_flags: ClampFlags,
    /// True when the service computed the nominal ampacity itself.
    pub nominal_computed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    /// Hex of the database file checksum.
    pub fingerprint: String,
    pub entries: usize,
    pub uptime_seconds: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: String) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message,
        }
    }

    fn not_found(what: String) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            message: what,
        }
    }

    fn unavailable() -> Self {
        ApiError {
            status: StatusCode::SERVICE_UNAVAILABLE,
            message: "database not loaded".to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(ErrorBody {
                error: self.message,
            }),
        )
            .into_response()
    }
}

fn map_rt_error(e: RtError) -> ApiError {
    match e {
        RtError::InvalidQuery(m) => ApiError::bad_request(m),
        RtError::Db(DbError::UnknownConductor(c)) => {
            ApiError::not_found(format!("conductor `{c}` not in database"))
        }
        RtError::Db(DbError::UnknownHorizon(h)) => {
            ApiError::not_found(format!("horizon `{h}` not in database"))
        }
        other => ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: other.to_string(),
        },
    }
}

fn handle_assess(
    state: &ServiceState,
    payload: Result<Json<AssessRequest>, JsonRejection>,
) -> Result<AssessResponse, ApiError> {
    let Json(req) = payload.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let Some(loaded) = &state.db else {
        return Err(ApiError::unavailable());
    };
    let ambient = AmbientConditions {
        temperature_c: req.temperature_c,
        solar_wm2: req.solar_wm2,
        wind_speed_ms: req.wind_speed_ms,
        wind_attack_deg: req.wind_attack_deg,
    };
    let (nominal, computed) = match req.nominal_ampacity {
        Some(v) => (v, false),
        None => {
            let spec = state.catalog.get(&req.conductor).map_err(|_| {
                ApiError::not_found(format!("conductor `{}` not in catalog", req.conductor))
            })?;
            ambient
                .validate()
                .map_err(|e| ApiError::bad_request(e.to_string()))?;
            let i_th0 = state
                .model
                .ampacity(&ambient, &spec.with_emissivity(req.emissivity));
            (i_th0, true)
        }
    };
    let query = UncertaintyQuery {
        ambient,
        horizon: req.horizon,
        conductor: req.conductor,
        emissivity: req.emissivity,
        nominal_ampacity: nominal,
        confidence: req.confidence,
    };
    let result = assess(&loaded.db, &query).map_err(map_rt_error)?;
    Ok(AssessResponse {
        i_th0: result.i_th0,
        lower: result.lower,
        upper: result.upper,
        confidence: result.confidence,
        clamp_flags: result.clamp_flags,
        nominal_computed: computed,
    })
}

async fn assess_handler(
    State(state): State<Arc<ServiceState>>,
    payload: Result<Json<AssessRequest>, JsonRejection>,
) -> Response {
    let t0 = Instant::now();
    let result = handle_assess(&state, payload);
    let micros = t0.elapsed().as_micros() as u64;
    let mut response = match result {
        Ok(body) => (StatusCode::OK, Json(body)).into_response(),
        Err(e) => e.into_response(),
    };
    response.headers_mut().insert(
        HeaderName::from_static(TIMING_HEADER),
        HeaderValue::from(micros),
    );
    response
}

async fn health_handler(State(state): State<Arc<ServiceState>>) -> Response {
    match &state.db {
        Some(loaded) => (
            StatusCode::OK,
            Json(HealthResponse {
                status: "ok".to_string(),
                fingerprint: loaded.fingerprint.clone(),
                entries: loaded.db.entry_count(),
                uptime_seconds: state.started.elapsed().as_secs(),
            }),
        )
            .into_response(),
        None => ApiError::unavailable().into_response(),
    }
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/v1/assess", post(assess_handler))
        .route("/v1/health", get(health_handler))
        .with_state(state)
}

/// Serves until `shutdown` resolves; in-flight requests complete.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<ServiceState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

pub const DEMO_CSV_HEADER: [&str; 5] = ["time", "kind", "nominal_a", "lower_a", "upper_a"];

/// Replay settings for [`run_demo_cadence`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoConfig {
    pub conductor: String,
    pub emissivity: f64,
    pub confidence: f64,
    /// Line azimuth for converting wind direction to attack angle.
    pub line_azimuth_deg: f64,
}

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("database not loaded")]
    NoDatabase,
    #[error("no weather rows with all four variables present")]
    EmptyWeather,
    #[error(transparent)]
    Weather(#[from] WeatherError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
    #[error(transparent)]
    Rt(#[from] RtError),
    #[error("csv error")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DemoSummary {
    pub realtime_rows: usize,
    pub forecast_rows: usize,
}

/// Replays a measured series on a simulated clock: one nowcast query
/// per minute, plus a short-term forecast query every 5 minutes, the
/// cadence of a live control-room feed. Emits `time,kind,nominal_a,lower_a,upper_a`
/// rows ready for interval plots.
pub fn run_demo_cadence<W: Write>(
    state: &ServiceState,
    measured: &[WeatherSample],
    cfg: &DemoConfig,
    out: W,
) -> Result<DemoSummary, DemoError> {
    let Some(loaded) = &state.db else {
        return Err(DemoError::NoDatabase);
    };
    let spec = state
        .catalog
        .get(&cfg.conductor)?
        .with_emissivity(cfg.emissivity);
    let usable: Vec<&WeatherSample> = measured
        .iter()
        .filter(|s| {
            s.temperature.is_some()
                && s.solar_irradiance.is_some()
                && s.wind_speed.is_some()
                && s.wind_direction.is_some()
        })
        .collect();
    let (Some(first), Some(last)) = (usable.first(), usable.last()) else {
        return Err(DemoError::EmptyWeather);
    };

    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(DEMO_CSV_HEADER)?;
    let mut summary = DemoSummary {
        realtime_rows: 0,
        forecast_rows: 0,
    };
    let mut idx = 0usize;
    let mut minute = 0i64;
    loop {
        let t = first.timestamp + Duration::minutes(minute);
        if t > last.timestamp {
            break;
        }
        while idx + 1 < usable.len() && usable[idx + 1].timestamp <= t {
            idx += 1;
        }
        let s = usable[idx];
        let ambient = AmbientConditions {
            temperature_c: s.temperature.unwrap(),
            solar_wm2: s.solar_irradiance.unwrap(),
            wind_speed_ms: s.wind_speed.unwrap(),
            wind_attack_deg: wind_attack_angle(cfg.line_azimuth_deg, s.wind_direction.unwrap()),
        };
        let nominal = state.model.ampacity(&ambient, &spec);
        let mut shots = vec![("realtime", HorizonClass::Nowcast)];
        if minute % 5 == 0 {
            shots.push(("forecast", HorizonClass::ShortTerm));
        }
        for (kind, horizon) in shots {
            let query = UncertaintyQuery {
                ambient,
                horizon,
                conductor: cfg.conductor.clone(),
                emissivity: cfg.emissivity,
                nominal_ampacity: nominal,
                confidence: cfg.confidence,
            };
            let result = assess(&loaded.db, &query)?;
            wtr.write_record(&[
                t.to_rfc3339_opts(SecondsFormat::Secs, true),
                kind.to_string(),
                format!("{nominal}"),
                format!("{}", result.lower),
                format!("{}", result.upper),
            ])?;
            match kind {
                "realtime" => summary.realtime_rows += 1,
                _ => summary.forecast_rows += 1,
            }
        }
        minute += 1;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(summary)
}
