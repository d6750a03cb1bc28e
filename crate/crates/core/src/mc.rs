//! Monte Carlo propagation of weather uncertainty through the heat
//! balance.
//!
//! Each trial draws a weather 4-tuple by inverse transform from the
//! truncated error distributions, computes ampacity, and normalizes by
//! the nominal ampacity at the forecast point. The resulting empirical
//! distribution is mapped onto a fixed 1024-point grid so distributions
//! from different operating points can be averaged and interpolated
//! pointwise. [`build_database`] sweeps the full operating-point grid.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdf::{CdfError, DiscreteCdf};
use crate::db::{BuildManifest, DatabaseAxes, DistributionDb};
use crate::stats::{offset_truncate, ErrorDistribution, StatsError, TruncatedOffsetDistribution};
use crate::thermal::{
    wind_attack_angle, AmbientConditions, ConductorCatalog, ConductorSpec, HeatBalanceModel,
    ThermalError, SOLAR_CONSTANT_WM2,
};
use crate::weather::{HorizonClass, WeatherVariable};

/// Nodes in every normalized-ampacity grid.
pub const GRID_POINTS: usize = 1024;

/// Smallest allowed upper grid edge, in normalized-ampacity units.
pub const MIN_GRID_R_MAX: f64 = 4.0;

/// Headroom factor above the largest observed sample when it exceeds
/// [`MIN_GRID_R_MAX`].
pub const GRID_HEADROOM: f64 = 1.05;

/// Smallest permitted trial count per distribution.
pub const MIN_MC_SAMPLES: u64 = 1_000;

/// Default trials per (T, S) member for production database builds.
pub const DEFAULT_PRODUCTION_SAMPLES: u64 = 100_000;

/// Default trials per (T, S) member for test builds.
pub const DEFAULT_TEST_SAMPLES: u64 = 10_000;

/// Default ambient-temperature sub-grid, °C.
pub const DEFAULT_T_GRID_C: [f64; 3] = [0.0, 15.0, 30.0];

/// Default solar-irradiance sub-grid, W/m².
pub const DEFAULT_S_GRID_WM2: [f64; 3] = [100.0, 500.0, 1000.0];

#[derive(Debug, Error)]
pub enum McError {
    #[error("tail probability {0} outside (0, 1]")]
    BadTailProbability(f64),
    #[error("{m} trials requested, minimum is {min}")]
    TooFewTrials { m: u64, min: u64 },
    #[error("operating point lacks inner-grid {0}")]
    MissingInnerPoint(&'static str),
    #[error("nominal ampacity {i_th0} A cannot normalize a distribution")]
    DegenerateNominal { i_th0: f64 },
    #[error("normalized samples reach down to {min}, below the first grid node")]
    DegenerateSamples { min: f64 },
    #[error("normalized-ampacity grid must be positive, starts at {0}")]
    NonPositiveGrid(f64),
    #[error("temperature/solar averaging grid is empty")]
    EmptyAveragingGrid,
    #[error("distribution is {found}, expected {expected}")]
    MismatchedDistribution { expected: String, found: String },
    #[error("no error distributions for horizon {0}")]
    MissingHorizon(HorizonClass),
    #[error("horizon {horizon} lacks a {variable} error distribution")]
    IncompleteHorizon {
        horizon: HorizonClass,
        variable: WeatherVariable,
    },
    #[error("{} database entries failed; first: {}", failures.len(), failures[0])]
    BuildFailures { failures: Vec<String> },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
    #[error(transparent)]
    Cdf(#[from] CdfError),
    #[error(transparent)]
    Db(#[from] Box<crate::db::DbError>),
}

impl From<crate::db::DbError> for McError {
    fn from(e: crate::db::DbError) -> Self {
        McError::Db(Box::new(e))
    }
}

/// Trial count satisfying the coverage rule M ≥ 10³/p for tail
/// probability `p`.
pub fn required_samples(p: f64) -> Result<u64, McError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(McError::BadTailProbability(p));
    }
    Ok((1e3 / p).ceil() as u64)
}

/// Deterministic child seed for stream `stream` under `root`; the same
/// pair always yields the same child regardless of evaluation order.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    let mut z = root ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One cell of the operating-point grid, plus the inner (T, S) values
/// when a single member rather than an average is meant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub horizon: HorizonClass,
    pub wind_speed_ms: f64,
    pub wind_angle_deg: f64,
    pub conductor: String,
    pub emissivity: f64,
    pub temperature_c: Option<f64>,
    pub solar_wm2: Option<f64>,
}

/// Per-variable sampling law for one MC run.
#[derive(Debug, Clone)]
pub enum InputDistribution {
    /// Degenerate input: every draw returns the value.
    PointMass(f64),
    /// Truncated, offset kernel-density fit.
    Kde(TruncatedOffsetDistribution),
}

impl InputDistribution {
    pub fn sample(&self, u: f64) -> Result<f64, StatsError> {
        match self {
            InputDistribution::PointMass(v) => {
                if !(0.0..1.0).contains(&u) {
                    return Err(StatsError::BadLevel(u));
                }
                Ok(*v)
            }
            InputDistribution::Kde(dist) => dist.sample(u),
        }
    }
}

/// The four sampling laws feeding one MC run.
#[derive(Debug, Clone)]
pub struct WeatherInputs {
    pub temperature: InputDistribution,
    pub solar: InputDistribution,
    pub wind_speed: InputDistribution,
    pub wind_direction: InputDistribution,
}

/// Fitted error distributions for the four variables at one horizon.
#[derive(Debug, Clone)]
pub struct ErrorSet {
    pub temperature: Arc<ErrorDistribution>,
    pub solar: Arc<ErrorDistribution>,
    pub wind_speed: Arc<ErrorDistribution>,
    pub wind_direction: Arc<ErrorDistribution>,
}

impl ErrorSet {
    fn slot(&self, variable: WeatherVariable) -> &Arc<ErrorDistribution> {
        match variable {
            WeatherVariable::Temperature => &self.temperature,
            WeatherVariable::Solar => &self.solar,
            WeatherVariable::WindSpeed => &self.wind_speed,
            WeatherVariable::WindDirection => &self.wind_direction,
        }
    }

    fn check(&self, horizon: HorizonClass) -> Result<(), McError> {
        for variable in WeatherVariable::ALL {
            let dist = self.slot(variable);
            if dist.variable() != variable || dist.horizon() != horizon {
                return Err(McError::MismatchedDistribution {
                    expected: format!("{horizon}/{variable}"),
                    found: format!("{}/{}", dist.horizon(), dist.variable()),
                });
            }
        }
        Ok(())
    }
}

/// Error distributions for every horizon a build will touch.
#[derive(Debug, Clone, Default)]
pub struct ErrorLibrary {
    sets: BTreeMap<HorizonClass, ErrorSet>,
}

impl ErrorLibrary {
    pub fn new() -> ErrorLibrary {
        ErrorLibrary::default()
    }

    pub fn insert(&mut self, horizon: HorizonClass, set: ErrorSet) -> Result<(), McError> {
        set.check(horizon)?;
        self.sets.insert(horizon, set);
        Ok(())
    }

    pub fn get(&self, horizon: HorizonClass) -> Result<&ErrorSet, McError> {
        self.sets
            .get(&horizon)
            .ok_or(McError::MissingHorizon(horizon))
    }

    pub fn horizons(&self) -> Vec<HorizonClass> {
        self.sets.keys().copied().collect()
    }

    /// Groups fitted distributions by horizon; every horizon present
    /// must come with all four variables.
    pub fn from_distributions(
        dists: Vec<ErrorDistribution>,
    ) -> Result<ErrorLibrary, McError> {
        let mut by_horizon: BTreeMap<HorizonClass, BTreeMap<u8, Arc<ErrorDistribution>>> =
            BTreeMap::new();
        for dist in dists {
            let slot = WeatherVariable::ALL
                .iter()
                .position(|v| *v == dist.variable())
                .expect("variable is one of the four") as u8;
            by_horizon
                .entry(dist.horizon())
                .or_default()
                .insert(slot, Arc::new(dist));
        }
        let mut lib = ErrorLibrary::new();
        for (horizon, mut slots) in by_horizon {
            for (i, variable) in WeatherVariable::ALL.iter().enumerate() {
                if !slots.contains_key(&(i as u8)) {
                    return Err(McError::IncompleteHorizon {
                        horizon,
                        variable: *variable,
                    });
                }
            }
            let set = ErrorSet {
                temperature: slots.remove(&0).expect("checked"),
                solar: slots.remove(&1).expect("checked"),
                wind_speed: slots.remove(&2).expect("checked"),
                wind_direction: slots.remove(&3).expect("checked"),
            };
            lib.insert(horizon, set)?;
        }
        Ok(lib)
    }

    /// SHA-256 fingerprints keyed `horizon/variable`, for manifests.
    pub fn fingerprints(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for (horizon, set) in &self.sets {
            for variable in WeatherVariable::ALL {
                out.insert(
                    format!("{horizon}/{variable}"),
                    set.slot(variable).fingerprint(),
                );
            }
        }
        out
    }
}

/// Builds the four sampling laws around the forecast point
/// (T₀, S₀, v₀, φ₀). Solar with a zero prediction is sampled as the
/// constant 0; wind speed is conditioned on [0, ∞), solar on
/// [0, solar constant]; temperature and direction are unbounded.
pub fn weather_inputs(
    set: &ErrorSet,
    t0: f64,
    s0: f64,
    v0: f64,
    phi0: f64,
) -> Result<WeatherInputs, McError> {
    let unbounded = (f64::NEG_INFINITY, f64::INFINITY);
    let solar = if s0 > 0.0 {
        InputDistribution::Kde(offset_truncate(
            set.solar.clone(),
            s0,
            (0.0, SOLAR_CONSTANT_WM2),
        )?)
    } else {
        InputDistribution::PointMass(0.0)
    };
    Ok(WeatherInputs {
        temperature: InputDistribution::Kde(offset_truncate(
            set.temperature.clone(),
            t0,
            unbounded,
        )?),
        solar,
        wind_speed: InputDistribution::Kde(offset_truncate(
            set.wind_speed.clone(),
            v0,
            (0.0, f64::INFINITY),
        )?),
        wind_direction: InputDistribution::Kde(offset_truncate(
            set.wind_direction.clone(),
            phi0,
            unbounded,
        )?),
    })
}

/// Provenance attached to every produced distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfMeta {
    pub point: OperatingPoint,
    pub samples: u64,
    pub seed: u64,
}

/// A normalized-ampacity CDF on a strictly increasing positive grid,
/// starting at exactly 0 and ending at exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAmpacityCdf {
    inner: DiscreteCdf,
    meta: CdfMeta,
}

impl NormalizedAmpacityCdf {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, meta: CdfMeta) -> Result<Self, McError> {
        if let Some(&first) = grid.first() {
            if !(first > 0.0) {
                return Err(McError::NonPositiveGrid(first));
            }
        }
        let inner = DiscreteCdf::new_normalized(grid, values, 1e-9)?;
        Ok(NormalizedAmpacityCdf { inner, meta })
    }

    pub fn grid(&self) -> &[f64] {
        self.inner.xs()
    }

    pub fn values(&self) -> &[f64] {
        self.inner.ps()
    }

    pub fn meta(&self) -> &CdfMeta {
        &self.meta
    }

    pub fn r_max(&self) -> f64 {
        *self.inner.xs().last().expect("grid is nonempty")
    }

    /// CDF value at normalized ampacity `r`.
    pub fn eval(&self, r: f64) -> f64 {
        self.inner.eval(r)
    }

    /// Linearly interpolated inverse CDF.
    pub fn quantile(&self, q: f64) -> Result<f64, CdfError> {
        self.inner.quantile(q)
    }
}

/// Piecewise-linear empirical CDF through the order statistics,
/// 0 below the smallest sample.
fn empirical_cdf_at(sorted: &[f64], x: f64) -> f64 {
    let n = sorted.len();
    let k = sorted.partition_point(|s| *s <= x);
    if k == 0 {
        return 0.0;
    }
    if k == n {
        return 1.0;
    }
    let x0 = sorted[k - 1];
    let x1 = sorted[k];
    let f0 = k as f64 / n as f64;
    if x1 <= x0 {
        return f0;
    }
    let f1 = (k + 1) as f64 / n as f64;
    f0 + (f1 - f0) * (x - x0) / (x1 - x0)
}

fn nominal_ambient(op: &OperatingPoint) -> Result<AmbientConditions, McError> {
    let t0 = op
        .temperature_c
        .ok_or(McError::MissingInnerPoint("temperature"))?;
    let s0 = op
        .solar_wm2
        .ok_or(McError::MissingInnerPoint("solar irradiance"))?;
    Ok(AmbientConditions {
        temperature_c: t0,
        solar_wm2: s0,
        wind_speed_ms: op.wind_speed_ms,
        wind_attack_deg: op.wind_angle_deg,
    })
}

/// Draws `m` normalized-ampacity samples for one (T, S) member, in
/// draw order. The raw samples back the gridded distribution and the
/// oracle tests against it.
pub fn mc_normalized_samples(
    model: &HeatBalanceModel,
    spec: &ConductorSpec,
    op: &OperatingPoint,
    inputs: &WeatherInputs,
    m: u64,
    seed: u64,
) -> Result<Vec<f64>, McError> {
    if m < MIN_MC_SAMPLES {
        return Err(McError::TooFewTrials {
            m,
            min: MIN_MC_SAMPLES,
        });
    }
    let amb0 = nominal_ambient(op)?;
    let i_th0 = model.ampacity(&amb0, spec);
    if !(i_th0 > 0.0) {
        return Err(McError::DegenerateNominal { i_th0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(m as usize);
    for _ in 0..m {
        let t = inputs.temperature.sample(rng.gen::<f64>())?;
        let s = inputs.solar.sample(rng.gen::<f64>())?;
        let v = inputs.wind_speed.sample(rng.gen::<f64>())?;
        let dir = inputs.wind_direction.sample(rng.gen::<f64>())?;
        let amb = AmbientConditions {
            temperature_c: t,
            solar_wm2: s,
            wind_speed_ms: v,
            wind_attack_deg: wind_attack_angle(0.0, dir),
        };
        samples.push(model.ampacity(&amb, spec) / i_th0);
    }
    Ok(samples)
}

fn grid_for_max(max_sample: f64) -> Vec<f64> {
    let r_max = MIN_GRID_R_MAX.max(max_sample * GRID_HEADROOM);
    (1..=GRID_POINTS)
        .map(|i| i as f64 * r_max / GRID_POINTS as f64)
        .collect()
}

fn grid_distribution(
    mut samples: Vec<f64>,
    meta: CdfMeta,
) -> Result<NormalizedAmpacityCdf, McError> {
    samples.sort_unstable_by(f64::total_cmp);
    let max = *samples.last().expect("samples are nonempty");
    let grid = grid_for_max(max);
    if samples[0] <= grid[0] {
        return Err(McError::DegenerateSamples { min: samples[0] });
    }
    let values: Vec<f64> = grid.iter().map(|&g| empirical_cdf_at(&samples, g)).collect();
    NormalizedAmpacityCdf::new(grid, values, meta)
}

/// MC distribution of normalized ampacity at one fully specified
/// operating point; deterministic for a fixed seed.
pub fn mc_normalized_distribution(
    model: &HeatBalanceModel,
    spec: &ConductorSpec,
    op: &OperatingPoint,
    inputs: &WeatherInputs,
    m: u64,
    seed: u64,
) -> Result<NormalizedAmpacityCdf, McError> {
    let samples = mc_normalized_samples(model, spec, op, inputs, m, seed)?;
    grid_distribution(
        samples,
        CdfMeta {
            point: op.clone(),
            samples: m,
            seed,
        },
    )
}

fn member_seed(root: u64, t: f64, s: f64) -> u64 {
    derive_seed(derive_seed(root, t.to_bits()), s.to_bits())
}

/// Pointwise mean of member CDFs over the T×S sub-grid, on a shared
/// grid spanning the widest member. Member seeds derive from the value
/// pair, so identical (T, S) members are bitwise identical.
pub fn average_over_ts_grid(
    model: &HeatBalanceModel,
    spec: &ConductorSpec,
    op: &OperatingPoint,
    t_grid: &[f64],
    s_grid: &[f64],
    set: &ErrorSet,
    m: u64,
    seed: u64,
) -> Result<NormalizedAmpacityCdf, McError> {
    if t_grid.is_empty() || s_grid.is_empty() {
        return Err(McError::EmptyAveragingGrid);
    }
    let points: Vec<(f64, f64)> = t_grid
        .iter()
        .flat_map(|&t| s_grid.iter().map(move |&s| (t, s)))
        .collect();
    let members: Vec<NormalizedAmpacityCdf> = points
        .par_iter()
        .map(|&(t, s)| {
            let member_op = OperatingPoint {
                temperature_c: Some(t),
                solar_wm2: Some(s),
                ..op.clone()
            };
            let inputs = weather_inputs(set, t, s, op.wind_speed_ms, op.wind_angle_deg)?;
            mc_normalized_distribution(model, spec, &member_op, &inputs, m, member_seed(seed, t, s))
        })
        .collect::<Result<_, _>>()?;
    average_members(&members, op.clone(), m, seed)
}

/// Pointwise CDF mean on a grid spanning the widest member.
fn average_members(
    members: &[NormalizedAmpacityCdf],
    point: OperatingPoint,
    m: u64,
    seed: u64,
) -> Result<NormalizedAmpacityCdf, McError> {
    let r_max = members.iter().map(|c| c.r_max()).fold(0.0, f64::max);
    let grid: Vec<f64> = (1..=GRID_POINTS)
        .map(|i| i as f64 * r_max / GRID_POINTS as f64)
        .collect();
    let mut acc = vec![0.0f64; GRID_POINTS];
    for member in members {
        for (a, &g) in acc.iter_mut().zip(&grid) {
            *a += member.eval(g);
        }
    }
    let n = members.len() as f64;
    for a in &mut acc {
        *a /= n;
    }
    NormalizedAmpacityCdf::new(grid, acc, CdfMeta { point, samples: m, seed })
}

/// Knobs for a full database build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub t_grid_c: Vec<f64>,
    pub s_grid_wm2: Vec<f64>,
    pub samples_per_member: u64,
    pub seed: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            t_grid_c: DEFAULT_T_GRID_C.to_vec(),
            s_grid_wm2: DEFAULT_S_GRID_WM2.to_vec(),
            samples_per_member: DEFAULT_PRODUCTION_SAMPLES,
            seed: 0,
        }
    }
}

/// Sweeps every axis combination, averages each over the T×S sub-grid,
/// and assembles the result onto one shared grid. Entry seeds derive
/// from (root seed, entry index), so the build is reproducible and
/// order-independent. All failures are gathered before erroring so one
/// bad cell does not hide the rest.
pub fn build_database(
    model: &HeatBalanceModel,
    catalog: &ConductorCatalog,
    axes: &DatabaseAxes,
    errors: &ErrorLibrary,
    opts: &BuildOptions,
) -> Result<DistributionDb, McError> {
    axes.validate()?;
    for name in &axes.conductors {
        catalog.get(name)?;
    }
    for horizon in &axes.horizons {
        errors.get(*horizon)?;
    }

    let total = axes.entry_count();
    let computed: Vec<Result<NormalizedAmpacityCdf, String>> = (0..total)
        .into_par_iter()
        .map(|index| {
            let coords = axes.decode_index(index);
            let spec = catalog
                .get(&axes.conductors[coords.conductor])
                .expect("checked above")
                .with_emissivity(axes.emissivities[coords.emissivity]);
            let horizon = axes.horizons[coords.horizon];
            let op = OperatingPoint {
                horizon,
                wind_speed_ms: axes.wind_speeds[coords.wind_speed],
                wind_angle_deg: axes.wind_angles[coords.wind_angle],
                conductor: spec.name.clone(),
                emissivity: spec.emissivity,
                temperature_c: None,
                solar_wm2: None,
            };
            let set = errors.get(horizon).expect("checked above");
            average_over_ts_grid(
                model,
                &spec,
                &op,
                &opts.t_grid_c,
                &opts.s_grid_wm2,
                set,
                opts.samples_per_member,
                derive_seed(opts.seed, index as u64),
            )
            .map_err(|e| format!("{}: {e}", axes.describe_index(index)))
        })
        .collect();

    let mut entries = Vec::with_capacity(total);
    let mut failures = Vec::new();
    for result in computed {
        match result {
            Ok(cdf) => entries.push(cdf),
            Err(msg) => failures.push(msg),
        }
    }
    if !failures.is_empty() {
        return Err(McError::BuildFailures { failures });
    }

    let r_max = entries.iter().map(|c| c.r_max()).fold(0.0, f64::max);
    let grid: Vec<f64> = (1..=GRID_POINTS)
        .map(|i| i as f64 * r_max / GRID_POINTS as f64)
        .collect();
    let mut flat = Vec::with_capacity(total * GRID_POINTS);
    for (index, entry) in entries.iter().enumerate() {
        let regridded: Vec<f32> = grid.iter().map(|&g| entry.eval(g) as f32).collect();
        if regridded[0] != 0.0 {
            return Err(McError::BuildFailures {
                failures: vec![format!(
                    "{}: mass below the shared grid after re-gridding",
                    axes.describe_index(index)
                )],
            });
        }
        flat.extend(regridded);
    }

    let manifest = BuildManifest {
        schema_version: crate::db::DB_FORMAT_VERSION,
        axes: axes.clone(),
        t_grid_c: opts.t_grid_c.clone(),
        s_grid_wm2: opts.s_grid_wm2.clone(),
        samples_per_member: opts.samples_per_member,
        seed: opts.seed,
        error_fingerprints: errors.fingerprints(),
        catalog_fingerprint: catalog.fingerprint(),
        build_timestamp: None,
    };
    Ok(DistributionDb::new(axes.clone(), grid, flat, manifest)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::fit_kde;
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, Normal};

    fn fitted(
        variable: WeatherVariable,
        horizon: HorizonClass,
        sigma: f64,
        seed: u64,
    ) -> Arc<ErrorDistribution> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).unwrap();
        let samples: Vec<f64> = (0..240).map(|_| normal.sample(&mut rng)).collect();
        Arc::new(fit_kde(variable, horizon, &samples).unwrap())
    }

    fn error_set(horizon: HorizonClass) -> ErrorSet {
        ErrorSet {
            temperature: fitted(WeatherVariable::Temperature, horizon, 1.4, 11),
            solar: fitted(WeatherVariable::Solar, horizon, 80.0, 12),
            wind_speed: fitted(WeatherVariable::WindSpeed, horizon, 0.8, 13),
            wind_direction: fitted(WeatherVariable::WindDirection, horizon, 30.0, 14),
        }
    }

    fn op(v0: f64, phi0: f64, t0: f64, s0: f64) -> OperatingPoint {
        OperatingPoint {
            horizon: HorizonClass::Nowcast,
            wind_speed_ms: v0,
            wind_angle_deg: phi0,
            conductor: "243-AL1/39".to_string(),
            emissivity: 0.5,
            temperature_c: Some(t0),
            solar_wm2: Some(s0),
        }
    }

    fn spec() -> ConductorSpec {
        ConductorCatalog::builtin()
            .get("243-AL1/39")
            .unwrap()
            .clone()
    }

    #[test]
    fn required_samples_follows_coverage_rule() {
        assert_eq!(required_samples(0.1).unwrap(), 10_000);
        assert_eq!(required_samples(0.01).unwrap(), 100_000);
        assert_eq!(required_samples(1.0).unwrap(), 1_000);
        assert!(required_samples(0.0).is_err());
        assert!(required_samples(-0.2).is_err());
        assert!(required_samples(1.5).is_err());
    }

    #[test]
    fn derive_seed_is_stable_and_spreads() {
        assert_eq!(derive_seed(42, 7), derive_seed(42, 7));
        assert_ne!(derive_seed(42, 7), derive_seed(42, 8));
        assert_ne!(derive_seed(41, 7), derive_seed(42, 7));
    }

    #[test]
    fn point_mass_inputs_collapse_to_unit_step() {
        let o = op(2.0, 45.0, 15.0, 500.0);
        let inputs = WeatherInputs {
            temperature: InputDistribution::PointMass(15.0),
            solar: InputDistribution::PointMass(500.0),
            wind_speed: InputDistribution::PointMass(2.0),
            wind_direction: InputDistribution::PointMass(45.0),
        };
        let model = HeatBalanceModel::default();
        let cdf =
            mc_normalized_distribution(&model, &spec(), &o, &inputs, 1_000, 99).unwrap();
        for v in cdf.values() {
            assert!(*v == 0.0 || *v == 1.0);
        }
        let jump = cdf.values().iter().position(|v| *v == 1.0).unwrap();
        let cell = cdf.grid()[1] - cdf.grid()[0];
        assert!((cdf.grid()[jump] - 1.0).abs() <= cell);
        assert!(jump > 0);
    }

    #[test]
    fn zero_wind_point_puts_all_mass_at_or_above_nominal() {
        let o = op(0.0, 45.0, 15.0, 500.0);
        let set = error_set(HorizonClass::Nowcast);
        let inputs = WeatherInputs {
            temperature: InputDistribution::PointMass(15.0),
            solar: InputDistribution::PointMass(500.0),
            wind_speed: InputDistribution::Kde(
                offset_truncate(set.wind_speed.clone(), 0.0, (0.0, f64::INFINITY)).unwrap(),
            ),
            wind_direction: InputDistribution::PointMass(45.0),
        };
        let model = HeatBalanceModel::default();
        let samples =
            mc_normalized_samples(&model, &spec(), &o, &inputs, 2_000, 7).unwrap();
        assert!(samples.iter().all(|r| *r >= 1.0));
        assert!(samples.iter().any(|r| *r > 1.01));
    }

    #[test]
    fn gridded_quantiles_match_raw_sample_quantiles() {
        let o = op(2.0, 45.0, 15.0, 500.0);
        let set = error_set(HorizonClass::Nowcast);
        let inputs = weather_inputs(&set, 15.0, 500.0, 2.0, 45.0).unwrap();
        let model = HeatBalanceModel::default();
        let m = 2_000u64;
        let seed = 4242;
        let mut raw = mc_normalized_samples(&model, &spec(), &o, &inputs, m, seed).unwrap();
        raw.sort_unstable_by(f64::total_cmp);
        let cdf = mc_normalized_distribution(&model, &spec(), &o, &inputs, m, seed).unwrap();
        let tol = 2.0 / (m as f64).sqrt();
        for q in [0.05, 0.25, 0.5, 0.75, 0.95] {
            let idx = ((q * m as f64).ceil() as usize).clamp(1, m as usize) - 1;
            let empirical = raw[idx];
            let gridded = cdf.quantile(q).unwrap();
            assert!(
                (gridded - empirical).abs() <= tol,
                "q = {q}: gridded {gridded} vs empirical {empirical}"
            );
        }
    }

    #[test]
    fn single_member_average_equals_direct_run() {
        let mut o = op(2.0, 45.0, 15.0, 500.0);
        let set = error_set(HorizonClass::Nowcast);
        let model = HeatBalanceModel::default();
        let avg = average_over_ts_grid(
            &model,
            &spec(),
            &o,
            &[15.0],
            &[500.0],
            &set,
            1_000,
            31,
        )
        .unwrap();
        let inputs = weather_inputs(&set, 15.0, 500.0, 2.0, 45.0).unwrap();
        o.temperature_c = Some(15.0);
        o.solar_wm2 = Some(500.0);
        let direct = mc_normalized_distribution(
            &model,
            &spec(),
            &o,
            &inputs,
            1_000,
            member_seed(31, 15.0, 500.0),
        )
        .unwrap();
        assert_eq!(avg.grid(), direct.grid());
        for (a, d) in avg.values().iter().zip(direct.values()) {
            assert_abs_diff_eq!(*a, *d, epsilon = 1e-12);
        }
    }

    #[test]
    fn duplicate_members_average_to_the_member() {
        let o = op(2.0, 45.0, 15.0, 500.0);
        let set = error_set(HorizonClass::Nowcast);
        let model = HeatBalanceModel::default();
        let doubled = average_over_ts_grid(
            &model,
            &spec(),
            &o,
            &[15.0],
            &[500.0, 500.0],
            &set,
            1_000,
            31,
        )
        .unwrap();
        let single =
            average_over_ts_grid(&model, &spec(), &o, &[15.0], &[500.0], &set, 1_000, 31)
                .unwrap();
        assert_eq!(doubled.grid(), single.grid());
        for (a, b) in doubled.values().iter().zip(single.values()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn average_stays_inside_member_envelope() {
        let o = op(2.0, 45.0, 15.0, 500.0);
        let set = error_set(HorizonClass::Nowcast);
        let model = HeatBalanceModel::default();
        let t_grid = [0.0, 30.0];
        let s_grid = [100.0, 1000.0];
        let avg = average_over_ts_grid(
            &model, &spec(), &o, &t_grid, &s_grid, &set, 1_000, 77,
        )
        .unwrap();
        let mut members = Vec::new();
        for &t in &t_grid {
            for &s in &s_grid {
                let mut mo = o.clone();
                mo.temperature_c = Some(t);
                mo.solar_wm2 = Some(s);
                let inputs = weather_inputs(&set, t, s, 2.0, 45.0).unwrap();
                members.push(
                    mc_normalized_distribution(
                        &model,
                        &spec(),
                        &mo,
                        &inputs,
                        1_000,
                        member_seed(77, t, s),
                    )
                    .unwrap(),
                );
            }
        }
        for (i, &g) in avg.grid().iter().enumerate() {
            let vals: Vec<f64> = members.iter().map(|m| m.eval(g)).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let a = avg.values()[i];
            assert!(a >= lo - 1e-12 && a <= hi + 1e-12);
        }
    }

    #[test]
    fn resistance_rescaling_leaves_normalized_samples_unchanged() {
        let o = op(2.0, 45.0, 15.0, 500.0);
        let set = error_set(HorizonClass::Nowcast);
        let inputs = weather_inputs(&set, 15.0, 500.0, 2.0, 45.0).unwrap();
        let model = HeatBalanceModel::default();
        let base = spec();
        let mut scaled = base.clone();
        scaled.ac_resistance_20c_ohm_per_m *= 4.0;
        let a = mc_normalized_samples(&model, &base, &o, &inputs, 1_000, 5).unwrap();
        let b = mc_normalized_samples(&model, &scaled, &o, &inputs, 1_000, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn high_wind_conductor_pair_is_statistically_indistinguishable() {
        let set = error_set(HorizonClass::Nowcast);
        let model = HeatBalanceModel::default();
        let catalog = ConductorCatalog::builtin();
        let run = |name: &str, v0: f64, seed: u64| {
            let mut o = op(v0, 90.0, 15.0, 500.0);
            o.conductor = name.to_string();
            let inputs = weather_inputs(&set, 15.0, 500.0, v0, 90.0).unwrap();
            mc_normalized_samples(
                &model,
                catalog.get(name).unwrap(),
                &o,
                &inputs,
                4_000,
                seed,
            )
            .unwrap()
        };
        let high_a = run("243-AL1/39", 10.0, 21);
        let high_b = run("490-AL1/64", 10.0, 22);
        let ks_high = crate::stats::ks_test_two_sample(&high_a, &high_b, 0.01).unwrap();
        assert!(
            !ks_high.rejected(),
            "high-wind KS rejected: D = {}, p = {}",
            ks_high.statistic,
            ks_high.p_value
        );
        let low_a = run("243-AL1/39", 0.5, 23);
        let low_b = run("490-AL1/64", 0.5, 24);
        let ks_low = crate::stats::ks_test_two_sample(&low_a, &low_b, 0.01).unwrap();
        assert!(
            ks_low.rejected(),
            "low-wind KS failed to separate: D = {}, p = {}",
            ks_low.statistic,
            ks_low.p_value
        );
    }

    #[test]
    fn same_seed_reproduces_bitwise() {
        let o = op(2.0, 45.0, 15.0, 500.0);
        let set = error_set(HorizonClass::Nowcast);
        let inputs = weather_inputs(&set, 15.0, 500.0, 2.0, 45.0).unwrap();
        let model = HeatBalanceModel::default();
        let a = mc_normalized_distribution(&model, &spec(), &o, &inputs, 1_000, 1).unwrap();
        let b = mc_normalized_distribution(&model, &spec(), &o, &inputs, 1_000, 1).unwrap();
        assert_eq!(a.grid(), b.grid());
        assert_eq!(a.values(), b.values());
        let c = mc_normalized_distribution(&model, &spec(), &o, &inputs, 1_000, 2).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn tail_quantile_spread_shrinks_with_more_trials() {
        let o = op(2.0, 45.0, 15.0, 500.0);
        let set = error_set(HorizonClass::Nowcast);
        let inputs = weather_inputs(&set, 15.0, 500.0, 2.0, 45.0).unwrap();
        let model = HeatBalanceModel::default();
        let spread = |m: u64| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for seed in 100..106 {
                let cdf =
                    mc_normalized_distribution(&model, &spec(), &o, &inputs, m, seed).unwrap();
                let q = cdf.quantile(0.05).unwrap();
                lo = lo.min(q);
                hi = hi.max(q);
            }
            hi - lo
        };
        assert!(spread(4_000) < spread(1_000));
    }

    #[test]
    fn library_requires_complete_horizons() {
        let set = error_set(HorizonClass::ShortTerm);
        let dists = vec![
            Arc::try_unwrap(set.temperature).unwrap(),
            Arc::try_unwrap(set.solar).unwrap(),
            Arc::try_unwrap(set.wind_speed).unwrap(),
        ];
        let err = ErrorLibrary::from_distributions(dists).unwrap_err();
        assert!(matches!(
            err,
            McError::IncompleteHorizon {
                horizon: HorizonClass::ShortTerm,
                variable: WeatherVariable::WindDirection,
            }
        ));
    }

    #[test]
    fn library_round_trips_and_fingerprints() {
        let mut dists = Vec::new();
        for horizon in HorizonClass::ALL {
            let set = error_set(horizon);
            for v in [
                set.temperature,
                set.solar,
                set.wind_speed,
                set.wind_direction,
            ] {
                dists.push(Arc::try_unwrap(v).unwrap());
            }
        }
        let lib = ErrorLibrary::from_distributions(dists).unwrap();
        assert_eq!(lib.horizons().len(), 3);
        let prints = lib.fingerprints();
        assert_eq!(prints.len(), 12);
        assert!(prints.contains_key("nowcast/wind_speed"));
        for v in prints.values() {
            assert_eq!(v.len(), 64);
        }
    }

    #[test]
    fn mismatched_set_is_rejected() {
        let mut set = error_set(HorizonClass::Nowcast);
        set.solar = fitted(WeatherVariable::Temperature, HorizonClass::Nowcast, 1.0, 9);
        let mut lib = ErrorLibrary::new();
        let err = lib.insert(HorizonClass::Nowcast, set).unwrap_err();
        assert!(matches!(err, McError::MismatchedDistribution { .. }));
    }

    #[test]
    fn too_few_trials_rejected() {
        let o = op(2.0, 45.0, 15.0, 500.0);
        let set = error_set(HorizonClass::Nowcast);
        let inputs = weather_inputs(&set, 15.0, 500.0, 2.0, 45.0).unwrap();
        let err = mc_normalized_distribution(
            &HeatBalanceModel::default(),
            &spec(),
            &o,
            &inputs,
            999,
            1,
        )
        .unwrap_err();
        assert!(matches!(err, McError::TooFewTrials { .. }));
    }

    #[test]
    fn degenerate_nominal_is_an_error() {
        let s = spec();
        let o = OperatingPoint {
            temperature_c: Some(s.max_temperature_c + 10.0),
            solar_wm2: Some(1200.0),
            wind_speed_ms: 0.0,
            wind_angle_deg: 0.0,
            horizon: HorizonClass::Nowcast,
            conductor: s.name.clone(),
            emissivity: s.emissivity,
        };
        let inputs = WeatherInputs {
            temperature: InputDistribution::PointMass(s.max_temperature_c + 10.0),
            solar: InputDistribution::PointMass(1200.0),
            wind_speed: InputDistribution::PointMass(0.0),
            wind_direction: InputDistribution::PointMass(0.0),
        };
        let err = mc_normalized_distribution(
            &HeatBalanceModel::default(),
            &s,
            &o,
            &inputs,
            1_000,
            1,
        )
        .unwrap_err();
        assert!(matches!(err, McError::DegenerateNominal { .. }));
    }
}
