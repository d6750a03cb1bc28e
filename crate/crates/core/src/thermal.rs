//! Steady-state conductor heat balance.
//!
//! A zero-dimensional energy balance per unit length: Joule and solar
//! gains against convective and radiative losses. Two directions are
//! exposed: conductor temperature for a given current
//! ([`HeatBalanceModel::solve_conductor_temperature`]) and the maximal
//! current for a given temperature limit ([`HeatBalanceModel::ampacity`]).
//! The convection correlation coefficients live on [`HeatBalanceModel`]
//! so alternative fits can be loaded as configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Upper bound on solar irradiance at ground level, W/m².
pub const SOLAR_CONSTANT_WM2: f64 = 1361.0;

/// Upper end of the conductor-temperature search bracket, °C.
pub const MAX_SOLVE_TEMPERATURE_C: f64 = 400.0;

/// Residual tolerance for the temperature solve, W/m.
pub const RESIDUAL_TOLERANCE_W_PER_M: f64 = 1e-6;

/// Bracket-width tolerance for the temperature solve, °C.
pub const BRACKET_TOLERANCE_C: f64 = 1e-4;

const STEFAN_BOLTZMANN: f64 = 5.670_374_419e-8;
const GRAVITY_M_PER_S2: f64 = 9.81;
const KELVIN_OFFSET: f64 = 273.15;

#[derive(Debug, Error)]
pub enum ThermalError {
    #[error("catalog i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("catalog parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("conductor {name:?}: {reason}")]
    InvalidConductor { name: String, reason: String },
    #[error("duplicate conductor {0:?} in catalog")]
    DuplicateConductor(String),
    #[error("unknown conductor {0:?}")]
    UnknownConductor(String),
    #[error("invalid ambient conditions: {0}")]
    InvalidAmbient(String),
    #[error("heat balance has no root for {current} A on [{lo}, {hi}] °C")]
    NoRoot { current: f64, lo: f64, hi: f64 },
    #[error("series length mismatch: {measured} measured vs {computed} computed")]
    LengthMismatch { measured: usize, computed: usize },
}

/// Electrical, thermal, and geometric parameters of one conductor type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductorSpec {
    pub name: String,
    /// Outer diameter, m.
    pub diameter_m: f64,
    /// AC resistance at 20 °C, Ω/m.
    pub ac_resistance_20c_ohm_per_m: f64,
    /// Linear temperature coefficient of resistance, 1/K.
    pub resistance_temp_coefficient_per_k: f64,
    /// Fraction of incident solar power absorbed, in [0, 1].
    pub solar_absorptivity: f64,
    /// Surface emissivity, in [0, 1].
    pub emissivity: f64,
    /// Critical (maximum allowed) conductor temperature, °C.
    pub max_temperature_c: f64,
}

impl ConductorSpec {
    pub fn validate(&self) -> Result<(), ThermalError> {
        let fail = |reason: &str| ThermalError::InvalidConductor {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.name.trim().is_empty() {
            return Err(fail("empty name"));
        }
        if !(self.diameter_m > 0.0) {
            return Err(fail("diameter must be positive"));
        }
        if !(self.ac_resistance_20c_ohm_per_m > 0.0) {
            return Err(fail("resistance must be positive"));
        }
        if !self.resistance_temp_coefficient_per_k.is_finite() {
            return Err(fail("resistance coefficient must be finite"));
        }
        if !(0.0..=1.0).contains(&self.solar_absorptivity) {
            return Err(fail("solar absorptivity must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.emissivity) {
            return Err(fail("emissivity must lie in [0, 1]"));
        }
        if !(self.max_temperature_c > -KELVIN_OFFSET) {
            return Err(fail("max temperature must exceed absolute zero"));
        }
        Ok(())
    }

    /// Same conductor with a different surface emissivity.
    pub fn with_emissivity(&self, emissivity: f64) -> ConductorSpec {
        ConductorSpec { emissivity, ..self.clone() }
    }
}

/// Weather at the span, as seen by the heat balance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientConditions {
    /// Air temperature, °C.
    pub temperature_c: f64,
    /// Solar irradiance, W/m².
    pub solar_wm2: f64,
    /// Wind speed, m/s.
    pub wind_speed_ms: f64,
    /// Wind attack angle relative to the conductor axis, degrees in [0, 90].
    pub wind_attack_deg: f64,
}

impl AmbientConditions {
    pub fn validate(&self) -> Result<(), ThermalError> {
        if !self.temperature_c.is_finite() || self.temperature_c <= -KELVIN_OFFSET {
            return Err(ThermalError::InvalidAmbient(format!(
                "temperature {} °C out of range",
                self.temperature_c
            )));
        }
        if !(0.0..=SOLAR_CONSTANT_WM2).contains(&self.solar_wm2) {
            return Err(ThermalError::InvalidAmbient(format!(
                "solar irradiance {} W/m² outside [0, {SOLAR_CONSTANT_WM2}]",
                self.solar_wm2
            )));
        }
        if !(self.wind_speed_ms >= 0.0) || !self.wind_speed_ms.is_finite() {
            return Err(ThermalError::InvalidAmbient(format!(
                "wind speed {} m/s must be nonnegative",
                self.wind_speed_ms
            )));
        }
        if !(0.0..=90.0).contains(&self.wind_attack_deg) {
            return Err(ThermalError::InvalidAmbient(format!(
                "wind attack angle {}° outside [0, 90]",
                self.wind_attack_deg
            )));
        }
        Ok(())
    }
}

/// Folds a wind direction against a line azimuth into the attack angle
/// in [0°, 90°]; both inputs are degrees from north, any real value.
pub fn wind_attack_angle(line_azimuth_deg: f64, wind_direction_deg: f64) -> f64 {
    let rel = (wind_direction_deg - line_azimuth_deg).rem_euclid(180.0);
    if rel > 90.0 {
        180.0 - rel
    } else {
        rel
    }
}

/// Convection correlation coefficients for the heat balance. The
/// defaults are the usual overhead-line fits; deployments with their
/// own wind-tunnel data can deserialize a replacement set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeatBalanceModel {
    /// Reynolds number at which the forced-convection fit switches.
    pub reynolds_split: f64,
    pub forced_low_coeff: f64,
    pub forced_low_exp: f64,
    pub forced_high_coeff: f64,
    pub forced_high_exp: f64,
    /// Attack angle (degrees) at which the angle-factor fit switches.
    pub angle_split_deg: f64,
    pub angle_base: f64,
    pub angle_low_coeff: f64,
    pub angle_low_exp: f64,
    pub angle_high_coeff: f64,
    pub angle_high_exp: f64,
    /// Grashof–Prandtl product at which the natural-convection fit switches.
    pub natural_split: f64,
    pub natural_low_coeff: f64,
    pub natural_low_exp: f64,
    pub natural_high_coeff: f64,
    pub natural_high_exp: f64,
    pub prandtl: f64,
}

impl Default for HeatBalanceModel {
    fn default() -> Self {
        HeatBalanceModel {
            reynolds_split: 2.65e3,
            forced_low_coeff: 0.641,
            forced_low_exp: 0.471,
            forced_high_coeff: 0.048,
            forced_high_exp: 0.800,
            angle_split_deg: 24.0,
            angle_base: 0.42,
            angle_low_coeff: 0.68,
            angle_low_exp: 1.08,
            angle_high_coeff: 0.58,
            angle_high_exp: 0.90,
            natural_split: 1.0e4,
            natural_low_coeff: 0.850,
            natural_low_exp: 0.188,
            natural_high_coeff: 0.480,
            natural_high_exp: 0.250,
            prandtl: 0.715,
        }
    }
}

/// Thermal conductivity of air at film temperature `tf` °C, W/(m·K).
fn air_conductivity(tf: f64) -> f64 {
    2.42e-2 + 7.2e-5 * tf
}

/// Kinematic viscosity of air at film temperature `tf` °C, m²/s.
fn air_kinematic_viscosity(tf: f64) -> f64 {
    1.32e-5 + 9.5e-8 * tf
}

impl HeatBalanceModel {
    /// AC resistance at conductor temperature `tc` °C, Ω/m.
    pub fn resistance(&self, spec: &ConductorSpec, tc: f64) -> f64 {
        spec.ac_resistance_20c_ohm_per_m
            * (1.0 + spec.resistance_temp_coefficient_per_k * (tc - 20.0))
    }

    fn joule_heating(&self, current: f64, tc: f64, spec: &ConductorSpec) -> f64 {
        current * current * self.resistance(spec, tc)
    }

    fn solar_heating(&self, amb: &AmbientConditions, spec: &ConductorSpec) -> f64 {
        spec.solar_absorptivity * amb.solar_wm2 * spec.diameter_m
    }

    fn radiative_cooling(&self, tc: f64, amb: &AmbientConditions, spec: &ConductorSpec) -> f64 {
        let tk = tc + KELVIN_OFFSET;
        let ta = amb.temperature_c + KELVIN_OFFSET;
        std::f64::consts::PI
            * spec.diameter_m
            * spec.emissivity
            * STEFAN_BOLTZMANN
            * (tk.powi(4) - ta.powi(4))
    }

    fn forced_nusselt(&self, reynolds: f64, attack_deg: f64) -> f64 {
        let nu_perpendicular = if reynolds < self.reynolds_split {
            self.forced_low_coeff * reynolds.powf(self.forced_low_exp)
        } else {
            self.forced_high_coeff * reynolds.powf(self.forced_high_exp)
        };
        let s = attack_deg.to_radians().sin();
        let factor = if attack_deg <= self.angle_split_deg {
            self.angle_base + self.angle_low_coeff * s.powf(self.angle_low_exp)
        } else {
            self.angle_base + self.angle_high_coeff * s.powf(self.angle_high_exp)
        };
        nu_perpendicular * factor
    }

    fn natural_nusselt(&self, tc: f64, amb: &AmbientConditions, spec: &ConductorSpec) -> f64 {
        let tf = 0.5 * (tc + amb.temperature_c);
        let nu_f = air_kinematic_viscosity(tf);
        let grashof = spec.diameter_m.powi(3) * (tc - amb.temperature_c).abs() * GRAVITY_M_PER_S2
            / ((tf + KELVIN_OFFSET) * nu_f * nu_f);
        let gr_pr = grashof * self.prandtl;
        if gr_pr < self.natural_split {
            self.natural_low_coeff * gr_pr.powf(self.natural_low_exp)
        } else {
            self.natural_high_coeff * gr_pr.powf(self.natural_high_exp)
        }
    }

    fn convective_cooling(&self, tc: f64, amb: &AmbientConditions, spec: &ConductorSpec) -> f64 {
        let tf = 0.5 * (tc + amb.temperature_c);
        let reynolds = amb.wind_speed_ms * spec.diameter_m / air_kinematic_viscosity(tf);
        let forced = self.forced_nusselt(reynolds, amb.wind_attack_deg);
        let natural = self.natural_nusselt(tc, amb, spec);
        let nusselt = forced.max(natural);
        std::f64::consts::PI * air_conductivity(tf) * (tc - amb.temperature_c) * nusselt
    }

    /// Net heating per unit length at conductor temperature `tc`, W/m:
    /// gains minus losses, positive when the conductor would warm up.
    pub fn heat_balance_residual(
        &self,
        tc: f64,
        current: f64,
        amb: &AmbientConditions,
        spec: &ConductorSpec,
    ) -> f64 {
        self.joule_heating(current, tc, spec) + self.solar_heating(amb, spec)
            - self.convective_cooling(tc, amb, spec)
            - self.radiative_cooling(tc, amb, spec)
    }

    /// Equilibrium conductor temperature for `current`, by bisection on
    /// [ambient − 5 °C, 400 °C].
    pub fn solve_conductor_temperature(
        &self,
        current: f64,
        amb: &AmbientConditions,
        spec: &ConductorSpec,
    ) -> Result<f64, ThermalError> {
        let mut lo = amb.temperature_c - 5.0;
        let mut hi = MAX_SOLVE_TEMPERATURE_C;
        let r_lo = self.heat_balance_residual(lo, current, amb, spec);
        let r_hi = self.heat_balance_residual(hi, current, amb, spec);
        if r_lo < 0.0 || r_hi > 0.0 {
            return Err(ThermalError::NoRoot { current, lo, hi });
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let r_mid = self.heat_balance_residual(mid, current, amb, spec);
            if r_mid >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < BRACKET_TOLERANCE_C && r_mid.abs() < RESIDUAL_TOLERANCE_W_PER_M {
                break;
            }
        }
        Ok(mid)
    }

    /// Maximal current keeping the conductor at or below its critical
    /// temperature; 0 when cooling cannot offset solar gain. The heat
    /// balance at the critical temperature is linear in I², so this is
    /// closed-form.
    pub fn ampacity(&self, amb: &AmbientConditions, spec: &ConductorSpec) -> f64 {
        let tc = spec.max_temperature_c;
        let net_cooling = self.convective_cooling(tc, amb, spec)
            + self.radiative_cooling(tc, amb, spec)
            - self.solar_heating(amb, spec);
        if net_cooling <= 0.0 {
            return 0.0;
        }
        let resistance = self.resistance(spec, tc);
        if resistance <= 0.0 {
            return 0.0;
        }
        (net_cooling / resistance).sqrt()
    }
}

/// Pointwise model-minus-measurement differences for conductor skin
/// temperature series aligned by timestamp.
pub fn skin_temperature_error(
    measured: &[f64],
    computed: &[f64],
) -> Result<Vec<f64>, ThermalError> {
    if measured.len() != computed.len() {
        return Err(ThermalError::LengthMismatch {
            measured: measured.len(),
            computed: computed.len(),
        });
    }
    Ok(computed.iter().zip(measured).map(|(c, m)| c - m).collect())
}

/// Named set of conductor parameter records. The built-in catalog ships
/// the six types the toolkit is exercised with; values come from
/// standard conductor tables and are configuration, not ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConductorCatalog {
    specs: Vec<ConductorSpec>,
}

const BUILTIN_CATALOG_JSON: &str = include_str!("../data/conductors.json");

impl ConductorCatalog {
    /// The catalog compiled into the binary.
    pub fn builtin() -> ConductorCatalog {
        ConductorCatalog::from_json(BUILTIN_CATALOG_JSON)
            .expect("built-in conductor catalog must be valid")
    }

    pub fn from_json(text: &str) -> Result<ConductorCatalog, ThermalError> {
        let specs: Vec<ConductorSpec> = serde_json::from_str(text)?;
        for (i, spec) in specs.iter().enumerate() {
            spec.validate()?;
            if specs[..i].iter().any(|s| s.name == spec.name) {
                return Err(ThermalError::DuplicateConductor(spec.name.clone()));
            }
        }
        Ok(ConductorCatalog { specs })
    }

    pub fn from_path(path: &Path) -> Result<ConductorCatalog, ThermalError> {
        ConductorCatalog::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, name: &str) -> Result<&ConductorSpec, ThermalError> {
        self.specs
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| ThermalError::UnknownConductor(name.to_string()))
    }

    pub fn specs(&self) -> &[ConductorSpec] {
        &self.specs
    }

    pub fn names(&self) -> Vec<String> {
        self.specs.iter().map(|s| s.name.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// Hex SHA-256 of the canonical JSON serialization; recorded in
    /// database manifests so a catalog edit is detectable.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(&self.specs).expect("catalog serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
