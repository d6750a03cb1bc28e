//! Synthetic weather for tests and demos.
//!
//! Stochastic model: deterministic diurnal cycles for temperature and
//! clear-sky solar irradiance, an AR(1) wind-speed path, and a circular
//! random walk for wind direction. Forecasts are the true values plus
//! seeded noise whose spread widens linearly with lead time, so fitted
//! error distributions separate by horizon the way real provider data
//! does.

use chrono::{DateTime, Duration, TimeZone, Timelike, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mc::derive_seed;
use crate::weather::{ForecastSample, WeatherSample, MAX_LEAD_HOURS};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// Shape of the forecast-noise kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseShape {
    /// Zero-mean Gaussian with the configured spread.
    Gaussian,
    /// Exponential shifted to zero mean; same spread, heavy right tail.
    SkewedExponential,
}

/// Forecast-noise spreads at lead zero, one per variable, plus the
/// per-hour widening factor: sigma(lead) = sigma0 * (1 + growth * lead_h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastNoise {
    pub temperature_c: f64,
    pub solar_wm2: f64,
    pub wind_ms: f64,
    pub direction_deg: f64,
    pub lead_growth_per_hour: f64,
    pub shape: NoiseShape,
}

impl Default for ForecastNoise {
    fn default() -> Self {
        ForecastNoise {
            temperature_c: 0.8,
            solar_wm2: 60.0,
            wind_ms: 0.6,
            direction_deg: 25.0,
            lead_growth_per_hour: 0.08,
            shape: NoiseShape::Gaussian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub schema_version: u32,
    pub start: DateTime<Utc>,
    pub days: u32,
    pub cadence_minutes: u32,
    pub mean_temperature_c: f64,
    pub diurnal_temperature_amplitude_c: f64,
    pub peak_solar_wm2: f64,
    pub day_length_hours: f64,
    pub mean_wind_ms: f64,
    pub wind_std_ms: f64,
    pub wind_correlation_minutes: f64,
    pub direction_walk_deg: f64,
    /// Hours between forecast issues.
    pub issue_period_hours: u32,
    /// Lead times generated per issue, hours; 0 is the nowcast.
    pub lead_hours: Vec<u32>,
    pub noise: ForecastNoise,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            schema_version: 1,
            start: Utc.with_ymd_and_hms(2019, 6, 1, 0, 0, 0).unwrap(),
            days: 30,
            cadence_minutes: 5,
            mean_temperature_c: 14.0,
            diurnal_temperature_amplitude_c: 6.0,
            peak_solar_wm2: 900.0,
            day_length_hours: 14.0,
            mean_wind_ms: 3.0,
            wind_std_ms: 1.5,
            wind_correlation_minutes: 180.0,
            direction_walk_deg: 8.0,
            issue_period_hours: 6,
            lead_hours: vec![0, 3, 6, 12, 24, 48],
            noise: ForecastNoise::default(),
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidConfig(msg));
        if self.days == 0 {
            return bad("days must be at least 1".into());
        }
        if self.cadence_minutes == 0 || 1440 % self.cadence_minutes != 0 {
            return bad(format!(
                "cadence {} min must divide a day",
                self.cadence_minutes
            ));
        }
        if !(0.0 < self.day_length_hours && self.day_length_hours < 24.0) {
            return bad(format!(
                "day length {} h outside (0, 24)",
                self.day_length_hours
            ));
        }
        if self.peak_solar_wm2 < 0.0 || self.mean_wind_ms < 0.0 || self.wind_std_ms < 0.0 {
            return bad("peak solar, mean wind, and wind std must be nonnegative".into());
        }
        if self.wind_correlation_minutes <= 0.0 {
            return bad("wind correlation time must be positive".into());
        }
        if self.issue_period_hours == 0 {
            return bad("issue period must be at least 1 h".into());
        }
        if self.lead_hours.is_empty() {
            return bad("at least one lead time required".into());
        }
        if !self.lead_hours.windows(2).all(|w| w[0] < w[1]) {
            return bad("lead times must be strictly increasing".into());
        }
        if *self.lead_hours.last().unwrap() as i64 > MAX_LEAD_HOURS {
            return bad(format!("lead times must stay within {MAX_LEAD_HOURS} h"));
        }
        if self.lead_hours.iter().any(|l| l * 60 % self.cadence_minutes != 0) {
            return bad("lead times must land on the measurement cadence".into());
        }
        let n = &self.noise;
        if [n.temperature_c, n.solar_wm2, n.wind_ms, n.direction_deg]
            .iter()
            .any(|s| *s < 0.0)
            || n.lead_growth_per_hour < 0.0
        {
            return bad("noise spreads and growth must be nonnegative".into());
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.days as usize) * 1440 / self.cadence_minutes as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWeather {
    pub measured: Vec<WeatherSample>,
    pub forecasts: Vec<ForecastSample>,
}

fn hour_of_day(t: DateTime<Utc>) -> f64 {
    t.hour() as f64 + t.minute() as f64 / 60.0 + t.second() as f64 / 3600.0
}

fn diurnal_temperature(cfg: &SynthConfig, t: DateTime<Utc>) -> f64 {
    let h = hour_of_day(t);
    cfg.mean_temperature_c
        + cfg.diurnal_temperature_amplitude_c
            * (std::f64::consts::TAU * (h - 9.0) / 24.0).sin()
}

fn clear_sky_solar(cfg: &SynthConfig, t: DateTime<Utc>) -> f64 {
    let h = hour_of_day(t);
    let sunrise = 12.0 - cfg.day_length_hours / 2.0;
    if h <= sunrise || h >= sunrise + cfg.day_length_hours {
        return 0.0;
    }
    cfg.peak_solar_wm2 * (std::f64::consts::PI * (h - sunrise) / cfg.day_length_hours).sin()
}

struct NoiseKernel {
    normal: Normal<f64>,
    exp: Exp<f64>,
    shape: NoiseShape,
}

impl NoiseKernel {
    fn new(shape: NoiseShape) -> Self {
        NoiseKernel {
            normal: Normal::new(0.0, 1.0).unwrap(),
            exp: Exp::new(1.0).unwrap(),
            shape,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
        match self.shape {
            NoiseShape::Gaussian => sigma * self.normal.sample(rng),
            NoiseShape::SkewedExponential => sigma * (self.exp.sample(rng) - 1.0),
        }
    }
}

/// Generates the measured series and the forecast series for one
/// configuration. Same config, same output.
pub fn generate(cfg: &SynthConfig) -> Result<SyntheticWeather, SynthError> {
    cfg.validate()?;
    let steps = cfg.steps();
    let cadence = Duration::minutes(cfg.cadence_minutes as i64);

    let mut truth_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));
    let normal = Normal::new(0.0, 1.0).unwrap();
    let rho = (-(cfg.cadence_minutes as f64) / cfg.wind_correlation_minutes).exp();
    let innovation = cfg.wind_std_ms * (1.0 - rho * rho).sqrt();

    let mut measured = Vec::with_capacity(steps);
    let mut wind = cfg.mean_wind_ms;
    let mut direction = truth_rng.gen::<f64>() * 360.0;
    for i in 0..steps {
        let t = cfg.start + cadence * i as i32;
        wind = (cfg.mean_wind_ms + rho * (wind - cfg.mean_wind_ms)
            + innovation * normal.sample(&mut truth_rng))
        .max(0.0);
        direction = (direction + cfg.direction_walk_deg * normal.sample(&mut truth_rng))
            .rem_euclid(360.0);
        measured.push(WeatherSample {
            timestamp: t,
            temperature: Some(diurnal_temperature(cfg, t)),
            solar_irradiance: Some(clear_sky_solar(cfg, t)),
            wind_speed: Some(wind),
            wind_direction: Some(direction),
        });
    }

    let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 2));
    let kernel = NoiseKernel::new(cfg.noise.shape);
    let steps_per_hour = 60 / cfg.cadence_minutes as usize;
    let mut forecasts = Vec::new();
    let mut issue_idx = 0usize;
    while issue_idx < steps {
        let issued_at = cfg.start + cadence * issue_idx as i32;
        for &lead_h in &cfg.lead_hours {
            let valid_idx = issue_idx + lead_h as usize * steps_per_hour;
            if valid_idx >= steps {
                continue;
            }
            let truth = &measured[valid_idx];
            let widen = 1.0 + cfg.noise.lead_growth_per_hour * lead_h as f64;
            let temperature = truth.temperature.unwrap()
                + kernel.sample(&mut noise_rng, cfg.noise.temperature_c * widen);
            let true_solar = truth.solar_irradiance.unwrap();
            let solar = if true_solar == 0.0 {
                0.0
            } else {
                (true_solar + kernel.sample(&mut noise_rng, cfg.noise.solar_wm2 * widen))
                    .clamp(0.0, crate::thermal::SOLAR_CONSTANT_WM2)
            };
            let wind_speed = (truth.wind_speed.unwrap()
                + kernel.sample(&mut noise_rng, cfg.noise.wind_ms * widen))
            .max(0.0);
            let wind_direction = (truth.wind_direction.unwrap()
                + kernel.sample(&mut noise_rng, cfg.noise.direction_deg * widen))
            .rem_euclid(360.0);
            forecasts.push(ForecastSample {
                issued_at,
                valid_at: truth.timestamp,
                temperature: Some(temperature),
                solar_irradiance: Some(solar),
                wind_speed: Some(wind_speed),
                wind_direction: Some(wind_direction),
            });
        }
        issue_idx += cfg.issue_period_hours as usize * steps_per_hour;
    }

    Ok(SyntheticWeather { measured, forecasts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_test_two_sample, sample_std};
    use crate::weather::{
        align_pairs, compute_errors, default_align_tolerance, HorizonClass, WeatherVariable,
    };

    fn errors_for(
        out: &SyntheticWeather,
        variable: WeatherVariable,
        horizon: HorizonClass,
    ) -> Vec<f64> {
        let pairs = align_pairs(&out.measured, &out.forecasts, default_align_tolerance());
        compute_errors(&pairs, variable)
            .into_iter()
            .filter(|e| e.horizon == horizon)
            .map(|e| e.value)
            .collect()
    }

    #[test]
    fn measured_series_runs_on_the_cadence() {
        let cfg = SynthConfig {
            days: 2,
            ..SynthConfig::default()
        };
        let out = generate(&cfg).unwrap();
        assert_eq!(out.measured.len(), 2 * 288);
        for w in out.measured.windows(2) {
            assert_eq!(w[1].timestamp - w[0].timestamp, Duration::minutes(5));
        }
    }

    #[test]
    fn same_config_reproduces_identical_series() {
        let cfg = SynthConfig {
            days: 3,
            ..SynthConfig::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a, b);
        let c = generate(&SynthConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(a.measured, c.measured);
    }

    #[test]
    fn solar_is_zero_at_night_and_tracks_day_length() {
        let cfg = SynthConfig {
            days: 10,
            day_length_hours: 8.0,
            ..SynthConfig::default()
        };
        let out = generate(&cfg).unwrap();
        let daylight = out
            .measured
            .iter()
            .filter(|s| s.solar_irradiance.unwrap() > 0.0)
            .count();
        let fraction = daylight as f64 / out.measured.len() as f64;
        assert!((fraction - 8.0 / 24.0).abs() < 0.02, "fraction {fraction}");
        for s in &out.measured {
            let h = hour_of_day(s.timestamp);
            if !(8.0..=16.0).contains(&h) {
                assert_eq!(s.solar_irradiance, Some(0.0));
            }
        }
    }

    #[test]
    fn physical_ranges_hold_everywhere() {
        let out = generate(&SynthConfig::default()).unwrap();
        for s in &out.measured {
            assert!(s.wind_speed.unwrap() >= 0.0);
            let d = s.wind_direction.unwrap();
            assert!((0.0..360.0).contains(&d));
            assert!(s.solar_irradiance.unwrap() >= 0.0);
        }
        for f in &out.forecasts {
            assert!(f.wind_speed.unwrap() >= 0.0);
            assert!(f.solar_irradiance.unwrap() >= 0.0);
            assert!((0.0..360.0).contains(&f.wind_direction.unwrap()));
        }
    }

    #[test]
    fn forecasts_cover_all_three_horizons() {
        let out = generate(&SynthConfig::default()).unwrap();
        for horizon in HorizonClass::ALL {
            let errs = errors_for(&out, WeatherVariable::Temperature, horizon);
            assert!(errs.len() > 50, "{horizon}: {} samples", errs.len());
        }
    }

    #[test]
    fn noise_widens_with_lead_time() {
        let out = generate(&SynthConfig::default()).unwrap();
        let near = errors_for(&out, WeatherVariable::Temperature, HorizonClass::Nowcast);
        let far = errors_for(&out, WeatherVariable::Temperature, HorizonClass::MediumTerm);
        assert!(sample_std(&near) * 1.5 < sample_std(&far));
        let ks = ks_test_two_sample(&near, &far, 0.01).unwrap();
        assert!(ks.p_value < 0.01, "p = {}", ks.p_value);
    }

    #[test]
    fn skewed_kernel_departs_from_gaussian() {
        let mut cfg = SynthConfig {
            days: 30,
            issue_period_hours: 1,
            lead_hours: vec![0],
            ..SynthConfig::default()
        };
        cfg.noise.shape = NoiseShape::SkewedExponential;
        let out = generate(&cfg).unwrap();
        let errs = errors_for(&out, WeatherVariable::Temperature, HorizonClass::Nowcast);
        assert!(errs.len() > 500);
        let fit = crate::stats::ks_test_normal(&errs, 0.01).unwrap();
        assert!(fit.p_value < 1e-4, "p = {}", fit.p_value);

        cfg.noise.shape = NoiseShape::Gaussian;
        let out = generate(&cfg).unwrap();
        let errs = errors_for(&out, WeatherVariable::Temperature, HorizonClass::Nowcast);
        let fit = crate::stats::ks_test_normal(&errs, 0.01).unwrap();
        assert!(fit.p_value > 0.01, "p = {}", fit.p_value);
    }

    #[test]
    fn night_forecasts_predict_zero_solar() {
        let out = generate(&SynthConfig::default()).unwrap();
        let by_time: std::collections::BTreeMap<_, _> = out
            .measured
            .iter()
            .map(|s| (s.timestamp, s.solar_irradiance.unwrap()))
            .collect();
        let mut nights = 0;
        for f in &out.forecasts {
            if by_time[&f.valid_at] == 0.0 {
                assert_eq!(f.solar_irradiance, Some(0.0));
                nights += 1;
            }
        }
        assert!(nights > 100);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let ok = SynthConfig::default();
        for cfg in [
            SynthConfig { days: 0, ..ok.clone() },
            SynthConfig { cadence_minutes: 7, ..ok.clone() },
            SynthConfig { day_length_hours: 24.0, ..ok.clone() },
            SynthConfig { lead_hours: vec![], ..ok.clone() },
            SynthConfig { lead_hours: vec![3, 3], ..ok.clone() },
            SynthConfig { lead_hours: vec![0, 80], ..ok.clone() },
            SynthConfig { issue_period_hours: 0, ..ok.clone() },
            SynthConfig { wind_correlation_minutes: 0.0, ..ok.clone() },
        ] {
            assert!(matches!(generate(&cfg), Err(SynthError::InvalidConfig(_))));
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = SynthConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: SynthConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        let partial: SynthConfig = serde_json::from_str(r#"{"days": 7, "seed": 9}"#).unwrap();
        assert_eq!(partial.days, 7);
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.cadence_minutes, 5);
    }
}
