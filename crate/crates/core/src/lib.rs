//! Ampacity uncertainty toolkit.
//!
//! The crate turns historical weather forecast errors into probabilistic
//! ampacity ratings for overhead line conductors:
//!
//! * [`weather`] parses measured/forecast weather series and derives
//!   per-variable forecast error samples grouped by lead-time horizon.
//! * [`stats`] fits kernel density estimates to those error samples,
//!   runs Kolmogorov-Smirnov checks and builds truncated sampling
//!   distributions around a forecast operating point.
//! * [`thermal`] is the steady-state conductor heat balance used both
//!   for nominal ampacity and for every Monte Carlo trial.
//! * [`mc`] propagates weather uncertainty through the heat balance and
//!   produces normalized ampacity distributions on a fixed grid.
//! * [`db`] stores a precomputed grid of those distributions in a
//!   checksummed binary file and locates grid cells for queries.
//! * [`rt`] interpolates stored distributions at query time and turns
//!   them into confidence limits in amperes.
//! * [`synth`] generates deterministic synthetic weather series so the
//!   whole pipeline can run without proprietary measurement data.

pub mod cdf;
pub mod db;
pub mod mc;
pub mod rt;
pub mod stats;
pub mod synth;
pub mod thermal;
pub mod weather;
