//! Distribution database: dense storage of normalized-ampacity CDFs
//! over the operating-point grid, a bit-exact binary file format, and
//! grid lookup with interpolation weights.
//!
//! The file layout is little-endian throughout: magic `DTRU`, format
//! version u16, flags u16, length-prefixed JSON manifest, the five axes
//! (numeric axes as f64, categorical axes as length-prefixed UTF-8
//! names), the shared r-grid, the dense row-major f32 entry block, and
//! a trailing CRC-64/XZ of everything before it. One sequential read
//! loads the whole database; a loaded database is immutable.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crc::Crc;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mc::{derive_seed, CdfMeta, McError, NormalizedAmpacityCdf, OperatingPoint};
use crate::weather::HorizonClass;

/// File magic, first four bytes of every database file.
pub const DB_MAGIC: [u8; 4] = *b"DTRU";

/// Current format version.
pub const DB_FORMAT_VERSION: u16 = 1;

const AXIS_TAG_NUMERIC: u8 = 0;
const AXIS_TAG_NAMES: u8 = 1;

const CRC64: Crc<u64> = Crc::<u64>::new(&crc::CRC_64_XZ);

#[derive(Debug, Error)]
pub enum DbError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic {found:?}, not a distribution database")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported format version {found}")]
    UnsupportedVersion { found: u16 },
    #[error("checksum mismatch: file says {expected:#018x}, content hashes to {found:#018x}")]
    ChecksumMismatch { expected: u64, found: u64 },
    #[error("file truncated: needed {needed} more bytes, {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("malformed database: {0}")]
    Malformed(String),
    #[error("invalid axes: {0}")]
    InvalidAxes(String),
    #[error("invalid r-grid: {0}")]
    InvalidGrid(String),
    #[error("entry count {found} does not match axes product {expected}")]
    WrongEntryCount { expected: usize, found: usize },
    #[error("entry {index} invalid: {reason}")]
    InvalidEntry { index: usize, reason: String },
    #[error("unknown conductor {0:?}")]
    UnknownConductor(String),
    #[error("horizon {0} not present in the database")]
    UnknownHorizon(HorizonClass),
}

/// Ordered axis values of the operating-point grid. Numeric axes are
/// strictly increasing; categorical axes are duplicate-free and keep
/// their given order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatabaseAxes {
    pub horizons: Vec<HorizonClass>,
    pub wind_speeds: Vec<f64>,
    pub wind_angles: Vec<f64>,
    pub conductors: Vec<String>,
    pub emissivities: Vec<f64>,
}

impl Default for DatabaseAxes {
    fn default() -> Self {
        DatabaseAxes {
            horizons: HorizonClass::ALL.to_vec(),
            wind_speeds: vec![0.15, 0.5, 2.0, 5.0, 10.0, 15.0],
            wind_angles: vec![0.0, 45.0, 90.0],
            conductors: crate::thermal::ConductorCatalog::builtin().names(),
            emissivities: vec![0.2, 0.5, 0.9],
        }
    }
}

/// Grid coordinates of one entry, per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisCoords {
    pub horizon: usize,
    pub wind_speed: usize,
    pub wind_angle: usize,
    pub conductor: usize,
    pub emissivity: usize,
}

fn check_strictly_increasing(name: &str, values: &[f64]) -> Result<(), DbError> {
    if values.is_empty() {
        return Err(DbError::InvalidAxes(format!("{name} axis is empty")));
    }
    for v in values {
        if !v.is_finite() {
            return Err(DbError::InvalidAxes(format!("{name} axis holds {v}")));
        }
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DbError::InvalidAxes(format!(
            "{name} axis is not strictly increasing"
        )));
    }
    Ok(())
}

impl DatabaseAxes {
    pub fn validate(&self) -> Result<(), DbError> {
        if self.horizons.is_empty() {
            return Err(DbError::InvalidAxes("horizon axis is empty".into()));
        }
        for (i, h) in self.horizons.iter().enumerate() {
            if self.horizons[..i].contains(h) {
                return Err(DbError::InvalidAxes(format!("horizon {h} repeated")));
            }
        }
        check_strictly_increasing("wind-speed", &self.wind_speeds)?;
        if self.wind_speeds[0] <= 0.0 {
            return Err(DbError::InvalidAxes(
                "wind-speed axis must be positive (log-scale interpolation)".into(),
            ));
        }
        check_strictly_increasing("wind-angle", &self.wind_angles)?;
        if self.wind_angles[0] < 0.0 || *self.wind_angles.last().unwrap() > 90.0 {
            return Err(DbError::InvalidAxes(
                "wind-angle axis must lie within [0, 90]".into(),
            ));
        }
        if self.conductors.is_empty() {
            return Err(DbError::InvalidAxes("conductor axis is empty".into()));
        }
        for (i, c) in self.conductors.iter().enumerate() {
            if self.conductors[..i].contains(c) {
                return Err(DbError::InvalidAxes(format!("conductor {c:?} repeated")));
            }
        }
        check_strictly_increasing("emissivity", &self.emissivities)?;
        if self.emissivities[0] < 0.0 || *self.emissivities.last().unwrap() > 1.0 {
            return Err(DbError::InvalidAxes(
                "emissivity axis must lie within [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn entry_count(&self) -> usize {
        self.horizons.len()
            * self.wind_speeds.len()
            * self.wind_angles.len()
            * self.conductors.len()
            * self.emissivities.len()
    }

    /// Row-major entry index with emissivity varying fastest.
    pub fn encode_index(&self, c: AxisCoords) -> usize {
        (((c.horizon * self.wind_speeds.len() + c.wind_speed) * self.wind_angles.len()
            + c.wind_angle)
            * self.conductors.len()
            + c.conductor)
            * self.emissivities.len()
            + c.emissivity
    }

    pub fn decode_index(&self, mut index: usize) -> AxisCoords {
        let emissivity = index % self.emissivities.len();
        index /= self.emissivities.len();
        let conductor = index % self.conductors.len();
        index /= self.conductors.len();
        let wind_angle = index % self.wind_angles.len();
        index /= self.wind_angles.len();
        let wind_speed = index % self.wind_speeds.len();
        index /= self.wind_speeds.len();
        AxisCoords {
            horizon: index,
            wind_speed,
            wind_angle,
            conductor,
            emissivity,
        }
    }

    pub fn describe_index(&self, index: usize) -> String {
        let c = self.decode_index(index);
        format!(
            "horizon={} v={} m/s angle={} deg conductor={} eps={}",
            self.horizons[c.horizon],
            self.wind_speeds[c.wind_speed],
            self.wind_angles[c.wind_angle],
            self.conductors[c.conductor],
            self.emissivities[c.emissivity]
        )
    }
}

/// Build provenance embedded in the file header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildManifest {
    pub schema_version: u16,
    pub axes: DatabaseAxes,
    pub t_grid_c: Vec<f64>,
    pub s_grid_wm2: Vec<f64>,
    pub samples_per_member: u64,
    pub seed: u64,
    pub error_fingerprints: BTreeMap<String, String>,
    pub catalog_fingerprint: String,
    /// Absent by default so same-seed rebuilds are byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub build_timestamp: Option<String>,
}

/// Which query coordinates had to be clamped onto the axis range.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClampFlags {
    pub wind_low: bool,
    pub wind_high: bool,
    pub angle_low: bool,
    pub angle_high: bool,
    pub emissivity_low: bool,
    pub emissivity_high: bool,
}

impl ClampFlags {
    pub fn any(&self) -> bool {
        self.wind_low
            || self.wind_high
            || self.angle_low
            || self.angle_high
            || self.emissivity_low
            || self.emissivity_high
    }
}

/// Result of a grid lookup: surrounding entries with convex weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LocatedCell {
    /// (entry index, weight); weights are positive and sum to 1.
    pub nodes: Vec<(usize, f64)>,
    pub clamp: ClampFlags,
}

/// Weights on one numeric axis: one node when the query sits on it or
/// beyond the ends (clamped), otherwise the two bracketing nodes.
fn axis_weights(axis: &[f64], x: f64, log_scale: bool) -> (Vec<(usize, f64)>, bool, bool) {
    let last = axis.len() - 1;
    if x <= axis[0] {
        return (vec![(0, 1.0)], x < axis[0], false);
    }
    if x >= axis[last] {
        return (vec![(last, 1.0)], false, x > axis[last]);
    }
    let hi = axis.partition_point(|a| *a <= x);
    let lo = hi - 1;
    if axis[lo] == x {
        return (vec![(lo, 1.0)], false, false);
    }
    let f = |v: f64| if log_scale { v.ln() } else { v };
    let t = (f(x) - f(axis[lo])) / (f(axis[hi]) - f(axis[lo]));
    (vec![(lo, 1.0 - t), (hi, t)], false, false)
}

/// The loaded database: axes, the shared normalized-ampacity grid, and
/// one f32 CDF row per axis combination.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionDb {
    axes: DatabaseAxes,
    grid_r: Vec<f64>,
    entries: Vec<f32>,
    manifest: BuildManifest,
}

impl DistributionDb {
    /// Validates axes, grid, and every entry's CDF invariants.
    pub fn new(
        axes: DatabaseAxes,
        grid_r: Vec<f64>,
        entries: Vec<f32>,
        manifest: BuildManifest,
    ) -> Result<DistributionDb, DbError> {
        axes.validate()?;
        if grid_r.is_empty() {
            return Err(DbError::InvalidGrid("empty".into()));
        }
        if !(grid_r[0] > 0.0) {
            return Err(DbError::InvalidGrid(format!(
                "grid must start above 0, starts at {}",
                grid_r[0]
            )));
        }
        for g in &grid_r {
            if !g.is_finite() {
                return Err(DbError::InvalidGrid(format!("grid holds {g}")));
            }
        }
        if grid_r.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DbError::InvalidGrid("not strictly increasing".into()));
        }
        let expected = axes.entry_count() * grid_r.len();
        if entries.len() != expected {
            return Err(DbError::WrongEntryCount {
                expected: axes.entry_count(),
                found: entries.len() / grid_r.len().max(1),
            });
        }
        for (index, row) in entries.chunks(grid_r.len()).enumerate() {
            for v in row {
                if !v.is_finite() || !(0.0..=1.0).contains(&(*v as f64)) {
                    return Err(DbError::InvalidEntry {
                        index,
                        reason: format!("value {v} outside [0, 1]"),
                    });
                }
            }
            if row[0] != 0.0 {
                return Err(DbError::InvalidEntry {
                    index,
                    reason: format!("first value {} is not 0", row[0]),
                });
            }
            if *row.last().unwrap() != 1.0 {
                return Err(DbError::InvalidEntry {
                    index,
                    reason: format!("last value {} is not 1", row.last().unwrap()),
                });
            }
            if row.windows(2).any(|w| w[0] > w[1]) {
                return Err(DbError::InvalidEntry {
                    index,
                    reason: "values decrease".into(),
                });
            }
        }
        Ok(DistributionDb {
            axes,
            grid_r,
            entries,
            manifest,
        })
    }

    pub fn axes(&self) -> &DatabaseAxes {
        &self.axes
    }

    pub fn grid_r(&self) -> &[f64] {
        &self.grid_r
    }

    pub fn manifest(&self) -> &BuildManifest {
        &self.manifest
    }

    pub fn entry_count(&self) -> usize {
        self.axes.entry_count()
    }

    /// Raw stored CDF values of one entry.
    pub fn entry_values(&self, index: usize) -> &[f32] {
        let n = self.grid_r.len();
        &self.entries[index * n..(index + 1) * n]
    }

    /// Materializes one entry with its provenance.
    pub fn entry_cdf(&self, index: usize) -> Result<NormalizedAmpacityCdf, McError> {
        let c = self.axes.decode_index(index);
        let point = OperatingPoint {
            horizon: self.axes.horizons[c.horizon],
            wind_speed_ms: self.axes.wind_speeds[c.wind_speed],
            wind_angle_deg: self.axes.wind_angles[c.wind_angle],
            conductor: self.axes.conductors[c.conductor].clone(),
            emissivity: self.axes.emissivities[c.emissivity],
            temperature_c: None,
            solar_wm2: None,
        };
        NormalizedAmpacityCdf::new(
            self.grid_r.clone(),
            self.entry_values(index).iter().map(|v| *v as f64).collect(),
            CdfMeta {
                point,
                samples: self.manifest.samples_per_member,
                seed: derive_seed(self.manifest.seed, index as u64),
            },
        )
    }

    /// Finds the grid cell around a query point. Horizon and conductor
    /// must match exactly; wind speed interpolates on a log scale, wind
    /// angle and emissivity linearly; out-of-range coordinates clamp
    /// and set the matching flag.
    pub fn locate(
        &self,
        horizon: HorizonClass,
        conductor: &str,
        wind_speed_ms: f64,
        wind_angle_deg: f64,
        emissivity: f64,
    ) -> Result<LocatedCell, DbError> {
        let ih = self
            .axes
            .horizons
            .iter()
            .position(|h| *h == horizon)
            .ok_or(DbError::UnknownHorizon(horizon))?;
        let ic = self
            .axes
            .conductors
            .iter()
            .position(|c| c == conductor)
            .ok_or_else(|| DbError::UnknownConductor(conductor.to_string()))?;
        let (wind, wind_low, wind_high) = axis_weights(&self.axes.wind_speeds, wind_speed_ms, true);
        let (angle, angle_low, angle_high) =
            axis_weights(&self.axes.wind_angles, wind_angle_deg, false);
        let (emis, emissivity_low, emissivity_high) =
            axis_weights(&self.axes.emissivities, emissivity, false);
        let mut nodes = Vec::with_capacity(wind.len() * angle.len() * emis.len());
        for &(iv, wv) in &wind {
            for &(ia, wa) in &angle {
                for &(ie, we) in &emis {
                    let index = self.axes.encode_index(AxisCoords {
                        horizon: ih,
                        wind_speed: iv,
                        wind_angle: ia,
                        conductor: ic,
                        emissivity: ie,
                    });
                    nodes.push((index, wv * wa * we));
                }
            }
        }
        Ok(LocatedCell {
            nodes,
            clamp: ClampFlags {
                wind_low,
                wind_high,
                angle_low,
                angle_high,
                emissivity_low,
                emissivity_high,
            },
        })
    }

    /// CRC-64/XZ of the serialized file content (the value stored in
    /// the file trailer).
    pub fn file_checksum(&self) -> u64 {
        let mut buf = Vec::new();
        serialize_body(self, &mut buf).expect("in-memory serialization cannot fail");
        CRC64.checksum(&buf)
    }

    pub fn save(&self, path: &Path) -> Result<u64, DbError> {
        let file = std::fs::File::create(path)?;
        write_db(self, std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<DistributionDb, DbError> {
        let file = std::fs::File::open(path)?;
        read_db(std::io::BufReader::new(file))
    }
}

fn push_u16(buf: &mut Vec<u8>, v: u16) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_name_axis(buf: &mut Vec<u8>, names: &[String]) -> Result<(), DbError> {
    buf.push(AXIS_TAG_NAMES);
    let count = u16::try_from(names.len())
        .map_err(|_| DbError::Malformed("axis longer than u16".into()))?;
    push_u16(buf, count);
    for name in names {
        let len = u16::try_from(name.len())
            .map_err(|_| DbError::Malformed(format!("name {name:?} longer than u16")))?;
        push_u16(buf, len);
        buf.extend_from_slice(name.as_bytes());
    }
    Ok(())
}

fn push_numeric_axis(buf: &mut Vec<u8>, values: &[f64]) -> Result<(), DbError> {
    buf.push(AXIS_TAG_NUMERIC);
    let count = u16::try_from(values.len())
        .map_err(|_| DbError::Malformed("axis longer than u16".into()))?;
    push_u16(buf, count);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(())
}

fn serialize_body(db: &DistributionDb, buf: &mut Vec<u8>) -> Result<(), DbError> {
    buf.extend_from_slice(&DB_MAGIC);
    push_u16(buf, DB_FORMAT_VERSION);
    push_u16(buf, 0);
    let manifest =
        serde_json::to_vec(&db.manifest).map_err(|e| DbError::Malformed(e.to_string()))?;
    let len = u32::try_from(manifest.len())
        .map_err(|_| DbError::Malformed("manifest longer than u32".into()))?;
    push_u32(buf, len);
    buf.extend_from_slice(&manifest);
    let horizon_names: Vec<String> = db.axes.horizons.iter().map(|h| h.to_string()).collect();
    push_name_axis(buf, &horizon_names)?;
    push_numeric_axis(buf, &db.axes.wind_speeds)?;
    push_numeric_axis(buf, &db.axes.wind_angles)?;
    push_name_axis(buf, &db.axes.conductors)?;
    push_numeric_axis(buf, &db.axes.emissivities)?;
    let grid_len = u32::try_from(db.grid_r.len())
        .map_err(|_| DbError::Malformed("grid longer than u32".into()))?;
    push_u32(buf, grid_len);
    for g in &db.grid_r {
        buf.extend_from_slice(&g.to_le_bytes());
    }
    for v in &db.entries {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(())
}

/// Serializes the database; the same database always produces the same
/// bytes. Returns the byte count written, trailer included.
/// Writes the full on-disk form and returns the CRC-64 recorded in the
/// trailer, the same value `file_checksum` computes.
pub fn write_db<W: Write>(db: &DistributionDb, mut sink: W) -> Result<u64, DbError> {
    let mut buf = Vec::with_capacity(db.entries.len() * 4 + db.grid_r.len() * 8 + 4096);
    serialize_body(db, &mut buf)?;
    let crc = CRC64.checksum(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    sink.write_all(&buf)?;
    sink.flush()?;
    Ok(crc)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DbError> {
        let available = self.buf.len() - self.pos;
        if available < n {
            return Err(DbError::Truncated {
                needed: n - available,
                available,
            });
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, DbError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, DbError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, DbError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, DbError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, DbError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn name_axis(&mut self) -> Result<Vec<String>, DbError> {
        let tag = self.u8()?;
        if tag != AXIS_TAG_NAMES {
            return Err(DbError::Malformed(format!(
                "expected a name axis, found tag {tag}"
            )));
        }
        let count = self.u16()? as usize;
        let mut names = Vec::with_capacity(count);
        for _ in 0..count {
            let len = self.u16()? as usize;
            let bytes = self.take(len)?;
            let name = std::str::from_utf8(bytes)
                .map_err(|_| DbError::Malformed("axis name is not UTF-8".into()))?;
            names.push(name.to_string());
        }
        Ok(names)
    }

    fn numeric_axis(&mut self) -> Result<Vec<f64>, DbError> {
        let tag = self.u8()?;
        if tag != AXIS_TAG_NUMERIC {
            return Err(DbError::Malformed(format!(
                "expected a numeric axis, found tag {tag}"
            )));
        }
        let count = self.u16()? as usize;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(self.f64()?);
        }
        Ok(values)
    }
}

/// Reads and fully validates a database file: magic, version, CRC, then
/// structure and every entry invariant.
pub fn read_db<R: Read>(mut source: R) -> Result<DistributionDb, DbError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    if bytes.len() < 4 {
        return Err(DbError::Truncated {
            needed: 4 - bytes.len(),
            available: bytes.len(),
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != DB_MAGIC {
        return Err(DbError::BadMagic { found });
    }
    if bytes.len() < 8 {
        return Err(DbError::Truncated {
            needed: 8 - bytes.len(),
            available: bytes.len(),
        });
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != DB_FORMAT_VERSION {
        return Err(DbError::UnsupportedVersion { found: version });
    }
    if bytes.len() < 16 {
        return Err(DbError::Truncated {
            needed: 16 - bytes.len(),
            available: bytes.len(),
        });
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 8);
    let expected = u64::from_le_bytes(trailer.try_into().unwrap());
    let computed = CRC64.checksum(body);
    if expected != computed {
        return Err(DbError::ChecksumMismatch {
            expected,
            found: computed,
        });
    }

    let mut cur = Cursor { buf: body, pos: 4 };
    let _version = cur.u16()?;
    let flags = cur.u16()?;
    if flags != 0 {
        return Err(DbError::Malformed(format!("reserved flags set: {flags:#06x}")));
    }
    let manifest_len = cur.u32()? as usize;
    let manifest: BuildManifest = serde_json::from_slice(cur.take(manifest_len)?)
        .map_err(|e| DbError::Malformed(format!("manifest: {e}")))?;

    let horizon_names = cur.name_axis()?;
    let mut horizons = Vec::with_capacity(horizon_names.len());
    for name in &horizon_names {
        horizons.push(
            name.parse::<HorizonClass>()
                .map_err(|_| DbError::Malformed(format!("unknown horizon {name:?}")))?,
        );
    }
    let wind_speeds = cur.numeric_axis()?;
    let wind_angles = cur.numeric_axis()?;
    let conductors = cur.name_axis()?;
    let emissivities = cur.numeric_axis()?;
    let axes = DatabaseAxes {
        horizons,
        wind_speeds,
        wind_angles,
        conductors,
        emissivities,
    };

    let grid_len = cur.u32()? as usize;
    let mut grid_r = Vec::with_capacity(grid_len);
    for _ in 0..grid_len {
        grid_r.push(cur.f64()?);
    }
    let entry_values = axes.entry_count().saturating_mul(grid_len);
    let mut entries = Vec::with_capacity(entry_values);
    for _ in 0..entry_values {
        entries.push(cur.f32()?);
    }
    if cur.pos != body.len() {
        return Err(DbError::Malformed(format!(
            "{} trailing bytes after the entry block",
            body.len() - cur.pos
        )));
    }
    if manifest.axes != axes {
        return Err(DbError::Malformed(
            "manifest axes disagree with the axes block".into(),
        ));
    }
    DistributionDb::new(axes, grid_r, entries, manifest)
}
