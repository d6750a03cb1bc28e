use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use ampacity_uq_core::mc::{
    build_database, BuildOptions, ErrorLibrary, DEFAULT_S_GRID_WM2, DEFAULT_TEST_SAMPLES,
    DEFAULT_T_GRID_C,
};
use ampacity_uq_core::stats::{DistributionRecord, ErrorDistribution};
use ampacity_uq_core::thermal::HeatBalanceModel;
use anyhow::anyhow;
use clap::Args;

use crate::config::{resolve_axes, AxisFlags, RunConfig};
use crate::fail::{need, Failure, ResultExt};
use crate::io_util::{ensure_dir, write_json_pretty};

pub const DB_FILE_NAME: &str = "ampacity_uq.dtru";

/// Precompute the ampacity distribution database.
#[derive(Debug, Args)]
pub struct BuildDbArgs {
    /// Directory holding dist_*.json error distributions.
    #[arg(long, value_name = "DIR")]
    pub dists: Option<PathBuf>,
    /// Conductor catalog JSON; the built-in catalog when omitted.
    #[arg(long, value_name = "FILE")]
    pub catalog: Option<PathBuf>,
    /// Directory receiving the database file and manifest.json.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Root seed for the Monte Carlo sweep.
    #[arg(long)]
    pub seed: Option<u64>,
    /// MC trials per (temperature, solar) member.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Horizon axis override, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<String>>,
    /// Wind speed axis override (m/s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub wind_speeds: Option<Vec<f64>>,
    /// Wind attack angle axis override (deg), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub wind_angles: Option<Vec<f64>>,
    /// Conductor axis override, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub conductors: Option<Vec<String>>,
    /// Emissivity axis override, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub emissivities: Option<Vec<f64>>,
    /// Ambient temperature members (degC), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    /// Solar irradiance members (W/m2), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub s_grid: Option<Vec<f64>>,
}

fn load_distributions(dir: &PathBuf) -> Result<Vec<ErrorDistribution>, Failure> {
    let entries = fs::read_dir(dir).or_data(&format!("reading {}", dir.display()))?;
    let mut dists = Vec::new();
    for entry in entries {
        let path = entry.or_data("listing distribution files")?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if !(name.starts_with("dist_") && name.ends_with(".json")) {
            continue;
        }
        let text =
            fs::read_to_string(&path).or_data(&format!("reading {}", path.display()))?;
        let record: DistributionRecord =
            serde_json::from_str(&text).or_data(&format!("parsing {}", path.display()))?;
        dists.push(
            ErrorDistribution::from_record(record)
                .or_data(&format!("loading {}", path.display()))?,
        );
    }
    if dists.is_empty() {
        return Err(Failure::data(anyhow!(
            "no dist_*.json files in {}",
            dir.display()
        )));
    }
    Ok(dists)
}

pub fn run(args: BuildDbArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let dists_dir = need("dists", args.dists.or_else(|| cfg.dists.clone()))?;
    let seed = need("seed", args.seed.or(cfg.seed))?;
    let out = need("out", args.out.or_else(|| cfg.out.clone()))?;
    let samples = args.samples.or(cfg.samples).unwrap_or(DEFAULT_TEST_SAMPLES);

    let library = ErrorLibrary::from_distributions(load_distributions(&dists_dir)?)
        .or_data("assembling error library")?;
    let catalog = super::load_catalog(args.catalog.or_else(|| cfg.catalog.clone()))?;
    let axes = resolve_axes(
        AxisFlags {
            horizons: args.horizons,
            wind_speeds: args.wind_speeds,
            wind_angles: args.wind_angles,
            conductors: args.conductors,
            emissivities: args.emissivities,
        },
        cfg.axes.as_ref(),
    )?;
    let opts = BuildOptions {
        t_grid_c: args
            .t_grid
            .or_else(|| cfg.t_grid_c.clone())
            .unwrap_or_else(|| DEFAULT_T_GRID_C.to_vec()),
        s_grid_wm2: args
            .s_grid
            .or_else(|| cfg.s_grid_wm2.clone())
            .unwrap_or_else(|| DEFAULT_S_GRID_WM2.to_vec()),
        samples_per_member: samples,
        seed,
    };

    println!(
        "building {} entries, {} members each, {} samples per member, seed {}",
        axes.entry_count(),
        opts.t_grid_c.len() * opts.s_grid_wm2.len(),
        samples,
        seed
    );
    let start = Instant::now();
    let db = build_database(&HeatBalanceModel::default(), &catalog, &axes, &library, &opts)
        .or_data("building database")?;
    let elapsed = start.elapsed().as_secs_f64();

    ensure_dir(&out)?;
    let db_path = out.join(DB_FILE_NAME);
    let checksum = db.save(&db_path).or_data("writing database")?;
    write_json_pretty(&out.join("manifest.json"), db.manifest())?;
    println!("built {} entries in {:.1} s", db.entry_count(), elapsed);
    println!("wrote {} (checksum {:016x})", db_path.display(), checksum);
    Ok(())
}
