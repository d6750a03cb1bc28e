pub mod assess;
pub mod build;
pub mod compare;
pub mod db_tools;
pub mod fit;
pub mod generate;
pub mod ingest;
pub mod serve;
pub mod validate;

use std::path::PathBuf;

use ampacity_uq_core::db::DistributionDb;
use ampacity_uq_core::rt::RtError;
use ampacity_uq_core::thermal::ConductorCatalog;
use ampacity_uq_core::weather::HorizonClass;

use crate::fail::{need, Failure, ResultExt};

pub(crate) fn load_catalog(path: Option<PathBuf>) -> Result<ConductorCatalog, Failure> {
    match path {
        Some(p) => {
            ConductorCatalog::from_path(&p).or_data(&format!("loading catalog {}", p.display()))
        }
        None => Ok(ConductorCatalog::builtin()),
    }
}

pub(crate) fn load_db(path: Option<PathBuf>) -> Result<DistributionDb, Failure> {
    let path = need("db", path)?;
    DistributionDb::load(&path).or_data(&format!("loading database {}", path.display()))
}

pub(crate) fn parse_horizon(name: &str) -> Result<HorizonClass, Failure> {
    name.parse().or_usage("parsing horizon")
}

/// Bad query values are the caller's fault; everything else means the
/// database cannot answer.
pub(crate) fn classify_rt(err: RtError, ctx: &str) -> Failure {
    let usage = matches!(err, RtError::InvalidQuery(_));
    let error = anyhow::Error::new(err).context(ctx.to_owned());
    if usage {
        Failure::usage(error)
    } else {
        Failure::data(error)
    }
}
