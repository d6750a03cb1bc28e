use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::Serialize;

use crate::fail::{Failure, ResultExt};

pub fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .or_data(&format!("opening {}", path.display()))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .or_data(&format!("creating {}", path.display()))
}

pub fn ensure_dir(path: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(path).or_data(&format!("creating directory {}", path.display()))
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).or_internal("serializing report")?;
    std::fs::write(path, text + "\n").or_data(&format!("writing {}", path.display()))
}
