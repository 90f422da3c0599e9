//! Atomic file output with provenance.

use std::fs;
use std::path::{Path, PathBuf};

use msc_threshold::output::Provenance;
use serde::Serialize;

use crate::error::CliError;

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Writes via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(io(&tmp))?;
    fs::rename(&tmp, path).map_err(io(path))
}

/// Top-level JSON document: provenance, the config echo, then the payload.
#[derive(Serialize)]
pub struct Document<'a, C: Serialize, T: Serialize> {
    pub provenance: &'a Provenance,
    pub config: &'a C,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_json<C: Serialize, T: Serialize>(path: &Path, prov: &Provenance, config: &C, body: T) -> Result<(), CliError> {
    let doc = Document { provenance: prov, config, body };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io(path))
}
