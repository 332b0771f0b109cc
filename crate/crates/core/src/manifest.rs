//! Run manifests.
//!
//! Every CLI run writes `<command>.manifest.json` next to its outputs:
//!
//! ```text
//! {
//!   "tool": "spinlattice", "version": "0.1.0", "format_version": 1,
//!   "command": "rates",
//!   "argv": [...],                          // as typed, informational
//!   "plan": { "rates": { ... } },           // fully resolved parameters
//!   "inputs":  [{ "path": "/abs/derivatives.json", "sha256": "..." }],
//!   "outputs": [{ "path": "rates.csv", "sha256": "..." }],
//!   "warnings": [...]
//! }
//! ```
//!
//! Input paths are absolute, output paths are relative to the manifest's
//! directory. There are no timestamps, so the same plan on the same inputs
//! gives a byte-identical manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cli::Plan;
use crate::error::{Error, Result};
use crate::io::{write_text, FORMAT_VERSION};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub format_version: u32,
    pub command: String,
    pub argv: Vec<String>,
    pub plan: Plan,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn digest(path: &Path, recorded_as: PathBuf) -> Result<FileDigest> {
    Ok(FileDigest { path: recorded_as, sha256: sha256_file(path)? })
}

pub fn manifest_file_name(command: &str) -> String {
    format!("{command}.manifest.json")
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(manifest_file_name(&self.command));
        let mut text =
            serde_json::to_string_pretty(self).map_err(|e| Error::Computation(format!("serialization failed: {e}")))?;
        text.push('\n');
        write_text(&path, &text)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::Parse { path: path.display().to_string(), message: e.to_string() })?;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::Parse {
                path: path.display().to_string(),
                message: format!("unsupported format_version {}", m.format_version),
            });
        }
        Ok(m)
    }

    /// Inputs whose current contents differ from the recorded hashes.
    pub fn changed_inputs(&self) -> Result<Vec<PathBuf>> {
        let mut changed = Vec::new();
        for f in &self.inputs {
            if sha256_file(&f.path)? != f.sha256 {
                changed.push(f.path.clone());
            }
        }
        Ok(changed)
    }
}
