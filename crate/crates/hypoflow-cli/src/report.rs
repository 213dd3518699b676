//! Self-describing output files: every report embeds the run configuration
//! and seed, and files are written atomically (temp file + rename) so
//! partially written output never appears under the target name.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    /// Flat echo of the effective arguments.
    pub args: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(command: &str, seed: u64) -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            seed,
            args: BTreeMap::new(),
        }
    }

    pub fn arg(mut self, key: &str, value: impl ToString) -> Self {
        self.args.insert(key.to_string(), value.to_string());
        self
    }
}

#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub config: RunConfig,
    pub payload: T,
}

pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

pub fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    config: &RunConfig,
    payload: &T,
) -> std::io::Result<()> {
    let report = Report {
        config: config.clone(),
        payload,
    };
    let text = serde_json::to_string_pretty(&report).expect("serializable report");
    write_atomic(&dir.join(name), &(text + "\n"))
}
