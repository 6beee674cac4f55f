//! Versioned output files, staged in memory and committed by
//! temp-file-and-rename so a failed run leaves nothing behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::ExperimentConfig;

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest round-trip decimal; negative zero prints as `0`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        x.to_string()
    }
}

/// Comment header naming the format and echoing config and seed.
pub fn comment_header(task: &str, config: &ExperimentConfig) -> String {
    format!(
        "# format=boolean-lab-{task} v{FORMAT_VERSION}\n# tool=boolean-lab {TOOL_VERSION}\n# seed={}\n# config={}\n",
        config.model.seed,
        serde_json::to_string(config).expect("config serializes"),
    )
}

/// CSV body with a header row; fields are plain numbers or bare words.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(task: &str, config: &ExperimentConfig, columns: &[&str]) -> Self {
        let mut text = comment_header(task, config);
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        let fields: Vec<&str> = fields.iter().map(AsRef::as_ref).collect();
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    format: String,
    format_version: u32,
    tool_version: &'a str,
    task: &'a str,
    seed: u64,
    wall_clock_seconds: f64,
    config: &'a ExperimentConfig,
    result: &'a T,
}

pub fn json_summary<T: Serialize>(task: &str, config: &ExperimentConfig, seconds: f64, result: &T) -> Result<Vec<u8>> {
    let env = Envelope {
        format: format!("boolean-lab-{task}"),
        format_version: FORMAT_VERSION,
        tool_version: TOOL_VERSION,
        task,
        seed: config.model.seed,
        wall_clock_seconds: seconds,
        config,
        result,
    };
    let mut bytes = serde_json::to_vec_pretty(&env)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Files of one run, written only after every one of them is ready.
#[derive(Default)]
pub struct Staged {
    files: Vec<(String, Vec<u8>)>,
}

impl Staged {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let mut temps = Vec::new();
        for (name, bytes) in &self.files {
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            temps.push((tmp, dir.join(name)));
        }
        let mut written = Vec::new();
        for (tmp, path) in temps {
            tmp.persist(&path).with_context(|| format!("cannot write {}", path.display()))?;
            written.push(path);
        }
        Ok(written)
    }
}
