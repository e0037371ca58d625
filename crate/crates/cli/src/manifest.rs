//! Provenance record written next to every set of outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use rqss_core::modes::ModeSums;
use rqss_core::protocol::ProtocolConfig;

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct TailBounds {
    pub alpha: f64,
    pub beta: f64,
}

impl TailBounds {
    pub fn absorb(&mut self, sums: &ModeSums) {
        self.alpha = self.alpha.max(sums.tail_alpha);
        self.beta = self.beta.max(sums.tail_beta);
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub config: ProtocolConfig,
    pub outputs: Vec<PathBuf>,
    pub tool_version: &'static str,
    pub timestamp: String,
    pub h_ladder: [f64; 3],
    #[serde(rename = "N_max")]
    pub n_max: usize,
    pub truncation_tail_bounds: TailBounds,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub arguments: BTreeMap<&'static str, String>,
    pub execution: &'static str,
}

impl RunManifest {
    pub fn new(command: &str, config_path: Option<&Path>, config: &ProtocolConfig) -> Self {
        Self {
            command: command.to_owned(),
            config_path: config_path.map(Path::to_path_buf),
            config: config.clone(),
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            h_ladder: config.ladder(),
            n_max: config.n_max,
            truncation_tail_bounds: TailBounds::default(),
            tolerances: BTreeMap::new(),
            arguments: BTreeMap::new(),
            execution: if config.execution().is_parallel() {
                "parallel"
            } else {
                "sequential"
            },
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}.manifest.json", self.command)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.file_name());
        write_json(&path, self)?;
        Ok(path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
