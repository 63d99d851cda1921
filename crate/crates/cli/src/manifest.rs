use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::Global;

#[derive(Debug, Serialize)]
pub struct RunManifest<'a, P: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub parameters: &'a P,
    pub inputs: Vec<PathBuf>,
    pub output_dir: &'a Path,
    pub seed: u64,
    pub config: Option<&'a Path>,
    pub outputs: Vec<String>,
    pub wall_clock_s: f64,
}

/// Collects the files a command writes and finishes with the manifest.
pub struct Run<'a> {
    global: &'a Global,
    command: &'static str,
    started: Instant,
    inputs: Vec<PathBuf>,
    outputs: Vec<String>,
}

impl<'a> Run<'a> {
    pub fn start(global: &'a Global, command: &'static str, inputs: &[&Path]) -> Result<Self> {
        std::fs::create_dir_all(&global.out)
            .with_context(|| format!("creating output directory {}", global.out.display()))?;
        Ok(Self {
            global,
            command,
            started: Instant::now(),
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            outputs: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.global.out.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn finish<P: Serialize>(self, parameters: &P) -> Result<()> {
        let manifest = RunManifest {
            tool: "cyclust",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            parameters,
            inputs: self.inputs,
            output_dir: &self.global.out,
            seed: self.global.seed,
            config: self.global.config.as_deref(),
            outputs: self.outputs,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.global.out.join("manifest.json");
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
