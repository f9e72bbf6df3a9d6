use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use metrack::PipelineConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

/// Run record written next to every command's outputs. It holds no
/// timestamps or absolute paths, so equal runs produce equal manifests.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a PipelineConfig,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn digest(path: &Path, name: String) -> Result<FileDigest> {
    Ok(FileDigest {
        name,
        sha256: sha256_file(path)?,
    })
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'a str, config: &'a PipelineConfig) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Inputs are recorded by file name only.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        let name = path
            .file_name()
            .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        self.inputs.push(digest(path, name)?);
        Ok(())
    }

    /// Outputs are recorded relative to the output directory.
    pub fn output(&mut self, out_dir: &Path, path: &Path) -> Result<()> {
        let rel = path.strip_prefix(out_dir).unwrap_or(path);
        let name = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        self.outputs.push(digest(path, name)?);
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
