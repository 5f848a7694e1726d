use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{io_error, PipelineError, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    /// SHA-256 of the canonical JSON form of the configuration.
    pub config_hash: String,
    /// SHA-256 of every input file, keyed by path.
    pub inputs: BTreeMap<String, String>,
    pub config: serde_json::Value,
}

fn digest_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

fn digest_dir(dir: &Path) -> Result<String, PipelineError> {
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| io_error(dir, e))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name())
        .collect();
    names.sort();
    let mut h = Sha256::new();
    for name in names {
        let bytes = std::fs::read(dir.join(&name)).map_err(|e| io_error(&dir.join(&name), e))?;
        h.update(name.to_string_lossy().as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(format!("{:x}", h.finalize()))
}

pub fn build_manifest(config: &RunConfig) -> Result<Manifest, PipelineError> {
    let json = serde_json::to_value(config).map_err(|e| PipelineError::Config(e.to_string()))?;
    let canonical = serde_json::to_string(&json).expect("json value serializes");
    let mut inputs = BTreeMap::new();
    for p in &config.projects {
        inputs.insert(p.labels.display().to_string(), digest_file(&p.labels)?);
        if let Some(gs) = &p.gs {
            inputs.insert(gs.display().to_string(), digest_file(gs)?);
        }
        if let Some(dir) = &p.patches {
            inputs.insert(dir.display().to_string(), digest_dir(dir)?);
        }
    }
    Ok(Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: config.seed,
        config_hash: format!("{:x}", Sha256::digest(canonical.as_bytes())),
        inputs,
        config: json,
    })
}

pub fn write_manifest(config: &RunConfig) -> Result<Manifest, PipelineError> {
    let m = build_manifest(config)?;
    std::fs::create_dir_all(&config.out).map_err(|e| io_error(&config.out, e))?;
    let path = config.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
    Ok(m)
}
