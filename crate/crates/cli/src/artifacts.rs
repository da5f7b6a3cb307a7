//! File formats written by the commands and the run manifest.

use std::path::{Path, PathBuf};

use plmm::evolve::{BicEntry, InterpretationMatrix};
use plmm::io::{LinkRecord, ModelRecord};
use plmm::synth::RemovedCluster;
use plmm::{ClusterMapping, SubModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub schema_version: u32,
    pub epoch_ids: Vec<String>,
    pub labels: Vec<Vec<usize>>,
    pub true_models: Vec<ModelRecord>,
    pub true_submodels: Vec<SubModel>,
    pub true_links: Vec<LinkRecord>,
    pub removed: Option<RemovedCluster>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEpoch {
    pub epoch_id: String,
    pub k: usize,
    pub loglik: f64,
    pub model: ModelRecord,
    pub bic_table: Vec<BicEntry<f64>>,
    pub mapping: Option<ClusterMapping<f64>>,
    pub source_components: Option<Vec<Vec<f64>>>,
    pub k_scores: Vec<(usize, f64)>,
    pub labels: Vec<usize>,
    /// Summed counts per cluster and feature under the MAP labels.
    pub cluster_counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFile {
    pub schema_version: u32,
    pub features: Vec<String>,
    pub include_coefficient: bool,
    pub epochs: Vec<FitEpoch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarityCount {
    pub polarity: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectCounts {
    pub aspect: String,
    pub polarities: Vec<PolarityCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterHistogram {
    pub epoch_id: String,
    pub cluster: usize,
    pub aspects: Vec<AspectCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionInterpretation {
    pub epoch_id: String,
    pub submodel: SubModel,
    pub matrix: InterpretationMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationFile {
    pub schema_version: u32,
    pub features: Vec<String>,
    pub transitions: Vec<TransitionInterpretation>,
    pub histograms: Option<Vec<ClusterHistogram>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

/// Which command ran and with what; enough to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Invocation {
    Simulate,
    Fit {
        dataset: PathBuf,
    },
    Evaluate {
        dataset: PathBuf,
        truth: Option<PathBuf>,
        model: Option<PathBuf>,
    },
    Interpret {
        fit: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub invocation: Invocation,
    pub config: RunConfig,
    pub rng_seed: u64,
    pub out_dir: PathBuf,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<Artifact, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(Artifact {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    Ok(text.into_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => {
            return Err(CliError::Validation(format!(
                "{}: unsupported schema_version {v}",
                path.display()
            )))
        }
        None => {
            return Err(CliError::Validation(format!(
                "{}: missing schema_version; add \"schema_version\": {FORMAT_VERSION} to migrate",
                path.display()
            )))
        }
    }
    serde_json::from_value(value)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Collects output files under one directory and their checksums.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<Artifact>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.written.push(Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Records a file that some library routine wrote directly.
    pub fn record(&mut self, rel: &str) -> Result<(), CliError> {
        let bytes = std::fs::read(self.root.join(rel))?;
        self.written.push(Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Writes `manifest.json`, which is not itself listed among the outputs.
    pub fn finish(
        self,
        invocation: Invocation,
        config: &RunConfig,
        rng_seed: u64,
        inputs: Vec<Artifact>,
    ) -> Result<Manifest, CliError> {
        let manifest = Manifest {
            schema_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            invocation,
            config: config.clone(),
            rng_seed,
            out_dir: self.root.clone(),
            inputs,
            outputs: self.written,
        };
        std::fs::write(self.root.join("manifest.json"), to_json(&manifest)?)?;
        Ok(manifest)
    }
}
