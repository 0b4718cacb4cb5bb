use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::io::{read_matrix_csv, write_json, write_matrix_csv};
use crate::baselines::BaselineConfig;
use crate::error::{DrsaError, Result};
use crate::linalg::{all_finite, Matrix};
use crate::solver::{AlignmentState, SolverConfig};

pub const METADATA_FILE: &str = "run.json";

/// Sidecar describing how an embedding directory was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RunMetadata {
    Drsa {
        config: SolverConfig,
        iterations: usize,
        objective_trace: Vec<f64>,
        types: Vec<String>,
    },
    Baseline {
        config: BaselineConfig,
        types: Vec<String>,
    },
    /// Planted latent factors written by the synthetic generator.
    Truth { types: Vec<String> },
}

impl RunMetadata {
    pub fn types(&self) -> &[String] {
        match self {
            RunMetadata::Drsa { types, .. }
            | RunMetadata::Baseline { types, .. }
            | RunMetadata::Truth { types } => types,
        }
    }
}

pub fn embedding_path(dir: &Path, type_name: &str) -> PathBuf {
    dir.join(format!("{type_name}.csv"))
}

/// Writes `<type>.csv` per block plus [`METADATA_FILE`]. Returns the written
/// paths, metadata last.
pub fn write_embedding_dir(
    dir: &Path,
    names: &[String],
    blocks: &[Matrix],
    meta: &RunMetadata,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::with_capacity(blocks.len() + 1);
    for (name, block) in names.iter().zip(blocks) {
        if !all_finite(block) {
            return Err(DrsaError::NonFinite(format!("embedding of '{name}'")));
        }
        let path = embedding_path(dir, name);
        write_matrix_csv(&path, block)?;
        written.push(path);
    }
    let meta_path = dir.join(METADATA_FILE);
    write_json(&meta_path, meta)?;
    written.push(meta_path);
    Ok(written)
}

/// Saves the latent blocks of a solver run together with its configuration
/// and objective trace.
pub fn save_embeddings(
    state: &AlignmentState,
    cfg: &SolverConfig,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let meta = RunMetadata::Drsa {
        config: cfg.clone(),
        iterations: state.iteration,
        objective_trace: state.objective_trace.clone(),
        types: state.type_names.clone(),
    };
    write_embedding_dir(dir, &state.type_names, &state.latent_blocks(), &meta)
}

pub fn read_metadata(dir: &Path) -> Result<RunMetadata> {
    let path = dir.join(METADATA_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| DrsaError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|source| DrsaError::Json { path, source })
}

/// Reads `<type>.csv` for each name.
pub fn load_embeddings(dir: &Path, names: &[String]) -> Result<Vec<Matrix>> {
    names
        .iter()
        .map(|n| read_matrix_csv(&embedding_path(dir, n)))
        .collect()
}
