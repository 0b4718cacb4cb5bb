//! Planted synthetic heterogeneous graphs.
//!
//! Latent blocks `H*_t` and type-dual operators `M*_r = A*_src B*_dst^T` are
//! sampled; relations are the thresholded scores `H*_src M*_r H*_dst^T` and
//! features are `H*_t Q_t` plus optional Gaussian noise.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::io::{save_graph, write_json};
use super::persist::{write_embedding_dir, RunMetadata};
use crate::error::{DrsaError, Result};
use crate::graph::{
    edges_from_dense, FeatureBlock, HeteroGraph, NodeTypeDecl, RelationBlock, RelationDecl, Schema,
};
use crate::linalg::{gaussian, Matrix};
use crate::operators::{
    default_rho, default_sigma, reconstruct_relation, BilinearOperatorSet, TypeDual,
};

pub const TRUTH_FILE: &str = "truth.json";
pub const TRUTH_DIR: &str = "truth";

fn default_std() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub node_types: Vec<NodeTypeDecl>,
    pub relations: Vec<RelationDecl>,
    /// Planted latent dimension.
    pub planted_k: usize,
    /// Rank of the planted type-dual factors; defaults to `max(2, k / 4)`.
    #[serde(default)]
    pub planted_rho: Option<usize>,
    #[serde(default)]
    pub noise_std: f64,
    /// Entries of the planted score strictly above this become edges.
    #[serde(default)]
    pub edge_threshold: f64,
    #[serde(default)]
    pub seed: u64,
    /// Per-entry std of the planted latent blocks.
    #[serde(default = "default_std")]
    pub latent_std: f64,
    /// Each type's latent block is shifted by this distance along its own
    /// random unit direction.
    #[serde(default)]
    pub type_mean_shift: f64,
}

impl SynthSpec {
    pub fn planted_rho(&self) -> usize {
        self.planted_rho
            .unwrap_or_else(|| default_rho(self.planted_k))
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DrsaError::InvalidConfig(m));
        if self.planted_k == 0 {
            return bad("planted_k must be at least 1".into());
        }
        let rho = self.planted_rho();
        if rho == 0 || rho > self.planted_k {
            return bad(format!("planted_rho must be in 1..={}", self.planted_k));
        }
        for (name, v) in [
            ("noise_std", self.noise_std),
            ("edge_threshold", self.edge_threshold),
            ("latent_std", self.latent_std),
            ("type_mean_shift", self.type_mean_shift),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.noise_std < 0.0 || self.latent_std < 0.0 {
            return bad("standard deviations must be >= 0".into());
        }
        Ok(())
    }
}

/// Planted quantities behind a synthetic graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub planted_k: usize,
    pub planted_rho: usize,
    pub edge_threshold: f64,
    pub type_names: Vec<String>,
    pub relation_names: Vec<String>,
    /// `H*_t`, row-major.
    pub latent: Vec<Vec<Vec<f64>>>,
    /// `[A*_0, B*_0, A*_1, B*_1, ...]`, row-major.
    pub factors: Vec<Vec<Vec<f64>>>,
    /// `M*_r`, row-major.
    pub operators: Vec<Vec<Vec<f64>>>,
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], cols: usize) -> Matrix {
    Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
}

impl GroundTruth {
    pub fn latent_blocks(&self) -> Vec<Matrix> {
        self.latent
            .iter()
            .map(|r| from_rows(r, self.planted_k))
            .collect()
    }

    pub fn operator_matrices(&self) -> Vec<Matrix> {
        self.operators
            .iter()
            .map(|r| from_rows(r, self.planted_k))
            .collect()
    }

    /// Real-valued planted scores `H*_src M*_r H*_dst^T`, schema order.
    pub fn scores(&self, schema: &Schema) -> Result<Vec<Matrix>> {
        let latent = self.latent_blocks();
        let ops = self.operator_matrices();
        schema
            .relations
            .iter()
            .zip(&ops)
            .map(|(rel, m)| {
                let (s, d) = schema.endpoints(rel)?;
                reconstruct_relation(&latent[s], m, &latent[d])
            })
            .collect()
    }

    /// Binary relations recomputed from the planted factors.
    pub fn relations(&self, schema: &Schema) -> Result<Vec<Matrix>> {
        Ok(self
            .scores(schema)?
            .into_iter()
            .map(|s| s.map(|v| if v > self.edge_threshold { 1.0 } else { 0.0 }))
            .collect())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticGraph {
    pub graph: HeteroGraph,
    pub truth: GroundTruth,
}

/// Samples a planted graph in memory. Deterministic in `spec`.
pub fn synthesize(spec: &SynthSpec) -> Result<SyntheticGraph> {
    spec.validate()?;
    let schema = Schema::new(spec.node_types.clone(), spec.relations.clone());
    let k = spec.planted_k;
    let rho = spec.planted_rho();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let latent: Vec<Matrix> = schema
        .node_types
        .iter()
        .map(|t| {
            let mut h = gaussian(t.count, k, spec.latent_std, &mut rng);
            if spec.type_mean_shift != 0.0 {
                let dir = gaussian(1, k, 1.0, &mut rng);
                let shift = &dir * (spec.type_mean_shift / dir.norm().max(f64::MIN_POSITIVE));
                for mut row in h.row_iter_mut() {
                    row += &shift;
                }
            }
            h
        })
        .collect();

    let factors: Vec<Matrix> = (0..2 * schema.node_types.len())
        .map(|_| gaussian(k, rho, default_sigma(rho), &mut rng))
        .collect();
    let ops = BilinearOperatorSet::from_factors(Arc::new(TypeDual), &schema, k, rho, factors)?;

    let mut blocks = Vec::with_capacity(schema.relations.len());
    for (r, rel) in schema.relations.iter().enumerate() {
        let (s, d) = schema.endpoints(rel)?;
        let scores = reconstruct_relation(&latent[s], ops.operator(r), &latent[d])?;
        let dense = scores.map(|v| if v > spec.edge_threshold { 1.0 } else { 0.0 });
        let edges = edges_from_dense(&dense);
        if edges.is_empty() {
            log::warn!(
                "relation '{}' has no edges at threshold {}",
                rel.name,
                spec.edge_threshold
            );
        } else if edges.len() == dense.len() {
            log::warn!(
                "relation '{}' is complete at threshold {}",
                rel.name,
                spec.edge_threshold
            );
        }
        blocks.push(RelationBlock::new(&rel.name, edges));
    }

    let normal = StandardNormal;
    let features = schema
        .node_types
        .iter()
        .zip(&latent)
        .map(|(t, h)| {
            let q = gaussian(k, t.feature_dim, 1.0, &mut rng);
            let mut x = h * q;
            if spec.noise_std > 0.0 {
                for v in x.iter_mut() {
                    let z: f64 = normal.sample(&mut rng);
                    *v += spec.noise_std * z;
                }
            }
            FeatureBlock::new(&t.name, x)
        })
        .collect();

    let truth = GroundTruth {
        planted_k: k,
        planted_rho: rho,
        edge_threshold: spec.edge_threshold,
        type_names: schema.node_types.iter().map(|t| t.name.clone()).collect(),
        relation_names: schema.relations.iter().map(|r| r.name.clone()).collect(),
        latent: latent.iter().map(to_rows).collect(),
        factors: ops.factors().iter().map(to_rows).collect(),
        operators: ops.operators().iter().map(to_rows).collect(),
    };
    let graph = HeteroGraph::new(schema, features, blocks);
    graph.ensure_valid()?;
    Ok(SyntheticGraph { graph, truth })
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub manifest: PathBuf,
    pub truth: PathBuf,
    pub truth_embeddings: PathBuf,
}

/// Writes a planted graph, its ground-truth sidecar and the planted latent
/// blocks (as an embedding directory) under `out`.
pub fn synth_generate(spec: &SynthSpec, out: &Path) -> Result<SynthOutput> {
    let SyntheticGraph { graph, truth } = synthesize(spec)?;
    let manifest = save_graph(&graph, out)?;
    let truth_path = out.join(TRUTH_FILE);
    write_json(&truth_path, &truth)?;
    let truth_dir = out.join(TRUTH_DIR);
    write_embedding_dir(
        &truth_dir,
        &truth.type_names,
        &truth.latent_blocks(),
        &RunMetadata::Truth {
            types: truth.type_names.clone(),
        },
    )?;
    Ok(SynthOutput {
        manifest,
        truth: truth_path,
        truth_embeddings: truth_dir,
    })
}

pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    let text = std::fs::read_to_string(path).map_err(|e| DrsaError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| DrsaError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_spec(path: &Path) -> Result<SynthSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| DrsaError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| DrsaError::Json {
        path: path.to_path_buf(),
        source,
    })
}
