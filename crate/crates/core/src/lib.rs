//! Relation-aware feature alignment for multi-domain heterogeneous graphs.
//!
//! Per-type node features are mapped into a shared `k`-dimensional latent
//! space. Each latent block is decomposed as `H_t = X_t P_t + E_t` and fitted
//! so that every relation is reconstructed by a fixed random bilinear
//! operator, `R_r ~ H_src M_r H_dst^T`. The solver alternates closed-form
//! block updates; see [`solver::run_drsa`].
//!
//! Modules:
//! * [`graph`]: data model and schema validation
//! * [`operators`]: random bilinear operator families, registered by name
//! * [`solver`]: the alternating solver and its objective
//! * [`baselines`]: per-type SVD/PCA input alignment
//! * [`diagnostics`]: relation reconstruction and type separation metrics
//! * [`oracle`]: brute-force references for verification
//! * [`workbench`]: file formats, synthetic data and the CLI

pub mod baselines;
pub mod diagnostics;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod operators;
pub mod oracle;
pub mod solver;
pub mod workbench;

pub use error::{DrsaError, Result};
pub use graph::{HeteroGraph, NodeTypeDecl, RelationDecl, Schema};
pub use linalg::Matrix;
pub use operators::{BilinearOperatorSet, OperatorVariant};
pub use solver::{run_drsa, AlignmentState, SolverConfig};
