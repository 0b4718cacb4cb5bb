//! Two-stage block coordinate descent for relation-aware feature alignment.
//!
//! Each iteration runs a structure-driven sweep that re-solves every latent
//! block `H_t` from the relations incident to `t` (Gauss-Seidel, schema
//! order), followed by a feature sweep that splits each `H_t` into a ridge
//! projection `X_t P_t` and a shrunk residual `E_t`.

mod config;
mod stages;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::SolverConfig;
pub use stages::{
    eval_objective, eval_stage1_objective, stage1_system, stage1_update_type,
    stage2_decompose_type, Stage1System, Stage2Outcome,
};

use crate::diagnostics::{build_report, DiagnosticsReport};
use crate::error::{DrsaError, Result};
use crate::graph::{HeteroGraph, Schema};
use crate::linalg::{gaussian, Matrix};
use crate::operators::{init_projections, BilinearOperatorSet};

/// Validated graph with every relation materialized as a dense block.
#[derive(Debug, Clone)]
pub struct DenseGraph {
    pub schema: Schema,
    /// `X_t` in schema order.
    pub features: Vec<Matrix>,
    /// `R_r` in schema order.
    pub relations: Vec<Matrix>,
    /// `(src, dst)` type index of each relation.
    pub endpoints: Vec<(usize, usize)>,
}

impl DenseGraph {
    pub fn from_graph(graph: &HeteroGraph) -> Result<Self> {
        graph.ensure_valid()?;
        let schema = graph.schema.clone();
        let features = schema
            .node_types
            .iter()
            .map(|t| graph.feature(&t.name).cloned())
            .collect::<Result<Vec<_>>>()?;
        let relations = graph.dense_relations()?;
        let endpoints = schema
            .relations
            .iter()
            .map(|r| schema.endpoints(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            schema,
            features,
            relations,
            endpoints,
        })
    }

    pub fn n_types(&self) -> usize {
        self.schema.node_types.len()
    }

    /// Relation indices leaving type `t`.
    pub fn outgoing(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.endpoints
            .iter()
            .enumerate()
            .filter(move |(_, &(s, _))| s == t)
            .map(|(r, _)| r)
    }

    /// Relation indices entering type `t`.
    pub fn incoming(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.endpoints
            .iter()
            .enumerate()
            .filter(move |(_, &(_, d))| d == t)
            .map(|(r, _)| r)
    }
}

/// Latent block, semantic projection and structural residual of one type.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeState {
    /// `n x k`
    pub h: Matrix,
    /// `d x k`
    pub p: Matrix,
    /// `n x k`
    pub e: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentState {
    pub type_names: Vec<String>,
    pub blocks: Vec<TypeState>,
    pub iteration: usize,
    pub objective_trace: Vec<f64>,
}

impl AlignmentState {
    pub fn h(&self, t: usize) -> &Matrix {
        &self.blocks[t].h
    }

    pub fn latent_blocks(&self) -> Vec<Matrix> {
        self.blocks.iter().map(|b| b.h.clone()).collect()
    }

    pub fn block(&self, type_name: &str) -> Option<&TypeState> {
        self.type_names
            .iter()
            .position(|n| n == type_name)
            .map(|i| &self.blocks[i])
    }
}

/// Gaussian `H` with std `init_scale / sqrt(k)`, `P = 0`, `E = H`.
pub fn init_state(graph: &DenseGraph, cfg: &SolverConfig) -> Result<AlignmentState> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // operators draw from stream 0 of the same seed
    rng.set_stream(1);
    let std = cfg.init_scale / (cfg.k as f64).sqrt();
    let blocks = graph
        .schema
        .node_types
        .iter()
        .map(|t| {
            let h = gaussian(t.count, cfg.k, std, &mut rng);
            TypeState {
                p: Matrix::zeros(t.feature_dim, cfg.k),
                e: h.clone(),
                h,
            }
        })
        .collect();
    Ok(AlignmentState {
        type_names: graph
            .schema
            .node_types
            .iter()
            .map(|t| t.name.clone())
            .collect(),
        blocks,
        iteration: 0,
        objective_trace: Vec::new(),
    })
}

/// The fixed operator set a run with `cfg` uses.
pub fn operators_for(schema: &Schema, cfg: &SolverConfig) -> Result<BilinearOperatorSet> {
    cfg.validate()?;
    init_projections(schema, cfg.variant, cfg.k, cfg.rho, cfg.sigma, cfg.seed)
}

/// One structure-driven sweep over all types in schema order.
pub fn stage1_sweep(
    state: &mut AlignmentState,
    graph: &DenseGraph,
    ops: &BilinearOperatorSet,
    beta: f64,
) -> Result<()> {
    for t in 0..graph.n_types() {
        let h = stage1_update_type(state, graph, ops, t, beta)?;
        state.blocks[t].h = h;
    }
    Ok(())
}

/// One feature-decomposition sweep. Types are independent, so they are
/// processed on the rayon pool; results do not depend on the thread count.
pub fn stage2_sweep(
    state: &mut AlignmentState,
    graph: &DenseGraph,
    beta: f64,
    gamma: f64,
) -> Result<()> {
    let outcomes = state
        .blocks
        .par_iter()
        .zip(graph.features.par_iter())
        .map(|(block, x)| stage2_decompose_type(&block.h, &block.e, x, beta, gamma))
        .collect::<Vec<_>>();
    for (block, outcome) in state.blocks.iter_mut().zip(outcomes) {
        let Stage2Outcome { p, e, h } = outcome?;
        *block = TypeState { h, p, e };
    }
    Ok(())
}

/// Runs the full alternating solver from a fresh initialization.
pub fn run_drsa(
    graph: &HeteroGraph,
    cfg: &SolverConfig,
) -> Result<(AlignmentState, DiagnosticsReport)> {
    let dense = DenseGraph::from_graph(graph)?;
    let ops = operators_for(&dense.schema, cfg)?;
    let state = run_prepared(&dense, &ops, cfg)?;
    let report = build_report(&dense, &ops, &state.latent_blocks(), &state.objective_trace)?;
    Ok((state, report))
}

/// Solver loop on an already materialized graph and operator set.
pub fn run_prepared(
    graph: &DenseGraph,
    ops: &BilinearOperatorSet,
    cfg: &SolverConfig,
) -> Result<AlignmentState> {
    cfg.validate()?;
    if ops.k() != cfg.k {
        return Err(DrsaError::dims(
            "run_drsa",
            format!("operator set has k = {}, config has k = {}", ops.k(), cfg.k),
        ));
    }
    let mut state = init_state(graph, cfg)?;
    let initial = eval_objective(&state, graph, ops, cfg.beta, cfg.gamma)?;
    state.objective_trace.push(initial);

    for iter in 1..=cfg.max_iters {
        stage1_sweep(&mut state, graph, ops, cfg.beta)?;
        stage2_sweep(&mut state, graph, cfg.beta, cfg.gamma)?;
        state.iteration = iter;

        let value = eval_objective(&state, graph, ops, cfg.beta, cfg.gamma)?;
        let prev = *state
            .objective_trace
            .last()
            .expect("trace starts non-empty");
        state.objective_trace.push(value);
        log::debug!("iteration {iter}: objective {value:.6e}");

        if cfg.rel_tol > 0.0 {
            let change = (prev - value).abs() / prev.abs().max(f64::EPSILON);
            if change < cfg.rel_tol {
                log::info!("converged after {iter} iterations (relative change {change:.3e})");
                break;
            }
        }
    }
    Ok(state)
}
