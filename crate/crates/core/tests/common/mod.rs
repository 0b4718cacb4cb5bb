#![allow(dead_code)]

use drsa_core::graph::{NodeTypeDecl, RelationDecl, Schema};
use drsa_core::operators::{init_projections, BilinearOperatorSet, OperatorVariant};
use drsa_core::solver::{AlignmentState, DenseGraph, TypeState};
use drsa_core::workbench::synth::SynthSpec;
use drsa_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

pub fn state_from(schema: &Schema, blocks: Vec<TypeState>) -> AlignmentState {
    AlignmentState {
        type_names: schema.node_types.iter().map(|t| t.name.clone()).collect(),
        blocks,
        iteration: 0,
        objective_trace: vec![],
    }
}

/// A small random instance: 2 to 4 types, random relations (self-relations
/// allowed), dense 0/1 adjacency, TypeDual operators and a random state.
pub fn random_instance(seed: u64) -> (DenseGraph, BilinearOperatorSet, AlignmentState) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_types = rng.random_range(2..=4);
    let k = rng.random_range(1..=5);
    let rho = rng.random_range(1..=k);
    let types: Vec<NodeTypeDecl> = (0..n_types)
        .map(|i| {
            NodeTypeDecl::new(
                format!("t{i}"),
                rng.random_range(2..=8),
                rng.random_range(1..=5),
            )
        })
        .collect();
    let n_rel = rng.random_range(1..=5);
    let relations: Vec<RelationDecl> = (0..n_rel)
        .map(|i| {
            let s = rng.random_range(0..n_types);
            let d = rng.random_range(0..n_types);
            RelationDecl::new(format!("r{i}"), format!("t{s}"), format!("t{d}"))
        })
        .collect();
    let schema = Schema::new(types, relations);
    let endpoints: Vec<(usize, usize)> = schema
        .relations
        .iter()
        .map(|r| schema.endpoints(r).unwrap())
        .collect();
    let rels = endpoints
        .iter()
        .map(|&(s, d)| {
            let (ns, nd) = (schema.node_types[s].count, schema.node_types[d].count);
            Matrix::from_fn(ns, nd, |_, _| if rng.random_bool(0.4) { 1.0 } else { 0.0 })
        })
        .collect();
    let features = schema
        .node_types
        .iter()
        .map(|t| rand_matrix(&mut rng, t.count, t.feature_dim))
        .collect();
    let sigma = rng.random_range(0.3..1.2);
    let ops = init_projections(&schema, OperatorVariant::TypeDual, k, rho, sigma, seed).unwrap();
    let blocks = schema
        .node_types
        .iter()
        .map(|t| TypeState {
            h: rand_matrix(&mut rng, t.count, k),
            p: rand_matrix(&mut rng, t.feature_dim, k),
            e: rand_matrix(&mut rng, t.count, k),
        })
        .collect();
    let state = state_from(&schema, blocks);
    let graph = DenseGraph {
        schema,
        features,
        relations: rels,
        endpoints,
    };
    (graph, ops, state)
}

/// Planted benchmark: three types, three cross-type relations, `k* = 8`,
/// TypeDual planted operators, no noise, half-dense relations.
pub fn planted_spec(seed: u64, type_mean_shift: f64) -> SynthSpec {
    SynthSpec {
        node_types: vec![
            NodeTypeDecl::new("author", 40, 12),
            NodeTypeDecl::new("paper", 60, 10),
            NodeTypeDecl::new("venue", 50, 16),
        ],
        relations: vec![
            RelationDecl::new("writes", "author", "paper"),
            RelationDecl::new("published_in", "paper", "venue"),
            RelationDecl::new("attends", "author", "venue"),
        ],
        planted_k: 8,
        planted_rho: None,
        noise_std: 0.0,
        edge_threshold: 0.0,
        seed,
        latent_std: 1.0,
        type_mean_shift,
    }
}
