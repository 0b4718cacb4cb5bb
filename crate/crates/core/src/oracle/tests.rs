use super::*;
use crate::graph::{NodeTypeDecl, RelationDecl, Schema};
use crate::operators::{init_projections, OperatorVariant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn instance(seed: u64, with_self: bool) -> (DenseGraph, BilinearOperatorSet, Vec<TypeState>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = 3;
    let types = vec![NodeTypeDecl::new("a", 4, 3), NodeTypeDecl::new("b", 3, 2)];
    let mut rels = vec![RelationDecl::new("ab", "a", "b")];
    if with_self {
        rels.push(RelationDecl::new("bb", "b", "b"));
    }
    let schema = Schema::new(types, rels);
    let endpoints: Vec<_> = schema
        .relations
        .iter()
        .map(|r| schema.endpoints(r).unwrap())
        .collect();
    let relations = endpoints
        .iter()
        .map(|&(s, d)| {
            let (ns, nd) = (schema.node_types[s].count, schema.node_types[d].count);
            Matrix::from_fn(ns, nd, |_, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 })
        })
        .collect();
    let features = schema
        .node_types
        .iter()
        .map(|t| rand_matrix(&mut rng, t.count, t.feature_dim))
        .collect();
    let graph = DenseGraph {
        schema: schema.clone(),
        features,
        relations,
        endpoints,
    };
    let ops = init_projections(&schema, OperatorVariant::TypeDual, k, 2, 1.0, seed).unwrap();
    let blocks = schema
        .node_types
        .iter()
        .map(|t| TypeState {
            h: rand_matrix(&mut rng, t.count, k),
            p: rand_matrix(&mut rng, t.feature_dim, k),
            e: rand_matrix(&mut rng, t.count, k),
        })
        .collect();
    (graph, ops, blocks)
}

fn zero_like(blocks: &[TypeState]) -> Vec<TypeState> {
    blocks
        .iter()
        .map(|b| TypeState {
            h: Matrix::zeros(b.h.nrows(), b.h.ncols()),
            p: Matrix::zeros(b.p.nrows(), b.p.ncols()),
            e: Matrix::zeros(b.e.nrows(), b.e.ncols()),
        })
        .collect()
}

#[test]
fn optimum_start_returns_immediately() {
    let (mut graph, ops, blocks) = instance(1, true);
    for r in graph.relations.iter_mut() {
        r.fill(0.0);
    }
    let zero = zero_like(&blocks);
    let run = gd_minimize_eq6(
        &graph,
        &ops,
        &zero,
        1.0,
        1.0,
        &OracleConfig::default(),
        BlockMask::ALL,
    )
    .unwrap();
    assert_eq!(run.steps, 0);
    assert_eq!(run.trace, vec![0.0]);
    assert_eq!(brute_objective(&graph, &ops, &zero, 1.0, 1.0), 0.0);
}

#[test]
fn p_slice_converges_to_ridge_solution() {
    let (graph, ops, blocks) = instance(2, false);
    let (beta, gamma) = (0.5, 0.8);
    let cfg = OracleConfig {
        step_size: 0.05,
        max_steps: 50_000,
        grad_tol: 1e-11,
    };
    let run = gd_minimize_eq6(&graph, &ops, &blocks, beta, gamma, &cfg, BlockMask::P_ONLY).unwrap();
    for (t, (b, x)) in run.blocks.iter().zip(&graph.features).enumerate() {
        // closed form written out directly
        let d = x.ncols();
        let lhs = x.transpose() * x + Matrix::identity(d, d) * gamma;
        let rhs = x.transpose() * (&blocks[t].h - &blocks[t].e);
        let p = lhs.lu().solve(&rhs).unwrap();
        assert!((&b.p - &p).norm() <= 1e-4 * p.norm(), "type {t}");
        assert_eq!(b.h, blocks[t].h);
        assert_eq!(b.e, blocks[t].e);
    }
}

#[test]
fn trace_is_strictly_decreasing() {
    let (graph, ops, blocks) = instance(3, true);
    let cfg = OracleConfig {
        step_size: 0.01,
        max_steps: 300,
        grad_tol: 1e-12,
    };
    let run = gd_minimize_eq6(&graph, &ops, &blocks, 1.0, 1.0, &cfg, BlockMask::ALL).unwrap();
    assert!(run.steps > 0);
    assert!(run.trace.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn residual_penalty_gradient_matches() {
    // no relations, X = 0: objective is ||H - E||^2 + beta ||E||^2 + gamma ||P||^2
    let (mut graph, ops, blocks) = instance(4, false);
    graph.relations.clear();
    graph.endpoints.clear();
    for x in graph.features.iter_mut() {
        x.fill(0.0);
    }
    let problem = OracleProblem {
        graph: &graph,
        ops: &ops,
        beta: 2.5,
        gamma: 0.0,
    };
    let grad = problem.gradient(&blocks);
    for (g, b) in grad.iter().zip(&blocks) {
        let expected = (&b.e - &b.h) * 2.0 + &b.e * 5.0;
        assert!((&g.e - expected).norm() <= 1e-12);
    }
    let d = finite_diff_gradcheck(&problem, |b| problem.objective(b), &blocks, 1e-5);
    assert!(d <= 1e-6, "{d}");
}

#[test]
fn gradcheck_random_and_zero_points() {
    for seed in 0..5 {
        let (graph, ops, blocks) = instance(10 + seed, true);
        let problem = OracleProblem {
            graph: &graph,
            ops: &ops,
            beta: 0.9,
            gamma: 1.1,
        };
        let d = finite_diff_gradcheck(&problem, |b| problem.objective(b), &blocks, 1e-5);
        assert!(d <= 1e-4, "seed {seed}: {d}");
        let zero = zero_like(&blocks);
        let d0 = finite_diff_gradcheck(&problem, |b| problem.objective(b), &zero, 1e-5);
        assert!(d0 <= 1e-6, "seed {seed}: {d0}");
    }
}

#[test]
fn gradcheck_flags_a_wrong_objective() {
    let (graph, ops, blocks) = instance(20, false);
    let problem = OracleProblem {
        graph: &graph,
        ops: &ops,
        beta: 1.0,
        gamma: 1.0,
    };
    let d = finite_diff_gradcheck(&problem, |b| 2.0 * problem.objective(b), &blocks, 1e-5);
    assert!(d > 0.1);
}

#[test]
fn bilinear_fit_recovers_planted_operator() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let hs = rand_matrix(&mut rng, 9, 3);
    let hd = rand_matrix(&mut rng, 7, 3);
    let m = rand_matrix(&mut rng, 3, 3);
    let target = &hs * &m * hd.transpose();
    let fit = gd_fit_bilinear(&hs, &hd, &target, &OracleConfig::default()).unwrap();
    assert!((&fit.prediction - &target).norm() <= 1e-9 * target.norm());
    assert!(fit.trace.windows(2).all(|w| w[1] < w[0]));
    assert!(gd_fit_bilinear(&hs, &hd, &Matrix::zeros(2, 2), &OracleConfig::default()).is_err());
}

#[test]
fn bilinear_fit_is_the_projection() {
    // best fit is Ps R Pd with Ps, Pd orthogonal projectors onto the spans
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let hs = rand_matrix(&mut rng, 8, 2);
    let hd = rand_matrix(&mut rng, 6, 3);
    let target = rand_matrix(&mut rng, 8, 6);
    let proj = |h: &Matrix| h * (h.transpose() * h).try_inverse().unwrap() * h.transpose();
    let expected = proj(&hs) * &target * proj(&hd);
    let fit = gd_fit_bilinear(&hs, &hd, &target, &OracleConfig::default()).unwrap();
    assert!((&fit.prediction - expected).norm() <= 1e-9 * target.norm());
}
