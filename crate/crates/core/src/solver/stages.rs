use crate::error::{DrsaError, Result};
use crate::linalg::{all_finite, ensure_finite, frobenius_sq, solve_spd, Matrix};
use crate::operators::BilinearOperatorSet;

use super::{AlignmentState, DenseGraph};

/// Normal equation `G H_t^T = W` of the structure-driven subproblem.
#[derive(Debug, Clone)]
pub struct Stage1System {
    /// `k x k`, symmetric positive definite for `beta > 0`.
    pub g: Matrix,
    /// `k x n_t`
    pub w: Matrix,
}

impl Stage1System {
    /// `||G H^T - W||_F / max(||W||_F, eps)`
    pub fn relative_residual(&self, h: &Matrix) -> f64 {
        let r = &self.g * h.transpose() - &self.w;
        r.norm() / self.w.norm().max(f64::EPSILON)
    }
}

/// Assembles `G` and `W` for type `t` from the current latent blocks of its
/// neighbours. A self-relation contributes to both the outgoing and the
/// incoming sums.
pub fn stage1_system(
    state: &AlignmentState,
    graph: &DenseGraph,
    ops: &BilinearOperatorSet,
    t: usize,
    beta: f64,
) -> Result<Stage1System> {
    let k = ops.k();
    let n = graph.schema.node_types[t].count;
    let mut g = Matrix::identity(k, k) * beta;
    let mut w = Matrix::zeros(k, n);

    for r in graph.outgoing(t) {
        let (_, d) = graph.endpoints[r];
        let m = ops.operator(r);
        let h_dst = state.h(d);
        let sigma = h_dst.transpose() * h_dst;
        g += m * sigma * m.transpose();
        // (R H_d M^T)^T = M H_d^T R^T
        w += m * (h_dst.transpose() * graph.relations[r].transpose());
    }
    for r in graph.incoming(t) {
        let (s, _) = graph.endpoints[r];
        let m = ops.operator(r);
        let h_src = state.h(s);
        let sigma = h_src.transpose() * h_src;
        g += m.transpose() * sigma * m;
        // (R^T H_s M)^T = M^T H_s^T R
        w += m.transpose() * (h_src.transpose() * &graph.relations[r]);
    }
    Ok(Stage1System { g, w })
}

/// Closed-form structure-driven update of `H_t`, all other blocks fixed.
pub fn stage1_update_type(
    state: &AlignmentState,
    graph: &DenseGraph,
    ops: &BilinearOperatorSet,
    t: usize,
    beta: f64,
) -> Result<Matrix> {
    if !(beta > 0.0) {
        return Err(DrsaError::InvalidConfig(format!(
            "beta must be > 0 (got {beta})"
        )));
    }
    let system = stage1_system(state, graph, ops, t, beta)?;
    let name = &graph.schema.node_types[t].name;
    let ht = solve_spd(
        &system.g,
        &system.w,
        &format!("structure update of '{name}'"),
    )?;
    let h = ht.transpose();
    ensure_finite(&h, || format!("structure update of '{name}'"))?;
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage2Outcome {
    pub p: Matrix,
    pub e: Matrix,
    pub h: Matrix,
}

/// Ridge projection followed by the residual shrink:
///
/// `P = (X^T X + gamma I)^-1 X^T (H0 - E0)`, `E = (H0 - X P) / (1 + beta)`,
/// `H = X P + E`.
pub fn stage2_decompose_type(
    h0: &Matrix,
    e0: &Matrix,
    x: &Matrix,
    beta: f64,
    gamma: f64,
) -> Result<Stage2Outcome> {
    if !(beta > 0.0) {
        return Err(DrsaError::InvalidConfig(format!(
            "beta must be > 0 (got {beta})"
        )));
    }
    if !(gamma >= 0.0) {
        return Err(DrsaError::InvalidConfig(format!(
            "gamma must be >= 0 (got {gamma})"
        )));
    }
    if h0.shape() != e0.shape() || x.nrows() != h0.nrows() {
        return Err(DrsaError::dims(
            "feature decomposition",
            format!("H {:?}, E {:?}, X {:?}", h0.shape(), e0.shape(), x.shape()),
        ));
    }
    let d = x.ncols();
    let gram = x.transpose() * x + Matrix::identity(d, d) * gamma;
    let rhs = x.transpose() * (h0 - e0);
    if !all_finite(&gram) || !all_finite(&rhs) {
        return Err(DrsaError::NonFinite("feature decomposition".into()));
    }
    let p = match gram.clone().cholesky() {
        Some(chol) if gamma > 0.0 || well_conditioned(chol.l_dirty()) => chol.solve(&rhs),
        _ if gamma == 0.0 => {
            return Err(DrsaError::SolveFailed(
                "X^T X is singular with gamma = 0; use gamma > 0".into(),
            ))
        }
        _ => {
            return Err(DrsaError::SolveFailed(
                "ridge system is not positive definite".into(),
            ))
        }
    };
    let fit = x * &p;
    let e = (h0 - &fit) / (1.0 + beta);
    let h = fit + &e;
    Ok(Stage2Outcome { p, e, h })
}

fn well_conditioned(l: &Matrix) -> bool {
    let diag: Vec<f64> = (0..l.nrows()).map(|i| l[(i, i)].abs()).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    // pivots of L are square roots of those of X^T X
    max > 0.0 && min > 1e-7 * max
}

/// Full objective: relation reconstruction, feature consistency, residual
/// and projection penalties.
pub fn eval_objective(
    state: &AlignmentState,
    graph: &DenseGraph,
    ops: &BilinearOperatorSet,
    beta: f64,
    gamma: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for (r, &(s, d)) in graph.endpoints.iter().enumerate() {
        let pred = state.h(s) * ops.operator(r) * state.h(d).transpose();
        total += frobenius_sq(&(&graph.relations[r] - pred));
    }
    for (block, x) in state.blocks.iter().zip(&graph.features) {
        total += frobenius_sq(&(&block.h - x * &block.p - &block.e));
        total += beta * frobenius_sq(&block.e);
        total += gamma * frobenius_sq(&block.p);
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(DrsaError::NonFinite("objective".into()))
    }
}

/// Structure-driven subproblem for type `t` evaluated at `h_candidate`:
/// reconstruction error of every relation incident to `t` plus
/// `beta ||H_t||^2`. The other endpoint of each relation is read from
/// `state`, so a self-relation appears twice, once per role, matching the
/// normal equation of [`stage1_system`].
pub fn eval_stage1_objective(
    h_candidate: &Matrix,
    state: &AlignmentState,
    graph: &DenseGraph,
    ops: &BilinearOperatorSet,
    t: usize,
    beta: f64,
) -> Result<f64> {
    let mut total = beta * frobenius_sq(h_candidate);
    for (r, &(s, d)) in graph.endpoints.iter().enumerate() {
        let m = ops.operator(r);
        let roles = [
            (s == t).then(|| (h_candidate, state.h(d))),
            (d == t).then(|| (state.h(s), h_candidate)),
        ];
        for (hs, hd) in roles.into_iter().flatten() {
            if hs.ncols() != m.nrows() || hd.ncols() != m.ncols() {
                return Err(DrsaError::dims(
                    "structure objective",
                    format!("relation {r}"),
                ));
            }
            total += frobenius_sq(&(&graph.relations[r] - hs * m * hd.transpose()));
        }
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(DrsaError::NonFinite("structure objective".into()))
    }
}
