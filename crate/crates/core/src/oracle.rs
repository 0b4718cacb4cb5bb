//! Brute-force reference implementations used to certify the closed-form
//! solver on small instances.
//!
//! Everything numeric here is written as explicit index loops over the
//! matrices' entries. Nothing calls into `solver` or `linalg`; the only things
//! borrowed from the rest of the crate are data containers.

use crate::error::{DrsaError, Result};
use crate::linalg::Matrix;
use crate::operators::BilinearOperatorSet;
use crate::solver::{DenseGraph, TypeState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Initial step size; adapted by backtracking.
    pub step_size: f64,
    pub max_steps: usize,
    /// Stop once the Euclidean norm of the (masked) gradient drops below this.
    pub grad_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            step_size: 1e-2,
            max_steps: 20_000,
            grad_tol: 1e-10,
        }
    }
}

/// Which variable blocks gradient descent may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockMask {
    pub h: bool,
    pub p: bool,
    pub e: bool,
}

impl BlockMask {
    pub const ALL: BlockMask = BlockMask {
        h: true,
        p: true,
        e: true,
    };
    pub const P_ONLY: BlockMask = BlockMask {
        h: false,
        p: true,
        e: false,
    };
}

const MAX_HALVINGS: usize = 60;

/// A full-objective instance: graph, fixed operators and penalties.
#[derive(Debug, Clone, Copy)]
pub struct OracleProblem<'a> {
    pub graph: &'a DenseGraph,
    pub ops: &'a BilinearOperatorSet,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub blocks: Vec<TypeState>,
    /// Objective before the first step and after every accepted step.
    pub trace: Vec<f64>,
    pub steps: usize,
    pub grad_norm: f64,
}

fn triple(hs: &Matrix, m: &Matrix, hd: &Matrix, i: usize, j: usize) -> f64 {
    let mut acc = 0.0;
    for a in 0..m.nrows() {
        let mut inner = 0.0;
        for b in 0..m.ncols() {
            inner += m[(a, b)] * hd[(j, b)];
        }
        acc += hs[(i, a)] * inner;
    }
    acc
}

fn sq_norm(m: &Matrix) -> f64 {
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            acc += m[(i, j)] * m[(i, j)];
        }
    }
    acc
}

/// `H - X P - E` entry by entry.
fn consistency_residual(block: &TypeState, x: &Matrix) -> Matrix {
    let (n, k) = (block.h.nrows(), block.h.ncols());
    let mut out = Matrix::zeros(n, k);
    for i in 0..n {
        for c in 0..k {
            let mut xp = 0.0;
            for l in 0..x.ncols() {
                xp += x[(i, l)] * block.p[(l, c)];
            }
            out[(i, c)] = block.h[(i, c)] - xp - block.e[(i, c)];
        }
    }
    out
}

/// Relation residual `R - H_s M H_d^T`.
fn relation_residual(r: &Matrix, hs: &Matrix, m: &Matrix, hd: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(r.nrows(), r.ncols());
    for i in 0..r.nrows() {
        for j in 0..r.ncols() {
            out[(i, j)] = r[(i, j)] - triple(hs, m, hd, i, j);
        }
    }
    out
}

impl OracleProblem<'_> {
    pub fn objective(&self, blocks: &[TypeState]) -> f64 {
        let mut total = 0.0;
        for (r, &(s, d)) in self.graph.endpoints.iter().enumerate() {
            let target = &self.graph.relations[r];
            let m = self.ops.operator(r);
            for i in 0..target.nrows() {
                for j in 0..target.ncols() {
                    let diff = target[(i, j)] - triple(&blocks[s].h, m, &blocks[d].h, i, j);
                    total += diff * diff;
                }
            }
        }
        for (block, x) in blocks.iter().zip(&self.graph.features) {
            total += sq_norm(&consistency_residual(block, x));
            total += self.beta * sq_norm(&block.e);
            total += self.gamma * sq_norm(&block.p);
        }
        total
    }

    /// Analytic gradient with respect to every `H`, `P` and `E` entry.
    pub fn gradient(&self, blocks: &[TypeState]) -> Vec<TypeState> {
        let mut grad: Vec<TypeState> = blocks
            .iter()
            .map(|b| TypeState {
                h: Matrix::zeros(b.h.nrows(), b.h.ncols()),
                p: Matrix::zeros(b.p.nrows(), b.p.ncols()),
                e: Matrix::zeros(b.e.nrows(), b.e.ncols()),
            })
            .collect();

        for (r, &(s, d)) in self.graph.endpoints.iter().enumerate() {
            let m = self.ops.operator(r);
            let (hs, hd) = (&blocks[s].h, &blocks[d].h);
            let resid = relation_residual(&self.graph.relations[r], hs, m, hd);
            let k = m.nrows();
            // d/dHs = -2 resid Hd M^T ; d/dHd = -2 resid^T Hs M
            for i in 0..hs.nrows() {
                for a in 0..k {
                    let mut acc = 0.0;
                    for j in 0..hd.nrows() {
                        for b in 0..k {
                            acc += resid[(i, j)] * hd[(j, b)] * m[(a, b)];
                        }
                    }
                    grad[s].h[(i, a)] -= 2.0 * acc;
                }
            }
            for j in 0..hd.nrows() {
                for b in 0..k {
                    let mut acc = 0.0;
                    for i in 0..hs.nrows() {
                        for a in 0..k {
                            acc += resid[(i, j)] * hs[(i, a)] * m[(a, b)];
                        }
                    }
                    grad[d].h[(j, b)] -= 2.0 * acc;
                }
            }
        }

        for ((g, block), x) in grad.iter_mut().zip(blocks).zip(&self.graph.features) {
            let c = consistency_residual(block, x);
            for i in 0..c.nrows() {
                for col in 0..c.ncols() {
                    g.h[(i, col)] += 2.0 * c[(i, col)];
                    g.e[(i, col)] += -2.0 * c[(i, col)] + 2.0 * self.beta * block.e[(i, col)];
                }
            }
            for l in 0..x.ncols() {
                for col in 0..c.ncols() {
                    let mut acc = 0.0;
                    for i in 0..x.nrows() {
                        acc += x[(i, l)] * c[(i, col)];
                    }
                    g.p[(l, col)] += -2.0 * acc + 2.0 * self.gamma * block.p[(l, col)];
                }
            }
        }
        grad
    }

    /// Full-batch gradient descent with backtracking on the masked blocks.
    pub fn gd_minimize(
        &self,
        init: &[TypeState],
        cfg: &OracleConfig,
        mask: BlockMask,
    ) -> Result<OracleRun> {
        let mut x: Vec<TypeState> = init.to_vec();
        let mut f = self.objective(&x);
        let mut trace = vec![f];
        let mut step = cfg.step_size;
        let mut steps = 0;
        let mut grad_norm;

        loop {
            let mut g = self.gradient(&x);
            apply_mask(&mut g, mask);
            grad_norm = flat_norm(&g);
            if grad_norm < cfg.grad_tol || steps >= cfg.max_steps {
                break;
            }
            let mut accepted = None;
            let mut stalled = false;
            for _ in 0..MAX_HALVINGS {
                let trial = axpy(&x, &g, -step);
                let f_trial = self.objective(&trial);
                if f_trial < f {
                    accepted = Some((trial, f_trial));
                    break;
                }
                stalled |= f_trial == f;
                step *= 0.5;
            }
            match accepted {
                Some((trial, f_trial)) => {
                    x = trial;
                    f = f_trial;
                    trace.push(f);
                    steps += 1;
                    step *= 1.25;
                }
                // no representable decrease left
                None if stalled => break,
                None => {
                    return Err(DrsaError::Oracle(format!(
                    "no descent after {MAX_HALVINGS} step halvings (gradient norm {grad_norm:e})"
                )))
                }
            }
        }
        Ok(OracleRun {
            blocks: x,
            trace,
            steps,
            grad_norm,
        })
    }
}

fn apply_mask(g: &mut [TypeState], mask: BlockMask) {
    for b in g {
        if !mask.h {
            b.h.fill(0.0);
        }
        if !mask.p {
            b.p.fill(0.0);
        }
        if !mask.e {
            b.e.fill(0.0);
        }
    }
}

fn flat_norm(g: &[TypeState]) -> f64 {
    g.iter()
        .map(|b| sq_norm(&b.h) + sq_norm(&b.p) + sq_norm(&b.e))
        .sum::<f64>()
        .sqrt()
}

fn axpy(x: &[TypeState], g: &[TypeState], alpha: f64) -> Vec<TypeState> {
    let comb = |a: &Matrix, b: &Matrix| {
        Matrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + alpha * b[(i, j)])
    };
    x.iter()
        .zip(g)
        .map(|(a, b)| TypeState {
            h: comb(&a.h, &b.h),
            p: comb(&a.p, &b.p),
            e: comb(&a.e, &b.e),
        })
        .collect()
}

/// Minimizes the full objective (or a masked slice of it) by gradient
/// descent from `init`.
pub fn gd_minimize_eq6(
    graph: &DenseGraph,
    ops: &BilinearOperatorSet,
    init: &[TypeState],
    beta: f64,
    gamma: f64,
    cfg: &OracleConfig,
    mask: BlockMask,
) -> Result<OracleRun> {
    OracleProblem {
        graph,
        ops,
        beta,
        gamma,
    }
    .gd_minimize(init, cfg, mask)
}

/// Naive loop evaluation of the full objective.
pub fn brute_objective(
    graph: &DenseGraph,
    ops: &BilinearOperatorSet,
    blocks: &[TypeState],
    beta: f64,
    gamma: f64,
) -> f64 {
    OracleProblem {
        graph,
        ops,
        beta,
        gamma,
    }
    .objective(blocks)
}

/// Largest per-coordinate discrepancy between a central-difference gradient
/// of `objective` and the oracle's analytic gradient, measured as
/// `|fd - analytic| / max(1, |fd|, |analytic|)`.
pub fn finite_diff_gradcheck<F>(
    problem: &OracleProblem<'_>,
    objective: F,
    point: &[TypeState],
    epsilon: f64,
) -> f64
where
    F: Fn(&[TypeState]) -> f64,
{
    let analytic = problem.gradient(point);
    let mut work: Vec<TypeState> = point.to_vec();
    let mut worst: f64 = 0.0;

    let mut check = |get: &dyn Fn(&mut TypeState) -> &mut Matrix, t: usize, an: &Matrix| {
        let (rows, cols) = an.shape();
        for i in 0..rows {
            for j in 0..cols {
                let orig = get(&mut work[t])[(i, j)];
                get(&mut work[t])[(i, j)] = orig + epsilon;
                let up = objective(&work);
                get(&mut work[t])[(i, j)] = orig - epsilon;
                let down = objective(&work);
                get(&mut work[t])[(i, j)] = orig;
                let fd = (up - down) / (2.0 * epsilon);
                let a = an[(i, j)];
                let rel = (fd - a).abs() / 1f64.max(fd.abs()).max(a.abs());
                worst = worst.max(rel);
            }
        }
    };
    for (t, g) in analytic.iter().enumerate() {
        check(&|b: &mut TypeState| &mut b.h, t, &g.h);
        check(&|b: &mut TypeState| &mut b.p, t, &g.p);
        check(&|b: &mut TypeState| &mut b.e, t, &g.e);
    }
    worst
}

#[derive(Debug, Clone)]
pub struct BilinearFit {
    /// Best reconstruction `H_src M H_dst^T` found.
    pub prediction: Matrix,
    /// Squared error before the first step and after every accepted step.
    pub trace: Vec<f64>,
}

/// Orthonormal basis of the column span of `h` by modified Gram-Schmidt;
/// numerically dependent columns are dropped.
fn orthonormal_basis(h: &Matrix) -> Matrix {
    let n = h.nrows();
    let scale = sq_norm(h).sqrt().max(f64::MIN_POSITIVE);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for c in 0..h.ncols() {
        let mut v: Vec<f64> = (0..n).map(|i| h[(i, c)]).collect();
        for _ in 0..2 {
            for q in &cols {
                let dot: f64 = (0..n).map(|i| q[i] * v[i]).sum();
                for i in 0..n {
                    v[i] -= dot * q[i];
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-10 * scale {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Matrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// Fits an unconstrained `k x k` bilinear operator to `target` given fixed
/// embeddings, minimizing `||target - H_src M H_dst^T||^2` by gradient
/// descent. The embeddings are first orthonormalized, which leaves the set
/// of reachable reconstructions unchanged and makes the problem perfectly
/// conditioned.
pub fn gd_fit_bilinear(
    h_src: &Matrix,
    h_dst: &Matrix,
    target: &Matrix,
    cfg: &OracleConfig,
) -> Result<BilinearFit> {
    if h_src.nrows() != target.nrows() || h_dst.nrows() != target.ncols() {
        return Err(DrsaError::dims(
            "gd_fit_bilinear",
            format!(
                "H_src {:?}, H_dst {:?}, target {:?}",
                h_src.shape(),
                h_dst.shape(),
                target.shape()
            ),
        ));
    }
    let qs = orthonormal_basis(h_src);
    let qd = orthonormal_basis(h_dst);
    let (ks, kd) = (qs.ncols(), qd.ncols());
    let mut m = Matrix::zeros(ks, kd);

    let loss = |m: &Matrix| sq_norm(&relation_residual_rect(target, &qs, m, &qd));
    let mut f = loss(&m);
    let mut trace = vec![f];
    let mut step = cfg.step_size;
    for _ in 0..cfg.max_steps {
        let resid = relation_residual_rect(target, &qs, &m, &qd);
        // grad = -2 Qs^T resid Qd
        let mut g = Matrix::zeros(ks, kd);
        for a in 0..ks {
            for b in 0..kd {
                let mut acc = 0.0;
                for i in 0..target.nrows() {
                    for j in 0..target.ncols() {
                        acc += qs[(i, a)] * resid[(i, j)] * qd[(j, b)];
                    }
                }
                g[(a, b)] = -2.0 * acc;
            }
        }
        if sq_norm(&g).sqrt() < cfg.grad_tol {
            break;
        }
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial = Matrix::from_fn(ks, kd, |a, b| m[(a, b)] - step * g[(a, b)]);
            let f_trial = loss(&trial);
            if f_trial < f {
                m = trial;
                f = f_trial;
                trace.push(f);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        // the whitened Hessian is 2I, so 0.5 is the exact step
        step = (step * 1.25).min(0.5);
    }
    let resid = relation_residual_rect(target, &qs, &m, &qd);
    let prediction = Matrix::from_fn(target.nrows(), target.ncols(), |i, j| {
        target[(i, j)] - resid[(i, j)]
    });
    Ok(BilinearFit { prediction, trace })
}

fn relation_residual_rect(r: &Matrix, qs: &Matrix, m: &Matrix, qd: &Matrix) -> Matrix {
    let mut qm = Matrix::zeros(qs.nrows(), m.ncols());
    for i in 0..qs.nrows() {
        for b in 0..m.ncols() {
            let mut acc = 0.0;
            for a in 0..m.nrows() {
                acc += qs[(i, a)] * m[(a, b)];
            }
            qm[(i, b)] = acc;
        }
    }
    let mut out = Matrix::zeros(r.nrows(), r.ncols());
    for i in 0..r.nrows() {
        for j in 0..r.ncols() {
            let mut acc = 0.0;
            for b in 0..m.ncols() {
                acc += qm[(i, b)] * qd[(j, b)];
            }
            out[(i, j)] = r[(i, j)] - acc;
        }
    }
    out
}

#[cfg(test)]
mod tests;
