use crate::graph::Schema;
use crate::linalg::Matrix;

use super::OperatorStrategy;

/// Factors `[A_0, B_0, A_1, B_1, ...]`, one outgoing/incoming pair per type.
/// A self-relation still uses `A_t` for the source role and `B_t` for the
/// destination role.
#[derive(Debug, Clone, Copy, Default)]
pub struct TypeDual;

impl OperatorStrategy for TypeDual {
    fn name(&self) -> &'static str {
        "type"
    }

    fn factor_shapes(&self, schema: &Schema, k: usize, rho: usize) -> Vec<(usize, usize)> {
        vec![(k, rho); 2 * schema.node_types.len()]
    }

    fn compose(&self, f: &[Matrix], _: &Schema, _: usize, src: usize, dst: usize) -> Matrix {
        &f[2 * src] * f[2 * dst + 1].transpose()
    }

    fn rank_bound(&self, _k: usize, rho: usize) -> usize {
        rho
    }
}

/// Factors `[A_r0, B_r0, A_r1, B_r1, ...]`, one pair per relation.
#[derive(Debug, Clone, Copy, Default)]
pub struct RelationDual;

impl OperatorStrategy for RelationDual {
    fn name(&self) -> &'static str {
        "relation"
    }

    fn factor_shapes(&self, schema: &Schema, k: usize, rho: usize) -> Vec<(usize, usize)> {
        vec![(k, rho); 2 * schema.relations.len()]
    }

    fn compose(&self, f: &[Matrix], _: &Schema, r: usize, _: usize, _: usize) -> Matrix {
        &f[2 * r] * f[2 * r + 1].transpose()
    }

    fn rank_bound(&self, _k: usize, rho: usize) -> usize {
        rho
    }
}

/// A single `k x k` matrix for every relation.
#[derive(Debug, Clone, Copy, Default)]
pub struct GlobalShared;

impl OperatorStrategy for GlobalShared {
    fn name(&self) -> &'static str {
        "global"
    }

    fn factor_shapes(&self, _: &Schema, k: usize, _: usize) -> Vec<(usize, usize)> {
        vec![(k, k)]
    }

    fn compose(&self, f: &[Matrix], _: &Schema, _: usize, _: usize, _: usize) -> Matrix {
        f[0].clone()
    }
}

/// An independent dense `k x k` matrix per relation.
#[derive(Debug, Clone, Copy, Default)]
pub struct FullRank;

impl OperatorStrategy for FullRank {
    fn name(&self) -> &'static str {
        "fullrank"
    }

    fn factor_shapes(&self, schema: &Schema, k: usize, _: usize) -> Vec<(usize, usize)> {
        vec![(k, k); schema.relations.len()]
    }

    fn compose(&self, f: &[Matrix], _: &Schema, r: usize, _: usize, _: usize) -> Matrix {
        f[r].clone()
    }
}
