//! Feature-only input alignment baselines: per-type truncated SVD and PCA
//! projected to a common width.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{DrsaError, Result};
use crate::graph::HeteroGraph;
use crate::linalg::{canonical_column_signs, Matrix};

/// Unified width used by the standard evaluation protocol.
pub const DEFAULT_TARGET_DIM: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMethod {
    Svd,
    Pca,
}

impl BaselineMethod {
    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::Svd => "svd",
            BaselineMethod::Pca => "pca",
        }
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineMethod {
    type Err = DrsaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svd" => Ok(BaselineMethod::Svd),
            "pca" => Ok(BaselineMethod::Pca),
            other => Err(DrsaError::UnknownStrategy {
                name: other.to_string(),
                available: "pca, svd".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    /// Columns beyond the matrix rank are zero-padded.
    pub target_dim: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            method: BaselineMethod::Svd,
            target_dim: DEFAULT_TARGET_DIM,
        }
    }
}

pub trait BaselineAligner: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn align(&self, x: &Matrix, target_dim: usize) -> Result<Matrix>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SvdAligner;

impl BaselineAligner for SvdAligner {
    fn name(&self) -> &'static str {
        "svd"
    }

    fn align(&self, x: &Matrix, target_dim: usize) -> Result<Matrix> {
        svd_align(x, target_dim)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PcaAligner;

impl BaselineAligner for PcaAligner {
    fn name(&self) -> &'static str {
        "pca"
    }

    fn align(&self, x: &Matrix, target_dim: usize) -> Result<Matrix> {
        pca_align(x, target_dim)
    }
}

#[derive(Debug, Clone, Default)]
pub struct BaselineRegistry {
    aligners: BTreeMap<&'static str, Arc<dyn BaselineAligner>>,
}

impl BaselineRegistry {
    pub fn with_builtins() -> Self {
        let mut reg = Self::default();
        reg.register(Arc::new(SvdAligner));
        reg.register(Arc::new(PcaAligner));
        reg
    }

    pub fn global() -> &'static BaselineRegistry {
        static REGISTRY: OnceLock<BaselineRegistry> = OnceLock::new();
        REGISTRY.get_or_init(BaselineRegistry::with_builtins)
    }

    pub fn register(&mut self, aligner: Arc<dyn BaselineAligner>) {
        self.aligners.insert(aligner.name(), aligner);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn BaselineAligner>> {
        self.aligners
            .get(name)
            .cloned()
            .ok_or_else(|| DrsaError::UnknownStrategy {
                name: name.to_string(),
                available: self.aligners.keys().copied().collect::<Vec<_>>().join(", "),
            })
    }
}

/// Leading singular triplets of a matrix, zero-padded to the requested width.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `U_t S_t`, `n x t`
    pub scores: Matrix,
    /// `V_t`, `d x t`
    pub components: Matrix,
    /// All singular values, non-increasing.
    pub singular_values: Vec<f64>,
}

/// Truncated SVD with the sign convention that the largest-magnitude entry of
/// every right singular vector is non-negative.
pub fn truncated_svd(x: &Matrix, target_dim: usize) -> Result<TruncatedSvd> {
    if target_dim < 1 {
        return Err(DrsaError::InvalidConfig(
            "target_dim must be at least 1".into(),
        ));
    }
    if x.ncols() == 0 || x.nrows() == 0 {
        return Err(DrsaError::dims(
            "truncated_svd",
            format!("empty matrix {:?}", x.shape()),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(DrsaError::NonFinite("baseline input".into()));
    }
    let (n, d) = x.shape();
    let svd = x.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let rank = order.len();
    if target_dim > rank {
        log::warn!("target_dim {target_dim} exceeds min(n, d) = {rank}; padding with zero columns");
    }
    let keep = target_dim.min(rank);
    let mut components = Matrix::zeros(d, target_dim);
    let mut left = Matrix::zeros(n, target_dim);
    for (c, &i) in order.iter().take(keep).enumerate() {
        components.set_column(c, &v_t.row(i).transpose());
        left.set_column(c, &(u.column(i) * svd.singular_values[i]));
    }
    // flip V columns and the matching score columns together
    let before = components.clone();
    canonical_column_signs(&mut components);
    for c in 0..keep {
        if components.column(c) != before.column(c) {
            left.column_mut(c).neg_mut();
        }
    }
    Ok(TruncatedSvd {
        scores: left,
        components,
        singular_values: order.iter().map(|&i| svd.singular_values[i]).collect(),
    })
}

/// Uncentered projection onto the leading singular subspace.
pub fn svd_align(x: &Matrix, target_dim: usize) -> Result<Matrix> {
    truncated_svd(x, target_dim).map(|t| t.scores)
}

/// Column-centred projection onto the leading principal directions.
pub fn pca_align(x: &Matrix, target_dim: usize) -> Result<Matrix> {
    if target_dim < 1 {
        return Err(DrsaError::InvalidConfig(
            "target_dim must be at least 1".into(),
        ));
    }
    if x.nrows() < 2 {
        return Err(DrsaError::InvalidConfig(
            "PCA needs at least two rows".into(),
        ));
    }
    let mean = x.row_mean();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    truncated_svd(&centered, target_dim).map(|t| t.scores)
}

/// Applies the configured method to every node type independently. Relation
/// blocks are never read.
pub fn align_graph_baseline(graph: &HeteroGraph, cfg: &BaselineConfig) -> Result<Vec<Matrix>> {
    let aligner = BaselineRegistry::global().get(cfg.method.name())?;
    graph
        .node_types()
        .iter()
        .map(|t| aligner.align(graph.feature(&t.name)?, cfg.target_dim))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{FeatureBlock, NodeTypeDecl, RelationBlock, RelationDecl, Schema};
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(seed: u64, r: usize, c: usize) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn orthonormal_columns_keep_gram() {
        let q = random(1, 6, 3).qr().q();
        let out = svd_align(&q, 3).unwrap();
        let g_in = &q * q.transpose();
        let g_out = &out * out.transpose();
        assert!((g_in - g_out).norm() <= 1e-12);
    }

    #[test]
    fn hand_two_by_two() {
        let x = Matrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.0]);
        let out = svd_align(&x, 1).unwrap();
        assert_eq!(out.shape(), (2, 1));
        assert!((out[(0, 0)] - 3.0).abs() < 1e-14);
        assert!(out[(1, 0)].abs() < 1e-14);
    }

    #[test]
    fn protocol_default_is_fifty() {
        assert_eq!(DEFAULT_TARGET_DIM, 50);
        assert_eq!(BaselineConfig::default().target_dim, 50);
        let out = svd_align(&random(2, 60, 70), DEFAULT_TARGET_DIM).unwrap();
        assert_eq!(out.shape(), (60, 50));
    }

    #[test]
    fn oversized_target_is_zero_padded() {
        let out = svd_align(&random(3, 4, 2), 5).unwrap();
        assert_eq!(out.shape(), (4, 5));
        assert!(out.columns(2, 3).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn invalid_inputs() {
        assert!(svd_align(&random(3, 4, 2), 0).is_err());
        assert!(pca_align(&random(3, 4, 2), 0).is_err());
        assert!(pca_align(&random(3, 1, 2), 1).is_err());
    }

    #[test]
    fn identical_rows_pca_is_zero() {
        let x = Matrix::from_fn(5, 3, |_, j| j as f64 + 0.5);
        let out = pca_align(&x, 2).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn line_cloud_has_one_component() {
        let x = Matrix::from_fn(7, 2, |i, j| {
            (i as f64 - 2.0) * if j == 0 { 1.0 } else { 2.0 }
        });
        let out = pca_align(&x, 2).unwrap();
        let var = |c: usize| out.column(c).iter().map(|v| v * v).sum::<f64>();
        assert!(var(0) > 1.0);
        assert!(var(1) <= 1e-20 * var(0));
    }

    #[test]
    fn pca_variances_match_covariance_eigenvalues() {
        let x = random(4, 10, 4);
        let out = pca_align(&x, 4).unwrap();
        // oracle: eigenvalues of the sample covariance
        let mean = x.row_mean();
        let mut c = x.clone();
        for mut row in c.row_iter_mut() {
            row -= &mean;
        }
        let cov = c.transpose() * &c / 9.0;
        let mut eig: Vec<f64> = SymmetricEigen::new(cov)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        for (col, lambda) in eig.iter().enumerate() {
            let m = out.column(col).mean();
            let var = out.column(col).iter().map(|v| (v - m).powi(2)).sum::<f64>() / 9.0;
            assert!((var - lambda).abs() <= 1e-9, "{var} vs {lambda}");
        }
    }

    #[test]
    fn sign_convention_is_applied() {
        let x = random(5, 8, 5);
        let t = truncated_svd(&x, 3).unwrap();
        for c in t.components.column_iter() {
            let max = c
                .iter()
                .copied()
                .max_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap();
            assert!(max >= 0.0);
        }
        let neg = svd_align(&(-&x), 3).unwrap();
        assert!((neg + &t.scores).norm() <= 1e-10);
    }

    fn small_graph(edges: Vec<(usize, usize)>) -> HeteroGraph {
        let schema = Schema::new(
            vec![
                NodeTypeDecl::new("a", 6, 4),
                NodeTypeDecl::new("b", 5, 3),
                NodeTypeDecl::new("c", 4, 3),
            ],
            vec![RelationDecl::new("ab", "a", "b")],
        );
        HeteroGraph::new(
            schema,
            vec![
                FeatureBlock::new("a", random(10, 6, 4)),
                FeatureBlock::new("b", random(11, 5, 3)),
                FeatureBlock::new("c", random(12, 4, 3)),
            ],
            vec![RelationBlock::new("ab", edges)],
        )
    }

    #[test]
    fn graph_baseline_composition_and_widths() {
        let g = small_graph(vec![(0, 0), (1, 2)]);
        for method in [BaselineMethod::Svd, BaselineMethod::Pca] {
            let cfg = BaselineConfig {
                method,
                target_dim: 3,
            };
            let blocks = align_graph_baseline(&g, &cfg).unwrap();
            assert_eq!(blocks.len(), 3);
            assert!(blocks.iter().all(|b| b.ncols() == 3));
            let aligner = BaselineRegistry::global().get(method.name()).unwrap();
            for (t, b) in g.node_types().iter().zip(&blocks) {
                assert_eq!(b, &aligner.align(g.feature(&t.name).unwrap(), 3).unwrap());
            }
        }
    }

    #[test]
    fn garbage_relations_do_not_matter() {
        let cfg = BaselineConfig {
            method: BaselineMethod::Svd,
            target_dim: 2,
        };
        let a = align_graph_baseline(&small_graph(vec![(0, 0)]), &cfg).unwrap();
        let b = align_graph_baseline(&small_graph(vec![(5, 4), (3, 1), (2, 2)]), &cfg).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn eckart_young_tail_energy(seed in any::<u64>(), n in 2usize..9, d in 2usize..7, t_frac in 0.0f64..1.0) {
            let x = random(seed, n, d);
            let t = 1 + ((n.min(d) - 1) as f64 * t_frac) as usize;
            let svd = truncated_svd(&x, t).unwrap();
            let resid = (&x - &svd.scores * svd.components.transpose()).norm();
            let tail: f64 = svd.singular_values[t..].iter().map(|s| s * s).sum::<f64>().sqrt();
            prop_assert!((resid - tail).abs() <= 1e-8 * x.norm().max(1e-300), "{} vs {}", resid, tail);
        }

        #[test]
        fn baselines_are_deterministic(seed in any::<u64>()) {
            let x = random(seed, 7, 4);
            prop_assert_eq!(svd_align(&x, 3).unwrap(), svd_align(&x, 3).unwrap());
            prop_assert_eq!(pca_align(&x, 3).unwrap(), pca_align(&x, 3).unwrap());
        }
    }
}
