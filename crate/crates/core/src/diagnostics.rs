//! Type-collapse and relation-confusion metrics for aligned embeddings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{DrsaError, Result};
use crate::graph::Schema;
use crate::linalg::Matrix;
use crate::operators::{reconstruct_relation, BilinearOperatorSet};
use crate::solver::DenseGraph;
use crate::workbench::io::write_matrix_csv;

/// Added to the radius sum in [`type_separation_score`]. Two coincident
/// single-point types at distance `d` therefore score `d / 1e-12`.
pub const SEPARATION_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationError {
    pub frobenius_error: f64,
    pub relative_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_map_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub objective_trace: Vec<f64>,
    pub per_relation_error: BTreeMap<String, RelationError>,
    /// `None` when the graph has a single node type.
    pub type_separation: Option<f64>,
    pub per_type_norms: BTreeMap<String, f64>,
}

impl DiagnosticsReport {
    pub fn mean_relative_error(&self) -> f64 {
        let n = self.per_relation_error.len().max(1) as f64;
        self.per_relation_error
            .values()
            .map(|e| e.relative_error)
            .sum::<f64>()
            / n
    }

    /// Root of the summed squared Frobenius errors over all relations.
    pub fn total_frobenius_error(&self) -> f64 {
        self.per_relation_error
            .values()
            .map(|e| e.frobenius_error.powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationReconstruction {
    pub frobenius_error: f64,
    pub relative_error: f64,
    /// `|R - H_src M H_dst^T|` entrywise.
    pub error_map: Matrix,
}

pub fn relation_recon_error(
    h_src: &Matrix,
    m: &Matrix,
    h_dst: &Matrix,
    target: &Matrix,
) -> Result<RelationReconstruction> {
    let pred = reconstruct_relation(h_src, m, h_dst)?;
    if pred.shape() != target.shape() {
        return Err(DrsaError::dims(
            "relation_recon_error",
            format!("prediction {:?}, target {:?}", pred.shape(), target.shape()),
        ));
    }
    let error_map = (target - pred).abs();
    let frobenius_error = error_map.norm();
    let relative_error = frobenius_error / target.norm().max(f64::EPSILON);
    Ok(RelationReconstruction {
        frobenius_error,
        relative_error,
        error_map,
    })
}

/// Minimum over type pairs of centroid distance divided by the mean of the
/// two within-type RMS radii (plus [`SEPARATION_EPS`]).
pub fn type_separation_score(blocks: &[Matrix]) -> Result<f64> {
    if blocks.len() < 2 {
        return Err(DrsaError::InvalidConfig(
            "type separation needs at least two node types".into(),
        ));
    }
    let width = blocks[0].ncols();
    if let Some(b) = blocks.iter().find(|b| b.nrows() == 0 || b.ncols() != width) {
        return Err(DrsaError::dims(
            "type_separation_score",
            format!(
                "block of shape {:?}, expected n x {width} with n >= 1",
                b.shape()
            ),
        ));
    }
    let stats: Vec<(Matrix, f64)> = blocks
        .iter()
        .map(|b| {
            let centroid = b.row_mean();
            let sq: f64 = b
                .row_iter()
                .map(|row| (row - &centroid).norm_squared())
                .sum();
            (centroid, (sq / b.nrows() as f64).sqrt())
        })
        .map(|(c, r)| (Matrix::from_row_slice(1, width, c.as_slice()), r))
        .collect();

    let mut best = f64::INFINITY;
    for i in 0..stats.len() {
        for j in i + 1..stats.len() {
            let dist = (&stats[i].0 - &stats[j].0).norm();
            let radius = 0.5 * (stats[i].1 + stats[j].1);
            best = best.min(dist / (radius + SEPARATION_EPS));
        }
    }
    Ok(best)
}

pub fn export_error_map(map: &Matrix, path: &Path) -> Result<()> {
    write_matrix_csv(path, map)
}

/// Report against the graph's own relation blocks.
pub fn build_report(
    graph: &DenseGraph,
    ops: &BilinearOperatorSet,
    blocks: &[Matrix],
    trace: &[f64],
) -> Result<DiagnosticsReport> {
    report_against(
        &graph.schema,
        ops.operators(),
        &graph.relations,
        blocks,
        trace,
    )
    .map(|(report, _)| report)
}

/// Report against arbitrary per-relation targets. Also returns the error
/// maps in schema relation order.
pub fn report_against(
    schema: &Schema,
    operators: &[Matrix],
    targets: &[Matrix],
    blocks: &[Matrix],
    trace: &[f64],
) -> Result<(DiagnosticsReport, Vec<Matrix>)> {
    if operators.len() != schema.relations.len() || targets.len() != schema.relations.len() {
        return Err(DrsaError::dims(
            "diagnostics",
            "need one operator and one target per relation",
        ));
    }
    if blocks.len() != schema.node_types.len() {
        return Err(DrsaError::dims(
            "diagnostics",
            "need one embedding block per node type",
        ));
    }
    let mut report = DiagnosticsReport {
        objective_trace: trace.to_vec(),
        ..Default::default()
    };
    let mut maps = Vec::with_capacity(targets.len());
    for (r, rel) in schema.relations.iter().enumerate() {
        let (s, d) = schema.endpoints(rel)?;
        let recon = relation_recon_error(&blocks[s], &operators[r], &blocks[d], &targets[r])?;
        report.per_relation_error.insert(
            rel.name.clone(),
            RelationError {
                frobenius_error: recon.frobenius_error,
                relative_error: recon.relative_error,
                error_map_path: None,
            },
        );
        maps.push(recon.error_map);
    }
    if blocks.len() >= 2 {
        report.type_separation = Some(type_separation_score(blocks)?);
    }
    for (t, b) in schema.node_types.iter().zip(blocks) {
        report.per_type_norms.insert(t.name.clone(), b.norm());
    }
    Ok((report, maps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workbench::io::read_matrix_csv;
    use nalgebra::Rotation3;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn planted_factors_have_zero_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (hs, m, hd) = (
            random(&mut rng, 5, 3),
            random(&mut rng, 3, 3),
            random(&mut rng, 4, 3),
        );
        let target = &hs * &m * hd.transpose();
        let rec = relation_recon_error(&hs, &m, &hd, &target).unwrap();
        assert!(rec.frobenius_error <= 1e-10);
    }

    #[test]
    fn zero_prediction_has_unit_relative_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let target = random(&mut rng, 3, 4);
        let rec = relation_recon_error(
            &Matrix::zeros(3, 2),
            &Matrix::identity(2, 2),
            &random(&mut rng, 4, 2),
            &target,
        )
        .unwrap();
        assert_eq!(rec.frobenius_error, target.norm());
        assert!((rec.relative_error - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frobenius_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (hs, m, hd) = (
            random(&mut rng, 5, 2),
            random(&mut rng, 2, 2),
            random(&mut rng, 4, 2),
        );
        let target = random(&mut rng, 5, 4);
        let rec = relation_recon_error(&hs, &m, &hd, &target).unwrap();
        let mut acc = 0.0;
        for i in 0..5 {
            for j in 0..4 {
                let mut p = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        p += hs[(i, a)] * m[(a, b)] * hd[(j, b)];
                    }
                }
                acc += (target[(i, j)] - p).powi(2);
            }
        }
        assert!((rec.frobenius_error - acc.sqrt()).abs() <= 1e-12 * acc.sqrt());
        assert!((rec.error_map[(2, 1)] - rec.error_map[(2, 1)].abs()).abs() == 0.0);
    }

    #[test]
    fn shape_mismatch_is_error() {
        assert!(relation_recon_error(
            &Matrix::zeros(2, 2),
            &Matrix::zeros(2, 2),
            &Matrix::zeros(3, 2),
            &Matrix::zeros(2, 2)
        )
        .is_err());
    }

    #[test]
    fn coincident_clusters_score_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random(&mut rng, 6, 3);
        assert_eq!(type_separation_score(&[a.clone(), a]).unwrap(), 0.0);
    }

    #[test]
    fn single_points_hit_the_eps_cap() {
        let a = Matrix::from_row_slice(1, 2, &[0.0, 0.0]);
        let b = Matrix::from_row_slice(1, 2, &[6.0, 8.0]);
        let s = type_separation_score(&[a, b]).unwrap();
        assert!((s - 10.0 / SEPARATION_EPS).abs() <= 1e-3 * s);
    }

    #[test]
    fn single_type_is_error() {
        assert!(type_separation_score(&[Matrix::zeros(2, 2)]).is_err());
    }

    #[test]
    fn gaussian_clouds_monte_carlo() {
        // unit RMS radius in 3-D: per-coordinate std 1/sqrt(3)
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4000;
        let std = 1.0 / 3f64.sqrt();
        let mut cloud = |offset: f64| {
            Matrix::from_fn(n, 3, |_, j| {
                let z: f64 = rng.sample(StandardNormal);
                z * std + if j == 0 { offset } else { 0.0 }
            })
        };
        let a = cloud(0.0);
        let b = cloud(6.0);
        let s = type_separation_score(&[a, b]).unwrap();
        assert!((s - 6.0).abs() < 0.15, "score {s}");
    }

    #[test]
    fn export_round_trip_and_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        export_error_map(&Matrix::from_element(1, 1, 0.5), &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().trim_end(), "0.5");

        let m = Matrix::from_row_slice(3, 2, &[0.1, 2.0, 1.0 / 3.0, 1e-300, 7.5, 0.0]);
        export_error_map(&m, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.split(',').count() == 2));
        assert_eq!(read_matrix_csv(&path).unwrap(), m);
    }

    #[test]
    fn export_io_error_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "").unwrap();
        let target = blocker.join("x.csv");
        let err = export_error_map(&Matrix::zeros(1, 1), &target).unwrap_err();
        assert!(err.to_string().contains(blocker.to_str().unwrap()), "{err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn recon_error_row_permutation_invariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (hs, m, hd) = (random(&mut rng, 5, 3), random(&mut rng, 3, 3), random(&mut rng, 4, 3));
            let target = random(&mut rng, 5, 4);
            let mut perm: Vec<usize> = (0..5).collect();
            for i in (1..5).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let hs_p = Matrix::from_fn(5, 3, |i, j| hs[(perm[i], j)]);
            let t_p = Matrix::from_fn(5, 4, |i, j| target[(perm[i], j)]);
            let a = relation_recon_error(&hs, &m, &hd, &target).unwrap();
            let b = relation_recon_error(&hs_p, &m, &hd, &t_p).unwrap();
            prop_assert!((a.frobenius_error - b.frobenius_error).abs() <= 1e-12 * (1.0 + a.frobenius_error));
        }

        #[test]
        fn separation_rotation_and_scale_invariant(
            seed in any::<u64>(),
            angles in (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0),
            scale in 0.01f64..100.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let blocks: Vec<Matrix> = (0..3)
                .map(|t| random(&mut rng, 4 + t, 3).add_scalar(t as f64))
                .collect();
            let rot3 = Rotation3::from_euler_angles(angles.0, angles.1, angles.2);
            let rot = Matrix::from_iterator(3, 3, rot3.matrix().iter().copied());
            let base = type_separation_score(&blocks).unwrap();
            let rotated: Vec<Matrix> = blocks.iter().map(|b| b * &rot).collect();
            let scaled: Vec<Matrix> = blocks.iter().map(|b| b * scale).collect();
            prop_assert!((type_separation_score(&rotated).unwrap() - base).abs() <= 1e-9 * base);
            prop_assert!((type_separation_score(&scaled).unwrap() - base).abs() <= 1e-9 * base);
        }
    }
}
