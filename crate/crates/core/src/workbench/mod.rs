//! File formats, synthetic data, persistence and the command-line driver.

pub mod cli;
pub mod io;
pub mod persist;
pub mod sweep;
pub mod synth;

use std::path::Path;

pub use io::{load_graph, save_graph, Manifest};
pub use persist::{load_embeddings, read_metadata, save_embeddings, RunMetadata};
pub use synth::{synth_generate, synthesize, GroundTruth, SynthSpec};

use crate::diagnostics::{report_against, DiagnosticsReport};
use crate::error::{DrsaError, Result};
use crate::solver::{operators_for, DenseGraph};

pub const REPORT_FILE: &str = "report.json";

/// Evaluates an embedding directory against a graph and writes
/// [`REPORT_FILE`] plus one `<relation>.error.csv` per relation into `out`.
///
/// With `truth`, operators and targets come from the planted sidecar (the
/// real-valued scores); otherwise operators are rebuilt from the run
/// metadata and targets are the graph's binary relations. Baseline
/// embeddings without `truth` carry no operators, so only the type-level
/// metrics are reported.
pub fn diagnose(
    manifest: &Path,
    embeddings: &Path,
    truth: Option<&Path>,
    out: &Path,
) -> Result<DiagnosticsReport> {
    let graph = load_graph(manifest)?;
    let dense = DenseGraph::from_graph(&graph)?;
    let names: Vec<String> = dense
        .schema
        .node_types
        .iter()
        .map(|t| t.name.clone())
        .collect();
    let blocks = load_embeddings(embeddings, &names)?;
    let meta = read_metadata(embeddings)?;
    let trace = match &meta {
        RunMetadata::Drsa {
            objective_trace, ..
        } => objective_trace.clone(),
        _ => Vec::new(),
    };

    let (operators, targets) = match (truth, &meta) {
        (Some(path), _) => {
            let gt = synth::read_truth(path)?;
            (Some(gt.operator_matrices()), gt.scores(&dense.schema)?)
        }
        (None, RunMetadata::Drsa { config, .. }) => {
            let ops = operators_for(&dense.schema, config)?;
            (Some(ops.operators().to_vec()), dense.relations.clone())
        }
        (None, _) => (None, dense.relations.clone()),
    };

    let (mut report, maps) = match operators {
        Some(ops) => report_against(&dense.schema, &ops, &targets, &blocks, &trace)?,
        None => {
            let width = blocks.first().map_or(0, |b| b.ncols());
            if blocks.iter().any(|b| b.ncols() != width) {
                return Err(DrsaError::dims("diagnose", "embedding widths differ"));
            }
            let mut report = DiagnosticsReport {
                objective_trace: trace,
                ..Default::default()
            };
            if blocks.len() >= 2 {
                report.type_separation = Some(crate::diagnostics::type_separation_score(&blocks)?);
            }
            for (n, b) in names.iter().zip(&blocks) {
                report.per_type_norms.insert(n.clone(), b.norm());
            }
            (report, Vec::new())
        }
    };

    for (rel, map) in dense.schema.relations.iter().zip(&maps) {
        let file = format!("{}.error.csv", rel.name);
        crate::diagnostics::export_error_map(map, &out.join(&file))?;
        if let Some(entry) = report.per_relation_error.get_mut(&rel.name) {
            entry.error_map_path = Some(file.into());
        }
    }
    io::write_json(&out.join(REPORT_FILE), &report)?;
    Ok(report)
}
