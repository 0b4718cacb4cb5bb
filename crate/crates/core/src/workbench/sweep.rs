use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::HeteroGraph;
use crate::operators::OperatorVariant;
use crate::solver::{run_drsa, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub variant: OperatorVariant,
    pub beta: f64,
    pub gamma: f64,
    pub mean_relative_error: f64,
    pub total_frobenius_error: f64,
    pub final_objective: f64,
    pub type_separation: Option<f64>,
}

/// Runs the solver on every `(variant, beta, gamma)` combination, all other
/// settings taken from `base`.
pub fn sweep(
    graph: &HeteroGraph,
    base: &SolverConfig,
    variants: &[OperatorVariant],
    betas: &[f64],
    gammas: &[f64],
) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::with_capacity(variants.len() * betas.len() * gammas.len());
    for &variant in variants {
        for &beta in betas {
            for &gamma in gammas {
                let cfg = SolverConfig {
                    variant,
                    beta,
                    gamma,
                    ..base.clone()
                };
                let (state, report) = run_drsa(graph, &cfg)?;
                log::info!(
                    "{variant} beta={beta} gamma={gamma}: mean relative error {:.4}",
                    report.mean_relative_error()
                );
                out.push(SweepPoint {
                    variant,
                    beta,
                    gamma,
                    mean_relative_error: report.mean_relative_error(),
                    total_frobenius_error: report.total_frobenius_error(),
                    final_objective: *state.objective_trace.last().unwrap_or(&f64::NAN),
                    type_separation: report.type_separation,
                });
            }
        }
    }
    Ok(out)
}
