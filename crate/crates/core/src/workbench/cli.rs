//! `drsa` command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::persist::{write_embedding_dir, RunMetadata};
use super::{diagnose, load_graph, save_embeddings, sweep, synth_generate};
use crate::baselines::{align_graph_baseline, BaselineConfig, BaselineMethod, DEFAULT_TARGET_DIM};
use crate::error::{DrsaError, Result};
use crate::operators::{default_rho, default_sigma, OperatorVariant};
use crate::solver::{run_drsa, SolverConfig};

#[derive(Debug, Parser)]
#[command(
    name = "drsa",
    version,
    about = "Relation-aware feature alignment for heterogeneous graphs"
)]
pub struct Cli {
    /// Worker threads for the per-type feature sweep (results do not depend on it)
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align node features with the two-stage solver and save embeddings
    Align(AlignArgs),
    /// Align node features with a per-type SVD or PCA projection
    Baseline(BaselineArgs),
    /// Compute reconstruction and type-separation diagnostics for embeddings
    Diagnose(DiagnoseArgs),
    /// Generate a planted synthetic graph from a JSON spec
    Synth(SynthArgs),
    /// Run the solver over a grid of beta, gamma and operator variants
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Latent dimension
    #[arg(long, default_value_t = 16)]
    pub k: usize,
    /// Subspace rank [default: max(2, k/4)]
    #[arg(long)]
    pub rho: Option<usize>,
    /// Structural residual penalty
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Feature projection ridge weight
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Outer iterations
    #[arg(long, default_value_t = 30)]
    pub iters: usize,
    /// Factor standard deviation [default: 1/sqrt(rho)]
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Random seed; falls back to DRSA_SEED, then 0
    #[arg(long, env = "DRSA_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Operator family
    #[arg(long, default_value = "type", value_parser = ["type", "relation", "global", "fullrank"])]
    pub variant: String,
    /// Early stop on relative objective change below this (0 disables)
    #[arg(long = "rel-tol", default_value_t = 0.0)]
    pub rel_tol: f64,
    /// Scale of the Gaussian latent initialization
    #[arg(long = "init-scale", default_value_t = 1.0)]
    pub init_scale: f64,
}

impl SolverArgs {
    pub fn to_config(&self) -> Result<SolverConfig> {
        let rho = self.rho.unwrap_or_else(|| default_rho(self.k));
        let cfg = SolverConfig {
            k: self.k,
            rho,
            beta: self.beta,
            gamma: self.gamma,
            max_iters: self.iters,
            sigma: self.sigma.unwrap_or_else(|| default_sigma(rho)),
            seed: self.seed,
            variant: self.variant.parse::<OperatorVariant>()?,
            rel_tol: self.rel_tol,
            init_scale: self.init_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Graph manifest (JSON)
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for <type>.csv embeddings and run.json
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "svd", value_parser = ["svd", "pca"])]
    pub method: String,
    /// Unified output width
    #[arg(long, default_value_t = DEFAULT_TARGET_DIM)]
    pub dim: usize,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Embedding directory written by align, baseline or synth
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Output directory for report.json and <relation>.error.csv
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth sidecar from synth; scores against the planted real-valued scores
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthetic graph spec (JSON)
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output JSON file with one record per setting
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated beta values
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.1,1,10,1000")]
    pub betas: Vec<f64>,
    /// Comma-separated gamma values
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub gammas: Vec<f64>,
    /// Comma-separated operator variants
    #[arg(long, value_delimiter = ',', default_value = "type")]
    pub variants: Vec<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

fn run(cli: Cli) -> Result<()> {
    // a pool may already exist when called repeatedly in-process
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global();

    match cli.command {
        Command::Align(args) => {
            let cfg = args.solver.to_config()?;
            let graph = load_graph(&args.manifest)?;
            let (state, report) = run_drsa(&graph, &cfg)?;
            save_embeddings(&state, &cfg, &args.out)?;
            log::info!(
                "aligned {} types; mean relative reconstruction error {:.4}",
                state.type_names.len(),
                report.mean_relative_error()
            );
        }
        Command::Baseline(args) => {
            let cfg = BaselineConfig {
                method: args.method.parse::<BaselineMethod>()?,
                target_dim: args.dim,
            };
            let graph = load_graph(&args.manifest)?;
            let blocks = align_graph_baseline(&graph, &cfg)?;
            let names: Vec<String> = graph.node_types().iter().map(|t| t.name.clone()).collect();
            write_embedding_dir(
                &args.out,
                &names,
                &blocks,
                &RunMetadata::Baseline {
                    config: cfg,
                    types: names.clone(),
                },
            )?;
        }
        Command::Diagnose(args) => {
            diagnose(
                &args.manifest,
                &args.embeddings,
                args.truth.as_deref(),
                &args.out,
            )?;
        }
        Command::Synth(args) => {
            let spec = super::synth::read_spec(&args.spec)?;
            synth_generate(&spec, &args.out)?;
        }
        Command::Sweep(args) => {
            let base = args.solver.to_config()?;
            let variants = args
                .variants
                .iter()
                .map(|v| v.parse::<OperatorVariant>())
                .collect::<Result<Vec<_>>>()?;
            let graph = load_graph(&args.manifest)?;
            let points = sweep::sweep(&graph, &base, &variants, &args.betas, &args.gammas)?;
            super::io::write_json(&args.out, &points)?;
        }
    }
    Ok(())
}

fn error_kind(e: &DrsaError) -> &'static str {
    match e {
        DrsaError::InvalidGraph(_) | DrsaError::EdgeOutOfRange { .. } => "invalid_graph",
        DrsaError::UnknownType(_) | DrsaError::UnknownRelation(_) => "unknown_name",
        DrsaError::UnknownStrategy { .. } | DrsaError::InvalidConfig(_) => "config",
        DrsaError::DimensionMismatch { .. } => "dimension",
        DrsaError::NonFinite(_) | DrsaError::SolveFailed(_) | DrsaError::Oracle(_) => "numeric",
        DrsaError::Io { .. } => "io",
        DrsaError::Parse { .. } | DrsaError::Json { .. } => "parse",
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the
/// process exit code: 0 on success, 1 on data errors, 2 on usage errors.
/// Failures print a single `error[<kind>]: <message>` line to stderr.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", error_kind(&e));
            1
        }
    }
}
