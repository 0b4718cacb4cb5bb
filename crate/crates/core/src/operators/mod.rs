//! Fixed random bilinear relation operators.
//!
//! Every operator family is an [`OperatorStrategy`] registered by name in an
//! [`OperatorRegistry`]. A strategy decides which random factor matrices exist
//! and how a relation's `k x k` operator is composed from them; sampling,
//! caching and lookup are shared.

mod strategies;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use strategies::{FullRank, GlobalShared, RelationDual, TypeDual};

use crate::error::{DrsaError, Result};
use crate::graph::{RelationDecl, Schema};
use crate::linalg::{gaussian, Matrix};

/// Built-in operator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum OperatorVariant {
    /// Per-type outgoing/incoming bases, `M_r = A_src B_dst^T`.
    #[default]
    #[serde(rename = "type")]
    TypeDual,
    /// Independent low-rank pair per relation, `M_r = A_r B_r^T`.
    #[serde(rename = "relation")]
    RelationDual,
    /// One `k x k` matrix shared by all relations.
    #[serde(rename = "global")]
    GlobalShared,
    /// One dense `k x k` matrix per relation.
    #[serde(rename = "fullrank")]
    FullRank,
}

impl OperatorVariant {
    pub const ALL: [OperatorVariant; 4] = [
        OperatorVariant::TypeDual,
        OperatorVariant::RelationDual,
        OperatorVariant::GlobalShared,
        OperatorVariant::FullRank,
    ];

    /// Registry key, also used on the command line.
    pub fn name(self) -> &'static str {
        match self {
            OperatorVariant::TypeDual => "type",
            OperatorVariant::RelationDual => "relation",
            OperatorVariant::GlobalShared => "global",
            OperatorVariant::FullRank => "fullrank",
        }
    }
}

impl fmt::Display for OperatorVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorVariant {
    type Err = DrsaError;

    fn from_str(s: &str) -> Result<Self> {
        OperatorVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| DrsaError::UnknownStrategy {
                name: s.to_string(),
                available: OperatorVariant::ALL.map(|v| v.name()).join(", "),
            })
    }
}

/// An operator family: the factor layout it samples and the composition rule.
pub trait OperatorStrategy: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Shapes of the factor matrices, in sampling order.
    fn factor_shapes(&self, schema: &Schema, k: usize, rho: usize) -> Vec<(usize, usize)>;

    /// `k x k` operator for relation `relation` of `schema`, whose endpoint
    /// type indices are `src` and `dst`.
    fn compose(
        &self,
        factors: &[Matrix],
        schema: &Schema,
        relation: usize,
        src: usize,
        dst: usize,
    ) -> Matrix;

    /// Upper bound on `rank(M_r)`.
    fn rank_bound(&self, k: usize, rho: usize) -> usize {
        let _ = rho;
        k
    }
}

/// Name-keyed collection of operator strategies.
#[derive(Debug, Clone, Default)]
pub struct OperatorRegistry {
    strategies: BTreeMap<&'static str, Arc<dyn OperatorStrategy>>,
}

impl OperatorRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(TypeDual));
        reg.register(Arc::new(RelationDual));
        reg.register(Arc::new(GlobalShared));
        reg.register(Arc::new(FullRank));
        reg
    }

    /// Process-wide registry of the built-in strategies.
    pub fn global() -> &'static OperatorRegistry {
        static REGISTRY: OnceLock<OperatorRegistry> = OnceLock::new();
        REGISTRY.get_or_init(OperatorRegistry::with_builtins)
    }

    /// Registers a strategy, replacing any previous one with the same name.
    pub fn register(&mut self, strategy: Arc<dyn OperatorStrategy>) {
        self.strategies.insert(strategy.name(), strategy);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn OperatorStrategy>> {
        self.strategies
            .get(name)
            .cloned()
            .ok_or_else(|| DrsaError::UnknownStrategy {
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.keys().copied().collect()
    }
}

/// Default subspace rank for latent dimension `k`.
pub fn default_rho(k: usize) -> usize {
    (k / 4).max(2).min(k.max(1))
}

/// Default factor standard deviation for subspace rank `rho`.
pub fn default_sigma(rho: usize) -> f64 {
    1.0 / (rho as f64).sqrt()
}

/// Fixed random factors and the per-relation operators derived from them.
#[derive(Debug, Clone)]
pub struct BilinearOperatorSet {
    strategy: Arc<dyn OperatorStrategy>,
    schema: Schema,
    k: usize,
    rho: usize,
    sigma: Option<f64>,
    seed: u64,
    factors: Vec<Matrix>,
    operators: Vec<Matrix>,
}

impl BilinearOperatorSet {
    /// Builds a set from explicit factors, validating their shapes against the
    /// strategy's layout.
    pub fn from_factors(
        strategy: Arc<dyn OperatorStrategy>,
        schema: &Schema,
        k: usize,
        rho: usize,
        factors: Vec<Matrix>,
    ) -> Result<Self> {
        check_dims(k, rho)?;
        let shapes = strategy.factor_shapes(schema, k, rho);
        if shapes.len() != factors.len() {
            return Err(DrsaError::dims(
                "operator factors",
                format!("expected {} factors, got {}", shapes.len(), factors.len()),
            ));
        }
        for (i, (shape, f)) in shapes.iter().zip(&factors).enumerate() {
            if *shape != f.shape() {
                return Err(DrsaError::dims(
                    "operator factors",
                    format!("factor {i} has shape {:?}, expected {:?}", f.shape(), shape),
                ));
            }
        }
        let operators = schema
            .relations
            .iter()
            .enumerate()
            .map(|(r, rel)| {
                let (s, d) = schema.endpoints(rel)?;
                Ok(strategy.compose(&factors, schema, r, s, d))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            strategy,
            schema: schema.clone(),
            k,
            rho,
            sigma: None,
            seed: 0,
            factors,
            operators,
        })
    }

    pub fn strategy_name(&self) -> &'static str {
        self.strategy.name()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    /// Sampling standard deviation, `None` for hand-built sets.
    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    /// Cached operator of relation index `r` (schema order).
    pub fn operator(&self, r: usize) -> &Matrix {
        &self.operators[r]
    }

    pub fn operators(&self) -> &[Matrix] {
        &self.operators
    }

    pub fn rank_bound(&self) -> usize {
        self.strategy.rank_bound(self.k, self.rho)
    }
}

fn check_dims(k: usize, rho: usize) -> Result<()> {
    if k == 0 {
        return Err(DrsaError::InvalidConfig("k must be at least 1".into()));
    }
    if rho == 0 || rho > k {
        return Err(DrsaError::InvalidConfig(format!(
            "rho must satisfy 1 <= rho <= k (rho = {rho}, k = {k})"
        )));
    }
    Ok(())
}

/// Samples every factor entry i.i.d. from `N(0, sigma^2)`. The draw order is
/// the strategy's factor order, each factor row-major, from a ChaCha8 stream
/// seeded with `seed`.
pub fn init_projections(
    schema: &Schema,
    variant: OperatorVariant,
    k: usize,
    rho: usize,
    sigma: f64,
    seed: u64,
) -> Result<BilinearOperatorSet> {
    let strategy = OperatorRegistry::global().get(variant.name())?;
    init_with_strategy(schema, strategy, k, rho, sigma, seed)
}

pub fn init_with_strategy(
    schema: &Schema,
    strategy: Arc<dyn OperatorStrategy>,
    k: usize,
    rho: usize,
    sigma: f64,
    seed: u64,
) -> Result<BilinearOperatorSet> {
    check_dims(k, rho)?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(DrsaError::InvalidConfig(format!(
            "sigma must be > 0 (got {sigma})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors = strategy
        .factor_shapes(schema, k, rho)
        .into_iter()
        .map(|(r, c)| gaussian(r, c, sigma, &mut rng))
        .collect();
    let mut set = BilinearOperatorSet::from_factors(strategy, schema, k, rho, factors)?;
    set.sigma = Some(sigma);
    set.seed = seed;
    Ok(set)
}

/// Composes `M_r` for `relation` from the set's factors.
pub fn build_operator(ops: &BilinearOperatorSet, relation: &RelationDecl) -> Result<Matrix> {
    let schema = ops.schema();
    let r = schema
        .relation_index(&relation.name)
        .ok_or_else(|| DrsaError::UnknownRelation(relation.name.clone()))?;
    let declared = &schema.relations[r];
    if declared.src_type != relation.src_type || declared.dst_type != relation.dst_type {
        return Err(DrsaError::UnknownRelation(format!(
            "{} ({} -> {})",
            relation.name, relation.src_type, relation.dst_type
        )));
    }
    let (s, d) = schema.endpoints(relation)?;
    Ok(ops.strategy.compose(&ops.factors, schema, r, s, d))
}

/// `H_src M H_dst^T`.
pub fn reconstruct_relation(h_src: &Matrix, m: &Matrix, h_dst: &Matrix) -> Result<Matrix> {
    if m.nrows() != m.ncols() || h_src.ncols() != m.nrows() || h_dst.ncols() != m.ncols() {
        return Err(DrsaError::dims(
            "reconstruct_relation",
            format!(
                "H_src {:?}, M {:?}, H_dst {:?}",
                h_src.shape(),
                m.shape(),
                h_dst.shape()
            ),
        ));
    }
    Ok(h_src * m * h_dst.transpose())
}
