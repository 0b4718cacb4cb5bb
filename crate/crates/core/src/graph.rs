//! Heterogeneous graph data model and schema validation.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{DrsaError, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeTypeDecl {
    pub name: String,
    pub count: usize,
    pub feature_dim: usize,
}

impl NodeTypeDecl {
    pub fn new(name: impl Into<String>, count: usize, feature_dim: usize) -> Self {
        Self {
            name: name.into(),
            count,
            feature_dim,
        }
    }
}

/// A directed relation between two declared node types. Self-relations are
/// allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDecl {
    pub name: String,
    pub src_type: String,
    pub dst_type: String,
}

impl RelationDecl {
    pub fn new(name: impl Into<String>, src: impl Into<String>, dst: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            src_type: src.into(),
            dst_type: dst.into(),
        }
    }

    /// Relations are always stored as declared, so this is always true.
    pub fn directed(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Schema {
    pub node_types: Vec<NodeTypeDecl>,
    pub relations: Vec<RelationDecl>,
}

impl Schema {
    pub fn new(node_types: Vec<NodeTypeDecl>, relations: Vec<RelationDecl>) -> Self {
        Self {
            node_types,
            relations,
        }
    }

    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.node_types.iter().position(|t| t.name == name)
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    /// `(src, dst)` type indices of a relation.
    pub fn endpoints(&self, relation: &RelationDecl) -> Result<(usize, usize)> {
        let src = self
            .type_index(&relation.src_type)
            .ok_or_else(|| DrsaError::UnknownType(relation.src_type.clone()))?;
        let dst = self
            .type_index(&relation.dst_type)
            .ok_or_else(|| DrsaError::UnknownType(relation.dst_type.clone()))?;
        Ok((src, dst))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlock {
    pub type_name: String,
    pub matrix: Matrix,
}

impl FeatureBlock {
    pub fn new(type_name: impl Into<String>, matrix: Matrix) -> Self {
        Self {
            type_name: type_name.into(),
            matrix,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationBlock {
    pub relation_name: String,
    pub edges: Vec<(usize, usize)>,
    pub dense: Option<Matrix>,
}

impl RelationBlock {
    pub fn new(relation_name: impl Into<String>, edges: Vec<(usize, usize)>) -> Self {
        Self {
            relation_name: relation_name.into(),
            edges,
            dense: None,
        }
    }

    /// Attaches the dense form. Fails if any edge is out of range.
    pub fn with_dense(mut self, n_src: usize, n_dst: usize) -> Result<Self> {
        self.dense = Some(densify_relation(&self, n_src, n_dst)?);
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeteroGraph {
    pub schema: Schema,
    pub features: Vec<FeatureBlock>,
    pub relation_blocks: Vec<RelationBlock>,
}

impl HeteroGraph {
    pub fn new(
        schema: Schema,
        features: Vec<FeatureBlock>,
        relation_blocks: Vec<RelationBlock>,
    ) -> Self {
        Self {
            schema,
            features,
            relation_blocks,
        }
    }

    pub fn node_types(&self) -> &[NodeTypeDecl] {
        &self.schema.node_types
    }

    pub fn relations(&self) -> &[RelationDecl] {
        &self.schema.relations
    }

    pub fn feature(&self, type_name: &str) -> Result<&Matrix> {
        self.features
            .iter()
            .find(|f| f.type_name == type_name)
            .map(|f| &f.matrix)
            .ok_or_else(|| DrsaError::UnknownType(type_name.to_string()))
    }

    pub fn relation_block(&self, relation_name: &str) -> Result<&RelationBlock> {
        self.relation_blocks
            .iter()
            .find(|b| b.relation_name == relation_name)
            .ok_or_else(|| DrsaError::UnknownRelation(relation_name.to_string()))
    }

    /// Dense adjacency of every relation, in schema order.
    pub fn dense_relations(&self) -> Result<Vec<Matrix>> {
        self.schema
            .relations
            .iter()
            .map(|rel| {
                let (s, d) = self.schema.endpoints(rel)?;
                let block = self.relation_block(&rel.name)?;
                densify_relation(
                    block,
                    self.schema.node_types[s].count,
                    self.schema.node_types[d].count,
                )
            })
            .collect()
    }

    /// Returns an error listing every violation if the graph is invalid.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_schema(self);
        if report.is_empty() {
            Ok(())
        } else {
            let msg: Vec<String> = report.iter().map(|v| v.to_string()).collect();
            Err(DrsaError::InvalidGraph(msg.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoNodeTypes,
    DuplicateTypeName(String),
    ZeroCount(String),
    ZeroFeatureDim(String),
    DuplicateRelationName(String),
    UnresolvedEndpoint {
        relation: String,
        type_name: String,
    },
    MissingFeatureBlock(String),
    DuplicateFeatureBlock(String),
    OrphanFeatureBlock(String),
    FeatureShape {
        type_name: String,
        expected: (usize, usize),
        actual: (usize, usize),
    },
    NonFiniteFeature {
        type_name: String,
        row: usize,
        col: usize,
    },
    MissingRelationBlock(String),
    DuplicateRelationBlock(String),
    OrphanRelationBlock(String),
    EdgeOutOfRange {
        relation: String,
        src: usize,
        dst: usize,
        n_src: usize,
        n_dst: usize,
    },
    DuplicateEdge {
        relation: String,
        src: usize,
        dst: usize,
    },
    DenseMismatch {
        relation: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoNodeTypes => write!(f, "no node types"),
            DuplicateTypeName(n) => write!(f, "duplicate node type name '{n}'"),
            ZeroCount(n) => write!(f, "node type '{n}' has count 0"),
            ZeroFeatureDim(n) => write!(f, "node type '{n}' has feature_dim 0"),
            DuplicateRelationName(n) => write!(f, "duplicate relation name '{n}'"),
            UnresolvedEndpoint {
                relation,
                type_name,
            } => write!(
                f,
                "relation '{relation}' references unknown type '{type_name}'"
            ),
            MissingFeatureBlock(n) => write!(f, "node type '{n}' has no feature block"),
            DuplicateFeatureBlock(n) => {
                write!(f, "node type '{n}' has more than one feature block")
            }
            OrphanFeatureBlock(n) => write!(f, "feature block for undeclared type '{n}'"),
            FeatureShape {
                type_name,
                expected,
                actual,
            } => write!(
                f,
                "feature block '{type_name}' has shape {}x{}, expected {}x{}",
                actual.0, actual.1, expected.0, expected.1
            ),
            NonFiniteFeature {
                type_name,
                row,
                col,
            } => {
                write!(
                    f,
                    "feature block '{type_name}' has non-finite entry at ({row}, {col})"
                )
            }
            MissingRelationBlock(n) => write!(f, "relation '{n}' has no relation block"),
            DuplicateRelationBlock(n) => {
                write!(f, "relation '{n}' has more than one relation block")
            }
            OrphanRelationBlock(n) => write!(f, "relation block for undeclared relation '{n}'"),
            EdgeOutOfRange {
                relation,
                src,
                dst,
                n_src,
                n_dst,
            } => write!(
                f,
                "relation '{relation}' edge ({src}, {dst}) out of range for {n_src}x{n_dst}"
            ),
            DuplicateEdge { relation, src, dst } => {
                write!(f, "relation '{relation}' has duplicate edge ({src}, {dst})")
            }
            DenseMismatch { relation } => {
                write!(
                    f,
                    "relation '{relation}' dense form disagrees with its edge list"
                )
            }
        }
    }
}

/// Collects every schema violation. An empty report means the graph is valid.
pub fn validate_schema(graph: &HeteroGraph) -> Vec<Violation> {
    let schema = &graph.schema;
    let mut out = Vec::new();

    if schema.node_types.is_empty() {
        out.push(Violation::NoNodeTypes);
    }

    let mut seen = HashSet::new();
    for t in &schema.node_types {
        if !seen.insert(t.name.as_str()) {
            out.push(Violation::DuplicateTypeName(t.name.clone()));
        }
        if t.count == 0 {
            out.push(Violation::ZeroCount(t.name.clone()));
        }
        if t.feature_dim == 0 {
            out.push(Violation::ZeroFeatureDim(t.name.clone()));
        }
    }

    let mut seen = HashSet::new();
    for r in &schema.relations {
        if !seen.insert(r.name.as_str()) {
            out.push(Violation::DuplicateRelationName(r.name.clone()));
        }
        let endpoints: &[&String] = if r.src_type == r.dst_type {
            &[&r.src_type]
        } else {
            &[&r.src_type, &r.dst_type]
        };
        for endpoint in endpoints {
            if schema.type_index(endpoint).is_none() {
                out.push(Violation::UnresolvedEndpoint {
                    relation: r.name.clone(),
                    type_name: (*endpoint).clone(),
                });
            }
        }
    }

    for t in &schema.node_types {
        let blocks: Vec<&FeatureBlock> = graph
            .features
            .iter()
            .filter(|f| f.type_name == t.name)
            .collect();
        match blocks.len() {
            0 => out.push(Violation::MissingFeatureBlock(t.name.clone())),
            1 => {}
            _ => out.push(Violation::DuplicateFeatureBlock(t.name.clone())),
        }
        if let Some(block) = blocks.first() {
            let m = &block.matrix;
            let actual = (m.nrows(), m.ncols());
            let expected = (t.count, t.feature_dim);
            if actual != expected {
                out.push(Violation::FeatureShape {
                    type_name: t.name.clone(),
                    expected,
                    actual,
                });
            }
            if let Some(idx) = m.iter().position(|v| !v.is_finite()) {
                // column-major storage
                let (row, col) = (idx % m.nrows(), idx / m.nrows());
                out.push(Violation::NonFiniteFeature {
                    type_name: t.name.clone(),
                    row,
                    col,
                });
            }
        }
    }
    for f in &graph.features {
        if schema.type_index(&f.type_name).is_none() {
            out.push(Violation::OrphanFeatureBlock(f.type_name.clone()));
        }
    }

    for r in &schema.relations {
        let blocks: Vec<&RelationBlock> = graph
            .relation_blocks
            .iter()
            .filter(|b| b.relation_name == r.name)
            .collect();
        match blocks.len() {
            0 => {
                out.push(Violation::MissingRelationBlock(r.name.clone()));
                continue;
            }
            1 => {}
            _ => out.push(Violation::DuplicateRelationBlock(r.name.clone())),
        }
        let block = blocks[0];
        let (Some(s), Some(d)) = (
            schema.type_index(&r.src_type),
            schema.type_index(&r.dst_type),
        ) else {
            continue;
        };
        let (n_src, n_dst) = (schema.node_types[s].count, schema.node_types[d].count);
        let mut edges = HashSet::with_capacity(block.edges.len());
        let mut in_range = true;
        for &(src, dst) in &block.edges {
            if src >= n_src || dst >= n_dst {
                in_range = false;
                out.push(Violation::EdgeOutOfRange {
                    relation: r.name.clone(),
                    src,
                    dst,
                    n_src,
                    n_dst,
                });
            } else if !edges.insert((src, dst)) {
                out.push(Violation::DuplicateEdge {
                    relation: r.name.clone(),
                    src,
                    dst,
                });
            }
        }
        if let Some(dense) = &block.dense {
            let consistent = in_range
                && dense.nrows() == n_src
                && dense.ncols() == n_dst
                && (0..n_src).all(|i| {
                    (0..n_dst).all(|j| {
                        let expected = if edges.contains(&(i, j)) { 1.0 } else { 0.0 };
                        dense[(i, j)] == expected
                    })
                });
            if !consistent {
                out.push(Violation::DenseMismatch {
                    relation: r.name.clone(),
                });
            }
        }
    }
    for b in &graph.relation_blocks {
        if schema.relation_index(&b.relation_name).is_none() {
            out.push(Violation::OrphanRelationBlock(b.relation_name.clone()));
        }
    }

    out
}

/// Dense `n_src x n_dst` 0/1 adjacency of an edge list.
pub fn densify_relation(block: &RelationBlock, n_src: usize, n_dst: usize) -> Result<Matrix> {
    let mut m = Matrix::zeros(n_src, n_dst);
    for &(src, dst) in &block.edges {
        if src >= n_src || dst >= n_dst {
            return Err(DrsaError::EdgeOutOfRange {
                src,
                dst,
                n_src,
                n_dst,
            });
        }
        m[(src, dst)] = 1.0;
    }
    Ok(m)
}

/// Nonzero coordinates of a dense block in row-major order.
pub fn edges_from_dense(m: &Matrix) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] != 0.0 {
                edges.push((i, j));
            }
        }
    }
    edges
}
