//! On-disk formats.
//!
//! * Matrices: headerless CSV, one row per line, comma-separated fields in
//!   shortest round-trip decimal form (at most 17 significant digits).
//! * Edges: one `src dst` pair of 0-based indices per line, whitespace
//!   separated; blank lines and `#` comments are ignored.
//! * Manifest: JSON, paths relative to the manifest's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{DrsaError, Result};
use crate::graph::{
    validate_schema, FeatureBlock, HeteroGraph, NodeTypeDecl, RelationBlock, RelationDecl, Schema,
};
use crate::linalg::Matrix;

pub const MANIFEST_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestNodeType {
    pub name: String,
    pub count: usize,
    pub feature_dim: usize,
    pub feature_file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRelation {
    pub name: String,
    pub src_type: String,
    pub dst_type: String,
    pub edge_file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub node_types: Vec<ManifestNodeType>,
    pub relations: Vec<ManifestRelation>,
}

pub fn format_matrix_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            // Debug formatting is the shortest string that round-trips
            write!(out, "{:?}", m[(i, j)]).expect("write to string");
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| DrsaError::io(parent, e))?;
    }
    fs::write(path, format_matrix_csv(m)).map_err(|e| DrsaError::io(path, e))
}

pub fn parse_matrix_csv(text: &str, path: &Path) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(col, field)| {
                let field = field.trim();
                let v: f64 = field.parse().map_err(|_| DrsaError::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    field: format!("column {}", col + 1),
                    message: format!("'{field}' is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(DrsaError::Parse {
                        path: path.to_path_buf(),
                        line: lineno + 1,
                        field: format!("column {}", col + 1),
                        message: format!("non-finite value '{field}'"),
                    });
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(DrsaError::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    field: "row".into(),
                    message: format!("{} fields, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| DrsaError::io(path, e))?;
    parse_matrix_csv(&text, path)
}

pub fn format_edges(edges: &[(usize, usize)]) -> String {
    let mut out = String::new();
    for (s, d) in edges {
        writeln!(out, "{s} {d}").expect("write to string");
    }
    out
}

/// Parses an edge list, rejecting malformed lines, indices outside
/// `n_src x n_dst` and duplicate pairs.
pub fn parse_edges(
    text: &str,
    path: &Path,
    n_src: usize,
    n_dst: usize,
) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |field: &str, message: String| DrsaError::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            field: field.to_string(),
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(err(
                "edge",
                format!("expected 2 fields, found {}", fields.len()),
            ));
        }
        let src: usize = fields[0]
            .parse()
            .map_err(|_| err("src", format!("'{}' is not a node index", fields[0])))?;
        let dst: usize = fields[1]
            .parse()
            .map_err(|_| err("dst", format!("'{}' is not a node index", fields[1])))?;
        if src >= n_src {
            return Err(err(
                "src",
                format!("index {src} out of range (count {n_src})"),
            ));
        }
        if dst >= n_dst {
            return Err(err(
                "dst",
                format!("index {dst} out of range (count {n_dst})"),
            ));
        }
        if !seen.insert((src, dst)) {
            return Err(err("edge", format!("duplicate edge ({src}, {dst})")));
        }
        edges.push((src, dst));
    }
    Ok(edges)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| DrsaError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| DrsaError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| DrsaError::io(parent, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|source| DrsaError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| DrsaError::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let manifest: Manifest = read_json(path)?;
    if manifest.version != MANIFEST_VERSION {
        return Err(DrsaError::Parse {
            path: path.to_path_buf(),
            line: 1,
            field: "version".into(),
            message: format!("unsupported version '{}'", manifest.version),
        });
    }
    Ok(manifest)
}

fn base_dir(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

/// Loads and validates the graph a manifest describes.
pub fn load_graph(manifest_path: &Path) -> Result<HeteroGraph> {
    let manifest = read_manifest(manifest_path)?;
    let base = base_dir(manifest_path);

    let schema = Schema::new(
        manifest
            .node_types
            .iter()
            .map(|t| NodeTypeDecl::new(&t.name, t.count, t.feature_dim))
            .collect(),
        manifest
            .relations
            .iter()
            .map(|r| RelationDecl::new(&r.name, &r.src_type, &r.dst_type))
            .collect(),
    );

    let mut features = Vec::with_capacity(manifest.node_types.len());
    for t in &manifest.node_types {
        let path = base.join(&t.feature_file);
        let m = read_matrix_csv(&path)?;
        if m.nrows() != t.count {
            return Err(DrsaError::Parse {
                path,
                line: m.nrows() + 1,
                field: "count".into(),
                message: format!(
                    "found {} rows, manifest declares count {}",
                    m.nrows(),
                    t.count
                ),
            });
        }
        if m.ncols() != t.feature_dim {
            return Err(DrsaError::Parse {
                path,
                line: 1,
                field: "feature_dim".into(),
                message: format!(
                    "found {} columns, manifest declares feature_dim {}",
                    m.ncols(),
                    t.feature_dim
                ),
            });
        }
        features.push(FeatureBlock::new(&t.name, m));
    }

    let mut blocks = Vec::with_capacity(manifest.relations.len());
    for r in &manifest.relations {
        let count = |ty: &str| {
            manifest
                .node_types
                .iter()
                .find(|t| t.name == ty)
                .map(|t| t.count)
                .ok_or_else(|| DrsaError::Parse {
                    path: manifest_path.to_path_buf(),
                    line: 1,
                    field: format!("relations.{}", r.name),
                    message: format!("unknown node type '{ty}'"),
                })
        };
        let (n_src, n_dst) = (count(&r.src_type)?, count(&r.dst_type)?);
        let path = base.join(&r.edge_file);
        let text = fs::read_to_string(&path).map_err(|e| DrsaError::io(&path, e))?;
        blocks.push(RelationBlock::new(
            &r.name,
            parse_edges(&text, &path, n_src, n_dst)?,
        ));
    }

    let graph = HeteroGraph::new(schema, features, blocks);
    let report = validate_schema(&graph);
    if !report.is_empty() {
        let msg: Vec<String> = report.iter().map(|v| v.to_string()).collect();
        return Err(DrsaError::InvalidGraph(format!(
            "{}: {}",
            manifest_path.display(),
            msg.join("; ")
        )));
    }
    Ok(graph)
}

/// Writes a graph as `manifest.json`, `features/<type>.csv` and
/// `edges/<relation>.txt` under `dir`. Returns the manifest path.
pub fn save_graph(graph: &HeteroGraph, dir: &Path) -> Result<PathBuf> {
    graph.ensure_valid()?;
    let mut manifest = Manifest {
        version: MANIFEST_VERSION.into(),
        node_types: Vec::new(),
        relations: Vec::new(),
    };
    for t in graph.node_types() {
        let rel = PathBuf::from("features").join(format!("{}.csv", t.name));
        write_matrix_csv(&dir.join(&rel), graph.feature(&t.name)?)?;
        manifest.node_types.push(ManifestNodeType {
            name: t.name.clone(),
            count: t.count,
            feature_dim: t.feature_dim,
            feature_file: rel,
        });
    }
    for r in graph.relations() {
        let rel = PathBuf::from("edges").join(format!("{}.txt", r.name));
        let path = dir.join(&rel);
        fs::create_dir_all(path.parent().expect("edge path has a parent"))
            .map_err(|e| DrsaError::io(&path, e))?;
        let block = graph.relation_block(&r.name)?;
        fs::write(&path, format_edges(&block.edges)).map_err(|e| DrsaError::io(&path, e))?;
        manifest.relations.push(ManifestRelation {
            name: r.name.clone(),
            src_type: r.src_type.clone(),
            dst_type: r.dst_type.clone(),
            edge_file: rel,
        });
    }
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_shortest_form() {
        let m = Matrix::from_row_slice(2, 2, &[0.5, 1.0, -2.25e-300, 1.0 / 3.0]);
        let text = format_matrix_csv(&m);
        assert_eq!(text, "0.5,1.0\n-2.25e-300,0.3333333333333333\n");
        assert_eq!(parse_matrix_csv(&text, Path::new("x")).unwrap(), m);
    }

    #[test]
    fn csv_errors_cite_line_and_field() {
        let err = parse_matrix_csv("1,2\n3,abc\n", Path::new("f.csv")).unwrap_err();
        assert_eq!(err.to_string(), "f.csv:2: column 2: 'abc' is not a number");
        let err = parse_matrix_csv("1,2\n3\n", Path::new("f.csv")).unwrap_err();
        assert!(err.to_string().starts_with("f.csv:2: row"));
        let err = parse_matrix_csv("1,NaN\n", Path::new("f.csv")).unwrap_err();
        assert!(err.to_string().contains("non-finite"));
    }

    #[test]
    fn edge_parsing() {
        let text = "# header\n0 1\n\n2\t0  # trailing\n";
        assert_eq!(
            parse_edges(text, Path::new("e"), 3, 2).unwrap(),
            vec![(0, 1), (2, 0)]
        );
        let err = parse_edges("0 1\n0 1\n", Path::new("e"), 3, 2).unwrap_err();
        assert!(err.to_string().contains("e:2: edge: duplicate edge (0, 1)"));
        let err = parse_edges("3 0\n", Path::new("e"), 3, 2).unwrap_err();
        assert!(err.to_string().contains("e:1: src"));
        assert!(parse_edges("0 1 2\n", Path::new("e"), 3, 2).is_err());
        assert!(parse_edges("0 -1\n", Path::new("e"), 3, 2).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(
            rows in 1usize..5,
            cols in 1usize..5,
            values in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 16),
        ) {
            let m = Matrix::from_fn(rows, cols, |i, j| values[i * 4 + j]);
            let back = parse_matrix_csv(&format_matrix_csv(&m), Path::new("x")).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
