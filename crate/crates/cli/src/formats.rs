//! On-disk graph layout: TSV files with external names.
//!
//! A graph directory holds `edges.tsv` (two node names per line),
//! `features.tsv` (node name, feature name, optional 0/1 value), and
//! optionally `labels.tsv` (node name, class name) and `splits.tsv`
//! (node name, train|val|test). Lines starting with `#` are comments.
//! Names map to dense ids in first-seen order, scanning `features.tsv`
//! then `edges.tsv`; labels and splits may not introduce new nodes.
//!
//! A transformed-graph directory adds `node_kinds.tsv` (authoritative node
//! order), `feature_provenance.tsv` (feature-node name, feature name, in
//! column order), and `x_star.tsv` (node name, feature name, value with 17
//! significant digits). Writing is canonical, so write-parse-write is
//! byte-identical.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use graphite_core::gnn::train::Splits;
use graphite_core::graph::{BuildWarnings, ClassId, FeatureId, Graph, NodeId, SparseVec};
use graphite_core::textfmt::format_g17;
use graphite_core::transform::{NodeKind, TransformedGraph};

pub const EDGES_FILE: &str = "edges.tsv";
pub const FEATURES_FILE: &str = "features.tsv";
pub const LABELS_FILE: &str = "labels.tsv";
pub const SPLITS_FILE: &str = "splits.tsv";
pub const NODE_KINDS_FILE: &str = "node_kinds.tsv";
pub const PROVENANCE_FILE: &str = "feature_provenance.tsv";
pub const X_STAR_FILE: &str = "x_star.tsv";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}:{line}: {reason}")]
    Malformed {
        file: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{file}:{line}: unknown node name \"{name}\"")]
    UnknownNodeName {
        file: PathBuf,
        line: usize,
        name: String,
    },
    #[error("{file}:{line}: binary features required (value \"{value}\"; pass --binarize-threshold to coerce)")]
    NonBinaryFeature {
        file: PathBuf,
        line: usize,
        value: String,
    },
}

/// External names of nodes, features, and classes, indexed by dense id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameTable {
    pub node_names: Vec<String>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
}

impl NameTable {
    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.node_names.iter().position(|n| n == name)
    }

    /// Class name for an id, falling back to the numeral when the table
    /// has no name for it (e.g. predictions on unlabeled inputs).
    pub fn class_name(&self, c: ClassId) -> String {
        self.class_names
            .get(c)
            .cloned()
            .unwrap_or_else(|| c.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRole {
    Train,
    Val,
    Test,
}

/// Per-node split assignment plus conversion to id lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub assignment: Vec<Option<SplitRole>>,
}

impl SplitSpec {
    pub fn to_splits(&self) -> Splits {
        let mut splits = Splits::default();
        for (u, role) in self.assignment.iter().enumerate() {
            match role {
                Some(SplitRole::Train) => splits.train.push(u),
                Some(SplitRole::Val) => splits.val.push(u),
                Some(SplitRole::Test) => splits.test.push(u),
                None => {}
            }
        }
        splits
    }

    /// Randomly assigns labeled nodes to train/val/test by ratio.
    ///
    /// Ratios must be nonnegative and sum to at most 1 (within 1e-9);
    /// when they sum to 1 every labeled node is assigned.
    pub fn generate(
        graph: &Graph,
        ratios: (f64, f64, f64),
        seed: u64,
    ) -> Result<SplitSpec, String> {
        let (r_train, r_val, r_test) = ratios;
        let total = r_train + r_val + r_test;
        if r_train < 0.0 || r_val < 0.0 || r_test < 0.0 || total > 1.0 + 1e-9 {
            return Err(format!(
                "split ratios must be nonnegative and sum to at most 1, got {r_train}/{r_val}/{r_test}"
            ));
        }
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut labeled: Vec<NodeId> = (0..graph.num_nodes())
            .filter(|&u| graph.label(u).is_some())
            .collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        labeled.shuffle(&mut rng);
        let count = labeled.len();
        let n_train = (r_train * count as f64).floor() as usize;
        let n_val = (r_val * count as f64).floor() as usize;
        let n_test = if (total - 1.0).abs() < 1e-9 {
            count - n_train - n_val
        } else {
            ((r_test * count as f64).floor() as usize).min(count - n_train - n_val)
        };
        let mut assignment = vec![None; graph.num_nodes()];
        for (i, &u) in labeled.iter().enumerate() {
            assignment[u] = if i < n_train {
                Some(SplitRole::Train)
            } else if i < n_train + n_val {
                Some(SplitRole::Val)
            } else if i < n_train + n_val + n_test {
                Some(SplitRole::Test)
            } else {
                None
            };
        }
        Ok(SplitSpec { assignment })
    }
}

/// A parsed graph directory.
#[derive(Debug)]
pub struct ParsedGraph {
    pub graph: Graph,
    pub names: NameTable,
    pub splits: Option<SplitSpec>,
    pub warnings: BuildWarnings,
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.to_string()))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .collect())
}

fn fields(line: &str) -> Vec<&str> {
    line.split('\t').collect()
}

struct Interner {
    names: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Interner {
    fn new() -> Self {
        Self {
            names: Vec::new(),
            ids: HashMap::new(),
        }
    }

    fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    fn get(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }
}

/// Parses a graph directory.
///
/// `binarize_threshold`: when set, a third feature column is mapped to 1
/// iff its value exceeds the threshold; otherwise any value other than
/// exactly 0 or 1 is rejected.
pub fn parse_graph_dir(
    dir: &Path,
    binarize_threshold: Option<f64>,
) -> Result<ParsedGraph, FormatError> {
    let mut nodes = Interner::new();
    let mut features = Interner::new();
    let mut classes = Interner::new();

    let features_path = dir.join(FEATURES_FILE);
    let mut feature_entries: Vec<(NodeId, FeatureId)> = Vec::new();
    for (line_no, line) in read_lines(&features_path)? {
        let f = fields(&line);
        let (node, feat, value) = match f.as_slice() {
            [node, feat] => (*node, *feat, None),
            [node, feat, value] => (*node, *feat, Some(*value)),
            _ => {
                return Err(FormatError::Malformed {
                    file: features_path,
                    line: line_no,
                    reason: format!("expected 2 or 3 tab-separated fields, found {}", f.len()),
                })
            }
        };
        let keep = match value {
            None => true,
            Some(raw) => {
                let v: f64 = raw.parse().map_err(|_| FormatError::Malformed {
                    file: features_path.clone(),
                    line: line_no,
                    reason: format!("feature value \"{raw}\" is not a number"),
                })?;
                match binarize_threshold {
                    Some(t) => v > t,
                    None if v == 1.0 => true,
                    None if v == 0.0 => false,
                    None => {
                        return Err(FormatError::NonBinaryFeature {
                            file: features_path,
                            line: line_no,
                            value: raw.to_string(),
                        })
                    }
                }
            }
        };
        let u = nodes.intern(node);
        let k = features.intern(feat);
        if keep {
            feature_entries.push((u, k));
        }
    }

    let edges_path = dir.join(EDGES_FILE);
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for (line_no, line) in read_lines(&edges_path)? {
        let f = fields(&line);
        let [a, b] = f.as_slice() else {
            return Err(FormatError::Malformed {
                file: edges_path,
                line: line_no,
                reason: format!("expected 2 tab-separated fields, found {}", f.len()),
            });
        };
        edges.push((nodes.intern(a), nodes.intern(b)));
    }

    let labels_path = dir.join(LABELS_FILE);
    let mut labels: Vec<(NodeId, ClassId)> = Vec::new();
    if labels_path.exists() {
        let mut seen: HashMap<NodeId, (ClassId, usize)> = HashMap::new();
        for (line_no, line) in read_lines(&labels_path)? {
            let f = fields(&line);
            let [node, class] = f.as_slice() else {
                return Err(FormatError::Malformed {
                    file: labels_path,
                    line: line_no,
                    reason: format!("expected 2 tab-separated fields, found {}", f.len()),
                });
            };
            let u = nodes.get(node).ok_or_else(|| FormatError::UnknownNodeName {
                file: labels_path.clone(),
                line: line_no,
                name: node.to_string(),
            })?;
            let c = classes.intern(class);
            if let Some(&(prev, prev_line)) = seen.get(&u) {
                if prev != c {
                    return Err(FormatError::Malformed {
                        file: labels_path,
                        line: line_no,
                        reason: format!(
                            "node \"{node}\" already labeled differently on line {prev_line}"
                        ),
                    });
                }
            }
            seen.insert(u, (c, line_no));
            labels.push((u, c));
        }
    }

    let splits_path = dir.join(SPLITS_FILE);
    let mut splits = None;
    if splits_path.exists() {
        let mut assignment = vec![None; nodes.names.len()];
        for (line_no, line) in read_lines(&splits_path)? {
            let f = fields(&line);
            let [node, role] = f.as_slice() else {
                return Err(FormatError::Malformed {
                    file: splits_path,
                    line: line_no,
                    reason: format!("expected 2 tab-separated fields, found {}", f.len()),
                });
            };
            let u = nodes.get(node).ok_or_else(|| FormatError::UnknownNodeName {
                file: splits_path.clone(),
                line: line_no,
                name: node.to_string(),
            })?;
            let role = match *role {
                "train" => SplitRole::Train,
                "val" => SplitRole::Val,
                "test" => SplitRole::Test,
                other => {
                    return Err(FormatError::Malformed {
                        file: splits_path,
                        line: line_no,
                        reason: format!("split must be train, val, or test, found \"{other}\""),
                    })
                }
            };
            assignment[u] = Some(role);
        }
        splits = Some(SplitSpec { assignment });
    }

    let (graph, warnings) = Graph::build(nodes.names.len(), &edges, &feature_entries, &labels)
        .map_err(|e| FormatError::Malformed {
            file: dir.to_path_buf(),
            line: 0,
            reason: e.to_string(),
        })?;

    if let Some(spec) = &splits {
        for (u, role) in spec.assignment.iter().enumerate() {
            if role.is_some() && graph.label(u).is_none() {
                return Err(FormatError::Malformed {
                    file: splits_path.clone(),
                    line: 0,
                    reason: format!(
                        "node \"{}\" is in the split but has no label",
                        nodes.names[u]
                    ),
                });
            }
        }
    }

    Ok(ParsedGraph {
        graph,
        names: NameTable {
            node_names: nodes.names,
            feature_names: features.names,
            class_names: classes.names,
        },
        splits,
        warnings,
    })
}

fn write_file(path: &Path, content: &str) -> Result<(), FormatError> {
    std::fs::write(path, content).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a plain graph directory in canonical order (edges by id pair,
/// features by node then feature id). `labels.tsv`/`splits.tsv` are only
/// written when present.
pub fn write_graph_dir(
    graph: &Graph,
    names: &NameTable,
    splits: Option<&SplitSpec>,
    dir: &Path,
) -> Result<(), FormatError> {
    std::fs::create_dir_all(dir).map_err(|source| FormatError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut edges = String::new();
    for &(u, v) in graph.edges() {
        writeln!(edges, "{}\t{}", names.node_names[u], names.node_names[v]).unwrap();
    }
    write_file(&dir.join(EDGES_FILE), &edges)?;

    let mut feats = String::new();
    for u in 0..graph.num_nodes() {
        for &k in graph.features_of(u) {
            writeln!(feats, "{}\t{}", names.node_names[u], names.feature_names[k]).unwrap();
        }
    }
    write_file(&dir.join(FEATURES_FILE), &feats)?;

    let any_label = (0..graph.num_nodes()).any(|u| graph.label(u).is_some());
    if any_label {
        let mut labels = String::new();
        for u in 0..graph.num_nodes() {
            if let Some(c) = graph.label(u) {
                writeln!(labels, "{}\t{}", names.node_names[u], names.class_name(c)).unwrap();
            }
        }
        write_file(&dir.join(LABELS_FILE), &labels)?;
    }

    if let Some(spec) = splits {
        let mut out = String::new();
        for (u, role) in spec.assignment.iter().enumerate() {
            if let Some(role) = role {
                let tag = match role {
                    SplitRole::Train => "train",
                    SplitRole::Val => "val",
                    SplitRole::Test => "test",
                };
                writeln!(out, "{}\t{}", names.node_names[u], tag).unwrap();
            }
        }
        write_file(&dir.join(SPLITS_FILE), &out)?;
    }
    Ok(())
}

/// Deterministic feature-node names: `x{rank+1}`, extended with
/// underscores on the rare collision with an existing node name.
pub fn feature_node_names(tg: &TransformedGraph, names: &NameTable) -> Vec<String> {
    let taken: std::collections::HashSet<&str> =
        names.node_names.iter().map(|s| s.as_str()).collect();
    let mut out = Vec::with_capacity(tg.num_feature_nodes());
    for rank in 0..tg.num_feature_nodes() {
        let mut candidate = format!("x{}", rank + 1);
        while taken.contains(candidate.as_str()) || out.contains(&candidate) {
            candidate.push('_');
        }
        out.push(candidate);
    }
    out
}

/// Writes a transformed graph: the base graph files plus node kinds,
/// feature provenance, and the augmented feature rows.
pub fn write_transformed(
    tg: &TransformedGraph,
    names: &NameTable,
    dir: &Path,
) -> Result<(), FormatError> {
    std::fs::create_dir_all(dir).map_err(|source| FormatError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let base = tg.base();
    let n = tg.num_graph_nodes();
    let feature_nodes = feature_node_names(tg, names);
    let node_name = |u: NodeId| -> &str {
        if u < n {
            &names.node_names[u]
        } else {
            &feature_nodes[u - n]
        }
    };
    // Feature name of an augmented column (columns are used-feature ranks).
    let col_name = |col: usize| -> &str { &names.feature_names[tg.used_features()[col]] };

    let mut edges = String::new();
    for &(u, v) in base.edges() {
        writeln!(edges, "{}\t{}", node_name(u), node_name(v)).unwrap();
    }
    write_file(&dir.join(EDGES_FILE), &edges)?;

    let mut feats = String::new();
    for u in 0..n {
        for &col in base.features_of(u) {
            writeln!(feats, "{}\t{}", node_name(u), col_name(col)).unwrap();
        }
    }
    write_file(&dir.join(FEATURES_FILE), &feats)?;

    let any_label = (0..n).any(|u| base.label(u).is_some());
    if any_label {
        let mut labels = String::new();
        for u in 0..n {
            if let Some(c) = base.label(u) {
                writeln!(labels, "{}\t{}", node_name(u), names.class_name(c)).unwrap();
            }
        }
        write_file(&dir.join(LABELS_FILE), &labels)?;
    }

    let mut kinds = String::new();
    for u in 0..base.num_nodes() {
        let tag = match tg.node_kind(u) {
            NodeKind::GraphNode => "graph_node",
            NodeKind::FeatureNode => "feature_node",
        };
        writeln!(kinds, "{}\t{}", node_name(u), tag).unwrap();
    }
    write_file(&dir.join(NODE_KINDS_FILE), &kinds)?;

    let mut provenance = String::new();
    for (rank, name) in feature_nodes.iter().enumerate() {
        writeln!(provenance, "{}\t{}", name, col_name(rank)).unwrap();
    }
    write_file(&dir.join(PROVENANCE_FILE), &provenance)?;

    let mut x_star = String::new();
    for u in 0..base.num_nodes() {
        for (col, val) in tg.x_star_row(u).iter() {
            writeln!(
                x_star,
                "{}\t{}\t{}",
                node_name(u),
                col_name(col),
                format_g17(val)
            )
            .unwrap();
        }
    }
    write_file(&dir.join(X_STAR_FILE), &x_star)?;
    Ok(())
}

/// Reads a transformed-graph directory back into a [`TransformedGraph`].
///
/// `node_kinds.tsv` fixes the node order; `feature_provenance.tsv` fixes
/// the feature column order. The returned name table lists features in
/// column order.
pub fn parse_transformed_dir(
    dir: &Path,
) -> Result<(TransformedGraph, NameTable), FormatError> {
    let kinds_path = dir.join(NODE_KINDS_FILE);
    let mut node_names: Vec<String> = Vec::new();
    let mut kinds: Vec<NodeKind> = Vec::new();
    for (line_no, line) in read_lines(&kinds_path)? {
        let f = fields(&line);
        let [name, kind] = f.as_slice() else {
            return Err(FormatError::Malformed {
                file: kinds_path,
                line: line_no,
                reason: format!("expected 2 tab-separated fields, found {}", f.len()),
            });
        };
        let kind = match *kind {
            "graph_node" => NodeKind::GraphNode,
            "feature_node" => NodeKind::FeatureNode,
            other => {
                return Err(FormatError::Malformed {
                    file: kinds_path,
                    line: line_no,
                    reason: format!("unknown node kind \"{other}\""),
                })
            }
        };
        if kind == NodeKind::GraphNode && kinds.last() == Some(&NodeKind::FeatureNode) {
            return Err(FormatError::Malformed {
                file: kinds_path,
                line: line_no,
                reason: "graph nodes must precede feature nodes".to_string(),
            });
        }
        node_names.push(name.to_string());
        kinds.push(kind);
    }
    let num_graph_nodes = kinds.iter().filter(|k| **k == NodeKind::GraphNode).count();
    let total = kinds.len();
    let node_ids: HashMap<&str, usize> = node_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    if node_ids.len() != node_names.len() {
        return Err(FormatError::Malformed {
            file: kinds_path,
            line: 0,
            reason: "duplicate node name".to_string(),
        });
    }
    let lookup = |file: &Path, line: usize, name: &str| -> Result<usize, FormatError> {
        node_ids
            .get(name)
            .copied()
            .ok_or_else(|| FormatError::UnknownNodeName {
                file: file.to_path_buf(),
                line,
                name: name.to_string(),
            })
    };

    let provenance_path = dir.join(PROVENANCE_FILE);
    let mut feature_names: Vec<String> = Vec::new();
    let mut feature_cols: HashMap<String, usize> = HashMap::new();
    for (line_no, line) in read_lines(&provenance_path)? {
        let f = fields(&line);
        let [node, feature] = f.as_slice() else {
            return Err(FormatError::Malformed {
                file: provenance_path,
                line: line_no,
                reason: format!("expected 2 tab-separated fields, found {}", f.len()),
            });
        };
        let rank = feature_names.len();
        let expected = num_graph_nodes + rank;
        if lookup(&provenance_path, line_no, node)? != expected {
            return Err(FormatError::Malformed {
                file: provenance_path,
                line: line_no,
                reason: format!(
                    "feature-node order must match {NODE_KINDS_FILE} (\"{node}\" is not node {expected})"
                ),
            });
        }
        if feature_cols.insert(feature.to_string(), rank).is_some() {
            return Err(FormatError::Malformed {
                file: provenance_path,
                line: line_no,
                reason: format!("feature \"{feature}\" listed twice"),
            });
        }
        feature_names.push(feature.to_string());
    }
    if feature_names.len() != total - num_graph_nodes {
        return Err(FormatError::Malformed {
            file: provenance_path,
            line: 0,
            reason: "one provenance row per feature node required".to_string(),
        });
    }

    let edges_path = dir.join(EDGES_FILE);
    let mut edges = Vec::new();
    for (line_no, line) in read_lines(&edges_path)? {
        let f = fields(&line);
        let [a, b] = f.as_slice() else {
            return Err(FormatError::Malformed {
                file: edges_path,
                line: line_no,
                reason: format!("expected 2 tab-separated fields, found {}", f.len()),
            });
        };
        edges.push((
            lookup(&edges_path, line_no, a)?,
            lookup(&edges_path, line_no, b)?,
        ));
    }

    let features_path = dir.join(FEATURES_FILE);
    let mut feature_entries = Vec::new();
    for (line_no, line) in read_lines(&features_path)? {
        let f = fields(&line);
        let (node, feature) = match f.as_slice() {
            [node, feature] => (*node, *feature),
            [node, feature, value] if *value == "1" => (*node, *feature),
            _ => {
                return Err(FormatError::Malformed {
                    file: features_path,
                    line: line_no,
                    reason: "expected node, feature[, 1]".to_string(),
                })
            }
        };
        let u = lookup(&features_path, line_no, node)?;
        let col = *feature_cols
            .get(feature)
            .ok_or_else(|| FormatError::Malformed {
                file: features_path.clone(),
                line: line_no,
                reason: format!("feature \"{feature}\" missing from {PROVENANCE_FILE}"),
            })?;
        feature_entries.push((u, col));
    }

    let labels_path = dir.join(LABELS_FILE);
    let mut labels = Vec::new();
    let mut class_names = Interner::new();
    if labels_path.exists() {
        for (line_no, line) in read_lines(&labels_path)? {
            let f = fields(&line);
            let [node, class] = f.as_slice() else {
                return Err(FormatError::Malformed {
                    file: labels_path,
                    line: line_no,
                    reason: format!("expected 2 tab-separated fields, found {}", f.len()),
                });
            };
            let u = lookup(&labels_path, line_no, node)?;
            if u >= num_graph_nodes {
                return Err(FormatError::Malformed {
                    file: labels_path,
                    line: line_no,
                    reason: format!("feature node \"{node}\" cannot carry a label"),
                });
            }
            labels.push((u, class_names.intern(class)));
        }
    }

    let x_star_path = dir.join(X_STAR_FILE);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); total];
    for (line_no, line) in read_lines(&x_star_path)? {
        let f = fields(&line);
        let [node, feature, value] = f.as_slice() else {
            return Err(FormatError::Malformed {
                file: x_star_path,
                line: line_no,
                reason: format!("expected 3 tab-separated fields, found {}", f.len()),
            });
        };
        let u = lookup(&x_star_path, line_no, node)?;
        let col = *feature_cols
            .get(*feature)
            .ok_or_else(|| FormatError::Malformed {
                file: x_star_path.clone(),
                line: line_no,
                reason: format!("feature \"{feature}\" missing from {PROVENANCE_FILE}"),
            })?;
        let v: f64 = value.parse().map_err(|_| FormatError::Malformed {
            file: x_star_path.clone(),
            line: line_no,
            reason: format!("value \"{value}\" is not a number"),
        })?;
        rows[u].push((col, v));
    }
    let mut x_star = Vec::with_capacity(total);
    for (u, mut row) in rows.into_iter().enumerate() {
        row.sort_unstable_by_key(|&(col, _)| col);
        if row.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(FormatError::Malformed {
                file: x_star_path,
                line: 0,
                reason: format!("duplicate entry for node \"{}\"", node_names[u]),
            });
        }
        x_star.push(SparseVec::new(
            row.iter().map(|&(c, _)| c).collect(),
            row.iter().map(|&(_, v)| v).collect(),
        ));
    }

    let (base, _) = Graph::build(total, &edges, &feature_entries, &labels).map_err(|e| {
        FormatError::Malformed {
            file: dir.to_path_buf(),
            line: 0,
            reason: e.to_string(),
        }
    })?;
    let num_graph_edges = base
        .edges()
        .iter()
        .filter(|&&(_, v)| v < num_graph_nodes)
        .count();
    let used: Vec<FeatureId> = (0..feature_names.len()).collect();
    let tg = TransformedGraph::from_parts(base, kinds, used, x_star, num_graph_nodes, num_graph_edges);
    let names = NameTable {
        node_names: node_names[..num_graph_nodes].to_vec(),
        feature_names,
        class_names: class_names.names,
    };
    Ok((tg, names))
}
