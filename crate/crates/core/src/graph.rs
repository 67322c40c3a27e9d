//! Canonical in-memory graph representation.
//!
//! A [`Graph`] is an undirected graph with sparse binary node features and
//! optional node labels. Construction canonicalizes the input (self-loops
//! dropped, duplicates merged, edges stored once in `(min, max)` order) and
//! validates every index; after that the graph is immutable and safe to
//! share across threads.

use thiserror::Error;

/// Dense non-negative index into the node set.
pub type NodeId = usize;
/// Dense non-negative index into the feature set.
pub type FeatureId = usize;
/// Dense non-negative index into the label set.
pub type ClassId = usize;

/// A sparse real-valued vector: sorted indices with parallel values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec {
    /// Strictly increasing coordinate indices.
    pub ids: Vec<usize>,
    /// Values parallel to `ids`; entries not listed are zero.
    pub vals: Vec<f64>,
}

impl SparseVec {
    pub fn new(ids: Vec<usize>, vals: Vec<f64>) -> Self {
        debug_assert_eq!(ids.len(), vals.len());
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        Self { ids, vals }
    }

    pub fn nnz(&self) -> usize {
        self.ids.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.ids.iter().copied().zip(self.vals.iter().copied())
    }

    /// Value at coordinate `k` (zero if absent).
    pub fn get(&self, k: usize) -> f64 {
        match self.ids.binary_search(&k) {
            Ok(pos) => self.vals[pos],
            Err(_) => 0.0,
        }
    }
}

/// Construction errors: every offending record is named.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge {index}: node id {node} out of range (num_nodes = {num_nodes})")]
    EdgeOutOfRange {
        index: usize,
        node: NodeId,
        num_nodes: usize,
    },
    #[error("feature entry {index}: node id {node} out of range (num_nodes = {num_nodes})")]
    FeatureNodeOutOfRange {
        index: usize,
        node: NodeId,
        num_nodes: usize,
    },
    #[error("label entry {index}: node id {node} out of range (num_nodes = {num_nodes})")]
    LabelNodeOutOfRange {
        index: usize,
        node: NodeId,
        num_nodes: usize,
    },
    #[error("node {node} labeled twice with different classes ({first} and {second})")]
    ConflictingLabels {
        node: NodeId,
        first: ClassId,
        second: ClassId,
    },
    #[error("node id {node} out of range (num_nodes = {num_nodes})")]
    NodeOutOfRange { node: NodeId, num_nodes: usize },
}

/// Counts of records silently repaired during construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildWarnings {
    pub self_loops_dropped: usize,
    pub duplicate_edges_dropped: usize,
    pub duplicate_feature_entries_dropped: usize,
}

impl BuildWarnings {
    pub fn is_clean(&self) -> bool {
        *self == Self::default()
    }
}

/// Undirected graph with sparse binary node features and optional labels.
///
/// Invariants established at construction:
/// - no self-loops, no duplicate edges, each edge stored once as `(min, max)`
///   and the edge list sorted;
/// - per-node feature lists sorted ascending and duplicate-free (a stored
///   entry means the binary feature value is exactly 1);
/// - every referenced node/feature/class id is in range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    num_features: usize,
    num_classes: usize,
    edges: Vec<(NodeId, NodeId)>,
    adj_offsets: Vec<usize>,
    adj_targets: Vec<NodeId>,
    feat_offsets: Vec<usize>,
    feat_ids: Vec<FeatureId>,
    labels: Vec<Option<ClassId>>,
}

impl Graph {
    /// Builds a graph from raw records.
    ///
    /// Self-loops and duplicate edges/feature entries are dropped and
    /// counted in the returned [`BuildWarnings`]; out-of-range indices and
    /// conflicting labels are rejected. `num_features` and `num_classes`
    /// are inferred as one past the largest referenced id.
    pub fn build(
        num_nodes: usize,
        raw_edges: &[(NodeId, NodeId)],
        raw_features: &[(NodeId, FeatureId)],
        raw_labels: &[(NodeId, ClassId)],
    ) -> Result<(Graph, BuildWarnings), GraphError> {
        let mut warnings = BuildWarnings::default();

        let mut edges = Vec::with_capacity(raw_edges.len());
        for (index, &(u, v)) in raw_edges.iter().enumerate() {
            for node in [u, v] {
                if node >= num_nodes {
                    return Err(GraphError::EdgeOutOfRange {
                        index,
                        node,
                        num_nodes,
                    });
                }
            }
            if u == v {
                warnings.self_loops_dropped += 1;
                continue;
            }
            edges.push((u.min(v), u.max(v)));
        }
        edges.sort_unstable();
        let before = edges.len();
        edges.dedup();
        warnings.duplicate_edges_dropped = before - edges.len();

        let mut feats = Vec::with_capacity(raw_features.len());
        let mut num_features = 0;
        for (index, &(node, feat)) in raw_features.iter().enumerate() {
            if node >= num_nodes {
                return Err(GraphError::FeatureNodeOutOfRange {
                    index,
                    node,
                    num_nodes,
                });
            }
            num_features = num_features.max(feat + 1);
            feats.push((node, feat));
        }
        feats.sort_unstable();
        let before = feats.len();
        feats.dedup();
        warnings.duplicate_feature_entries_dropped = before - feats.len();

        let mut labels = vec![None; num_nodes];
        let mut num_classes = 0;
        for (index, &(node, class)) in raw_labels.iter().enumerate() {
            if node >= num_nodes {
                return Err(GraphError::LabelNodeOutOfRange {
                    index,
                    node,
                    num_nodes,
                });
            }
            num_classes = num_classes.max(class + 1);
            match labels[node] {
                Some(existing) if existing != class => {
                    return Err(GraphError::ConflictingLabels {
                        node,
                        first: existing,
                        second: class,
                    });
                }
                _ => labels[node] = Some(class),
            }
        }

        // CSR adjacency from the canonical edge list.
        let mut degree = vec![0usize; num_nodes];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut adj_offsets = Vec::with_capacity(num_nodes + 1);
        adj_offsets.push(0);
        for d in &degree {
            adj_offsets.push(adj_offsets.last().unwrap() + d);
        }
        let mut adj_targets = vec![0; adj_offsets[num_nodes]];
        let mut cursor = adj_offsets.clone();
        for &(u, v) in &edges {
            adj_targets[cursor[u]] = v;
            cursor[u] += 1;
            adj_targets[cursor[v]] = u;
            cursor[v] += 1;
        }
        for u in 0..num_nodes {
            adj_targets[adj_offsets[u]..adj_offsets[u + 1]].sort_unstable();
        }

        // CSR feature rows (feats already sorted by (node, feature)).
        let mut feat_offsets = Vec::with_capacity(num_nodes + 1);
        feat_offsets.push(0);
        let mut feat_ids = Vec::with_capacity(feats.len());
        let mut pos = 0;
        for node in 0..num_nodes {
            while pos < feats.len() && feats[pos].0 == node {
                feat_ids.push(feats[pos].1);
                pos += 1;
            }
            feat_offsets.push(feat_ids.len());
        }

        Ok((
            Graph {
                num_nodes,
                num_features,
                num_classes,
                edges,
                adj_offsets,
                adj_targets,
                feat_offsets,
                feat_ids,
                labels,
            },
            warnings,
        ))
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list: sorted, each edge once as `(min, max)`.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Total number of stored feature entries (`nnz` of the binary matrix).
    pub fn feature_nnz(&self) -> usize {
        self.feat_ids.len()
    }

    fn check_node(&self, u: NodeId) -> Result<(), GraphError> {
        if u >= self.num_nodes {
            Err(GraphError::NodeOutOfRange {
                node: u,
                num_nodes: self.num_nodes,
            })
        } else {
            Ok(())
        }
    }

    /// Sorted neighbor list of `u`.
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.adj_targets[self.adj_offsets[u]..self.adj_offsets[u + 1]]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adj_offsets[u + 1] - self.adj_offsets[u]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Sorted, duplicate-free feature ids of node `u`.
    pub fn features_of(&self, u: NodeId) -> &[FeatureId] {
        &self.feat_ids[self.feat_offsets[u]..self.feat_offsets[u + 1]]
    }

    pub fn label(&self, u: NodeId) -> Option<ClassId> {
        self.labels[u]
    }

    pub fn labels(&self) -> &[Option<ClassId>] {
        &self.labels
    }

    /// True iff the feature supports of `u` and `v` intersect.
    ///
    /// Equivalent to `max_k min(X[u,k], X[v,k]) > 0` on binary rows.
    pub fn shares_feature(&self, u: NodeId, v: NodeId) -> Result<bool, GraphError> {
        self.check_node(u)?;
        self.check_node(v)?;
        Ok(sorted_intersects(self.features_of(u), self.features_of(v)))
    }

    /// Plain (unweighted) degrees of all nodes.
    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes).map(|u| self.degree(u)).collect()
    }
}

/// True iff two strictly sorted slices share an element.
pub(crate) fn sorted_intersects(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Label of a node in a soft-labeled graph: exactly one of the two forms.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeLabel {
    Hard(ClassId),
    /// Probability row over classes: entries >= 0, sum = 1 within 1e-9.
    Soft(Vec<f64>),
}

/// Per-node labels where unlabeled nodes carry a probability row instead.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabeledGraph {
    labels: Vec<NodeLabel>,
    num_classes: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum SoftLabelError {
    #[error("soft row for node {node} has length {len}, expected {num_classes}")]
    WrongWidth {
        node: NodeId,
        len: usize,
        num_classes: usize,
    },
    #[error("soft row for node {node} is not a probability distribution (sum = {sum})")]
    NotADistribution { node: NodeId, sum: f64 },
    #[error("hard label {class} for node {node} out of range (num_classes = {num_classes})")]
    ClassOutOfRange {
        node: NodeId,
        class: ClassId,
        num_classes: usize,
    },
}

impl SoftLabeledGraph {
    pub fn new(labels: Vec<NodeLabel>, num_classes: usize) -> Result<Self, SoftLabelError> {
        for (node, label) in labels.iter().enumerate() {
            match label {
                NodeLabel::Hard(c) => {
                    if *c >= num_classes {
                        return Err(SoftLabelError::ClassOutOfRange {
                            node,
                            class: *c,
                            num_classes,
                        });
                    }
                }
                NodeLabel::Soft(row) => {
                    if row.len() != num_classes {
                        return Err(SoftLabelError::WrongWidth {
                            node,
                            len: row.len(),
                            num_classes,
                        });
                    }
                    let sum: f64 = row.iter().sum();
                    if row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                        return Err(SoftLabelError::NotADistribution { node, sum });
                    }
                }
            }
        }
        Ok(Self {
            labels,
            num_classes,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn label(&self, u: NodeId) -> &NodeLabel {
        &self.labels[u]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::fig_graph;
    use proptest::prelude::*;

    #[test]
    fn canonicalizes_self_loops_and_duplicates() {
        let (graph, warnings) = Graph::build(2, &[(0, 1), (1, 0), (0, 0)], &[], &[]).unwrap();
        assert_eq!(graph.num_edges(), 1);
        assert_eq!(graph.edges(), &[(0, 1)]);
        assert_eq!(warnings.self_loops_dropped, 1);
        assert_eq!(warnings.duplicate_edges_dropped, 1);
    }

    #[test]
    fn fig_graph_counts() {
        let graph = fig_graph();
        assert_eq!(graph.num_nodes(), 5);
        assert_eq!(graph.num_edges(), 4);
        assert_eq!(graph.feature_nnz(), 7);
        assert_eq!(graph.num_features(), 3);
        assert_eq!(graph.num_classes(), 2);
        assert_eq!(graph.edges(), &[(0, 2), (0, 3), (1, 3), (1, 4)]);
    }

    #[test]
    fn shares_feature_matches_hand_enumeration() {
        let graph = fig_graph();
        assert!(graph.shares_feature(0, 1).unwrap()); // v1, v2 share f1
        assert!(!graph.shares_feature(0, 2).unwrap()); // v1, v3 disjoint
        assert!(graph.shares_feature(1, 1).unwrap()); // node with features vs itself
    }

    #[test]
    fn neighbors_and_degrees() {
        let graph = fig_graph();
        assert_eq!(graph.neighbors(1), &[3, 4]); // v2 -> {v4, v5}
        assert_eq!(graph.degree(1), 2);

        let (isolated, _) = Graph::build(3, &[(0, 1)], &[], &[]).unwrap();
        assert_eq!(isolated.neighbors(2), &[] as &[NodeId]);
        assert_eq!(isolated.degree(2), 0);

        let (path, _) = Graph::build(3, &[(0, 1), (1, 2)], &[], &[]).unwrap();
        assert_eq!(path.degree(1), 2);
    }

    #[test]
    fn out_of_range_records_are_named() {
        let err = Graph::build(2, &[(0, 5)], &[], &[]).unwrap_err();
        assert_eq!(
            err,
            GraphError::EdgeOutOfRange {
                index: 0,
                node: 5,
                num_nodes: 2
            }
        );
        let err = Graph::build(2, &[], &[(7, 0)], &[]).unwrap_err();
        assert!(matches!(err, GraphError::FeatureNodeOutOfRange { index: 0, node: 7, .. }));
        let err = Graph::build(2, &[], &[], &[(3, 0)]).unwrap_err();
        assert!(matches!(err, GraphError::LabelNodeOutOfRange { index: 0, node: 3, .. }));
    }

    #[test]
    fn conflicting_labels_rejected_identical_duplicates_merged() {
        let err = Graph::build(1, &[], &[], &[(0, 0), (0, 1)]).unwrap_err();
        assert!(matches!(err, GraphError::ConflictingLabels { node: 0, .. }));
        let (graph, _) = Graph::build(1, &[], &[], &[(0, 1), (0, 1)]).unwrap();
        assert_eq!(graph.label(0), Some(1));
    }

    #[test]
    fn soft_rows_validated() {
        let ok = SoftLabeledGraph::new(
            vec![NodeLabel::Hard(0), NodeLabel::Soft(vec![0.5, 0.5])],
            2,
        );
        assert!(ok.is_ok());
        let bad = SoftLabeledGraph::new(vec![NodeLabel::Soft(vec![0.7, 0.7])], 2);
        assert!(matches!(bad, Err(SoftLabelError::NotADistribution { .. })));
        let bad = SoftLabeledGraph::new(vec![NodeLabel::Hard(2)], 2);
        assert!(matches!(bad, Err(SoftLabelError::ClassOutOfRange { .. })));
    }

    fn arbitrary_graph() -> impl Strategy<Value = Graph> {
        (2usize..30).prop_flat_map(|n| {
            let edges = proptest::collection::vec((0..n, 0..n), 0..60);
            let feats = proptest::collection::vec((0..n, 0usize..12), 0..80);
            (Just(n), edges, feats).prop_map(|(n, edges, feats)| {
                Graph::build(n, &edges, &feats, &[]).unwrap().0
            })
        })
    }

    proptest! {
        #[test]
        fn shares_feature_is_symmetric(graph in arbitrary_graph()) {
            for u in 0..graph.num_nodes() {
                for v in 0..graph.num_nodes() {
                    prop_assert_eq!(
                        graph.shares_feature(u, v).unwrap(),
                        graph.shares_feature(v, u).unwrap()
                    );
                }
            }
        }

        #[test]
        fn degree_sum_is_twice_edge_count(graph in arbitrary_graph()) {
            let total: usize = (0..graph.num_nodes()).map(|u| graph.degree(u)).sum();
            prop_assert_eq!(total, 2 * graph.num_edges());
        }

        #[test]
        fn rebuild_from_canonical_form_is_identity(graph in arbitrary_graph()) {
            let feats: Vec<(NodeId, FeatureId)> = (0..graph.num_nodes())
                .flat_map(|u| graph.features_of(u).iter().map(move |&k| (u, k)))
                .collect();
            let labels: Vec<(NodeId, ClassId)> = (0..graph.num_nodes())
                .filter_map(|u| graph.label(u).map(|c| (u, c)))
                .collect();
            let (rebuilt, warnings) =
                Graph::build(graph.num_nodes(), graph.edges(), &feats, &labels).unwrap();
            prop_assert!(warnings.is_clean());
            prop_assert_eq!(rebuilt, graph);
        }
    }
}
