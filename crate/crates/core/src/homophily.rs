//! Homophily metrics.
//!
//! Four statistics over the edges of a graph:
//!
//! - share homophily: mean of the shared-feature indicator, generalized to
//!   `max_k min(x_u[k], x_v[k])` on real-valued rows;
//! - feature homophily: mean edge-wise cosine similarity of feature rows;
//! - edge homophily: mean label agreement;
//! - adjusted homophily: edge homophily corrected for class-degree
//!   imbalance, `(H_edge - s) / (1 - s)` with
//!   `s = sum_c D_c^2 / (2|E|)^2` and `D_c` the degree mass of class `c`.
//!
//! Augmented graphs mix hard-labeled graph nodes with feature nodes that
//! carry soft labels; agreement scores and `D_c` extend to soft labels by
//! expectation. All accumulations use compensated summation in canonical
//! edge order, so results are bit-reproducible.

use thiserror::Error;

use crate::graph::{ClassId, Graph, NodeId, NodeLabel, SoftLabeledGraph, SparseVec};
use crate::kahan::KahanSum;
use crate::textfmt::format_g17;
use crate::transform::TransformedGraph;

/// Denominator tolerance below which adjusted homophily is undefined.
pub const ADJUSTED_HOM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("undefined: no edges")]
    NoEdges,
    #[error("missing label for node {0}")]
    MissingLabel(NodeId),
}

/// Read access to per-node feature rows, binary or real-valued.
pub trait FeatureRows {
    fn num_nodes(&self) -> usize;
    fn num_features(&self) -> usize;
    /// Sorted sparse row of node `u`.
    fn row(&self, u: NodeId) -> FeatureRowRef<'_>;
}

/// Borrowed sparse row; `vals = None` means every listed entry is 1.
#[derive(Debug, Clone, Copy)]
pub struct FeatureRowRef<'a> {
    pub ids: &'a [usize],
    pub vals: Option<&'a [f64]>,
}

impl<'a> FeatureRowRef<'a> {
    fn val(&self, pos: usize) -> f64 {
        match self.vals {
            Some(vals) => vals[pos],
            None => 1.0,
        }
    }

    fn norm_sq(&self) -> f64 {
        match self.vals {
            None => self.ids.len() as f64,
            Some(vals) => vals.iter().map(|v| v * v).sum::<f64>(),
        }
    }

    fn dot(&self, other: &FeatureRowRef<'_>) -> f64 {
        let mut acc = 0.0;
        merge_common(self, other, |a, b| acc += a * b);
        acc
    }

    /// Generalized shared-feature score: `max_k min(x[k], y[k])`.
    ///
    /// Feature values are nonnegative, so only common coordinates matter;
    /// on binary rows this is exactly the shared-feature indicator.
    fn min_overlap_max(&self, other: &FeatureRowRef<'_>) -> f64 {
        let mut best = 0.0f64;
        merge_common(self, other, |a, b| best = best.max(a.min(b)));
        best
    }
}

fn merge_common(a: &FeatureRowRef<'_>, b: &FeatureRowRef<'_>, mut visit: impl FnMut(f64, f64)) {
    let (mut i, mut j) = (0, 0);
    while i < a.ids.len() && j < b.ids.len() {
        match a.ids[i].cmp(&b.ids[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                visit(a.val(i), b.val(j));
                i += 1;
                j += 1;
            }
        }
    }
}

impl FeatureRows for Graph {
    fn num_nodes(&self) -> usize {
        Graph::num_nodes(self)
    }

    fn num_features(&self) -> usize {
        Graph::num_features(self)
    }

    fn row(&self, u: NodeId) -> FeatureRowRef<'_> {
        FeatureRowRef {
            ids: self.features_of(u),
            vals: None,
        }
    }
}

/// Plain real-valued rows (used for standalone metric calls and oracles).
pub struct SparseRows<'a> {
    pub rows: &'a [SparseVec],
    pub num_features: usize,
}

impl FeatureRows for SparseRows<'_> {
    fn num_nodes(&self) -> usize {
        self.rows.len()
    }

    fn num_features(&self) -> usize {
        self.num_features
    }

    fn row(&self, u: NodeId) -> FeatureRowRef<'_> {
        FeatureRowRef {
            ids: &self.rows[u].ids,
            vals: Some(&self.rows[u].vals),
        }
    }
}

/// Label lookup over hard and soft labels.
pub trait LabelAccess {
    fn num_classes(&self) -> usize;
    fn label_of(&self, u: NodeId) -> Option<LabelRef<'_>>;
}

#[derive(Debug, Clone, Copy)]
pub enum LabelRef<'a> {
    Hard(ClassId),
    Soft(&'a [f64]),
}

impl LabelAccess for Graph {
    fn num_classes(&self) -> usize {
        Graph::num_classes(self)
    }

    fn label_of(&self, u: NodeId) -> Option<LabelRef<'_>> {
        self.label(u).map(LabelRef::Hard)
    }
}

impl LabelAccess for SoftLabeledGraph {
    fn num_classes(&self) -> usize {
        SoftLabeledGraph::num_classes(self)
    }

    fn label_of(&self, u: NodeId) -> Option<LabelRef<'_>> {
        Some(match self.label(u) {
            NodeLabel::Hard(c) => LabelRef::Hard(*c),
            NodeLabel::Soft(row) => LabelRef::Soft(row),
        })
    }
}

/// Expected agreement of two labels; reduces to the equality indicator on
/// hard labels.
fn agreement(a: LabelRef<'_>, b: LabelRef<'_>) -> f64 {
    match (a, b) {
        (LabelRef::Hard(c), LabelRef::Hard(d)) => {
            if c == d {
                1.0
            } else {
                0.0
            }
        }
        (LabelRef::Hard(c), LabelRef::Soft(p)) | (LabelRef::Soft(p), LabelRef::Hard(c)) => p[c],
        (LabelRef::Soft(p), LabelRef::Soft(q)) => p.iter().zip(q).map(|(x, y)| x * y).sum(),
    }
}

/// Mean edge-wise cosine similarity of feature rows.
///
/// Cosine against a zero row is defined as 0.
pub fn feature_homophily<R: FeatureRows + ?Sized>(
    rows: &R,
    edges: &[(NodeId, NodeId)],
) -> Result<f64, MetricError> {
    if edges.is_empty() {
        return Err(MetricError::NoEdges);
    }
    let mut acc = KahanSum::new();
    for &(u, v) in edges {
        let (ru, rv) = (rows.row(u), rows.row(v));
        let scale_sq = ru.norm_sq() * rv.norm_sq();
        if scale_sq > 0.0 {
            acc.add(ru.dot(&rv) / scale_sq.sqrt());
        }
    }
    Ok(acc.value() / edges.len() as f64)
}

/// Mean edge-wise label agreement.
pub fn edge_homophily<L: LabelAccess + ?Sized>(
    labels: &L,
    edges: &[(NodeId, NodeId)],
) -> Result<f64, MetricError> {
    if edges.is_empty() {
        return Err(MetricError::NoEdges);
    }
    let mut acc = KahanSum::new();
    for &(u, v) in edges {
        let lu = labels.label_of(u).ok_or(MetricError::MissingLabel(u))?;
        let lv = labels.label_of(v).ok_or(MetricError::MissingLabel(v))?;
        acc.add(agreement(lu, lv));
    }
    Ok(acc.value() / edges.len() as f64)
}

/// Edge homophily corrected for class-degree imbalance.
///
/// Returns `Ok(None)` when the correction denominator falls below
/// [`ADJUSTED_HOM_TOLERANCE`]. Soft-labeled nodes contribute fractionally
/// to each class degree mass.
pub fn adjusted_homophily<L: LabelAccess + ?Sized>(
    labels: &L,
    edges: &[(NodeId, NodeId)],
    degrees: &[usize],
) -> Result<Option<f64>, MetricError> {
    let h_edge = edge_homophily(labels, edges)?;
    let num_classes = labels.num_classes();
    let mut mass = vec![KahanSum::new(); num_classes];
    for (u, &deg) in degrees.iter().enumerate() {
        match labels.label_of(u) {
            Some(LabelRef::Hard(c)) => mass[c].add(deg as f64),
            Some(LabelRef::Soft(p)) => {
                for (c, &pc) in p.iter().enumerate() {
                    mass[c].add(deg as f64 * pc);
                }
            }
            // Any edge endpoint is labeled (edge_homophily succeeded), so
            // an unlabeled node here is isolated and carries no mass.
            None => {}
        }
    }
    let two_e = 2.0 * edges.len() as f64;
    let mut sq = KahanSum::new();
    for m in &mass {
        let ratio = m.value() / two_e;
        sq.add(ratio * ratio);
    }
    let denom = 1.0 - sq.value();
    if denom < ADJUSTED_HOM_TOLERANCE {
        return Ok(None);
    }
    Ok(Some((h_edge - sq.value()) / denom))
}

/// Mean generalized shared-feature score over edges.
///
/// On binary rows this is the fraction of edges whose endpoints share a
/// feature; real-valued rows use `max_k min(x_u[k], x_v[k])`.
pub fn share_homophily<R: FeatureRows + ?Sized>(
    rows: &R,
    edges: &[(NodeId, NodeId)],
) -> Result<f64, MetricError> {
    if edges.is_empty() {
        return Err(MetricError::NoEdges);
    }
    let mut acc = KahanSum::new();
    for &(u, v) in edges {
        acc.add(rows.row(u).min_overlap_max(&rows.row(v)));
    }
    Ok(acc.value() / edges.len() as f64)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SoftLabelAssignError {
    #[error("graph node {0} has no hard label")]
    UnlabeledGraphNode(NodeId),
}

/// Assigns each feature node the empirical label distribution of its
/// graph-node neighbors; graph nodes keep their hard labels.
///
/// Requires every graph node to be hard-labeled. The transform drops
/// unused features, so every feature node has at least one neighbor.
pub fn assign_soft_labels(
    tg: &TransformedGraph,
) -> Result<SoftLabeledGraph, SoftLabelAssignError> {
    let base = tg.base();
    let num_classes = base.num_classes();
    let mut labels = Vec::with_capacity(base.num_nodes());
    for u in 0..tg.num_graph_nodes() {
        let c = base
            .label(u)
            .ok_or(SoftLabelAssignError::UnlabeledGraphNode(u))?;
        labels.push(NodeLabel::Hard(c));
    }
    for x in tg.num_graph_nodes()..base.num_nodes() {
        let neighbors = base.neighbors(x);
        assert!(
            !neighbors.is_empty(),
            "feature node {x} has no neighbors; unused features must be dropped by the transform"
        );
        let mut counts = vec![0usize; num_classes];
        for &v in neighbors {
            // Feature edges only join graph nodes to feature nodes.
            counts[base.label(v).expect("graph nodes checked above")] += 1;
        }
        let total = neighbors.len() as f64;
        labels.push(NodeLabel::Soft(
            counts.iter().map(|&c| c as f64 / total).collect(),
        ));
    }
    Ok(SoftLabeledGraph::new(labels, num_classes).expect("rows are normalized counts"))
}

/// A metric value, or the reason it is undefined for this graph.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricValue {
    Value(f64),
    Undefined(String),
}

impl MetricValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            MetricValue::Value(v) => Some(*v),
            MetricValue::Undefined(_) => None,
        }
    }

    fn from_result(res: Result<f64, MetricError>) -> Self {
        match res {
            Ok(v) => MetricValue::Value(v),
            Err(e) => MetricValue::Undefined(e.to_string()),
        }
    }
}

/// All four homophily statistics plus size counts for one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct HomophilyReport {
    pub feature_hom: MetricValue,
    pub edge_hom: MetricValue,
    pub adjusted_hom: MetricValue,
    pub share_hom: MetricValue,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub num_features: usize,
}

impl HomophilyReport {
    /// Flat key-value text form, one metric per line, reals with 17
    /// significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in [
            ("feature_hom", &self.feature_hom),
            ("edge_hom", &self.edge_hom),
            ("adjusted_hom", &self.adjusted_hom),
            ("share_hom", &self.share_hom),
        ] {
            match value {
                MetricValue::Value(v) => {
                    out.push_str(&format!("{key} {}\n", format_g17(*v)));
                }
                MetricValue::Undefined(_) => out.push_str(&format!("{key} undefined\n")),
            }
        }
        out.push_str(&format!("num_edges {}\n", self.num_edges));
        out.push_str(&format!("num_nodes {}\n", self.num_nodes));
        out.push_str(&format!("num_features {}\n", self.num_features));
        out
    }
}

/// Runs all four metrics on a plain graph with hard labels.
///
/// Undefined members are reported as such without failing the report.
pub fn full_report(g: &Graph) -> HomophilyReport {
    let edges = g.edges();
    let degrees = g.degrees();
    let adjusted = match adjusted_homophily(g, edges, &degrees) {
        Ok(Some(v)) => MetricValue::Value(v),
        Ok(None) => MetricValue::Undefined("denominator below tolerance".to_string()),
        Err(e) => MetricValue::Undefined(e.to_string()),
    };
    HomophilyReport {
        feature_hom: MetricValue::from_result(feature_homophily(g, edges)),
        edge_hom: MetricValue::from_result(edge_homophily(g, edges)),
        adjusted_hom: adjusted,
        share_hom: MetricValue::from_result(share_homophily(g, edges)),
        num_nodes: g.num_nodes(),
        num_edges: g.num_edges(),
        num_features: g.num_features(),
    }
}

/// Runs all four metrics on a transformed graph.
///
/// Share and feature homophily run over the augmented feature rows and all
/// edges; edge and adjusted homophily first assign soft labels to feature
/// nodes.
pub fn full_report_transformed(tg: &TransformedGraph) -> HomophilyReport {
    let base = tg.base();
    let edges = base.edges();
    let (edge_hom, adjusted_hom) = match assign_soft_labels(tg) {
        Ok(soft) => {
            let degrees = base.degrees();
            let adjusted = match adjusted_homophily(&soft, edges, &degrees) {
                Ok(Some(v)) => MetricValue::Value(v),
                Ok(None) => MetricValue::Undefined("denominator below tolerance".to_string()),
                Err(e) => MetricValue::Undefined(e.to_string()),
            };
            (
                MetricValue::from_result(edge_homophily(&soft, edges)),
                adjusted,
            )
        }
        Err(e) => (
            MetricValue::Undefined(e.to_string()),
            MetricValue::Undefined(e.to_string()),
        ),
    };
    HomophilyReport {
        feature_hom: MetricValue::from_result(feature_homophily(tg, edges)),
        edge_hom,
        adjusted_hom,
        share_hom: MetricValue::from_result(share_homophily(tg, edges)),
        num_nodes: base.num_nodes(),
        num_edges: base.num_edges(),
        num_features: tg.num_used_features(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::testutil::fig_graph;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn feature_homophily_hand_values() {
        let g = fig_graph();
        // Only edge (v2, v5) has overlapping rows: cos([1,0,1],[0,1,1]) = 1/2.
        let got = feature_homophily(&g, g.edges()).unwrap();
        assert!((got - 0.125).abs() < TOL);

        let (identical, _) =
            Graph::build(2, &[(0, 1)], &[(0, 0), (0, 1), (1, 0), (1, 1)], &[]).unwrap();
        assert!((feature_homophily(&identical, identical.edges()).unwrap() - 1.0).abs() < TOL);

        let (disjoint, _) = Graph::build(2, &[(0, 1)], &[(0, 0), (1, 1)], &[]).unwrap();
        assert_eq!(feature_homophily(&disjoint, disjoint.edges()).unwrap(), 0.0);
    }

    #[test]
    fn zero_feature_rows_score_zero_cosine() {
        let (g, _) = Graph::build(2, &[(0, 1)], &[(0, 0)], &[]).unwrap();
        assert_eq!(feature_homophily(&g, g.edges()).unwrap(), 0.0);
    }

    #[test]
    fn edge_homophily_hand_values() {
        let g = fig_graph();
        assert_eq!(edge_homophily(&g, g.edges()).unwrap(), 0.0);

        let (same, _) = Graph::build(2, &[(0, 1)], &[], &[(0, 0), (1, 0)]).unwrap();
        assert_eq!(edge_homophily(&same, same.edges()).unwrap(), 1.0);
    }

    #[test]
    fn edge_homophily_hard_soft_rule() {
        let soft = SoftLabeledGraph::new(
            vec![NodeLabel::Hard(0), NodeLabel::Soft(vec![0.5, 0.5])],
            2,
        )
        .unwrap();
        assert!((edge_homophily(&soft, &[(0, 1)]).unwrap() - 0.5).abs() < TOL);
    }

    #[test]
    fn edge_homophily_errors() {
        let g = fig_graph();
        assert_eq!(edge_homophily(&g, &[]), Err(MetricError::NoEdges));
        let (partial, _) = Graph::build(2, &[(0, 1)], &[], &[(0, 0)]).unwrap();
        assert_eq!(
            edge_homophily(&partial, partial.edges()),
            Err(MetricError::MissingLabel(1))
        );
    }

    #[test]
    fn adjusted_homophily_hand_values() {
        // Two disjoint same-class edges, classes {A,A} and {B,B}.
        let (g, _) =
            Graph::build(4, &[(0, 1), (2, 3)], &[], &[(0, 0), (1, 0), (2, 1), (3, 1)]).unwrap();
        let got = adjusted_homophily(&g, g.edges(), &g.degrees()).unwrap().unwrap();
        assert!((got - 1.0).abs() < TOL);

        // Single edge between classes A and B.
        let (g, _) = Graph::build(2, &[(0, 1)], &[], &[(0, 0), (1, 1)]).unwrap();
        let got = adjusted_homophily(&g, g.edges(), &g.degrees()).unwrap().unwrap();
        assert!((got + 1.0).abs() < TOL);

        // The hand fixture: H_edge = 0, D_A = D_B = 4, 2|E| = 8.
        let g = fig_graph();
        let got = adjusted_homophily(&g, g.edges(), &g.degrees()).unwrap().unwrap();
        assert!((got + 1.0).abs() < TOL);
    }

    #[test]
    fn adjusted_homophily_undefined_when_one_class_holds_all_mass() {
        let (g, _) = Graph::build(2, &[(0, 1)], &[], &[(0, 0), (1, 0)]).unwrap();
        assert_eq!(adjusted_homophily(&g, g.edges(), &g.degrees()), Ok(None));
    }

    #[test]
    fn share_homophily_hand_values() {
        let g = fig_graph();
        let got = share_homophily(&g, g.edges()).unwrap();
        assert!((got - 0.25).abs() < TOL);

        let (disjoint, _) = Graph::build(2, &[(0, 1)], &[(0, 0), (1, 1)], &[]).unwrap();
        assert_eq!(share_homophily(&disjoint, disjoint.edges()).unwrap(), 0.0);
        assert_eq!(share_homophily(&disjoint, &[]), Err(MetricError::NoEdges));
    }

    #[test]
    fn soft_labels_from_fig_transform() {
        use crate::transform::graphite_transform;
        let (tg, _) = graphite_transform(&fig_graph()).unwrap();
        let soft = assign_soft_labels(&tg).unwrap();
        // Graph nodes keep hard labels.
        assert_eq!(*soft.label(0), NodeLabel::Hard(0));
        assert_eq!(*soft.label(4), NodeLabel::Hard(1));
        // x1 sees v1, v2 (both class A); x2 sees v3, v4, v5 (all B);
        // x3 sees v2 (A) and v5 (B).
        let expect = |u: usize, want: [f64; 2]| match soft.label(u) {
            NodeLabel::Soft(row) => {
                assert!((row[0] - want[0]).abs() < TOL, "node {u}");
                assert!((row[1] - want[1]).abs() < TOL, "node {u}");
            }
            other => panic!("expected soft row for {u}, got {other:?}"),
        };
        expect(5, [1.0, 0.0]);
        expect(6, [0.0, 1.0]);
        expect(7, [0.5, 0.5]);
    }

    #[test]
    fn soft_label_assignment_requires_hard_graph_labels() {
        use crate::transform::graphite_transform;
        let (g, _) = Graph::build(2, &[(0, 1)], &[(0, 0), (1, 0)], &[(0, 0)]).unwrap();
        let (tg, _) = graphite_transform(&g).unwrap();
        assert_eq!(
            assign_soft_labels(&tg),
            Err(SoftLabelAssignError::UnlabeledGraphNode(1))
        );
    }

    #[test]
    fn transformed_fig_report_hand_values() {
        use crate::transform::graphite_transform;
        let (tg, _) = graphite_transform(&fig_graph()).unwrap();
        let report = full_report_transformed(&tg);
        // 11 edges: 4 hard-hard cross-class zeros, feature edges score
        // 1,1,1,1,1,0.5,0.5; degree-mass correction gives 1/12.
        assert!((report.share_hom.value().unwrap() - 8.0 / 11.0).abs() < TOL);
        assert!((report.edge_hom.value().unwrap() - 6.0 / 11.0).abs() < TOL);
        assert!((report.adjusted_hom.value().unwrap() - 1.0 / 12.0).abs() < TOL);
        assert_eq!(report.num_nodes, 8);
        assert_eq!(report.num_edges, 11);
        assert_eq!(report.num_features, 3);
        // Both homophily metrics strictly increase over the raw graph.
        let before = full_report(&fig_graph());
        assert!(report.feature_hom.value().unwrap() > before.feature_hom.value().unwrap());
        assert!(report.adjusted_hom.value().unwrap() > before.adjusted_hom.value().unwrap());
    }

    #[test]
    fn report_text_layout() {
        let g = fig_graph();
        let text = full_report(&g).to_text();
        assert!(text.contains("share_hom 0.25000000000000000\n"));
        assert!(text.contains("feature_hom 0.12500000000000000\n"));
        assert!(text.contains("edge_hom 0\n"));
        assert!(text.contains("adjusted_hom -1.0000000000000000\n"));
        assert!(text.contains("num_edges 4\n"));
        assert!(text.contains("num_nodes 5\n"));
        assert!(text.contains("num_features 3\n"));
    }

    #[test]
    fn report_survives_undefined_members() {
        let (g, _) = Graph::build(3, &[], &[(0, 0)], &[]).unwrap();
        let report = full_report(&g);
        assert!(matches!(report.share_hom, MetricValue::Undefined(_)));
        assert!(report.to_text().contains("share_hom undefined\n"));
    }

    /// Independent set-intersection oracle for binary share homophily.
    fn share_oracle(g: &Graph) -> f64 {
        let mut total = 0.0;
        for &(u, v) in g.edges() {
            let a: std::collections::HashSet<_> = g.features_of(u).iter().collect();
            if g.features_of(v).iter().any(|k| a.contains(k)) {
                total += 1.0;
            }
        }
        total / g.num_edges() as f64
    }

    fn labeled_graph() -> impl Strategy<Value = Graph> {
        (2usize..25).prop_flat_map(|n| {
            let edges = proptest::collection::vec((0..n, 0..n), 1..50);
            let feats = proptest::collection::vec((0..n, 0usize..10), 0..60);
            let labels = proptest::collection::vec(0usize..3, n);
            (Just(n), edges, feats, labels).prop_map(|(n, edges, feats, labels)| {
                let labels: Vec<_> = labels.iter().enumerate().collect::<Vec<_>>()
                    .iter().map(|(u, c)| (*u, **c)).collect();
                Graph::build(n, &edges, &feats, &labels).unwrap().0
            })
        })
    }

    proptest! {
        #[test]
        fn generalized_min_matches_set_intersection_on_binary_rows(g in labeled_graph()) {
            prop_assume!(g.num_edges() > 0);
            let got = share_homophily(&g, g.edges()).unwrap();
            prop_assert!((got - share_oracle(&g)).abs() < TOL);
        }

        #[test]
        fn adjusted_at_most_one_with_equality_iff_edge_hom_one(g in labeled_graph()) {
            prop_assume!(g.num_edges() > 0);
            let h_edge = edge_homophily(&g, g.edges()).unwrap();
            if let Some(adj) = adjusted_homophily(&g, g.edges(), &g.degrees()).unwrap() {
                prop_assert!(adj <= 1.0 + TOL);
                if (h_edge - 1.0).abs() < TOL {
                    prop_assert!((adj - 1.0).abs() < TOL);
                } else {
                    prop_assert!(adj < 1.0);
                }
            }
        }

        #[test]
        fn metrics_invariant_under_node_permutation(g in labeled_graph(), seed in any::<u64>()) {
            prop_assume!(g.num_edges() > 0);
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (0..g.num_nodes()).collect();
            perm.shuffle(&mut rng);

            let edges: Vec<_> = g.edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
            let feats: Vec<_> = (0..g.num_nodes())
                .flat_map(|u| g.features_of(u).iter().map(move |&k| (u, k)))
                .map(|(u, k)| (perm[u], k))
                .collect();
            let labels: Vec<_> = (0..g.num_nodes())
                .filter_map(|u| g.label(u).map(|c| (perm[u], c)))
                .collect();
            let (p, _) = Graph::build(g.num_nodes(), &edges, &feats, &labels).unwrap();

            let a = share_homophily(&g, g.edges()).unwrap();
            let b = share_homophily(&p, p.edges()).unwrap();
            prop_assert!((a - b).abs() < TOL);
            let a = feature_homophily(&g, g.edges()).unwrap();
            let b = feature_homophily(&p, p.edges()).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
            let a = edge_homophily(&g, g.edges()).unwrap();
            let b = edge_homophily(&p, p.edges()).unwrap();
            prop_assert!((a - b).abs() < TOL);
            let a = adjusted_homophily(&g, g.edges(), &g.degrees()).unwrap();
            let b = adjusted_homophily(&p, p.edges(), &p.degrees()).unwrap();
            match (a, b) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
                (None, None) => {}
                _ => prop_assert!(false, "permutation changed definedness"),
            }
        }

        #[test]
        fn cosine_invariant_under_row_rescaling(
            scale in 0.001f64..1000.0,
            node in 0usize..5,
        ) {
            let g = fig_graph();
            let base = feature_homophily(&g, g.edges()).unwrap();
            let rows: Vec<SparseVec> = (0..g.num_nodes())
                .map(|u| {
                    let ids = g.features_of(u).to_vec();
                    let s = if u == node { scale } else { 1.0 };
                    let vals = vec![s; ids.len()];
                    SparseVec::new(ids, vals)
                })
                .collect();
            let scaled = SparseRows { rows: &rows, num_features: g.num_features() };
            let got = feature_homophily(&scaled, g.edges()).unwrap();
            prop_assert!((got - base).abs() < 1e-9);
        }
    }
}
