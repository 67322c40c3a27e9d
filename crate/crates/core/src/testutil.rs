//! Shared test fixtures.

use crate::graph::Graph;

/// The five-node hand fixture used across the metric and transform tests:
/// nodes v1..v5 are ids 0..4, edges {(0,2),(1,3),(1,4),(0,3)}, features
/// v1:{f1}, v2:{f1,f3}, v3:{f2}, v4:{f2}, v5:{f2,f3}, labels A,A,B,B,B.
pub(crate) fn fig_graph() -> Graph {
    let (graph, warnings) = Graph::build(
        5,
        &[(0, 2), (1, 3), (1, 4), (0, 3)],
        &[(0, 0), (1, 0), (1, 2), (2, 1), (3, 1), (4, 1), (4, 2)],
        &[(0, 0), (1, 0), (2, 1), (3, 1), (4, 1)],
    )
    .unwrap();
    assert!(warnings.is_clean());
    graph
}
