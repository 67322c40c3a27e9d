//! Forward pass assembly.

use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::SparseVec;
use crate::transform::TransformedGraph;

use super::tape::{AggContext, Mat, SparseMat, Tape, Var};
use super::{weighted_degrees, FeatureMode, GnnConfig, GnnError, ModelParams};

/// Whether dropout masks are sampled (training) or skipped (evaluation).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Train,
    Eval,
}

/// Input rows for the projection, prepared per feature mode.
///
/// Graph-node rows are taken as-is, zeroed, or L2-normalized; feature-node
/// rows always enter as computed by the transform.
pub fn prepare_features(tg: &TransformedGraph, mode: FeatureMode) -> SparseMat {
    let n = tg.num_graph_nodes();
    let total = tg.base().num_nodes();
    let rows = (0..total)
        .map(|u| {
            let row = tg.x_star_row(u);
            if u >= n {
                return row.clone();
            }
            match mode {
                FeatureMode::Original => row.clone(),
                FeatureMode::Zeros => SparseVec::new(Vec::new(), Vec::new()),
                FeatureMode::Normalized => {
                    let norm = row.vals.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm == 0.0 {
                        row.clone()
                    } else {
                        SparseVec::new(
                            row.ids.clone(),
                            row.vals.iter().map(|v| v / norm).collect(),
                        )
                    }
                }
            }
        })
        .collect();
    SparseMat {
        rows,
        // Featureless graphs still get a width-1 projection input.
        cols: tg.num_used_features().max(1),
    }
}

/// Splits the canonical edge list of the transformed graph into
/// graph-graph and graph-feature edges (feature-feature edges cannot
/// exist) and builds the aggregation context.
pub fn aggregation_context(tg: &TransformedGraph, config: &GnnConfig) -> AggContext {
    let n = tg.num_graph_nodes();
    let mut graph_edges = Vec::with_capacity(tg.num_graph_edges());
    let mut feature_edges = Vec::with_capacity(tg.num_feature_edges());
    for &(u, v) in tg.base().edges() {
        if v < n {
            graph_edges.push((u, v));
        } else {
            debug_assert!(u < n, "feature-feature edges cannot exist");
            feature_edges.push((u, v));
        }
    }
    AggContext {
        num_nodes: tg.base().num_nodes(),
        graph_edges,
        feature_edges,
        degrees: weighted_degrees(tg, config.w0, config.wx),
        w0: config.w0,
        wx: config.wx,
        tau: config.tau,
    }
}

/// Tape handles to all parameter leaves, in declaration order.
pub struct ParamVars {
    pub w_in: Var,
    pub b_in: Var,
    pub layers: Vec<LayerVars>,
    pub w_out: Var,
    pub b_out: Var,
}

pub struct LayerVars {
    pub gate_a: Var,
    pub gate_b: Var,
    pub w1: Var,
    pub b1: Var,
    pub w2: Var,
    pub b2: Var,
}

impl ParamVars {
    pub fn insert(tape: &mut Tape, params: &ModelParams) -> Self {
        let w_in = tape.leaf(params.w_in.clone());
        let b_in = tape.leaf(params.b_in.clone());
        let layers = params
            .layers
            .iter()
            .map(|layer| LayerVars {
                gate_a: tape.leaf(layer.gate_a.clone()),
                gate_b: tape.leaf(layer.gate_b.clone()),
                w1: tape.leaf(layer.w1.clone()),
                b1: tape.leaf(layer.b1.clone()),
                w2: tape.leaf(layer.w2.clone()),
                b2: tape.leaf(layer.b2.clone()),
            })
            .collect();
        let w_out = tape.leaf(params.w_out.clone());
        let b_out = tape.leaf(params.b_out.clone());
        Self {
            w_in,
            b_in,
            layers,
            w_out,
            b_out,
        }
    }

    /// Leaf handles in the same order as `ModelParams::tensors`.
    pub fn in_order(&self) -> Vec<Var> {
        let mut out = vec![self.w_in, self.b_in];
        for layer in &self.layers {
            out.extend([layer.gate_a, layer.gate_b, layer.w1, layer.b1, layer.w2, layer.b2]);
        }
        out.extend([self.w_out, self.b_out]);
        out
    }
}

fn check_shapes(tg: &TransformedGraph, params: &ModelParams, config: &GnnConfig) -> Result<(), GnnError> {
    config.validate()?;
    let mismatch = |msg: String| Err(GnnError::InvalidConfig(msg));
    if params.num_features() != tg.num_used_features().max(1) {
        return mismatch(format!(
            "input projection expects {} features, graph has {}",
            params.num_features(),
            tg.num_used_features()
        ));
    }
    if params.hidden_dim() != config.hidden_dim {
        return mismatch(format!(
            "parameters built for hidden_dim {}, config says {}",
            params.hidden_dim(),
            config.hidden_dim
        ));
    }
    if params.num_layers() != config.num_layers {
        return mismatch(format!(
            "parameters built for {} layers, config says {}",
            params.num_layers(),
            config.num_layers
        ));
    }
    Ok(())
}

/// Builds the full forward computation on `tape` and returns the logits
/// variable (rows for all nodes; only graph-node rows are meaningful).
pub fn build_forward(
    tape: &mut Tape,
    tg: &TransformedGraph,
    params: &ModelParams,
    config: &GnnConfig,
    mode: RunMode,
    dropout_rng: &mut ChaCha8Rng,
) -> Result<(Var, ParamVars), GnnError> {
    check_shapes(tg, params, config)?;
    let features = Rc::new(prepare_features(tg, config.feature_mode));
    let ctx = Rc::new(aggregation_context(tg, config));
    let vars = ParamVars::insert(tape, params);

    let projected = tape.sparse_proj(features, vars.w_in);
    let mut h = tape.add_row_bias(projected, vars.b_in);
    let num_entries = ctx.num_nodes * config.hidden_dim;
    for layer in &vars.layers {
        h = tape.gated_aggregate(h, layer.gate_a, layer.gate_b, ctx.clone());
        let pre = tape.matmul(h, layer.w1);
        let pre = tape.add_row_bias(pre, layer.b1);
        let act = tape.gelu(pre);
        let post = tape.matmul(act, layer.w2);
        let post = tape.add_row_bias(post, layer.b2);
        h = tape.add(h, post);
        if mode == RunMode::Train && config.dropout > 0.0 {
            let keep = 1.0 - config.dropout;
            let mask: Vec<f64> = (0..num_entries)
                .map(|_| {
                    if dropout_rng.gen_range(0.0..1.0) < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
                .collect();
            h = tape.mul_mask(h, mask);
        }
    }
    let head = tape.matmul(h, vars.w_out);
    let logits = tape.add_row_bias(head, vars.b_out);
    Ok((logits, vars))
}

/// Evaluation-mode forward pass; returns logits rows for all nodes of the
/// transformed graph (consumers read graph-node rows).
pub fn forward_logits(
    tg: &TransformedGraph,
    params: &ModelParams,
    config: &GnnConfig,
) -> Result<Mat, GnnError> {
    let mut tape = Tape::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (logits, _) = build_forward(&mut tape, tg, params, config, RunMode::Eval, &mut rng)?;
    Ok(tape.value(logits).clone())
}
