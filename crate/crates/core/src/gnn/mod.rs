//! Self-gated GNN over transformed graphs.
//!
//! The architecture: an input projection of the augmented feature rows,
//! then `num_layers` rounds of gated degree-normalized aggregation each
//! followed by a residual two-layer MLP with GELU, then a linear output
//! head over graph nodes. Everything runs in 64-bit floats on a small
//! reverse-mode tape ([`tape`]), trained full-batch with Adam.

pub mod eval;
pub mod io;
pub mod model;
pub mod tape;
pub mod train;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::NodeId;
use crate::transform::{NodeKind, TransformedGraph};
use tape::Mat;

pub use eval::{evaluate, Metric};
pub use model::{forward_logits, prepare_features, RunMode};
pub use train::{loss_and_grads, predict, train, Splits, TrainReport};

#[derive(Debug, Error, PartialEq)]
pub enum GnnError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty train split")]
    EmptyTrainSplit,
    #[error("empty test split")]
    EmptyTestSplit,
    #[error("missing label for node {0}")]
    MissingLabel(NodeId),
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },
    #[error("empty evaluation set")]
    EmptyEvalSet,
    #[error("roc_auc requires binary labels, got {num_classes} classes")]
    RocAucNeedsBinary { num_classes: usize },
    #[error("roc_auc undefined: evaluation set contains a single class")]
    SingleClassEvalSet,
    #[error("model file error: {0}")]
    ModelFile(String),
}

/// How graph-node input rows are prepared before the projection.
/// Feature-node rows always enter as computed by the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureMode {
    /// Original binary rows.
    #[default]
    Original,
    /// All-zero graph-node rows (structure-only input).
    Zeros,
    /// L2-normalized graph-node rows.
    Normalized,
}

impl FeatureMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "original" => Some(FeatureMode::Original),
            "zeros" => Some(FeatureMode::Zeros),
            "normalized" => Some(FeatureMode::Normalized),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureMode::Original => "original",
            FeatureMode::Zeros => "zeros",
            FeatureMode::Normalized => "normalized",
        }
    }
}

/// Hyperparameters of the model and trainer.
///
/// Graph edges have fixed weight 1; `wx` weights feature edges and `w0`
/// self-loops. `tau` is the gating temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub w0: f64,
    pub wx: f64,
    pub tau: f64,
    pub dropout: f64,
    pub learning_rate: f64,
    pub steps: usize,
    pub seed: u64,
    pub feature_mode: FeatureMode,
}

impl Default for GnnConfig {
    fn default() -> Self {
        Self {
            num_layers: 8,
            hidden_dim: 512,
            w0: 1.0,
            wx: 0.1,
            tau: 1.0,
            dropout: 0.2,
            learning_rate: 3e-5,
            steps: 1000,
            seed: 0,
            feature_mode: FeatureMode::Original,
        }
    }
}

impl GnnConfig {
    pub fn validate(&self) -> Result<(), GnnError> {
        let fail = |msg: &str| Err(GnnError::InvalidConfig(msg.to_string()));
        // `is_finite` also rejects NaN weights, which would otherwise
        // slip through a plain `> 0` comparison.
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.hidden_dim == 0 {
            return fail("hidden_dim must be positive");
        }
        if !positive(self.w0) {
            return fail("w0 must be positive");
        }
        if !positive(self.wx) {
            return fail("wx must be positive");
        }
        if !positive(self.tau) {
            return fail("tau must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must lie in [0, 1)");
        }
        if !positive(self.learning_rate) {
            return fail("learning_rate must be positive");
        }
        Ok(())
    }
}

/// Learnable parameters, kept in declaration order for serialization and
/// gradient addressing: input projection, per-layer gate and MLP, output
/// head.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w_in: Mat,
    pub b_in: Mat,
    pub layers: Vec<LayerParams>,
    pub w_out: Mat,
    pub b_out: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// Gating vector over the concatenated pair embedding, shape `[1, 2m]`.
    pub gate_a: Mat,
    /// Gating bias, shape `[1, 1]`.
    pub gate_b: Mat,
    pub w1: Mat,
    pub b1: Mat,
    pub w2: Mat,
    pub b2: Mat,
}

impl ModelParams {
    /// Initializes parameters: affine weights (the gating vector included)
    /// uniform in `±1/sqrt(fan_in)`, every bias zero.
    ///
    /// A zeroed gating vector with zero bias would make every gate
    /// `tanh(0) = 0`, collapsing each aggregation to the zero map and
    /// cutting gradient flow below the last layer, so the gate vector is
    /// initialized like any other affine weight.
    pub fn init(num_features: usize, num_classes: usize, config: &GnnConfig, rng: &mut ChaCha8Rng) -> Self {
        let m = config.hidden_dim;
        let uniform = |rows: usize, cols: usize, fan_in: usize, rng: &mut ChaCha8Rng| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| rng.gen_range(-bound..bound))
                .collect();
            Mat::from_vec(rows, cols, data)
        };
        let w_in = uniform(num_features.max(1), m, num_features.max(1), rng);
        let b_in = Mat::zeros(1, m);
        let layers = (0..config.num_layers)
            .map(|_| LayerParams {
                gate_a: uniform(1, 2 * m, 2 * m, rng),
                gate_b: Mat::zeros(1, 1),
                w1: uniform(m, m, m, rng),
                b1: Mat::zeros(1, m),
                w2: uniform(m, m, m, rng),
                b2: Mat::zeros(1, m),
            })
            .collect();
        let w_out = uniform(m, num_classes, m, rng);
        let b_out = Mat::zeros(1, num_classes);
        Self {
            w_in,
            b_in,
            layers,
            w_out,
            b_out,
        }
    }

    pub fn num_features(&self) -> usize {
        self.w_in.rows
    }

    pub fn num_classes(&self) -> usize {
        self.w_out.cols
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_in.cols
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// All tensors in declaration order.
    pub fn tensors(&self) -> Vec<&Mat> {
        let mut out = vec![&self.w_in, &self.b_in];
        for layer in &self.layers {
            out.extend([
                &layer.gate_a,
                &layer.gate_b,
                &layer.w1,
                &layer.b1,
                &layer.w2,
                &layer.b2,
            ]);
        }
        out.extend([&self.w_out, &self.b_out]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Mat> {
        let mut out: Vec<&mut Mat> = vec![&mut self.w_in, &mut self.b_in];
        for layer in &mut self.layers {
            out.push(&mut layer.gate_a);
            out.push(&mut layer.gate_b);
            out.push(&mut layer.w1);
            out.push(&mut layer.b1);
            out.push(&mut layer.w2);
            out.push(&mut layer.b2);
        }
        out.push(&mut self.w_out);
        out.push(&mut self.b_out);
        out
    }

    /// Total scalar parameter count.
    pub fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }
}

/// Weighted degree of every node of the transformed graph.
///
/// Graph node: `w0 + #graph_neighbors * 1 + #feature_neighbors * wx`;
/// feature node: `w0 + #graph_neighbors * wx`. Positive whenever `w0 > 0`.
pub fn weighted_degrees(tg: &TransformedGraph, w0: f64, wx: f64) -> Vec<f64> {
    let base = tg.base();
    let n = tg.num_graph_nodes();
    (0..base.num_nodes())
        .map(|u| match tg.node_kind(u) {
            NodeKind::GraphNode => {
                let mut d = w0;
                for &v in base.neighbors(u) {
                    d += if v < n { 1.0 } else { wx };
                }
                d
            }
            NodeKind::FeatureNode => w0 + base.degree(u) as f64 * wx,
        })
        .collect()
}

/// Self-gating score in `(-1, 1)`: `tanh((a . (h_u || h_v) + b) / tau)`.
pub fn gate(h_u: &[f64], h_v: &[f64], a: &[f64], b: f64, tau: f64) -> f64 {
    assert_eq!(a.len(), h_u.len() + h_v.len());
    let (a1, a2) = a.split_at(h_u.len());
    let mut z = b;
    for (x, w) in h_u.iter().zip(a1) {
        z += x * w;
    }
    for (x, w) in h_v.iter().zip(a2) {
        z += x * w;
    }
    (z / tau).tanh()
}

/// Exact Gaussian-CDF GELU: `x * Phi(x)`.
pub fn gelu(x: f64) -> f64 {
    x * normal_cdf(x)
}

/// Derivative of [`gelu`]: `Phi(x) + x * phi(x)`.
pub fn gelu_grad(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.3989422804014327;
    normal_cdf(x) + x * INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// Residual two-layer MLP on one embedding row:
/// `h + gelu(h W1 + b1) W2 + b2`.
pub fn mlp_residual(h: &[f64], layer: &LayerParams) -> Vec<f64> {
    let m = h.len();
    assert_eq!(layer.w1.rows, m);
    let mut hidden = layer.b1.data.clone();
    for (i, &hv) in h.iter().enumerate() {
        let wrow = layer.w1.row(i);
        for (j, out) in hidden.iter_mut().enumerate() {
            *out += hv * wrow[j];
        }
    }
    for v in &mut hidden {
        *v = gelu(*v);
    }
    let mut out = h.to_vec();
    for (j, o) in out.iter_mut().enumerate() {
        *o += layer.b2.data[j];
    }
    for (i, &hv) in hidden.iter().enumerate() {
        let wrow = layer.w2.row(i);
        for (j, o) in out.iter_mut().enumerate() {
            *o += hv * wrow[j];
        }
    }
    out
}
