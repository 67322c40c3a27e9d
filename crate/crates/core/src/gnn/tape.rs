//! Reverse-mode differentiation over a small operation tape.
//!
//! Values are dense row-major `f64` matrices. The forward pass records one
//! tape node per operation; `Tape::backward` walks the tape in reverse and
//! accumulates parent gradients. Operations are limited to what the model
//! needs: dense and sparse-input matrix products, row-broadcast bias,
//! GELU, elementwise masks, the gated graph aggregation, and softmax
//! cross-entropy.

use std::rc::Rc;

use crate::graph::{NodeId, SparseVec};

use super::{gelu, gelu_grad};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `self * other`, shapes `[r,k] x [k,c]`.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for c in 0..orow.len() {
                    out_row[c] += a * orow[c];
                }
            }
        }
        out
    }

    /// `self^T * other`, shapes `[k,r]^T x [k,c]`.
    pub fn matmul_t_self(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        let mut out = Mat::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let srow = self.row(k);
            let orow = other.row(k);
            for (i, &a) in srow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = out.row_mut(i);
                for c in 0..orow.len() {
                    out_row[c] += a * orow[c];
                }
            }
        }
        out
    }

    /// `self * other^T`, shapes `[r,k] x [c,k]^T`.
    pub fn matmul_t_other(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols);
        let mut out = Mat::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let srow = self.row(i);
            for j in 0..other.rows {
                let orow = other.row(j);
                let acc: f64 = srow.iter().zip(orow).map(|(a, b)| a * b).sum();
                out.set(i, j, acc);
            }
        }
        out
    }

    fn add_assign(&mut self, other: &Mat) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Constant sparse input matrix (row-major sparse rows).
#[derive(Debug, Clone)]
pub struct SparseMat {
    pub rows: Vec<SparseVec>,
    pub cols: usize,
}

impl SparseMat {
    /// `self * dense`, shapes `[n, cols] x [cols, m]`.
    pub fn matmul(&self, dense: &Mat) -> Mat {
        assert_eq!(self.cols, dense.rows);
        let mut out = Mat::zeros(self.rows.len(), dense.cols);
        for (i, row) in self.rows.iter().enumerate() {
            let out_row = out.row_mut(i);
            for (k, v) in row.iter() {
                let drow = dense.row(k);
                for c in 0..drow.len() {
                    out_row[c] += v * drow[c];
                }
            }
        }
        out
    }
}

/// Static description of the graph the gated aggregation runs over.
#[derive(Debug)]
pub struct AggContext {
    pub num_nodes: usize,
    /// Canonical graph-graph edges (both endpoints original nodes).
    pub graph_edges: Vec<(NodeId, NodeId)>,
    /// Canonical graph-feature edges as (graph node, feature node).
    pub feature_edges: Vec<(NodeId, NodeId)>,
    /// Weighted degrees under (w0, wx).
    pub degrees: Vec<f64>,
    pub w0: f64,
    pub wx: f64,
    pub tau: f64,
}

/// Per-edge gate values cached by the forward pass and reused in backward.
#[derive(Debug)]
struct AggCache {
    self_alpha: Vec<f64>,
    /// Per graph edge (u, v): gates for the v->u and u->v messages.
    graph_alpha: Vec<(f64, f64)>,
    /// Per feature edge: the single shared gate.
    feature_alpha: Vec<f64>,
}

enum Op {
    Leaf,
    /// `a * b`.
    MatMul { a: usize, b: usize },
    /// `x + bias` with `bias` a `[1, c]` row broadcast over rows of `x`.
    AddRowBias { x: usize, bias: usize },
    /// `a + b`, same shape.
    Add { a: usize, b: usize },
    Gelu { x: usize },
    /// Elementwise product with a constant mask (dropout).
    MulMask { x: usize, mask: Vec<f64> },
    /// `sparse * w` with a constant sparse left factor.
    SparseProj { w: usize, x: Rc<SparseMat> },
    GatedAggregate {
        h: usize,
        gate_a: usize,
        gate_b: usize,
        ctx: Rc<AggContext>,
        cache: AggCache,
    },
    /// Mean softmax cross-entropy over the listed (row, class) targets.
    CrossEntropy {
        logits: usize,
        targets: Rc<Vec<(usize, usize)>>,
    },
    /// Scalar readout `sum(weights ⊙ x)`.
    WeightedSum { x: usize, weights: Vec<f64> },
}

struct Node {
    value: Mat,
    op: Op,
}

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub usize);

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Mat, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Mat) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).matmul(self.value(b));
        self.push(value, Op::MatMul { a: a.0, b: b.0 })
    }

    pub fn add_row_bias(&mut self, x: Var, bias: Var) -> Var {
        let (xm, bm) = (self.value(x), self.value(bias));
        assert_eq!(bm.rows, 1);
        assert_eq!(bm.cols, xm.cols);
        let mut value = xm.clone();
        for r in 0..value.rows {
            for (c, v) in value.row_mut(r).iter_mut().enumerate() {
                *v += bm.data[c];
            }
        }
        self.push(value, Op::AddRowBias { x: x.0, bias: bias.0 })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut value = self.value(a).clone();
        value.add_assign(self.value(b));
        self.push(value, Op::Add { a: a.0, b: b.0 })
    }

    pub fn gelu(&mut self, x: Var) -> Var {
        let mut value = self.value(x).clone();
        for v in &mut value.data {
            *v = gelu(*v);
        }
        self.push(value, Op::Gelu { x: x.0 })
    }

    pub fn mul_mask(&mut self, x: Var, mask: Vec<f64>) -> Var {
        let mut value = self.value(x).clone();
        assert_eq!(mask.len(), value.data.len());
        for (v, m) in value.data.iter_mut().zip(&mask) {
            *v *= m;
        }
        self.push(value, Op::MulMask { x: x.0, mask })
    }

    pub fn sparse_proj(&mut self, x: Rc<SparseMat>, w: Var) -> Var {
        let value = x.matmul(self.value(w));
        self.push(value, Op::SparseProj { w: w.0, x })
    }

    /// One round of self-gated, degree-normalized aggregation.
    ///
    /// Graph nodes receive a `w0`-weighted self message, unit-weighted
    /// graph-neighbor messages, and `wx`-weighted feature-neighbor
    /// messages; feature nodes receive the self message and `wx`-weighted
    /// graph-neighbor messages. Every message `w -> u` is scaled by
    /// `alpha(u', w') / sqrt(d_u d_w)` where graph edges gate each
    /// direction separately and feature edges share one gate oriented
    /// graph-node first.
    pub fn gated_aggregate(&mut self, h: Var, gate_a: Var, gate_b: Var, ctx: Rc<AggContext>) -> Var {
        let hm = self.value(h);
        let am = self.value(gate_a);
        let bm = self.value(gate_b);
        let n = ctx.num_nodes;
        let m = hm.cols;
        assert_eq!(hm.rows, n);
        assert_eq!((am.rows, am.cols), (1, 2 * m));
        assert_eq!((bm.rows, bm.cols), (1, 1));
        let (a1, a2) = am.data.split_at(m);
        let b = bm.data[0];

        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        for u in 0..n {
            let row = hm.row(u);
            let mut sp = 0.0;
            let mut sq = 0.0;
            for k in 0..m {
                sp += a1[k] * row[k];
                sq += a2[k] * row[k];
            }
            p[u] = sp;
            q[u] = sq;
        }
        let gate_of = |zu: f64, zv: f64| ((zu + zv + b) / ctx.tau).tanh();
        let inv_sqrt: Vec<f64> = ctx.degrees.iter().map(|d| 1.0 / d.sqrt()).collect();

        let mut out = Mat::zeros(n, m);
        let mut self_alpha = Vec::with_capacity(n);
        for u in 0..n {
            let alpha = gate_of(p[u], q[u]);
            self_alpha.push(alpha);
            let coef = ctx.w0 * alpha / ctx.degrees[u];
            let hrow = hm.row(u);
            let orow = out.row_mut(u);
            for k in 0..m {
                orow[k] += coef * hrow[k];
            }
        }
        let mut graph_alpha = Vec::with_capacity(ctx.graph_edges.len());
        for &(u, v) in &ctx.graph_edges {
            let alpha_uv = gate_of(p[u], q[v]);
            let alpha_vu = gate_of(p[v], q[u]);
            graph_alpha.push((alpha_uv, alpha_vu));
            let coef = inv_sqrt[u] * inv_sqrt[v];
            for k in 0..m {
                out.data[u * m + k] += coef * alpha_uv * hm.data[v * m + k];
                out.data[v * m + k] += coef * alpha_vu * hm.data[u * m + k];
            }
        }
        let mut feature_alpha = Vec::with_capacity(ctx.feature_edges.len());
        for &(u, x) in &ctx.feature_edges {
            let alpha = gate_of(p[u], q[x]);
            feature_alpha.push(alpha);
            let coef = ctx.wx * alpha * inv_sqrt[u] * inv_sqrt[x];
            for k in 0..m {
                out.data[u * m + k] += coef * hm.data[x * m + k];
                out.data[x * m + k] += coef * hm.data[u * m + k];
            }
        }

        self.push(
            out,
            Op::GatedAggregate {
                h: h.0,
                gate_a: gate_a.0,
                gate_b: gate_b.0,
                ctx,
                cache: AggCache {
                    self_alpha,
                    graph_alpha,
                    feature_alpha,
                },
            },
        )
    }

    /// Mean softmax cross-entropy over `(row, class)` targets; returns a
    /// `[1,1]` value.
    pub fn cross_entropy(&mut self, logits: Var, targets: Rc<Vec<(usize, usize)>>) -> Var {
        let lm = self.value(logits);
        let mut total = 0.0;
        for &(r, class) in targets.iter() {
            let row = lm.row(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            total += lse - row[class];
        }
        let value = Mat::from_vec(1, 1, vec![total / targets.len() as f64]);
        self.push(
            value,
            Op::CrossEntropy {
                logits: logits.0,
                targets,
            },
        )
    }

    /// Scalar readout `sum(weights ⊙ x)`; returns a `[1,1]` value.
    pub fn weighted_sum(&mut self, x: Var, weights: Vec<f64>) -> Var {
        let xm = self.value(x);
        assert_eq!(weights.len(), xm.data.len());
        let total: f64 = xm.data.iter().zip(&weights).map(|(v, w)| v * w).sum();
        self.push(
            Mat::from_vec(1, 1, vec![total]),
            Op::WeightedSum { x: x.0, weights },
        )
    }

    /// Gradients of scalar node `loss` with respect to every tape node.
    ///
    /// Returns one gradient slot per node; untouched nodes keep `None`.
    pub fn backward(&self, loss: Var) -> Vec<Option<Mat>> {
        let lm = &self.nodes[loss.0].value;
        assert_eq!((lm.rows, lm.cols), (1, 1), "loss must be scalar");
        let mut grads: Vec<Option<Mat>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Mat::from_vec(1, 1, vec![1.0]));

        for idx in (0..self.nodes.len()).rev() {
            let Some(grad) = grads[idx].take() else {
                continue;
            };
            match &self.nodes[idx].op {
                Op::Leaf => {
                    grads[idx] = Some(grad);
                    continue;
                }
                Op::MatMul { a, b } => {
                    let da = grad.matmul_t_other(&self.nodes[*b].value);
                    let db = self.nodes[*a].value.matmul_t_self(&grad);
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::AddRowBias { x, bias } => {
                    let mut db = Mat::zeros(1, grad.cols);
                    for r in 0..grad.rows {
                        for (c, v) in grad.row(r).iter().enumerate() {
                            db.data[c] += v;
                        }
                    }
                    accumulate(&mut grads, *bias, db);
                    accumulate(&mut grads, *x, grad);
                }
                Op::Add { a, b } => {
                    accumulate(&mut grads, *a, grad.clone());
                    accumulate(&mut grads, *b, grad);
                }
                Op::Gelu { x } => {
                    let xm = &self.nodes[*x].value;
                    let mut dx = grad;
                    for (g, &v) in dx.data.iter_mut().zip(&xm.data) {
                        *g *= gelu_grad(v);
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::MulMask { x, mask } => {
                    let mut dx = grad;
                    for (g, m) in dx.data.iter_mut().zip(mask) {
                        *g *= m;
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::SparseProj { w, x } => {
                    let wm = &self.nodes[*w].value;
                    let mut dw = Mat::zeros(wm.rows, wm.cols);
                    for (i, row) in x.rows.iter().enumerate() {
                        let grow = grad.row(i);
                        for (k, v) in row.iter() {
                            let drow = dw.row_mut(k);
                            for c in 0..grow.len() {
                                drow[c] += v * grow[c];
                            }
                        }
                    }
                    accumulate(&mut grads, *w, dw);
                }
                Op::GatedAggregate {
                    h,
                    gate_a,
                    gate_b,
                    ctx,
                    cache,
                } => {
                    let (dh, da, db) = self.backward_aggregate(*h, *gate_a, ctx, cache, &grad);
                    accumulate(&mut grads, *h, dh);
                    accumulate(&mut grads, *gate_a, da);
                    accumulate(&mut grads, *gate_b, db);
                }
                Op::WeightedSum { x, weights } => {
                    let g = grad.data[0];
                    let xm = &self.nodes[*x].value;
                    let dx = Mat::from_vec(
                        xm.rows,
                        xm.cols,
                        weights.iter().map(|w| g * w).collect(),
                    );
                    accumulate(&mut grads, *x, dx);
                }
                Op::CrossEntropy { logits, targets } => {
                    let lm = &self.nodes[*logits].value;
                    let scale = grad.data[0] / targets.len() as f64;
                    let mut dl = Mat::zeros(lm.rows, lm.cols);
                    for &(r, class) in targets.iter() {
                        let row = lm.row(r);
                        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
                        let sum: f64 = exps.iter().sum();
                        let drow = dl.row_mut(r);
                        for c in 0..drow.len() {
                            let softmax = exps[c] / sum;
                            drow[c] += scale * (softmax - if c == class { 1.0 } else { 0.0 });
                        }
                    }
                    accumulate(&mut grads, *logits, dl);
                }
            }
        }
        grads
    }

    fn backward_aggregate(
        &self,
        h: usize,
        gate_a: usize,
        ctx: &AggContext,
        cache: &AggCache,
        grad: &Mat,
    ) -> (Mat, Mat, Mat) {
        let hm = &self.nodes[h].value;
        let n = ctx.num_nodes;
        let m = hm.cols;
        let inv_sqrt: Vec<f64> = ctx.degrees.iter().map(|d| 1.0 / d.sqrt()).collect();

        let mut dh = Mat::zeros(n, m);
        let mut dp = vec![0.0; n];
        let mut dq = vec![0.0; n];
        let mut db = 0.0;

        // A message `w -> u` with gate `alpha = tanh((p_a + q_b + b)/tau)`
        // and coefficient `c` contributes `c * alpha * h_w` to row `u`;
        // its pullback is `dh_w += c*alpha*g_u` plus the gate path
        // `dz = c*(g_u . h_w)*(1-alpha^2)/tau` into `p_a`, `q_b`, and `b`.
        let pull = |u: usize,
                        w: usize,
                        pa: usize,
                        qb: usize,
                        coef: f64,
                        alpha: f64,
                        dh: &mut Mat,
                        dp: &mut [f64],
                        dq: &mut [f64],
                        db: &mut f64| {
            let grow = grad.row(u);
            let hrow = hm.row(w);
            let mut dot = 0.0;
            for k in 0..m {
                dot += grow[k] * hrow[k];
            }
            let dz = coef * dot * (1.0 - alpha * alpha) / ctx.tau;
            dp[pa] += dz;
            dq[qb] += dz;
            *db += dz;
            let c = coef * alpha;
            let drow = dh.row_mut(w);
            for k in 0..m {
                drow[k] += c * grow[k];
            }
        };

        for u in 0..n {
            let coef = ctx.w0 / ctx.degrees[u];
            pull(u, u, u, u, coef, cache.self_alpha[u], &mut dh, &mut dp, &mut dq, &mut db);
        }
        for (e, &(u, v)) in ctx.graph_edges.iter().enumerate() {
            let coef = inv_sqrt[u] * inv_sqrt[v];
            let (alpha_uv, alpha_vu) = cache.graph_alpha[e];
            pull(u, v, u, v, coef, alpha_uv, &mut dh, &mut dp, &mut dq, &mut db);
            pull(v, u, v, u, coef, alpha_vu, &mut dh, &mut dp, &mut dq, &mut db);
        }
        for (e, &(u, x)) in ctx.feature_edges.iter().enumerate() {
            let coef = ctx.wx * inv_sqrt[u] * inv_sqrt[x];
            let alpha = cache.feature_alpha[e];
            pull(u, x, u, x, coef, alpha, &mut dh, &mut dp, &mut dq, &mut db);
            pull(x, u, u, x, coef, alpha, &mut dh, &mut dp, &mut dq, &mut db);
        }

        // Fold the projection paths p = H a1^T and q = H a2^T:
        // da1 += dp^T H, da2 += dq^T H, dh_u += dp_u a1 + dq_u a2.
        let am = &self.nodes[gate_a].value;
        let (a1, a2) = am.data.split_at(m);
        let mut da = Mat::zeros(1, 2 * m);
        let (da1, da2) = da.data.split_at_mut(m);
        for u in 0..n {
            let hrow = hm.row(u);
            let drow = dh.row_mut(u);
            for k in 0..m {
                da1[k] += dp[u] * hrow[k];
                da2[k] += dq[u] * hrow[k];
                drow[k] += dp[u] * a1[k] + dq[u] * a2[k];
            }
        }
        (dh, da, Mat::from_vec(1, 1, vec![db]))
    }
}

fn accumulate(grads: &mut [Option<Mat>], idx: usize, grad: Mat) {
    match &mut grads[idx] {
        Some(existing) => existing.add_assign(&grad),
        slot => *slot = Some(grad),
    }
}
