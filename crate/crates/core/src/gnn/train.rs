//! Full-batch trainer with Adam, checkpoint selection, and prediction.

use std::rc::Rc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{ClassId, NodeId};
use crate::transform::TransformedGraph;

use super::eval::{evaluate, Metric};
use super::model::{build_forward, forward_logits, RunMode};
use super::tape::{Mat, Tape};
use super::{GnnConfig, GnnError, ModelParams};

/// Adam moment constants.
const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

/// Cadence of validation evaluations during training.
const EVAL_EVERY: usize = 10;

/// Transductive split of labeled graph nodes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<NodeId>,
    pub val: Vec<NodeId>,
    pub test: Vec<NodeId>,
}

/// Loss/metric trajectories and the selected checkpoint's test score.
#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Training loss after each optimization step.
    pub train_loss: Vec<f64>,
    /// `(step, metric)` at each validation evaluation.
    pub val_metric: Vec<(usize, f64)>,
    /// Step whose parameters were retained (best validation metric;
    /// earliest step wins ties).
    pub best_step: usize,
    /// Test metric of the retained parameters.
    pub test_metric: f64,
    pub wall_clock_seconds: f64,
}

struct AdamState {
    m: Vec<Mat>,
    v: Vec<Mat>,
    t: usize,
}

impl AdamState {
    fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Mat> = params
            .tensors()
            .iter()
            .map(|t| Mat::zeros(t.rows, t.cols))
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, params: &mut ModelParams, grads: &[Mat], lr: f64) {
        self.t += 1;
        let bias1 = 1.0 - BETA1.powi(self.t as i32);
        let bias2 = 1.0 - BETA2.powi(self.t as i32);
        for ((tensor, grad), (m, v)) in params
            .tensors_mut()
            .into_iter()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for i in 0..tensor.data.len() {
                let g = grad.data[i];
                m.data[i] = BETA1 * m.data[i] + (1.0 - BETA1) * g;
                v.data[i] = BETA2 * v.data[i] + (1.0 - BETA2) * g * g;
                let m_hat = m.data[i] / bias1;
                let v_hat = v.data[i] / bias2;
                tensor.data[i] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
            }
        }
    }
}

fn class_targets(
    tg: &TransformedGraph,
    nodes: &[NodeId],
) -> Result<Vec<(usize, ClassId)>, GnnError> {
    nodes
        .iter()
        .map(|&u| {
            tg.base()
                .label(u)
                .map(|c| (u, c))
                .ok_or(GnnError::MissingLabel(u))
        })
        .collect()
}

/// Loss and parameter gradients of the mean cross-entropy over `nodes`,
/// with dropout driven by `dropout_rng` when `mode` is `Train`.
///
/// Gradient tensors come back in declaration order. This is the exact
/// computation the trainer differentiates, exposed for gradient checks.
pub fn loss_and_grads(
    tg: &TransformedGraph,
    params: &ModelParams,
    config: &GnnConfig,
    nodes: &[NodeId],
    mode: RunMode,
    dropout_rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<Mat>), GnnError> {
    if nodes.is_empty() {
        return Err(GnnError::EmptyTrainSplit);
    }
    let targets = Rc::new(class_targets(tg, nodes)?);
    let mut tape = Tape::new();
    let (logits, vars) = build_forward(&mut tape, tg, params, config, mode, dropout_rng)?;
    let loss = tape.cross_entropy(logits, targets);
    let loss_value = tape.value(loss).data[0];
    let grads = tape.backward(loss);
    let out = vars
        .in_order()
        .into_iter()
        .zip(params.tensors())
        .map(|(var, tensor)| {
            grads[var.0]
                .clone()
                .unwrap_or_else(|| Mat::zeros(tensor.rows, tensor.cols))
        })
        .collect();
    Ok((loss_value, out))
}

/// Loss only (no backward pass); used by finite-difference oracles.
pub fn loss_only(
    tg: &TransformedGraph,
    params: &ModelParams,
    config: &GnnConfig,
    nodes: &[NodeId],
) -> Result<f64, GnnError> {
    let targets = Rc::new(class_targets(tg, nodes)?);
    let mut tape = Tape::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (logits, _) = build_forward(&mut tape, tg, params, config, RunMode::Eval, &mut rng)?;
    let loss = tape.cross_entropy(logits, targets);
    Ok(tape.value(loss).data[0])
}

fn metric_of(
    tg: &TransformedGraph,
    params: &ModelParams,
    config: &GnnConfig,
    nodes: &[NodeId],
    metric: Metric,
) -> Result<f64, GnnError> {
    let logits = forward_logits(tg, params, config)?;
    evaluate(&logits, nodes, tg.base().labels(), metric)
}

/// Trains the model full-batch; all randomness (initialization, dropout)
/// derives from `config.seed`.
///
/// Validation runs before the first step and every 10 steps (plus the
/// final step); the parameters with the best validation metric are
/// retained and scored on the test split. An empty validation split
/// skips selection and retains the final parameters.
pub fn train(
    tg: &TransformedGraph,
    splits: &Splits,
    config: &GnnConfig,
    metric: Metric,
) -> Result<(ModelParams, TrainReport), GnnError> {
    config.validate()?;
    if splits.train.is_empty() {
        return Err(GnnError::EmptyTrainSplit);
    }
    if splits.test.is_empty() {
        return Err(GnnError::EmptyTestSplit);
    }
    class_targets(tg, &splits.train)?;

    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ModelParams::init(
        tg.num_used_features().max(1),
        tg.base().num_classes(),
        config,
        &mut rng,
    );
    let mut adam = AdamState::new(&params);

    let mut report = TrainReport {
        train_loss: Vec::with_capacity(config.steps),
        val_metric: Vec::new(),
        best_step: 0,
        test_metric: 0.0,
        wall_clock_seconds: 0.0,
    };

    let mut best: Option<(f64, usize, ModelParams)> = None;
    let consider = |step: usize,
                        params: &ModelParams,
                        best: &mut Option<(f64, usize, ModelParams)>,
                        report: &mut TrainReport|
     -> Result<(), GnnError> {
        if splits.val.is_empty() {
            return Ok(());
        }
        let score = metric_of(tg, params, config, &splits.val, metric)?;
        report.val_metric.push((step, score));
        let improved = match best {
            Some((best_score, _, _)) => score > *best_score,
            None => true,
        };
        if improved {
            *best = Some((score, step, params.clone()));
        }
        Ok(())
    };

    consider(0, &params, &mut best, &mut report)?;
    for step in 1..=config.steps {
        let (loss, grads) = loss_and_grads(
            tg,
            &params,
            config,
            &splits.train,
            RunMode::Train,
            &mut rng,
        )?;
        if !loss.is_finite() {
            return Err(GnnError::NonFiniteLoss { step });
        }
        adam.step(&mut params, &grads, config.learning_rate);
        report.train_loss.push(loss);
        if step % EVAL_EVERY == 0 || step == config.steps {
            consider(step, &params, &mut best, &mut report)?;
        }
    }

    let (best_step, best_params) = match best {
        Some((_, step, p)) => (step, p),
        None => (config.steps, params),
    };
    report.best_step = best_step;
    report.test_metric = metric_of(tg, &best_params, config, &splits.test, metric)?;
    report.wall_clock_seconds = started.elapsed().as_secs_f64();
    Ok((best_params, report))
}

/// Predicted class per graph node: argmax of the logits, ties broken by
/// the lowest class id.
pub fn predict(
    tg: &TransformedGraph,
    params: &ModelParams,
    config: &GnnConfig,
) -> Result<Vec<ClassId>, GnnError> {
    let logits = forward_logits(tg, params, config)?;
    Ok((0..tg.num_graph_nodes())
        .map(|u| argmax_lowest(logits.row(u)))
        .collect())
}

pub(crate) fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = c;
        }
    }
    best
}
