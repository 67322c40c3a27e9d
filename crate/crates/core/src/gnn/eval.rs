//! Classification metrics: accuracy and ROC-AUC.

use crate::graph::{ClassId, NodeId};

use super::tape::Mat;
use super::train::argmax_lowest;
use super::GnnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Accuracy,
    RocAuc,
}

impl Metric {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "accuracy" => Some(Metric::Accuracy),
            "roc_auc" => Some(Metric::RocAuc),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::RocAuc => "roc_auc",
        }
    }
}

/// Scores predictions over `nodes` against hard labels.
///
/// Accuracy takes the argmax of each logit row (ties to the lowest class
/// id). ROC-AUC requires binary labels, scores with the positive-class
/// (class 1) logit, and handles tied scores by mid-rank.
pub fn evaluate(
    logits: &Mat,
    nodes: &[NodeId],
    labels: &[Option<ClassId>],
    metric: Metric,
) -> Result<f64, GnnError> {
    if nodes.is_empty() {
        return Err(GnnError::EmptyEvalSet);
    }
    match metric {
        Metric::Accuracy => {
            let mut correct = 0usize;
            for &u in nodes {
                let label = labels[u].ok_or(GnnError::MissingLabel(u))?;
                if argmax_lowest(logits.row(u)) == label {
                    correct += 1;
                }
            }
            Ok(correct as f64 / nodes.len() as f64)
        }
        Metric::RocAuc => {
            if logits.cols != 2 {
                return Err(GnnError::RocAucNeedsBinary {
                    num_classes: logits.cols,
                });
            }
            let mut scored: Vec<(f64, bool)> = Vec::with_capacity(nodes.len());
            for &u in nodes {
                let label = labels[u].ok_or(GnnError::MissingLabel(u))?;
                scored.push((logits.get(u, 1), label == 1));
            }
            roc_auc(&scored)
        }
    }
}

/// Rank-statistic AUC with mid-rank tie handling.
pub fn roc_auc(scored: &[(f64, bool)]) -> Result<f64, GnnError> {
    let num_pos = scored.iter().filter(|(_, pos)| *pos).count();
    let num_neg = scored.len() - num_pos;
    if num_pos == 0 || num_neg == 0 {
        return Err(GnnError::SingleClassEvalSet);
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].0.total_cmp(&scored[b].0));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scored[order[j]].0 == scored[order[i]].0 {
            j += 1;
        }
        // 1-based ranks i+1 ..= j share the mid-rank.
        let mid_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if scored[idx].1 {
                rank_sum_pos += mid_rank;
            }
        }
        i = j;
    }
    let num_pos = num_pos as f64;
    Ok((rank_sum_pos - num_pos * (num_pos + 1.0) / 2.0) / (num_pos * num_neg as f64))
}
