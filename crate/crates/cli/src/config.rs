//! Flat `key = value` training configuration files.
//!
//! Keys mirror the model configuration (`num_layers`, `hidden_dim`, `w0`,
//! `wx`, `tau`, `dropout`, `learning_rate`, `steps`, `seed`,
//! `feature_mode`) plus trainer plumbing: `metric` (accuracy | roc_auc),
//! `split_ratios` (e.g. `0.48/0.32/0.2`), and `split_seed`. Missing keys
//! take defaults; unknown keys are rejected. `#` starts a comment.

use std::path::Path;

use thiserror::Error;

use graphite_core::gnn::{FeatureMode, GnnConfig, Metric};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: std::path::PathBuf,
        line: usize,
        reason: String,
    },
}

/// Everything the `train` command needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub gnn: GnnConfig,
    pub metric: Metric,
    pub split_ratios: (f64, f64, f64),
    /// Seed for generated splits; defaults to the model seed.
    pub split_seed: Option<u64>,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            gnn: GnnConfig::default(),
            metric: Metric::Accuracy,
            split_ratios: (0.48, 0.32, 0.20),
            split_seed: None,
        }
    }
}

pub fn parse_config_file(path: &Path) -> Result<TrainSettings, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut settings = TrainSettings::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| ConfigError::Malformed {
            path: path.to_path_buf(),
            line: line_no,
            reason,
        };
        let Some((key, value)) = line.split_once('=') else {
            return Err(bad(format!("expected key = value, found \"{line}\"")));
        };
        let key = key.trim();
        let value = value.trim();
        macro_rules! parse_as {
            ($ty:ty) => {
                value
                    .parse::<$ty>()
                    .map_err(|_| bad(format!("invalid value \"{value}\" for {key}")))?
            };
        }
        match key {
            "num_layers" => settings.gnn.num_layers = parse_as!(usize),
            "hidden_dim" => settings.gnn.hidden_dim = parse_as!(usize),
            "w0" => settings.gnn.w0 = parse_as!(f64),
            "wx" => settings.gnn.wx = parse_as!(f64),
            "tau" => settings.gnn.tau = parse_as!(f64),
            "dropout" => settings.gnn.dropout = parse_as!(f64),
            "learning_rate" => settings.gnn.learning_rate = parse_as!(f64),
            "steps" => settings.gnn.steps = parse_as!(usize),
            "seed" => settings.gnn.seed = parse_as!(u64),
            "feature_mode" => {
                settings.gnn.feature_mode = FeatureMode::parse(value)
                    .ok_or_else(|| bad(format!("unknown feature_mode \"{value}\"")))?;
            }
            "metric" => {
                settings.metric = Metric::parse(value)
                    .ok_or_else(|| bad(format!("unknown metric \"{value}\"")))?;
            }
            "split_ratios" => {
                let parts: Vec<&str> = value.split('/').collect();
                let [train, val, test] = parts.as_slice() else {
                    return Err(bad(format!(
                        "split_ratios must be train/val/test, found \"{value}\""
                    )));
                };
                let p = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(format!("invalid ratio \"{s}\"")))
                };
                settings.split_ratios = (p(train)?, p(val)?, p(test)?);
            }
            "split_seed" => settings.split_seed = Some(parse_as!(u64)),
            other => return Err(bad(format!("unknown key \"{other}\""))),
        }
    }
    Ok(settings)
}
