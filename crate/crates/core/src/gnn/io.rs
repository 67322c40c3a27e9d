//! Versioned binary container for trained models.
//!
//! Layout (all integers and floats little-endian):
//! magic `SGNN`, format version `u32`, the configuration echo, a
//! `transformed` flag recording whether the model was trained on a
//! transformed graph, then every parameter tensor in declaration order,
//! each prefixed with its `rows`/`cols` shape.

use std::io::{Read, Write};
use std::path::Path;

use super::tape::Mat;
use super::{FeatureMode, GnnConfig, GnnError, LayerParams, ModelParams};

const MAGIC: &[u8; 4] = b"SGNN";
const VERSION: u32 = 1;

/// A trained model: parameters plus the configuration they were trained
/// under and whether the input graph had been transformed first.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub config: GnnConfig,
    pub params: ModelParams,
    pub transformed: bool,
}

fn err(msg: impl Into<String>) -> GnnError {
    GnnError::ModelFile(msg.into())
}

pub fn save_model(path: &Path, model: &SavedModel) -> Result<(), GnnError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let c = &model.config;
    buf.extend_from_slice(&(c.num_layers as u64).to_le_bytes());
    buf.extend_from_slice(&(c.hidden_dim as u64).to_le_bytes());
    for v in [c.w0, c.wx, c.tau, c.dropout, c.learning_rate] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&(c.steps as u64).to_le_bytes());
    buf.extend_from_slice(&c.seed.to_le_bytes());
    buf.push(match c.feature_mode {
        FeatureMode::Original => 0,
        FeatureMode::Zeros => 1,
        FeatureMode::Normalized => 2,
    });
    buf.push(model.transformed as u8);
    let tensors = model.params.tensors();
    buf.extend_from_slice(&(tensors.len() as u64).to_le_bytes());
    for tensor in tensors {
        buf.extend_from_slice(&(tensor.rows as u64).to_le_bytes());
        buf.extend_from_slice(&(tensor.cols as u64).to_le_bytes());
        for v in &tensor.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path).map_err(|e| err(format!("create: {e}")))?;
    file.write_all(&buf).map_err(|e| err(format!("write: {e}")))?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], GnnError> {
        if self.pos + n > self.buf.len() {
            return Err(err("truncated model file"));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, GnnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, GnnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, GnnError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8, GnnError> {
        Ok(self.take(1)?[0])
    }
}

pub fn load_model(path: &Path) -> Result<SavedModel, GnnError> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .map_err(|e| err(format!("open: {e}")))?
        .read_to_end(&mut buf)
        .map_err(|e| err(format!("read: {e}")))?;
    let mut r = Reader { buf: &buf, pos: 0 };

    if r.take(4)? != MAGIC {
        return Err(err("bad magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(err(format!("unsupported version {version}")));
    }
    let num_layers = r.u64()? as usize;
    let hidden_dim = r.u64()? as usize;
    let w0 = r.f64()?;
    let wx = r.f64()?;
    let tau = r.f64()?;
    let dropout = r.f64()?;
    let learning_rate = r.f64()?;
    let steps = r.u64()? as usize;
    let seed = r.u64()?;
    let feature_mode = match r.u8()? {
        0 => FeatureMode::Original,
        1 => FeatureMode::Zeros,
        2 => FeatureMode::Normalized,
        other => return Err(err(format!("unknown feature mode tag {other}"))),
    };
    let transformed = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(err(format!("bad transformed flag {other}"))),
    };
    let config = GnnConfig {
        num_layers,
        hidden_dim,
        w0,
        wx,
        tau,
        dropout,
        learning_rate,
        steps,
        seed,
        feature_mode,
    };

    let count = r.u64()? as usize;
    if count != 4 + 6 * num_layers {
        return Err(err(format!(
            "expected {} tensors for {num_layers} layers, found {count}",
            4 + 6 * num_layers
        )));
    }
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let rows = r.u64()? as usize;
        let cols = r.u64()? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(r.f64()?);
        }
        tensors.push(Mat::from_vec(rows, cols, data));
    }
    if r.pos != buf.len() {
        return Err(err("trailing bytes in model file"));
    }

    let mut iter = tensors.into_iter();
    let mut next = |what: &str| iter.next().ok_or_else(|| err(format!("missing {what}")));
    let w_in = next("w_in")?;
    let b_in = next("b_in")?;
    let mut layers = Vec::with_capacity(num_layers);
    for _ in 0..num_layers {
        layers.push(LayerParams {
            gate_a: next("gate_a")?,
            gate_b: next("gate_b")?,
            w1: next("w1")?,
            b1: next("b1")?,
            w2: next("w2")?,
            b2: next("b2")?,
        });
    }
    let w_out = next("w_out")?;
    let b_out = next("b_out")?;
    let params = ModelParams {
        w_in,
        b_in,
        layers,
        w_out,
        b_out,
    };
    if params.hidden_dim() != hidden_dim {
        return Err(err("tensor shapes inconsistent with header"));
    }
    Ok(SavedModel {
        config,
        params,
        transformed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn save_load_round_trip_is_exact() {
        let config = GnnConfig {
            num_layers: 2,
            hidden_dim: 5,
            seed: 42,
            ..GnnConfig::default()
        };
        let params = ModelParams::init(7, 3, &config, &mut ChaCha8Rng::seed_from_u64(42));
        let model = SavedModel {
            config,
            params,
            transformed: true,
        };
        let dir = std::env::temp_dir().join(format!("sgnn-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.bin");
        save_model(&path, &model).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, model);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn rejects_corrupted_files() {
        let dir = std::env::temp_dir().join(format!("sgnn-io-bad-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.bin");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(load_model(&path), Err(GnnError::ModelFile(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
