//! Policy checkpoints: a binary file of named f64 tensors plus a JSON sidecar.
//!
//! Binary layout (little endian): magic `LRCK`, `u32` version, `u32` tensor
//! count, then per tensor a `u32` name length, the UTF-8 name, a `u32` rank,
//! `rank` `u64` dims and the `f64` data. Tensors are `actor.{l}.weight`,
//! `actor.{l}.bias`, `log_std`, `critic.{l}.weight`, `critic.{l}.bias`.
//! Files are written to a temporary name and renamed, so an interrupted
//! write never clobbers an existing checkpoint.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::mlp::MlpShape;
use super::policy::PolicyParams;
use crate::embedding::EmbedderSpec;
use crate::env::Task;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"LRCK";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub format_version: u32,
    pub task: Task,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub hidden: Vec<usize>,
    pub tensors: Vec<TensorInfo>,
    /// SHA-256 of the canonical JSON of the experiment config.
    pub config_hash: String,
    pub timesteps: usize,
    pub update: usize,
    /// Embedder the policy was trained against, for rollouts that report
    /// the semantic channel.
    pub embedder: Option<EmbedderSpec>,
    /// SHA-256 of the binary file.
    pub data_sha256: String,
}

/// Hex SHA-256 of the compact JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex_digest(&bytes))
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Path of the sidecar belonging to `bin_path` (`x.bin` → `x.json`).
pub fn sidecar_path(bin_path: &Path) -> PathBuf {
    bin_path.with_extension("json")
}

fn tensors(params: &PolicyParams) -> Vec<(String, Vec<usize>, &[f64])> {
    let mut out = Vec::new();
    let mlp = |prefix: &str, shape: &MlpShape| -> Vec<(String, Vec<usize>, std::ops::Range<usize>)> {
        (0..shape.n_layers())
            .flat_map(|l| {
                let (i, o) = shape.layer_dims(l);
                let off = shape.layer_offset(l);
                [
                    (format!("{prefix}.{l}.weight"), vec![o, i], off..off + o * i),
                    (format!("{prefix}.{l}.bias"), vec![o], off + o * i..off + o * i + o),
                ]
            })
            .collect()
    };
    for (name, shape, range) in mlp("actor", params.actor_shape()) {
        out.push((name, shape, &params.actor_params()[range]));
    }
    out.push(("log_std".to_owned(), vec![params.act_dim()], params.log_std()));
    for (name, shape, range) in mlp("critic", params.critic_shape()) {
        out.push((name, shape, &params.critic_params()[range]));
    }
    out
}

fn encode(params: &PolicyParams) -> (Vec<u8>, Vec<TensorInfo>) {
    let ts = tensors(params);
    let mut buf = Vec::with_capacity(16 + params.len() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(ts.len() as u32).to_le_bytes());
    let mut infos = Vec::new();
    for (name, shape, data) in ts {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for d in &shape {
            buf.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        for v in data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        infos.push(TensorInfo { name, shape });
    }
    (buf, infos)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated file at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn decode(bytes: &[u8]) -> Result<Vec<(String, Vec<usize>, Vec<f64>)>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let count = r.u32()?;
    let mut out = Vec::new();
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?
            .to_owned();
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| r.u64().map(f64::from_bits))
            .collect::<Result<Vec<_>>>()?;
        out.push((name, shape, data));
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes after last tensor".into()));
    }
    Ok(out)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CheckpointInfo {
    pub task: Task,
    pub config_hash: String,
    pub timesteps: usize,
    pub update: usize,
    pub embedder: Option<EmbedderSpec>,
}

/// Write `path` (binary) and its sidecar. Returns the sidecar metadata.
pub fn save_checkpoint(path: &Path, params: &PolicyParams, info: &CheckpointInfo) -> Result<CheckpointMeta> {
    let (bytes, tensors) = encode(params);
    let actor = params.actor_shape().sizes();
    let meta = CheckpointMeta {
        format_version: VERSION,
        task: info.task,
        obs_dim: params.obs_dim(),
        act_dim: params.act_dim(),
        hidden: actor[1..actor.len() - 1].to_vec(),
        tensors,
        config_hash: info.config_hash.clone(),
        timesteps: info.timesteps,
        update: info.update,
        embedder: info.embedder.clone(),
        data_sha256: hex_digest(&bytes),
    };
    write_atomic(path, &bytes)?;
    let mut json = serde_json::to_vec_pretty(&meta)?;
    json.push(b'\n');
    write_atomic(&sidecar_path(path), &json)?;
    Ok(meta)
}

/// Load a checkpoint, checking the binary against its sidecar.
pub fn load_checkpoint(path: &Path) -> Result<(PolicyParams, CheckpointMeta)> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
    let side = sidecar_path(path);
    let meta_text = std::fs::read_to_string(&side)
        .map_err(|e| Error::Checkpoint(format!("cannot read sidecar {}: {e}", side.display())))?;
    let meta: CheckpointMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::Checkpoint(format!("bad sidecar {}: {e}", side.display())))?;
    if hex_digest(&bytes) != meta.data_sha256 {
        return Err(Error::Checkpoint(format!(
            "{} does not match the digest recorded in its sidecar",
            path.display()
        )));
    }
    let decoded = decode(&bytes)?;
    let actor = MlpShape::new([&[meta.obs_dim][..], &meta.hidden, &[meta.act_dim]].concat());
    let critic = MlpShape::new([&[meta.obs_dim][..], &meta.hidden, &[1]].concat());
    let template = PolicyParams::from_parts(
        actor.clone(),
        critic.clone(),
        vec![0.0; actor.n_params() + meta.act_dim + critic.n_params()],
    )?;
    let expected = tensors(&template);
    if expected.len() != decoded.len() {
        return Err(Error::Checkpoint(format!(
            "expected {} tensors for obs {} / hidden {:?} / action {}, found {}",
            expected.len(),
            meta.obs_dim,
            meta.hidden,
            meta.act_dim,
            decoded.len()
        )));
    }
    let mut data = Vec::with_capacity(template.len());
    for ((name, shape, _), (got_name, got_shape, values)) in expected.iter().zip(decoded) {
        if *name != got_name || *shape != got_shape {
            return Err(Error::Checkpoint(format!(
                "tensor mismatch: expected {name} {shape:?}, found {got_name} {got_shape:?}"
            )));
        }
        data.extend(values);
    }
    Ok((PolicyParams::from_parts(actor, critic, data)?, meta))
}
