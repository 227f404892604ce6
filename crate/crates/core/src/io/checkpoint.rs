//! Model checkpoints.
//!
//! Layout: a 12-byte header (magic `DTRC`, u16 version, u16 reserved,
//! u32 manifest length, all little-endian), a TOML manifest, then one
//! contiguous block of 64-bit little-endian values. The manifest carries
//! the model configuration — so a checkpoint rebuilds its networks without
//! outside help — plus a tensor directory of names, shapes, and byte
//! offsets into the value block. Generator tensors come first, then
//! discriminator tensors, under the `generator/` and `discriminator/`
//! prefixes their parameter stores already use.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{file_err, Error, Result};
use crate::numerics::{Scalar, Tensor};
use crate::training::{ModelConfig, Models};

pub const MAGIC: [u8; 4] = *b"DTRC";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 12;
const VALUE_LEN: usize = 8;

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Byte offset into the value block.
    offset: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointManifest {
    /// Blend between generated and random summaries in the training
    /// objective; stored so a resumed run keeps its objective.
    tau: f64,
    model: ModelConfig,
    tensors: Vec<TensorEntry>,
}

pub struct LoadedCheckpoint<S: Scalar> {
    pub models: Models<S>,
    pub tau: f64,
}

fn encode<S: Scalar>(models: &Models<S>, tau: f64) -> Vec<u8> {
    let mut all = models.g_params.export();
    all.extend(models.d_params.export());

    let mut entries = Vec::with_capacity(all.len());
    let mut payload: Vec<u8> = Vec::new();
    for (name, tensor) in &all {
        entries.push(TensorEntry {
            name: name.clone(),
            shape: tensor.shape().to_vec(),
            offset: payload.len() as u64,
        });
        for v in tensor.data() {
            payload.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    let manifest = CheckpointManifest {
        tau,
        model: models.config.clone(),
        tensors: entries,
    };
    let manifest_text = toml::to_string(&manifest).expect("checkpoint manifests serialize");

    let mut bytes = Vec::with_capacity(HEADER_LEN + manifest_text.len() + payload.len());
    bytes.extend_from_slice(&MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&0u16.to_le_bytes());
    bytes.extend_from_slice(&(manifest_text.len() as u32).to_le_bytes());
    bytes.extend_from_slice(manifest_text.as_bytes());
    bytes.extend_from_slice(&payload);
    bytes
}

fn decode<S: Scalar>(bytes: &[u8]) -> Result<LoadedCheckpoint<S>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let found: [u8; 4] = bytes[0..4].try_into().unwrap();
    if found != MAGIC {
        return Err(Error::BadMagic { expected: MAGIC, found });
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let manifest_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body_start = HEADER_LEN
        .checked_add(manifest_len)
        .filter(|&s| s <= bytes.len())
        .ok_or(Error::Truncated {
            expected: HEADER_LEN as u64 + manifest_len as u64,
            actual: bytes.len() as u64,
        })?;
    let manifest_text = std::str::from_utf8(&bytes[HEADER_LEN..body_start])
        .map_err(|e| Error::Parse(format!("checkpoint manifest is not UTF-8: {e}")))?;
    let manifest: CheckpointManifest = toml::from_str(manifest_text)
        .map_err(|e| Error::Parse(format!("checkpoint manifest: {e}")))?;
    let payload = &bytes[body_start..];

    // The directory must tile the value block exactly, in order.
    let mut at: u64 = 0;
    for entry in &manifest.tensors {
        if entry.offset != at {
            return Err(Error::BadManifest(format!(
                "tensor `{}` at offset {}, expected {at}",
                entry.name, entry.offset
            )));
        }
        let elems: usize = entry.shape.iter().product();
        at += (elems * VALUE_LEN) as u64;
    }
    if at != payload.len() as u64 {
        return Err(Error::Truncated {
            expected: body_start as u64 + at,
            actual: bytes.len() as u64,
        });
    }

    let mut generator = Vec::new();
    let mut discriminator = Vec::new();
    for entry in &manifest.tensors {
        let elems: usize = entry.shape.iter().product();
        let start = entry.offset as usize;
        let data: Vec<S> = (0..elems)
            .map(|i| {
                let b = &payload[start + i * VALUE_LEN..start + (i + 1) * VALUE_LEN];
                S::from_f64(f64::from_le_bytes(b.try_into().unwrap()))
            })
            .collect();
        let tensor = Tensor::from_vec(&entry.shape, data);
        if entry.name.starts_with("generator/") {
            generator.push((entry.name.clone(), tensor));
        } else if entry.name.starts_with("discriminator/") {
            discriminator.push((entry.name.clone(), tensor));
        } else {
            return Err(Error::BadManifest(format!(
                "tensor `{}` belongs to no network",
                entry.name
            )));
        }
    }

    if !(0.0..=1.0).contains(&manifest.tau) {
        return Err(Error::BadManifest(format!("stored tau {} outside [0, 1]", manifest.tau)));
    }
    let mut models = Models::init(manifest.model, 0)?;
    models.fill(&generator, &discriminator)?;
    Ok(LoadedCheckpoint { models, tau: manifest.tau })
}

pub fn save_checkpoint<S: Scalar>(path: &Path, models: &Models<S>, tau: f64) -> Result<()> {
    fs::write(path, encode(models, tau)).map_err(file_err(path))
}

pub fn load_checkpoint<S: Scalar>(path: &Path) -> Result<LoadedCheckpoint<S>> {
    decode(&fs::read(path).map_err(file_err(path))?)
}

/// Load a checkpoint that must match `in_dim`-dimensional features.
pub fn load_checkpoint_expecting<S: Scalar>(path: &Path, in_dim: usize) -> Result<LoadedCheckpoint<S>> {
    let loaded = load_checkpoint(path)?;
    let have = loaded.models.config.in_dim;
    if have != in_dim {
        return Err(Error::HyperparamMismatch(format!(
            "checkpoint was trained on {have}-dimensional features, data provides {in_dim}"
        )));
    }
    Ok(loaded)
}
