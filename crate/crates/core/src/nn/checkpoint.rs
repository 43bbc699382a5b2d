//! Binary checkpoint format, little-endian throughout:
//!
//! ```text
//! "LPGC" version:u8
//! count:u32 { key_len:u32 key value_len:u32 value }*      metadata, UTF-8
//! count:u32 { name_len:u32 name rank:u8 dim:u32* f32* }*  arrays
//! sha256 of everything above (32 bytes)
//! ```
//!
//! Optimizer velocity buffers are stored as arrays named `momentum/<param>`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::network::{NetDims, Network, NetworkConfig};
use super::optim::{Sgd, SgdConfig};
use super::NnError;
use crate::codec::Codec;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"LPGC";
pub const CHECKPOINT_VERSION: u8 = 1;
const DIGEST_LEN: usize = 32;
const MOMENTUM_PREFIX: &str = "momentum/";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub metadata: BTreeMap<String, String>,
    pub network: Network<f32>,
    pub optimizer: Option<Sgd<f32>>,
}

impl Checkpoint {
    /// Bundles a network with the metadata identifying its game and layouts.
    pub fn new(game: &str, codec: &Codec, step: u64, network: Network<f32>, optimizer: Option<Sgd<f32>>) -> Checkpoint {
        let mut metadata = BTreeMap::new();
        metadata.insert("game".into(), game.to_string());
        metadata.insert("state_layout_hash".into(), codec.state_layout_hash());
        metadata.insert("move_layout_hash".into(), codec.move_layout_hash());
        metadata.insert("step".into(), step.to_string());
        Checkpoint { metadata, network, optimizer }
    }

    pub fn game(&self) -> Option<&str> {
        self.metadata.get("game").map(String::as_str)
    }

    pub fn step(&self) -> u64 {
        self.metadata.get("step").and_then(|s| s.parse().ok()).unwrap_or(0)
    }

    /// Fails unless both layout hashes match the given codec.
    pub fn verify(&self, codec: &Codec) -> Result<(), NnError> {
        for (key, want) in [
            ("state_layout_hash", codec.state_layout_hash()),
            ("move_layout_hash", codec.move_layout_hash()),
        ] {
            match self.metadata.get(key) {
                Some(have) if *have == want => {}
                Some(have) => {
                    return Err(NnError::LayoutMismatch(format!(
                        "{key} is {have}, this game has {want} (checkpoint game {:?})",
                        self.game().unwrap_or("?")
                    )))
                }
                None => return Err(NnError::Format(format!("missing metadata key {key}"))),
            }
        }
        if self.network.dims != NetDims::from_codec(codec) {
            return Err(NnError::LayoutMismatch("network dimensions differ".into()));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let net = &self.network;
        let mut meta = self.metadata.clone();
        let cfg = net.config;
        let dims = net.dims;
        for (k, v) in [
            ("net.trunk_channels", cfg.trunk_channels),
            ("net.residual_blocks", cfg.residual_blocks),
            ("net.value_hidden", cfg.value_hidden),
            ("net.channels", dims.channels),
            ("net.actions", dims.actions),
            ("net.height", dims.height),
            ("net.width", dims.width),
        ] {
            meta.insert(k.into(), v.to_string());
        }
        if let Some(opt) = &self.optimizer {
            meta.insert("sgd.learning_rate".into(), opt.config.learning_rate.to_string());
            meta.insert("sgd.momentum".into(), opt.config.momentum.to_string());
            meta.insert("sgd.weight_decay".into(), opt.config.weight_decay.to_string());
        }

        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.push(CHECKPOINT_VERSION);
        put_u32(&mut out, meta.len());
        for (k, v) in &meta {
            put_str(&mut out, k);
            put_str(&mut out, v);
        }
        let momentum = self.optimizer.as_ref().map(|o| &o.velocity);
        let count = net.params.len() * if momentum.is_some() { 2 } else { 1 };
        put_u32(&mut out, count);
        for p in &net.params {
            put_array(&mut out, &p.name, &p.shape, &p.data);
        }
        if let Some(vel) = momentum {
            for (p, v) in net.params.iter().zip(vel) {
                put_array(&mut out, &format!("{MOMENTUM_PREFIX}{}", p.name), &p.shape, v);
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint, NnError> {
        if bytes.len() < CHECKPOINT_MAGIC.len() + 1 + DIGEST_LEN {
            return Err(NnError::Format("file too short".into()));
        }
        if &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(NnError::Format("bad magic".into()));
        }
        if bytes[4] != CHECKPOINT_VERSION {
            return Err(NnError::Format(format!("unsupported version {}", bytes[4])));
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != digest {
            return Err(NnError::Format("integrity check failed (truncated or corrupted)".into()));
        }
        let mut r = Reader { buf: body, pos: 5 };
        let mut metadata = BTreeMap::new();
        for _ in 0..r.u32()? {
            let k = r.string()?;
            let v = r.string()?;
            metadata.insert(k, v);
        }
        let mut arrays = BTreeMap::new();
        for _ in 0..r.u32()? {
            let name = r.string()?;
            let rank = r.u8()? as usize;
            let shape = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
            let len: usize = shape.iter().product();
            let data = (0..len).map(|_| r.f32()).collect::<Result<Vec<_>, _>>()?;
            if arrays.insert(name.clone(), (shape, data)).is_some() {
                return Err(NnError::Format(format!("duplicate array {name}")));
            }
        }
        if r.pos != body.len() {
            return Err(NnError::Format("trailing bytes".into()));
        }

        let num = |key: &str| -> Result<usize, NnError> {
            metadata
                .get(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| NnError::Format(format!("missing or invalid metadata {key}")))
        };
        let config = NetworkConfig {
            trunk_channels: num("net.trunk_channels")?,
            residual_blocks: num("net.residual_blocks")?,
            value_hidden: num("net.value_hidden")?,
        };
        let dims = NetDims {
            channels: num("net.channels")?,
            actions: num("net.actions")?,
            height: num("net.height")?,
            width: num("net.width")?,
        };
        let mut network = Network::<f32>::new(dims, config, 0)?;
        for p in &mut network.params {
            let (shape, data) = arrays
                .remove(&p.name)
                .ok_or_else(|| NnError::Format(format!("missing array {}", p.name)))?;
            if shape != p.shape {
                return Err(NnError::Format(format!("array {} has shape {shape:?}, expected {:?}", p.name, p.shape)));
            }
            p.data = data;
        }
        let optimizer = if arrays.is_empty() {
            None
        } else {
            let fnum = |key: &str| -> Result<f64, NnError> {
                metadata
                    .get(key)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| NnError::Format(format!("missing or invalid metadata {key}")))
            };
            let config = SgdConfig {
                learning_rate: fnum("sgd.learning_rate")?,
                momentum: fnum("sgd.momentum")?,
                weight_decay: fnum("sgd.weight_decay")?,
            };
            let mut velocity = Vec::with_capacity(network.params.len());
            for p in &network.params {
                let name = format!("{MOMENTUM_PREFIX}{}", p.name);
                let (shape, data) = arrays
                    .remove(&name)
                    .ok_or_else(|| NnError::Format(format!("missing array {name}")))?;
                if shape != p.shape {
                    return Err(NnError::Format(format!("array {name} has shape {shape:?}")));
                }
                velocity.push(data);
            }
            if let Some(extra) = arrays.keys().next() {
                return Err(NnError::Format(format!("unexpected array {extra}")));
            }
            Some(Sgd { config, velocity })
        };
        for key in metadata.keys().filter(|k| k.starts_with("net.") || k.starts_with("sgd.")).cloned().collect::<Vec<_>>() {
            metadata.remove(&key);
        }
        Ok(Checkpoint { metadata, network, optimizer })
    }
}

/// Writes to a temporary sibling and renames it into place.
pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<(), NnError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&checkpoint.to_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, NnError> {
    Checkpoint::from_bytes(&fs::read(path)?)
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("length fits in u32").to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len());
    out.extend_from_slice(s.as_bytes());
}

fn put_array(out: &mut Vec<u8>, name: &str, shape: &[usize], data: &[f32]) {
    put_str(out, name);
    out.push(u8::try_from(shape.len()).expect("rank fits in u8"));
    for &d in shape {
        put_u32(out, d);
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], NnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| NnError::Format("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, NnError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, NnError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn f32(&mut self) -> Result<f32, NnError> {
        let b = self.take(4)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn string(&mut self) -> Result<String, NnError> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| NnError::Format("metadata is not UTF-8".into()))
    }
}
