//! Self-describing model container:
//!
//! ```text
//! magic "SWCK" | version u32 | config length u32 | config JSON
//! tensor count u32
//! per tensor: name length u32 | name UTF-8 | dtype u8 (4 = f32, 8 = f64)
//!             | rows u32 | cols u32 | rows·cols little-endian floats
//! SHA-256 of everything above (32 bytes)
//! ```

use std::fs;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use super::model::{parameter_shapes, AutoencoderConfig, AutoencoderModel, ParamSet, Precision};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SWCK";
const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;
/// Guards allocation when decoding untrusted headers.
const MAX_PARAMETERS: usize = 1 << 28;

pub fn encode_checkpoint(model: &AutoencoderModel) -> Vec<u8> {
    let precision = model.config.precision;
    let config = serde_json::to_vec(&model.config).expect("serializing plain data");
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    out.extend_from_slice(&(model.params.len() as u32).to_le_bytes());
    for (name, t) in &model.params {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        let (r, c) = t.dim();
        match precision {
            Precision::F32 => {
                out.push(4);
                out.extend_from_slice(&(r as u32).to_le_bytes());
                out.extend_from_slice(&(c as u32).to_le_bytes());
                for &x in t.iter() {
                    out.extend_from_slice(&(x as f32).to_le_bytes());
                }
            }
            Precision::F64 => {
                out.push(8);
                out.extend_from_slice(&(r as u32).to_le_bytes());
                out.extend_from_slice(&(c as u32).to_le_bytes());
                for &x in t.iter() {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format("checkpoint", "truncated"))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<AutoencoderModel> {
    if bytes.len() < 4 + DIGEST_LEN || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::format("checkpoint", "bad magic or too short"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checksum("checkpoint"));
    }
    let mut r = Reader { bytes: body, at: 4 };
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(Error::format("checkpoint", format!("unsupported version {version}")));
    }
    let len = r.u32()?;
    let config: AutoencoderConfig =
        serde_json::from_slice(r.take(len)?).map_err(|e| Error::format("checkpoint", format!("config: {e}")))?;
    config.validate()?;
    let expected = parameter_shapes(&config);
    let total: usize = expected
        .values()
        .try_fold(0usize, |acc, &(a, b)| a.checked_mul(b).and_then(|n| acc.checked_add(n)))
        .filter(|&n| n <= MAX_PARAMETERS)
        .ok_or_else(|| Error::format("checkpoint", "model too large"))?;
    log::debug!("checkpoint declares {total} parameters");

    let count = r.u32()?;
    if count != expected.len() {
        return Err(Error::format(
            "checkpoint",
            format!("{count} tensors, config implies {}", expected.len()),
        ));
    }
    let mut params = ParamSet::new();
    for _ in 0..count {
        let len = r.u32()?;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::format("checkpoint", "tensor name is not UTF-8"))?
            .to_string();
        let dtype = r.take(1)?[0];
        let shape = (r.u32()?, r.u32()?);
        match expected.get(&name) {
            Some(&want) if want == shape => {}
            Some(want) => {
                return Err(Error::format(
                    "checkpoint",
                    format!("tensor {name} is {shape:?}, expected {want:?}"),
                ))
            }
            None => return Err(Error::format("checkpoint", format!("unexpected tensor {name}"))),
        }
        if params.contains_key(&name) {
            return Err(Error::format("checkpoint", format!("duplicate tensor {name}")));
        }
        let n = shape.0 * shape.1;
        let values: Vec<f64> = match dtype {
            4 => r
                .take(4 * n)?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
                .collect(),
            8 => r
                .take(8 * n)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect(),
            other => return Err(Error::format("checkpoint", format!("unknown dtype {other}"))),
        };
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::format("checkpoint", format!("non-finite value in {name}")));
        }
        let t = Array2::from_shape_vec(shape, values).map_err(|e| Error::format("checkpoint", e.to_string()))?;
        params.insert(name, Arc::new(t));
    }
    if r.at != body.len() {
        return Err(Error::format("checkpoint", "trailing bytes before checksum"));
    }
    Ok(AutoencoderModel { config, params })
}

pub fn save_checkpoint(model: &AutoencoderModel, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(model))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<AutoencoderModel> {
    decode_checkpoint(&fs::read(path)?)
}
