//! Dataset file: columnar little-endian binary plus a JSON sidecar.
//!
//! ```text
//! magic "SWDS" | version u32 | train rows u32 | test rows u32
//! | input dim u32 | output dim u32
//! x_train columns, y_train columns, x_test columns, y_test columns (f64)
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Normalization, TaskDataset, TaskSpec};
use crate::error::{Error, Result};

pub const DATASET_MAGIC: &[u8; 4] = b"SWDS";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 24;
const SIDECAR_FORMAT: &str = "swatnn-dataset";
const MAX_VALUES: usize = 1 << 28;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetArrays {
    pub x_train: Array2<f64>,
    pub y_train: Array2<f64>,
    pub x_test: Array2<f64>,
    pub y_test: Array2<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub format: String,
    pub version: u32,
    pub spec: TaskSpec,
    pub normalization: Normalization,
}

fn push_columns(out: &mut Vec<u8>, a: &Array2<f64>) {
    for col in a.columns() {
        for &v in col {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

pub fn encode_dataset(d: &TaskDataset) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(DATASET_MAGIC);
    for v in [
        VERSION,
        d.x_train.nrows() as u32,
        d.x_test.nrows() as u32,
        d.input_dim() as u32,
        d.output_dim() as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for a in [&d.x_train, &d.y_train, &d.x_test, &d.y_test] {
        push_columns(&mut out, a);
    }
    out
}

pub fn decode_dataset(bytes: &[u8]) -> Result<DatasetArrays> {
    let err = |r: String| Error::format("dataset", r);
    if bytes.len() < HEADER_LEN || &bytes[..4] != DATASET_MAGIC {
        return Err(err("bad magic or too short".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().expect("4 bytes")) as usize;
    if word(1) != VERSION as usize {
        return Err(err(format!("unsupported version {}", word(1))));
    }
    let (n_train, n_test, i, o) = (word(2), word(3), word(4), word(5));
    if i == 0 || o == 0 {
        return Err(err("zero input or output dimension".into()));
    }
    let values = n_train
        .checked_add(n_test)
        .and_then(|n| n.checked_mul(i.checked_add(o)?))
        .filter(|&v| v <= MAX_VALUES)
        .ok_or_else(|| err("dataset too large".into()))?;
    if bytes.len() != HEADER_LEN + 8 * values {
        return Err(err(format!("expected {} bytes, found {}", HEADER_LEN + 8 * values, bytes.len())));
    }
    let mut at = HEADER_LEN;
    let mut read = |rows: usize, cols: usize| -> Result<Array2<f64>> {
        let mut a = Array2::zeros((rows, cols));
        for c in 0..cols {
            for r in 0..rows {
                let v = f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
                if !v.is_finite() {
                    return Err(err("non-finite value".into()));
                }
                a[[r, c]] = v;
                at += 8;
            }
        }
        Ok(a)
    };
    Ok(DatasetArrays {
        x_train: read(n_train, i)?,
        y_train: read(n_train, o)?,
        x_test: read(n_test, i)?,
        y_test: read(n_test, o)?,
    })
}

pub fn encode_sidecar(d: &TaskDataset) -> String {
    serde_json::to_string_pretty(&Sidecar {
        format: SIDECAR_FORMAT.into(),
        version: VERSION,
        spec: d.spec.clone(),
        normalization: d.normalization,
    })
    .expect("serializing plain data")
}

pub fn decode_sidecar(text: &str) -> Result<Sidecar> {
    let s: Sidecar = serde_json::from_str(text)?;
    if s.format != SIDECAR_FORMAT || s.version != VERSION {
        return Err(Error::format("dataset sidecar", format!("unexpected format {} v{}", s.format, s.version)));
    }
    s.spec.validate()?;
    if !(s.normalization.output_scale.is_finite() && s.normalization.output_scale > 0.0) {
        return Err(Error::format("dataset sidecar", "output scale must be positive"));
    }
    Ok(s)
}

/// Joins arrays with their sidecar, checking that counts agree.
pub fn assemble(arrays: DatasetArrays, sidecar: Sidecar) -> Result<TaskDataset> {
    if arrays.x_train.nrows() != sidecar.spec.train_count || arrays.x_test.nrows() != sidecar.spec.test_count {
        return Err(Error::format("dataset", "row counts disagree with sidecar"));
    }
    Ok(TaskDataset {
        spec: sidecar.spec,
        normalization: sidecar.normalization,
        x_train: arrays.x_train,
        y_train: arrays.y_train,
        x_test: arrays.x_test,
        y_test: arrays.y_test,
    })
}

fn sidecar_path(data: &Path) -> PathBuf {
    data.with_extension("json")
}

/// Writes `<dir>/<task name>.swds` and its sidecar; returns the data path.
pub fn save_dataset(d: &TaskDataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.swds", d.spec.name));
    fs::write(&path, encode_dataset(d))?;
    fs::write(sidecar_path(&path), encode_sidecar(d))?;
    Ok(path)
}

pub fn load_dataset(path: &Path) -> Result<TaskDataset> {
    let arrays = decode_dataset(&fs::read(path)?)?;
    let sidecar = decode_sidecar(&fs::read_to_string(sidecar_path(path))?)?;
    assemble(arrays, sidecar)
}
