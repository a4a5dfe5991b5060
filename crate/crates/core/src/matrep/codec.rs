//! Binary container for a [`MatRep`]:
//!
//! ```text
//! magic "SWMR" | version u32 | N u32 | C u32 | L u32 | A u32      (little endian)
//! N·C f64 values, row-major
//! ⌈N·C / 8⌉ validity bytes, row-major, least significant bit first
//! ```
//!
//! Records may be concatenated; see [`decode_matrep_stream`].

use ndarray::Array2;

use super::MatRep;
use crate::error::{Error, Result};

pub const MATREP_MAGIC: &[u8; 4] = b"SWMR";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 24;
/// Upper bound on cells per record, to keep hostile headers from
/// requesting huge allocations.
const MAX_CELLS: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RepHeader {
    pub max_neurons: usize,
    pub columns: usize,
    pub max_hidden_layers: usize,
    pub num_activations: usize,
}

impl RepHeader {
    fn expected_columns(&self) -> Option<usize> {
        let (n, l, a) = (self.max_neurons, self.max_hidden_layers, self.num_activations);
        (l.checked_add(1)?)
            .checked_mul(n.checked_add(1)?)?
            .checked_add(l.checked_mul(a)?)?
            .checked_add(l)
    }
}

pub fn encode_matrep(rep: &MatRep, max_hidden_layers: usize, num_activations: usize) -> Vec<u8> {
    let (n, c) = rep.dim();
    let cells = n * c;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * cells + cells.div_ceil(8));
    out.extend_from_slice(MATREP_MAGIC);
    for v in [VERSION, n as u32, c as u32, max_hidden_layers as u32, num_activations as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in rep.values.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut bits = vec![0u8; cells.div_ceil(8)];
    for (i, &ok) in rep.validity.iter().enumerate() {
        if ok {
            bits[i / 8] |= 1 << (i % 8);
        }
    }
    out.extend_from_slice(&bits);
    out
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

/// Decodes one record from the front of `bytes`, returning it with the
/// number of bytes consumed.
fn decode_one(bytes: &[u8]) -> Result<(RepHeader, MatRep, usize)> {
    let err = |r: String| Error::format("matrep", r);
    if bytes.len() < HEADER_LEN {
        return Err(err(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MATREP_MAGIC {
        return Err(err("bad magic".into()));
    }
    let version = read_u32(bytes, 4);
    if version != VERSION {
        return Err(err(format!("unsupported version {version}")));
    }
    let header = RepHeader {
        max_neurons: read_u32(bytes, 8) as usize,
        columns: read_u32(bytes, 12) as usize,
        max_hidden_layers: read_u32(bytes, 16) as usize,
        num_activations: read_u32(bytes, 20) as usize,
    };
    if header.expected_columns() != Some(header.columns) {
        return Err(err(format!(
            "column count {} inconsistent with N={}, L={}, A={}",
            header.columns, header.max_neurons, header.max_hidden_layers, header.num_activations
        )));
    }
    let cells = header
        .max_neurons
        .checked_mul(header.columns)
        .filter(|&c| c <= MAX_CELLS)
        .ok_or_else(|| err("representation too large".into()))?;
    let body = 8 * cells + cells.div_ceil(8);
    let total = HEADER_LEN + body;
    if bytes.len() < total {
        return Err(err(format!("truncated: need {total} bytes, have {}", bytes.len())));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..HEADER_LEN + 8 * cells]
        .chunks_exact(8)
        .map(|ch| f64::from_le_bytes(ch.try_into().expect("8 bytes")))
        .collect();
    let bits = &bytes[HEADER_LEN + 8 * cells..total];
    let validity: Vec<bool> = (0..cells).map(|i| bits[i / 8] >> (i % 8) & 1 == 1).collect();
    if cells % 8 != 0 && bits[cells / 8] >> (cells % 8) != 0 {
        return Err(err("nonzero trailing validity bits".into()));
    }
    let shape = (header.max_neurons, header.columns);
    let rep = MatRep {
        values: Array2::from_shape_vec(shape, values).map_err(|e| err(e.to_string()))?,
        validity: Array2::from_shape_vec(shape, validity).map_err(|e| err(e.to_string()))?,
    };
    if rep.values.iter().any(|v| !v.is_finite()) {
        return Err(err("non-finite value".into()));
    }
    if !rep.padding_is_zero() {
        return Err(err("nonzero value at a padded position".into()));
    }
    Ok((header, rep, total))
}

/// Decodes exactly one record; trailing bytes are an error.
pub fn decode_matrep(bytes: &[u8]) -> Result<(RepHeader, MatRep)> {
    let (header, rep, used) = decode_one(bytes)?;
    if used != bytes.len() {
        return Err(Error::format("matrep", format!("{} trailing bytes", bytes.len() - used)));
    }
    Ok((header, rep))
}

/// Decodes a concatenation of records sharing one header.
pub fn decode_matrep_stream(mut bytes: &[u8]) -> Result<(Option<RepHeader>, Vec<MatRep>)> {
    let mut reps = Vec::new();
    let mut first: Option<RepHeader> = None;
    while !bytes.is_empty() {
        let (header, rep, used) = decode_one(bytes)?;
        match first {
            None => first = Some(header),
            Some(h) if h != header => {
                return Err(Error::format("matrep", "records with differing headers"));
            }
            Some(_) => {}
        }
        reps.push(rep);
        bytes = &bytes[used..];
    }
    Ok((first, reps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrep::{pack, sample_random_mlp, RepLayout, SamplerRanges};
    use crate::rng::SeedTree;

    fn sample_rep(seed: u64) -> (RepLayout, MatRep) {
        let l = RepLayout::new(5, 2, 2, 1).unwrap();
        let m = sample_random_mlp(&l, &SamplerRanges::full(&l, 2, 1), &mut SeedTree::new(seed).rng()).unwrap();
        (l, pack(&m, &l).unwrap())
    }

    #[test]
    fn round_trip() {
        let (l, rep) = sample_rep(1);
        let bytes = encode_matrep(&rep, l.max_hidden_layers, l.num_activations);
        let (h, back) = decode_matrep(&bytes).unwrap();
        assert_eq!(back, rep);
        assert_eq!(h.columns, l.columns());
    }

    #[test]
    fn stream_of_records() {
        let (l, a) = sample_rep(1);
        let (_, b) = sample_rep(2);
        let mut bytes = encode_matrep(&a, l.max_hidden_layers, 3);
        bytes.extend(encode_matrep(&b, l.max_hidden_layers, 3));
        let (_, reps) = decode_matrep_stream(&bytes).unwrap();
        assert_eq!(reps, vec![a, b]);
        assert!(decode_matrep(&bytes).is_err());
    }

    #[test]
    fn rejects_corruption() {
        let (l, rep) = sample_rep(3);
        let bytes = encode_matrep(&rep, l.max_hidden_layers, 3);
        assert!(decode_matrep(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_matrep(&bad).is_err());
        let mut bad = bytes.clone();
        bad[12] ^= 1; // column count
        assert!(decode_matrep(&bad).is_err());
        // Clear every validity bit: values at now-padded positions are nonzero.
        let mut bad = bytes.clone();
        let cells = rep.values.len();
        let start = bad.len() - cells.div_ceil(8);
        for b in &mut bad[start..] {
            *b = 0;
        }
        assert!(decode_matrep(&bad).is_err());
    }

    #[test]
    fn hostile_header_does_not_allocate() {
        let mut bytes = Vec::from(&MATREP_MAGIC[..]);
        for v in [1u32, 60_000, 0, 0, 0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        assert!(decode_matrep(&bytes).is_err());
    }
}
