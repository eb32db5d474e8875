//! Per-point probability tables: little-endian `f32`, eleven values per
//! point in class order, no header.

use std::path::Path;

use super::{read_file, write_file};
use crate::classes::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::geometry::{validate_probability_row, ProbabilityRow};

const ROW_BYTES: usize = NUM_CLASSES * 4;

pub fn parse_probabilities(bytes: &[u8]) -> Result<Vec<ProbabilityRow>> {
    if !bytes.len().is_multiple_of(ROW_BYTES) {
        return Err(Error::Truncated {
            offset: (bytes.len() / ROW_BYTES * ROW_BYTES) as u64,
            reason: format!("rows are {ROW_BYTES} bytes"),
        });
    }
    bytes
        .chunks_exact(ROW_BYTES)
        .enumerate()
        .map(|(index, chunk)| {
            let mut row = [0.0; NUM_CLASSES];
            for (k, w) in chunk.chunks_exact(4).enumerate() {
                let v = f32::from_le_bytes(w.try_into().unwrap());
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue {
                        offset: (index * ROW_BYTES + k * 4) as u64,
                    });
                }
                row[k] = v as f64;
            }
            validate_probability_row(&row).map_err(|reason| Error::MalformedProbabilities { index, reason })?;
            Ok(row)
        })
        .collect()
}

pub fn read_probabilities(path: impl AsRef<Path>) -> Result<Vec<ProbabilityRow>> {
    let path = path.as_ref();
    parse_probabilities(&read_file(path)?).map_err(|e| e.in_file(path))
}

pub fn encode_probabilities(rows: &[ProbabilityRow]) -> Vec<u8> {
    rows.iter()
        .flat_map(|r| r.iter().flat_map(|&v| (v as f32).to_le_bytes()))
        .collect()
}

pub fn write_probabilities(path: impl AsRef<Path>, rows: &[ProbabilityRow]) -> Result<()> {
    write_file(path.as_ref(), &encode_probabilities(rows))
}
