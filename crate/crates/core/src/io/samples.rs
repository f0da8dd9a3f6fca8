//! Posterior draws as a directory: `manifest.json` plus, for every block,
//! files `<block>.<chunk>.bin` of little-endian `f64` values holding up to
//! `chunk_draws` consecutive draws each.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_header, read_json, write_bytes, write_json_pretty, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::inference::{Block, PosteriorSamples};

const FORMAT: &str = "firefront.samples";
const MANIFEST: &str = "manifest.json";
const TRACE: &str = "spectral_radius_trace.bin";

/// Draws per chunk file unless the caller asks otherwise.
pub const DEFAULT_CHUNK_DRAWS: usize = 2_000;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockEntry {
    name: String,
    shape: Vec<usize>,
    chunks: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: u32,
    grid: GridSpec,
    transition: String,
    chunk_draws: usize,
    iterations: Vec<usize>,
    kept_phi: Vec<usize>,
    blocks: Vec<BlockEntry>,
    trace: String,
}

fn encode(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn decode(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format(format!(
            "{} bytes is not a whole number of f64 values",
            bytes.len()
        ))
        .in_file(path));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks of eight")))
        .collect())
}

pub fn write_samples(dir: &Path, samples: &PosteriorSamples, chunk_draws: usize) -> Result<()> {
    samples.validate()?;
    if chunk_draws == 0 {
        return Err(Error::InvalidParameter(
            "chunk size must be positive".into(),
        ));
    }
    let mut blocks = Vec::with_capacity(samples.blocks.len());
    for b in &samples.blocks {
        let per_chunk = chunk_draws * b.draw_len();
        let mut chunks = Vec::new();
        // Empty blocks (P = 0) still get one empty file so every block has a chunk.
        let pieces: Vec<&[f64]> = if per_chunk == 0 || b.values.is_empty() {
            vec![&b.values[..]]
        } else {
            b.values.chunks(per_chunk).collect()
        };
        for (c, piece) in pieces.into_iter().enumerate() {
            let name = format!("{}.{c:04}.bin", b.name);
            write_bytes(&dir.join(&name), &encode(piece))?;
            chunks.push(name);
        }
        blocks.push(BlockEntry {
            name: b.name.clone(),
            shape: b.shape.clone(),
            chunks,
        });
    }
    write_bytes(&dir.join(TRACE), &encode(&samples.spectral_radius_trace))?;
    write_json_pretty(
        &dir.join(MANIFEST),
        &Manifest {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            grid: samples.grid,
            transition: samples.transition.clone(),
            chunk_draws,
            iterations: samples.iterations.clone(),
            kept_phi: samples.kept_phi.clone(),
            blocks,
            trace: TRACE.into(),
        },
    )
}

pub fn read_samples(dir: &Path) -> Result<PosteriorSamples> {
    let path = dir.join(MANIFEST);
    let m: Manifest = read_json(&path)?;
    check_header(&path, &m.format, m.version, FORMAT)?;
    let mut blocks = Vec::with_capacity(m.blocks.len());
    for entry in m.blocks {
        let mut values = Vec::new();
        for chunk in &entry.chunks {
            values.extend(decode(&dir.join(chunk))?);
        }
        blocks.push(Block {
            name: entry.name,
            shape: entry.shape,
            values,
        });
    }
    let samples = PosteriorSamples {
        grid: m.grid,
        transition: m.transition,
        iterations: m.iterations,
        blocks,
        spectral_radius_trace: decode(&dir.join(&m.trace))?,
        kept_phi: m.kept_phi,
    };
    samples.validate().map_err(|e| e.in_file(&path))?;
    Ok(samples)
}
