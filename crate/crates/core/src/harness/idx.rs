//! IDX reader (the MNIST / Fashion-MNIST container format).
//!
//! Layout: a 4-byte big-endian magic `0x0000_08NN` where `0x08` is the
//! unsigned-byte element type and `NN` the number of dimensions, then one
//! big-endian `u32` per dimension, then the raw payload.

use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format {
            offset,
            detail: format!("header truncated ({} bytes available)", bytes.len()),
        })
}

/// Parses the header, checks the magic and returns (dims, payload offset).
fn header(bytes: &[u8], magic: u32) -> Result<(Vec<usize>, usize)> {
    let found = read_u32(bytes, 0)?;
    if found != magic {
        return Err(Error::Format {
            offset: 0,
            detail: format!("bad magic {found:#010x}, expected {magic:#010x}"),
        });
    }
    let ndims = (magic & 0xff) as usize;
    let dims = (0..ndims)
        .map(|d| read_u32(bytes, 4 + 4 * d).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let start = 4 + 4 * ndims;
    let expected: usize = dims.iter().product();
    if bytes.len() - start < expected {
        return Err(Error::Format {
            offset: bytes.len(),
            detail: format!("payload truncated: {} of {expected} bytes", bytes.len() - start),
        });
    }
    if bytes.len() - start > expected {
        return Err(Error::Format {
            offset: start + expected,
            detail: format!("{} trailing bytes after payload", bytes.len() - start - expected),
        });
    }
    Ok((dims, start))
}

/// Images as `(count, rows, cols, pixels)`.
pub fn parse_images(bytes: &[u8]) -> Result<(usize, usize, usize, &[u8])> {
    let (dims, start) = header(bytes, IMAGES_MAGIC)?;
    Ok((dims[0], dims[1], dims[2], &bytes[start..]))
}

pub fn parse_labels(bytes: &[u8]) -> Result<&[u8]> {
    let (_, start) = header(bytes, LABELS_MAGIC)?;
    Ok(&bytes[start..])
}

/// Builds a dataset with pixels scaled to `[0, 1]`.
pub fn from_idx_bytes(images: &[u8], labels: &[u8]) -> Result<Dataset> {
    let (count, rows, cols, pixels) = parse_images(images)?;
    let labels = parse_labels(labels)?;
    if labels.len() != count {
        return Err(Error::Format {
            offset: 4,
            detail: format!("{count} images but {} labels", labels.len()),
        });
    }
    let inputs = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let labels: Vec<usize> = labels.iter().map(|&l| usize::from(l)).collect();
    let classes = labels.iter().copied().max().map_or(2, |m| (m + 1).max(2));
    Dataset::new(inputs, rows * cols, labels, classes)
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images = std::fs::read(images_path)?;
    let labels = std::fs::read(labels_path)?;
    from_idx_bytes(&images, &labels)
}

/// Serializes images in IDX form.
pub fn encode_images(rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let count = pixels.len() / (rows * cols);
    let mut out = IMAGES_MAGIC.to_be_bytes().to_vec();
    for d in [count, rows, cols] {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = LABELS_MAGIC.to_be_bytes().to_vec();
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
