//! Big-endian IDX files (the MNIST distribution format).

use std::path::Path;

use super::{Dataset, FeatureStats};
use crate::engine::Tensor;
use crate::error::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::format(path, "truncated header"))
}

/// Returns `(dims, payload)` after checking the magic number and payload length.
fn parse(bytes: &[u8], magic: u32, path: &Path) -> Result<(Vec<usize>, Vec<u8>)> {
    let found = be_u32(bytes, 0, path)?;
    if found != magic {
        return Err(Error::format(
            path,
            format!("bad magic 0x{found:08x}, expected 0x{magic:08x}"),
        ));
    }
    let ndim = (magic & 0xff) as usize;
    let dims = (0..ndim)
        .map(|j| be_u32(bytes, 4 + 4 * j, path).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let start = 4 + 4 * ndim;
    let expected: usize = dims.iter().product();
    let payload = &bytes[start..];
    if payload.len() != expected {
        return Err(Error::format(
            path,
            format!("payload has {} bytes, header promises {expected}", payload.len()),
        ));
    }
    Ok((dims, payload.to_vec()))
}

/// Loads an image/label IDX pair. Pixels are scaled to `[0, 1]` and
/// mean-centred with `stats` if given (a test split reusing training
/// statistics), otherwise with statistics computed here and stored on the
/// returned dataset.
pub fn load_idx(images_path: &Path, labels_path: &Path, stats: Option<&FeatureStats>) -> Result<Dataset> {
    let (dims, pixels) = parse(&read_file(images_path)?, IDX_IMAGES_MAGIC, images_path)?;
    let (ldims, labels) = parse(&read_file(labels_path)?, IDX_LABELS_MAGIC, labels_path)?;
    let (n, width) = (dims[0], dims[1] * dims[2]);
    if ldims[0] != n {
        return Err(Error::format(
            labels_path,
            format!("{} labels for {n} images", ldims[0]),
        ));
    }
    if n == 0 || width == 0 {
        return Err(Error::EmptyDataset(images_path.display().to_string()));
    }
    let mut inputs = Tensor::new(
        vec![n, width],
        pixels.iter().map(|&p| f64::from(p) / 255.0).collect(),
    )?;
    let stats = match stats {
        Some(s) if s.mean.len() != width => {
            return Err(Error::Shape(format!(
                "stored statistics have {} features, images have {width}",
                s.mean.len()
            )))
        }
        Some(s) => s.clone(),
        None => FeatureStats::from_inputs(&inputs),
    };
    stats.subtract_from(&mut inputs);
    let labels: Vec<usize> = labels.into_iter().map(usize::from).collect();
    let class_count = labels.iter().max().map_or(1, |m| m + 1);
    Ok(Dataset::new(inputs, labels, class_count, "idx")?.with_stats(stats))
}
