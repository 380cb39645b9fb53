//! Big-endian IDX codec (the MNIST container format), single-channel images only.

use alloc::format;
use alloc::vec::Vec;

use super::{Image, NoisyDataset};
use crate::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::Format(format!("{what}: truncated header")))
}

pub fn decode_images(bytes: &[u8]) -> Result<IdxImages> {
    let magic = be_u32(bytes, 0, "images")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format(format!("images: bad magic {magic:#010x}")));
    }
    let count = be_u32(bytes, 4, "images")? as usize;
    let rows = be_u32(bytes, 8, "images")? as usize;
    let cols = be_u32(bytes, 12, "images")? as usize;
    let need = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::Format("images: dimensions overflow".into()))?;
    let body = &bytes[16..];
    if body.len() != need {
        return Err(Error::Format(format!(
            "images: expected {need} pixel bytes, found {}",
            body.len()
        )));
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: body.to_vec(),
    })
}

pub fn decode_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0, "labels")?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format(format!("labels: bad magic {magic:#010x}")));
    }
    let count = be_u32(bytes, 4, "labels")? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(Error::Format(format!(
            "labels: expected {count} bytes, found {}",
            body.len()
        )));
    }
    Ok(body.to_vec())
}

pub fn encode_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGES_MAGIC, images.count as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Parses an image/label pair into a clean dataset with pixels scaled to `[0, 1]`.
/// The class count is one more than the largest label (at least 2).
pub fn dataset_from_idx(image_bytes: &[u8], label_bytes: &[u8]) -> Result<NoisyDataset> {
    let imgs = decode_images(image_bytes)?;
    let labels = decode_labels(label_bytes)?;
    if imgs.count != labels.len() {
        return Err(Error::Format(format!(
            "{} images but {} labels",
            imgs.count,
            labels.len()
        )));
    }
    let area = imgs.rows * imgs.cols;
    let images = (0..imgs.count)
        .map(|i| {
            let px = imgs.pixels[i * area..(i + 1) * area]
                .iter()
                .map(|&b| b as f64 / 255.0)
                .collect();
            Image::new(1, imgs.rows, imgs.cols, px)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
    let classes = labels.iter().copied().max().map_or(2, |m| (m + 1).max(2));
    NoisyDataset::clean(images, labels, classes)
}

/// Quantizes a single-channel dataset to 8 bits. Exports the given labels.
pub fn dataset_to_idx(ds: &NoisyDataset) -> Result<(Vec<u8>, Vec<u8>)> {
    let [c, h, w] = ds.sample_shape();
    if c != 1 {
        return Err(Error::Config(format!("IDX export needs 1 channel, dataset has {c}")));
    }
    if ds.num_classes > 256 {
        return Err(Error::Config("IDX labels are single bytes".into()));
    }
    let pixels = ds
        .images
        .iter()
        .flat_map(|im| im.pixels().iter().map(|&v| libm::round(v * 255.0) as u8))
        .collect();
    let images = IdxImages {
        count: ds.len(),
        rows: h,
        cols: w,
        pixels,
    };
    let labels: Vec<u8> = ds.given_labels.iter().map(|&l| l as u8).collect();
    Ok((encode_images(&images), encode_labels(&labels)))
}
