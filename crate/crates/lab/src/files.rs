//! Dataset and checkpoint files.

use std::fs;
use std::path::Path;

use nlab_core::data::idx::{dataset_from_idx, dataset_to_idx};
use nlab_core::data::NoisyDataset;
use nlab_core::nn::{decode_network, encode_network, Network};

use crate::error::{io_err, LabResult};

/// Reads an IDX image/label pair into a clean dataset with statistics computed from it.
/// Without `num_classes` the class count is one more than the largest label.
pub fn load_idx(images: &Path, labels: &Path, num_classes: Option<usize>) -> LabResult<NoisyDataset> {
    let img = fs::read(images).map_err(io_err(images))?;
    let lab = fs::read(labels).map_err(io_err(labels))?;
    let ds = dataset_from_idx(&img, &lab)?;
    Ok(match num_classes {
        Some(c) => NoisyDataset::clean(ds.images, ds.given_labels, c)?,
        None => ds,
    })
}

/// Writes the images and given labels of `ds` as an IDX pair.
pub fn save_idx(ds: &NoisyDataset, images: &Path, labels: &Path) -> LabResult<()> {
    let (img, lab) = dataset_to_idx(ds)?;
    write(images, &img)?;
    write(labels, &lab)
}

pub fn save_checkpoint(net: &Network, path: &Path) -> LabResult<()> {
    write(path, &encode_network(net))
}

pub fn load_checkpoint(path: &Path) -> LabResult<Network> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(decode_network(&bytes)?)
}

pub(crate) fn write(path: &Path, bytes: &[u8]) -> LabResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}
