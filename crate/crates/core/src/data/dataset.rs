use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::Image;
use crate::rng::{rng_for, tag};
use crate::{Error, Result};

/// Per-channel normalization statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn identity(channels: usize) -> Self {
        Self {
            mean: alloc::vec![0.0; channels],
            std: alloc::vec![1.0; channels],
        }
    }

    /// Population mean and standard deviation of every channel over all images.
    pub fn compute(images: &[Image]) -> Result<Self> {
        let first = images
            .first()
            .ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
        let c = first.channels();
        let mut mean = alloc::vec![0.0; c];
        let mut sq = alloc::vec![0.0; c];
        let mut count = 0usize;
        for img in images {
            if img.channels() != c {
                return Err(Error::Config("images disagree on channel count".into()));
            }
            for ch in 0..c {
                for &p in img.plane(ch) {
                    mean[ch] += p;
                    sq[ch] += p * p;
                }
            }
            count += img.height() * img.width();
        }
        let n = count as f64;
        let std = mean
            .iter()
            .zip(&sq)
            .map(|(m, s)| {
                let mu = m / n;
                libm::sqrt((s / n - mu * mu).max(0.0)).max(1e-6)
            })
            .collect();
        mean.iter_mut().for_each(|m| *m /= n);
        Ok(Self { mean, std })
    }
}

/// Images with their given (possibly corrupted) labels and hidden true labels.
/// `flip_mask[i]` holds exactly when `given_labels[i] != true_labels[i]`; it and
/// `true_labels` are for diagnostics and evaluation only.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyDataset {
    pub images: Vec<Image>,
    pub given_labels: Vec<usize>,
    pub true_labels: Vec<usize>,
    pub flip_mask: Vec<bool>,
    pub num_classes: usize,
    pub stats: NormStats,
}

impl NoisyDataset {
    /// Clean dataset; normalization statistics are computed from `images`.
    pub fn clean(images: Vec<Image>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let stats = NormStats::compute(&images)?;
        Self::from_parts(images, labels.clone(), labels, num_classes, stats)
    }

    pub fn from_parts(
        images: Vec<Image>,
        given_labels: Vec<usize>,
        true_labels: Vec<usize>,
        num_classes: usize,
        stats: NormStats,
    ) -> Result<Self> {
        let n = images.len();
        if given_labels.len() != n || true_labels.len() != n {
            return Err(Error::Config(format!(
                "{n} images but {} given / {} true labels",
                given_labels.len(),
                true_labels.len()
            )));
        }
        if let Some(bad) = given_labels.iter().chain(&true_labels).find(|&&l| l >= num_classes) {
            return Err(Error::Config(format!("label {bad} not below {num_classes} classes")));
        }
        if let Some(img) = images.first() {
            if stats.mean.len() != img.channels() || stats.std.len() != img.channels() {
                return Err(Error::Config("normalization stats do not match channels".into()));
            }
            let dims = (img.channels(), img.height(), img.width());
            if images.iter().any(|i| (i.channels(), i.height(), i.width()) != dims) {
                return Err(Error::Config("images differ in shape".into()));
            }
        }
        let flip_mask = given_labels.iter().zip(&true_labels).map(|(g, t)| g != t).collect();
        Ok(Self {
            images,
            given_labels,
            true_labels,
            flip_mask,
            num_classes,
            stats,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// `[channels, height, width]` of every image.
    pub fn sample_shape(&self) -> [usize; 3] {
        self.images
            .first()
            .map(|i| [i.channels(), i.height(), i.width()])
            .unwrap_or([0, 0, 0])
    }

    pub fn noise_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.flip_mask.iter().filter(|&&f| f).count() as f64 / self.len() as f64
    }

    fn with_given(&self, given_labels: Vec<usize>) -> Self {
        let flip_mask = given_labels
            .iter()
            .zip(&self.true_labels)
            .map(|(g, t)| g != t)
            .collect();
        Self {
            images: self.images.clone(),
            given_labels,
            true_labels: self.true_labels.clone(),
            flip_mask,
            num_classes: self.num_classes,
            stats: self.stats.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymmetricMode {
    /// Replacement label uniform over all classes; it may equal the true label.
    #[default]
    AllClasses,
    /// Replacement label uniform over the classes other than the true label.
    OtherClasses,
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Config(format!("noise rate {rate} outside [0, 1]")));
    }
    Ok(())
}

/// Each sample is selected with probability `rate` and relabeled uniformly at random.
/// Labels are drawn relative to the true labels, so injection does not compound.
pub fn inject_symmetric(ds: &NoisyDataset, rate: f64, seed: u64) -> Result<NoisyDataset> {
    inject_symmetric_with(ds, rate, SymmetricMode::AllClasses, seed)
}

pub fn inject_symmetric_with(
    ds: &NoisyDataset,
    rate: f64,
    mode: SymmetricMode,
    seed: u64,
) -> Result<NoisyDataset> {
    check_rate(rate)?;
    let c = ds.num_classes;
    let mut rng = rng_for(seed, &[tag::NOISE, 0]);
    let given = ds
        .true_labels
        .iter()
        .map(|&t| {
            let selected = rng.random::<f64>() < rate;
            if !selected {
                return t;
            }
            match mode {
                SymmetricMode::AllClasses => rng.random_range(0..c),
                SymmetricMode::OtherClasses => {
                    let k = rng.random_range(0..c - 1);
                    if k >= t {
                        k + 1
                    } else {
                        k
                    }
                }
            }
        })
        .collect();
    Ok(ds.with_given(given))
}

/// `i -> (i + 1) mod classes`.
pub fn rotate_classes(classes: usize) -> Vec<usize> {
    (0..classes).map(|i| (i + 1) % classes).collect()
}

/// Each sample with probability `rate` takes label `class_map[true_label]`.
pub fn inject_asymmetric(
    ds: &NoisyDataset,
    rate: f64,
    class_map: &[usize],
    seed: u64,
) -> Result<NoisyDataset> {
    check_rate(rate)?;
    if class_map.len() != ds.num_classes || class_map.iter().any(|&m| m >= ds.num_classes) {
        return Err(Error::Config(format!(
            "class map {class_map:?} is not a function on {} classes",
            ds.num_classes
        )));
    }
    let mut rng = rng_for(seed, &[tag::NOISE, 1]);
    let given = ds
        .true_labels
        .iter()
        .map(|&t| if rng.random::<f64>() < rate { class_map[t] } else { t })
        .collect();
    Ok(ds.with_given(given))
}
