//! Labeled image datasets: folder ingestion, synthetic generation, splits.

mod folder;
mod pgm;
mod split;
mod synth;

pub use folder::{load_folder, resize_bilinear, write_folder, Manifest, ManifestEntry};
pub use pgm::{read_pgm, write_pgm, Pgm};
pub use split::{split, split_indices, SplitSpec};
pub use synth::{synth_dataset, SYNTH_CLASSES};

use crate::contrast::GrayImage;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub image: GrayImage,
    pub label: usize,
}

/// Samples sharing one image size, labels in `0..class_names.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    class_names: Vec<String>,
    /// Where the samples came from (generator seed or source folder).
    pub provenance: String,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, class_names: Vec<String>, provenance: impl Into<String>) -> Result<Self> {
        if let Some(s) = samples.iter().find(|s| s.label >= class_names.len()) {
            return Err(Error::InvalidArgument(format!("label {} with only {} classes", s.label, class_names.len())));
        }
        if let Some(first) = samples.first() {
            let dims = (first.image.height(), first.image.width());
            if let Some(s) = samples.iter().find(|s| (s.image.height(), s.image.width()) != dims) {
                return Err(Error::InvalidArgument(format!(
                    "mixed image sizes: {}x{} and {}x{}",
                    dims.0,
                    dims.1,
                    s.image.height(),
                    s.image.width()
                )));
            }
        }
        Ok(Dataset { samples, class_names, provenance: provenance.into() })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(height, width)` of every image, `None` when empty.
    pub fn image_size(&self) -> Option<(usize, usize)> {
        self.samples.first().map(|s| (s.image.height(), s.image.width()))
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn images(&self) -> Vec<GrayImage> {
        self.samples.iter().map(|s| s.image.clone()).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        self.samples.iter().for_each(|s| counts[s.label] += 1);
        counts
    }

    /// Samples at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            class_names: self.class_names.clone(),
            provenance: self.provenance.clone(),
        }
    }
}
