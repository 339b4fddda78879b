use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pgm::{read_pgm, write_pgm};
use super::split::{split_indices, SplitSpec};
use super::{Dataset, Sample};
use crate::contrast::GrayImage;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Bilinear resize with corner-aligned sampling: destination pixel `i` reads
/// source coordinate `i * (src - 1) / (dst - 1)` (0 when `dst == 1`).
pub fn resize_bilinear(img: &GrayImage, height: usize, width: usize) -> Result<GrayImage> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidArgument(format!("cannot resize to {height}x{width}")));
    }
    if (height, width) == (img.height(), img.width()) {
        return Ok(img.clone());
    }
    let coord = |i: usize, src: usize, dst: usize| -> (usize, usize, f64) {
        if dst == 1 || src == 1 {
            return (0, 0, 0.0);
        }
        let x = i as f64 * (src - 1) as f64 / (dst - 1) as f64;
        let x0 = (x.floor() as usize).min(src - 1);
        let x1 = (x0 + 1).min(src - 1);
        (x0, x1, x - x0 as f64)
    };
    let mut pixels = Vec::with_capacity(height * width);
    for i in 0..height {
        let (y0, y1, fy) = coord(i, img.height(), height);
        for j in 0..width {
            let (x0, x1, fx) = coord(j, img.width(), width);
            let top = img.get(y0, x0) * (1.0 - fx) + img.get(y0, x1) * fx;
            let bottom = img.get(y1, x0) * (1.0 - fx) + img.get(y1, x1) * fx;
            pixels.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    GrayImage::from_clamped(height, width, pixels)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::data(dir, e.to_string()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::data(dir, e.to_string()))?;
    entries.sort();
    Ok(entries)
}

fn is_pgm(path: &Path) -> bool {
    path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

/// One class per subdirectory of `root` (label = sorted position), every
/// `.pgm` file inside resized to `target`.
pub fn load_folder(root: impl AsRef<Path>, target: (usize, usize)) -> Result<Dataset> {
    let root = root.as_ref();
    let class_dirs: Vec<PathBuf> = sorted_entries(root)?.into_iter().filter(|p| p.is_dir()).collect();
    if class_dirs.is_empty() {
        return Err(Error::data(root, "no class subdirectories"));
    }
    let mut samples = Vec::new();
    let mut class_names = Vec::new();
    for (label, dir) in class_dirs.iter().enumerate() {
        let files: Vec<PathBuf> = sorted_entries(dir)?.into_iter().filter(|p| is_pgm(p)).collect();
        if files.is_empty() {
            return Err(Error::data(dir, "class folder has no .pgm images"));
        }
        for f in files {
            let image = resize_bilinear(&read_pgm(&f)?, target.0, target.1)?;
            samples.push(Sample { image, label });
        }
        class_names.push(dir.file_name().expect("entry name").to_string_lossy().into_owned());
    }
    Dataset::new(samples, class_names, format!("folder {}", root.display()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub label: usize,
    pub split: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub class_names: Vec<String>,
    pub provenance: String,
    pub split: SplitSpec,
    pub samples: Vec<ManifestEntry>,
}

/// Writes `ds` as `root/<class>/<index>.pgm` plus a JSON manifest recording
/// each file's label and its side of `split`.
pub fn write_folder(ds: &Dataset, root: impl AsRef<Path>, split: &SplitSpec) -> Result<Manifest> {
    let root = root.as_ref();
    let (train, _) = split_indices(ds, split)?;
    let mut in_train = vec![false; ds.len()];
    train.iter().for_each(|&i| in_train[i] = true);
    for name in ds.class_names() {
        let dir = root.join(name);
        fs::create_dir_all(&dir).map_err(|e| Error::data(&dir, e.to_string()))?;
    }
    let mut next = vec![0usize; ds.num_classes()];
    let mut entries = Vec::with_capacity(ds.len());
    for (i, s) in ds.samples().iter().enumerate() {
        let rel = format!("{}/{:05}.pgm", ds.class_names()[s.label], next[s.label]);
        next[s.label] += 1;
        write_pgm(root.join(&rel), &s.image)?;
        let split = if in_train[i] { "train" } else { "test" };
        entries.push(ManifestEntry { path: rel, label: s.label, split: split.into() });
    }
    let manifest = Manifest {
        class_names: ds.class_names().to_vec(),
        provenance: ds.provenance.clone(),
        split: split.clone(),
        samples: entries,
    };
    let path = root.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::data(&path, e.to_string()))?;
    Ok(manifest)
}
