use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Self {
        SplitSpec { train_fraction, seed, stratified: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!("train fraction {} outside (0, 1)", self.train_fraction)));
        }
        Ok(())
    }
}

/// `round(fraction * n)` kept inside `[1, n - 1]` so neither side is empty.
fn train_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n - 1)
}

/// Train and test indices into `ds`, each in ascending order.
pub fn split_indices(ds: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let groups: Vec<Vec<usize>> = if spec.stratified {
        let mut by_class = vec![Vec::new(); ds.num_classes()];
        ds.samples().iter().enumerate().for_each(|(i, s)| by_class[s.label].push(i));
        by_class.retain(|g| !g.is_empty());
        if let Some(g) = by_class.iter().find(|g| g.len() < 2) {
            let label = ds.samples()[g[0]].label;
            return Err(Error::InvalidArgument(format!(
                "class {} has a single sample; a stratified split needs at least 2",
                ds.class_names()[label]
            )));
        }
        by_class
    } else {
        if ds.len() < 2 {
            return Err(Error::InvalidArgument(format!("cannot split {} samples", ds.len())));
        }
        vec![(0..ds.len()).collect()]
    };
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for mut g in groups {
        g.shuffle(&mut rng);
        let k = train_count(spec.train_fraction, g.len());
        train.extend_from_slice(&g[..k]);
        test.extend_from_slice(&g[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds, spec)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrast::GrayImage;
    use crate::data::Sample;

    fn toy(counts: &[usize]) -> Dataset {
        let mut samples = Vec::new();
        for (label, &n) in counts.iter().enumerate() {
            for i in 0..n {
                samples.push(Sample { image: GrayImage::constant(1, 1, i as f64 / 1000.0).unwrap(), label });
            }
        }
        Dataset::new(samples, (0..counts.len()).map(|c| c.to_string()).collect(), "toy").unwrap()
    }

    #[test]
    fn seventy_thirty_per_class() {
        let ds = toy(&[300; 4]);
        let (tr, te) = split(&ds, &SplitSpec::new(0.7, 3)).unwrap();
        assert_eq!(tr.class_counts(), vec![210; 4]);
        assert_eq!(te.class_counts(), vec![90; 4]);
    }

    #[test]
    fn deterministic_and_exhaustive() {
        let ds = toy(&[5, 7, 2]);
        let spec = SplitSpec::new(0.6, 11);
        let (a, b) = split_indices(&ds, &spec).unwrap();
        assert_eq!((a.clone(), b.clone()), split_indices(&ds, &spec).unwrap());
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..14).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_singleton_classes_and_bad_fractions() {
        assert!(split(&toy(&[3, 1]), &SplitSpec::new(0.7, 0)).is_err());
        assert!(split(&toy(&[3, 3]), &SplitSpec::new(1.0, 0)).is_err());
        assert!(split(&toy(&[3, 3]), &SplitSpec::new(0.0, 0)).is_err());
        let unstratified = SplitSpec { stratified: false, ..SplitSpec::new(0.5, 0) };
        assert!(split(&toy(&[3, 1]), &unstratified).is_ok());
    }
}
