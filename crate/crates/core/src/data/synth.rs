//! Deterministic four-class synthetic stand-in for low-contrast ultrasound.
//!
//! Every image is a random background level plus spatially correlated
//! speckle, with one class-specific structure whose amplitude never exceeds
//! 0.15 above the background. The families differ in both shape and how much
//! they raise the global intensity spread, so contrast enhancement changes
//! how separable they are.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Dataset, Sample};
use crate::contrast::GrayImage;
use crate::error::{Error, Result};

pub const SYNTH_CLASSES: [&str; 4] = ["0_ellipse_pair", "1_curved_band", "2_periodic_ridge", "3_filled_disk"];

const SPECKLE_STD: f64 = 0.02;
const ELLIPSE_AMP: f64 = 0.045;
const BAND_AMP: f64 = 0.15;
const RIDGE_AMP: f64 = 0.15;
const DISK_AMP: f64 = 0.15;

/// `n_per_class` images of each family, interleaved by class, `size x size`.
pub fn synth_dataset(n_per_class: usize, size: usize, seed: u64) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(Error::InvalidArgument("n_per_class must be >= 1".into()));
    }
    if size < 8 {
        return Err(Error::InvalidArgument(format!("synthetic images must be at least 8x8, got {size}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(4 * n_per_class);
    for _ in 0..n_per_class {
        for label in 0..4 {
            samples.push(Sample { image: render(label, size, &mut rng)?, label });
        }
    }
    let names = SYNTH_CLASSES.iter().map(|s| s.to_string()).collect();
    Dataset::new(samples, names, format!("synth n_per_class={n_per_class} size={size} seed={seed}"))
}

fn speckle(size: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let white: Vec<f64> = (0..size * size).map(|_| rng.sample(StandardNormal)).collect();
    // 3x3 box blur (edge-clamped) correlates neighbours; x3 restores unit std
    let mut out = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            let mut acc = 0.0;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let yy = (y as i64 + dy).clamp(0, size as i64 - 1) as usize;
                    let xx = (x as i64 + dx).clamp(0, size as i64 - 1) as usize;
                    acc += white[yy * size + xx];
                }
            }
            out[y * size + x] = acc / 3.0 * SPECKLE_STD;
        }
    }
    out
}

fn render(label: usize, size: usize, rng: &mut ChaCha8Rng) -> Result<GrayImage> {
    let s = size as f64;
    let background = rng.gen_range(0.35..0.55);
    let cx = s / 2.0 + rng.gen_range(-0.08..0.08) * s;
    let cy = s / 2.0 + rng.gen_range(-0.08..0.08) * s;
    let signal: Box<dyn Fn(f64, f64) -> f64> = match label {
        0 => {
            let a = rng.gen_range(0.16..0.22) * s;
            let b = rng.gen_range(0.10..0.14) * s;
            let theta = rng.gen_range(0.0..PI);
            let phi = rng.gen_range(0.0..PI);
            let d = rng.gen_range(0.20..0.24) * s;
            let centers = [(cx + d * phi.cos(), cy + d * phi.sin()), (cx - d * phi.cos(), cy - d * phi.sin())];
            let (ct, st) = (theta.cos(), theta.sin());
            Box::new(move |x, y| {
                let inside = centers.iter().any(|&(ex, ey)| {
                    let (u, v) = (x - ex, y - ey);
                    let (p, q) = (u * ct + v * st, -u * st + v * ct);
                    (p / a).powi(2) + (q / b).powi(2) <= 1.0
                });
                if inside { ELLIPSE_AMP } else { 0.0 }
            })
        }
        1 => {
            let r = rng.gen_range(0.28..0.34) * s;
            let half = rng.gen_range(0.035..0.045) * s;
            let start = rng.gen_range(0.0..2.0 * PI);
            let span = rng.gen_range(200.0f64..260.0).to_radians();
            Box::new(move |x, y| {
                let (u, v) = (x - cx, y - cy);
                let angle = (v.atan2(u) - start).rem_euclid(2.0 * PI);
                if ((u * u + v * v).sqrt() - r).abs() <= half && angle <= span { BAND_AMP } else { 0.0 }
            })
        }
        2 => {
            let period = rng.gen_range(0.14..0.20) * s;
            let theta = rng.gen_range(0.0..PI);
            let phase = rng.gen_range(0.0..2.0 * PI);
            let (ct, st) = (theta.cos(), theta.sin());
            Box::new(move |x, y| RIDGE_AMP * (2.0 * PI * (x * ct + y * st) / period + phase).sin())
        }
        _ => {
            let r = rng.gen_range(0.36..0.40) * s;
            Box::new(move |x, y| if (x - cx).powi(2) + (y - cy).powi(2) <= r * r { DISK_AMP } else { 0.0 })
        }
    };
    let noise = speckle(size, rng);
    let pixels = (0..size * size)
        .map(|i| {
            let (y, x) = ((i / size) as f64 + 0.5, (i % size) as f64 + 0.5);
            background + signal(x, y) + noise[i]
        })
        .collect();
    GrayImage::from_clamped(size, size, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_and_deterministic() {
        let a = synth_dataset(3, 16, 9).unwrap();
        assert_eq!(a.len(), 12);
        assert_eq!(a.class_counts(), vec![3; 4]);
        assert_eq!(a, synth_dataset(3, 16, 9).unwrap());
        assert_ne!(a, synth_dataset(3, 16, 10).unwrap());
        assert_eq!(a.image_size(), Some((16, 16)));
    }

    #[test]
    fn rejects_degenerate_requests() {
        assert!(synth_dataset(0, 32, 0).is_err());
        assert!(synth_dataset(1, 4, 0).is_err());
    }
}
