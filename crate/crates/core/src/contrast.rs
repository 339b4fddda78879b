//! Image contrast statistics and multi-level contrast expansion.
//!
//! Contrast is measured as the population standard deviation of the pixel
//! intensities around the image mean. Enhancement scales every pixel's
//! deviation from that mean by a factor and clamps to `[0, 1]`, so before
//! clamping the measured contrast scales by exactly the factor.

use crate::error::{Error, Result};

/// The default contrast levels of the multi-contrast front end.
pub const DEFAULT_FACTORS: [f64; 4] = [1.0, 1.3, 1.6, 2.0];

/// Single-channel image with pixels in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidArgument(format!("empty image {height}x{width}")));
        }
        if pixels.len() != height * width {
            return Err(Error::InvalidArgument(format!(
                "{height}x{width} image needs {} pixels, got {}",
                height * width,
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!("pixel {p} outside [0, 1]")));
        }
        Ok(GrayImage { height, width, pixels })
    }

    /// Builds an image by clamping arbitrary finite values into `[0, 1]`.
    pub fn from_clamped(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(height, width, values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

/// `mu = (1 / MN) * sum I(x, y)`.
pub fn image_mean(img: &GrayImage) -> f64 {
    // Accumulate offsets from the first pixel so constant images are exact.
    let p0 = img.pixels[0];
    p0 + img.pixels.iter().map(|p| p - p0).sum::<f64>() / img.pixels.len() as f64
}

/// Population standard deviation of the intensities.
pub fn image_contrast(img: &GrayImage) -> f64 {
    let mu = image_mean(img);
    let var = img.pixels.iter().map(|p| (p - mu) * (p - mu)).sum::<f64>() / img.pixels.len() as f64;
    var.sqrt()
}

/// `clamp(mu + factor * (I - mu), 0, 1)` with `mu` the image mean.
///
/// A factor of exactly 1 returns the input unchanged.
pub fn adjust_contrast(img: &GrayImage, factor: f64) -> Result<GrayImage> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidArgument(format!("contrast factor must be positive, got {factor}")));
    }
    if factor == 1.0 {
        return Ok(img.clone());
    }
    let mu = image_mean(img);
    let pixels = img.pixels.iter().map(|&p| (mu + factor * (p - mu)).clamp(0.0, 1.0)).collect();
    Ok(GrayImage { height: img.height, width: img.width, pixels })
}

/// `K` contrast-adjusted copies of one image, in factor order.
#[derive(Clone, Debug, PartialEq)]
pub struct ContrastStack {
    factors: Vec<f64>,
    branches: Vec<GrayImage>,
}

impl ContrastStack {
    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn branches(&self) -> &[GrayImage] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }
}

pub fn validate_factors(factors: &[f64]) -> Result<()> {
    if factors.is_empty() {
        return Err(Error::InvalidArgument("contrast factor list is empty".into()));
    }
    if let Some(f) = factors.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
        return Err(Error::InvalidArgument(format!("contrast factor must be positive, got {f}")));
    }
    Ok(())
}

pub fn expand_stack(img: &GrayImage, factors: &[f64]) -> Result<ContrastStack> {
    validate_factors(factors)?;
    let branches = factors.iter().map(|&f| adjust_contrast(img, f)).collect::<Result<_>>()?;
    Ok(ContrastStack { factors: factors.to_vec(), branches })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(values: &[f64], w: usize) -> GrayImage {
        GrayImage::new(values.len() / w, w, values.to_vec()).unwrap()
    }

    #[test]
    fn mean_examples() {
        assert_eq!(image_mean(&GrayImage::constant(3, 5, 0.3).unwrap()), 0.3);
        assert_eq!(image_mean(&img(&[0.0, 1.0, 1.0, 0.0], 2)), 0.5);
        assert!((image_mean(&img(&[0.1, 0.2, 0.3, 0.4], 2)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn contrast_examples() {
        assert_eq!(image_contrast(&GrayImage::constant(4, 4, 0.8).unwrap()), 0.0);
        assert_eq!(image_contrast(&img(&[0.0, 1.0, 0.0, 1.0], 2)), 0.5);
    }

    #[test]
    fn adjust_examples() {
        let base = img(&[0.2, 0.8], 2);
        assert_eq!(adjust_contrast(&base, 1.0).unwrap(), base);
        let out = adjust_contrast(&base, 2.0).unwrap();
        assert!(out.pixels()[0].abs() < 1e-15 && (out.pixels()[1] - 1.0).abs() < 1e-15);
        let half = adjust_contrast(&base, 0.5).unwrap();
        assert!((image_contrast(&half) - 0.5 * image_contrast(&base)).abs() < 1e-15);
        assert!(adjust_contrast(&base, 0.0).is_err());
        assert!(adjust_contrast(&base, -1.0).is_err());
        assert!(adjust_contrast(&base, f64::NAN).is_err());
    }

    #[test]
    fn stack_examples() {
        let base = img(&[0.4, 0.45, 0.5, 0.55], 2);
        let one = expand_stack(&base, &[1.0]).unwrap();
        assert_eq!(one.branches(), std::slice::from_ref(&base));
        let four = expand_stack(&base, &DEFAULT_FACTORS).unwrap();
        assert_eq!(four.len(), 4);
        assert_eq!(four.factors(), &DEFAULT_FACTORS);
        assert!(expand_stack(&base, &[]).is_err());
        assert!(expand_stack(&base, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn image_validation() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(1, 2, vec![0.5]).is_err());
        assert!(GrayImage::new(1, 1, vec![1.5]).is_err());
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
        assert_eq!(GrayImage::from_clamped(1, 2, vec![-0.5, 2.0]).unwrap().pixels(), &[0.0, 1.0]);
    }
}
