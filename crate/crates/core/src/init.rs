use rand::Rng;

use crate::tensor::{Real, Tensor};

/// He/Kaiming uniform init for ReLU-like activations,
/// `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, i.e. variance `2/fan_in`.
pub(crate) fn kaiming_uniform<T: Real, R: Rng>(rng: &mut R, shape: &[usize], fan_in: usize) -> Tensor<T> {
    let bound = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| T::lit(rng.gen_range(-bound..bound))).collect();
    Tensor::new(shape.to_vec(), data).expect("init shape")
}
