//! Multi-contrast fusion module (MCFM) for small grayscale image
//! classifiers, with the reverse-mode autodiff, data I/O, training and
//! evaluation machinery needed to train and compare models from scratch.

pub mod backbone;
pub mod checkpoint;
pub mod cli;
pub mod contrast;
pub mod data;
pub mod error;
mod init;
pub mod mcfm;
pub mod tensor;
pub mod train;

pub use backbone::{BackboneConfig, ModelBundle, ModelConfig, Prediction};
pub use checkpoint::Checkpoint;
pub use contrast::{adjust_contrast, expand_stack, image_contrast, image_mean, ContrastStack, GrayImage};
pub use error::{Error, Result};
pub use mcfm::{McfmConfig, McfmParams};
pub use tensor::{Graph, Real, Tensor, Var};
