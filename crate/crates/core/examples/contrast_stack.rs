//! Expands one synthetic image into its contrast branches and shows how the
//! measured contrast scales with the factor until clamping kicks in.
//!
//! cargo run --example contrast_stack -- [factor...]

use mcfm::contrast::{expand_stack, image_contrast, image_mean, DEFAULT_FACTORS};
use mcfm::data::synth_dataset;

fn main() -> mcfm::Result<()> {
    let factors: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric factor")).collect();
    let factors = if factors.is_empty() { DEFAULT_FACTORS.to_vec() } else { factors };

    let ds = synth_dataset(1, 64, 7)?;
    for sample in ds.samples() {
        let img = &sample.image;
        let base = image_contrast(img);
        println!("{} (mean {:.4}, contrast {:.4})", ds.class_names()[sample.label], image_mean(img), base);
        let stack = expand_stack(img, &factors)?;
        for (f, branch) in stack.factors().iter().zip(stack.branches()) {
            let clipped = branch.pixels().iter().filter(|&&p| p == 0.0 || p == 1.0).count();
            println!(
                "  factor {f:<4} contrast {:.4} (x{:.3})  clipped pixels {clipped}  identical to input: {}",
                image_contrast(branch),
                image_contrast(branch) / base,
                branch == img
            );
        }
    }
    Ok(())
}
