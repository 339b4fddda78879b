//! Generates the synthetic four-class dataset and prints per-class contrast
//! statistics, optionally writing it to disk as PGM folders.
//!
//! cargo run --example synth_dataset -- [per_class] [size] [seed] [out_dir]

use mcfm::contrast::{image_contrast, image_mean};
use mcfm::data::{synth_dataset, write_folder, SplitSpec};

fn main() -> mcfm::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: u64| args.get(i).map_or(default, |a| a.parse().expect("integer argument"));
    let (per_class, size, seed) = (arg(0, 300) as usize, arg(1, 64) as usize, arg(2, 7));

    let ds = synth_dataset(per_class, size, seed)?;
    println!("{} samples of {size}x{size}, {:?} per class", ds.len(), ds.class_counts());
    println!("{:<18} {:>10} {:>10}", "class", "mean", "contrast");
    for (c, name) in ds.class_names().iter().enumerate() {
        let imgs: Vec<_> = ds.samples().iter().filter(|s| s.label == c).map(|s| &s.image).collect();
        let n = imgs.len() as f64;
        let mean = imgs.iter().map(|i| image_mean(i)).sum::<f64>() / n;
        let contrast = imgs.iter().map(|i| image_contrast(i)).sum::<f64>() / n;
        println!("{name:<18} {mean:>10.4} {contrast:>10.4}");
    }
    if let Some(out) = args.get(3) {
        let manifest = write_folder(&ds, out, &SplitSpec::new(0.7, seed))?;
        println!("wrote {} images and manifest.json to {out}", manifest.samples.len());
    }
    Ok(())
}
