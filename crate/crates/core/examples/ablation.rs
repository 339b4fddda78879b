//! MCFM-Net vs Plain-Net on the synthetic dataset, seed-paired.
//!
//! cargo run --release --example ablation -- [per_class] [size] [epochs] [seeds...]

use std::time::Instant;

use mcfm::backbone::{BackboneConfig, ModelConfig};
use mcfm::data::synth_dataset;
use mcfm::mcfm::McfmConfig;
use mcfm::train::{run_ablation, AblationModel, TrainConfig};

fn main() -> mcfm::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let per_class = args.first().copied().unwrap_or(300) as usize;
    let size = args.get(1).copied().unwrap_or(64) as usize;
    let epochs = args.get(2).copied().unwrap_or(20) as usize;
    let seeds = if args.len() > 3 { args[3..].to_vec() } else { vec![0, 1, 2, 3, 4] };

    let ds = synth_dataset(per_class, size, 7)?;
    let models = [
        AblationModel { name: "MCFM-Net".into(), config: ModelConfig::mcfm_net(McfmConfig::default(), BackboneConfig::default()) },
        AblationModel { name: "Plain-Net".into(), config: ModelConfig::plain_net(BackboneConfig::default()) },
    ];
    let cfg = TrainConfig { epochs, ..TrainConfig::default() };
    let start = Instant::now();
    let report = run_ablation::<f32>(&ds, &models, &cfg, &seeds, 0.7, &mut |line| {
        println!("[{:>6.1}s] {line}", start.elapsed().as_secs_f64())
    })?;
    println!("\n{}", report.table());
    Ok(())
}
