//! Trains a narrow MCFM-Net on a small synthetic set, evaluates it on the
//! held-out split, and checks that a saved checkpoint predicts identically.
//!
//! cargo run --release --example train_small -- [per_class] [epochs]

use mcfm::backbone::{BackboneConfig, ModelBundle, ModelConfig};
use mcfm::checkpoint::Checkpoint;
use mcfm::data::{split, synth_dataset, SplitSpec};
use mcfm::mcfm::McfmConfig;
use mcfm::train::{evaluate, train_with, TrainConfig};

fn main() -> mcfm::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let per_class = args.first().copied().unwrap_or(60);
    let epochs = args.get(1).copied().unwrap_or(10);

    let ds = synth_dataset(per_class, 32, 7)?;
    let (train_set, test_set) = split(&ds, &SplitSpec::new(0.7, 0))?;
    let backbone = BackboneConfig { stage_widths: vec![8, 16], blocks_per_stage: 1, ..Default::default() };
    let mut model = ModelBundle::<f32>::new(ModelConfig::mcfm_net(McfmConfig::default(), backbone), 0)?;
    println!("{} parameters, {} train / {} test", model.total_param_count(), train_set.len(), test_set.len());

    let cfg = TrainConfig { epochs, batch_size: 32, lr: 0.003, ..TrainConfig::default() };
    train_with(&mut model, &train_set, &cfg, &mut |r| {
        println!("epoch {:>3}  loss {:.4}  accuracy {:.3}", r.epoch, r.loss, r.accuracy)
    })?;
    let report = evaluate(&model, &test_set)?;
    print!("{}", report.summary());

    let bytes = model.to_checkpoint()?.encode()?;
    let restored = ModelBundle::<f32>::from_checkpoint(&Checkpoint::decode(&bytes)?)?;
    let same = evaluate(&restored, &test_set)? == report;
    println!("checkpoint {} bytes, restored model reproduces the report: {same}", bytes.len());
    Ok(())
}
