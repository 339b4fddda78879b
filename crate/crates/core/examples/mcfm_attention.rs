//! Runs a freshly initialised fusion module on one image per synthetic class
//! and prints the per-branch pooled statistics and attention weights.
//!
//! cargo run --example mcfm_attention -- [seed]

use mcfm::contrast::expand_stack;
use mcfm::data::synth_dataset;
use mcfm::mcfm::{branch_tensors, McfmConfig, McfmParams};
use mcfm::tensor::{Graph, ParamStore, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mcfm::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("integer seed"));
    let cfg = McfmConfig::default();
    let mut store = ParamStore::<f64>::new();
    let module = McfmParams::init(cfg.clone(), &mut store, &mut ChaCha8Rng::seed_from_u64(seed))?;

    let ds = synth_dataset(1, 64, 7)?;
    let stacks = ds.samples().iter().map(|s| expand_stack(&s.image, &cfg.factors)).collect::<mcfm::Result<Vec<_>>>()?;
    let mut g = Graph::new();
    let vars = store.attach(&mut g, false);
    let inputs: Vec<Var> = branch_tensors::<f64>(&stacks)?.into_iter().map(|t| g.constant(t)).collect();
    let out = module.forward(&mut g, &vars, &inputs)?;

    println!("factors {:?}, fused {:?}", cfg.factors, g.value(out.fused).shape());
    let (pooled, att) = (g.value(out.pooled).data(), g.value(out.attention).data());
    let k = cfg.branches();
    for (i, name) in ds.class_names().iter().enumerate() {
        println!("{name}");
        println!("  gccp      {:?}", pooled[i * k..(i + 1) * k].iter().map(|v| format!("{v:+.4}")).collect::<Vec<_>>());
        println!("  attention {:?}", att[i * k..(i + 1) * k].iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>());
    }
    Ok(())
}
