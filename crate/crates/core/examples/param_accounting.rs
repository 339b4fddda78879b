//! Parameter budget of MCFM-Net against the seed-paired Plain-Net, from the
//! closed forms and from the instantiated parameter stores.
//!
//! cargo run --example param_accounting

use mcfm::backbone::{BackboneConfig, ModelBundle, ModelConfig};
use mcfm::mcfm::{mcfm_param_count, McfmConfig};

fn main() -> mcfm::Result<()> {
    let m = McfmConfig::default();
    let net = ModelBundle::<f32>::new(ModelConfig::mcfm_net(m.clone(), BackboneConfig::default()), 0)?;
    let plain = ModelBundle::<f32>::new(ModelConfig::plain_net(BackboneConfig::default()), 0)?;

    for (name, t) in net.params.iter().filter(|(n, _)| n.starts_with("mcfm") || n.starts_with("backbone.stem")) {
        println!("{name:<28} {:<16} {:>6}", format!("{:?}", t.shape()), t.numel());
    }
    let module = mcfm_param_count(&m);
    let stem = (m.fused_channels() - 1) * net.config.backbone.stage_widths[0] * 9;
    let overhead = net.total_param_count() - plain.total_param_count();
    println!();
    println!("Plain-Net              {:>8}", plain.total_param_count());
    println!("MCFM-Net               {:>8}", net.total_param_count());
    println!("module (closed form)   {module:>8}");
    println!("stem widening          {stem:>8}");
    println!("overhead               {overhead:>8} = {} ({:.3}%)", module + stem, 100.0 * overhead as f64 / plain.total_param_count() as f64);
    Ok(())
}
