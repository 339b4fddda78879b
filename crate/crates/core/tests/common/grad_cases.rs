//! One finite-difference case per differentiable operation plus the full
//! model composition. Each case returns the worst relative error for a seed.

use mcfm::backbone::{BackboneConfig, ModelBundle, ModelConfig};
use mcfm::mcfm::{fuse, gate_forward, gccp, meta_extract, GateVars, McfmConfig, McfmParams};
use mcfm::tensor::{ParamStore, ParamVars, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check, random_tensor};

pub type Case = fn(u64) -> f64;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn conv(seed: u64) -> f64 {
    let mut r = rng(seed);
    let stride = r.gen_range(1..=2);
    let padding = r.gen_range(0..=1);
    // one input channel takes the direct path, two the im2col/GEMM path
    let cin = 1 + seed as usize % 2;
    let x = random_tensor(&mut r, &[2, cin, 5, 6], -1.0, 1.0);
    let w = random_tensor(&mut r, &[3, cin, 3, 3], -0.5, 0.5);
    let b = random_tensor(&mut r, &[3], -0.5, 0.5);
    check(&mut r, &[x, w, b], None, |g, v| g.conv2d(v[0], v[1], v[2], stride, padding))
}

fn linear(seed: u64) -> f64 {
    let mut r = rng(seed);
    let x = random_tensor(&mut r, &[3, 4], -1.0, 1.0);
    let w = random_tensor(&mut r, &[5, 4], -1.0, 1.0);
    let b = random_tensor(&mut r, &[5], -1.0, 1.0);
    check(&mut r, &[x, w, b], None, |g, v| g.linear(v[0], v[1], v[2]))
}

fn mish(seed: u64) -> f64 {
    let mut r = rng(seed);
    let x = random_tensor(&mut r, &[4, 5], -6.0, 6.0);
    check(&mut r, &[x], None, |g, v| g.mish(v[0]))
}

fn sigmoid(seed: u64) -> f64 {
    let mut r = rng(seed);
    let x = random_tensor(&mut r, &[4, 5], -6.0, 6.0);
    check(&mut r, &[x], None, |g, v| g.sigmoid(v[0]))
}

fn add_mul(seed: u64) -> f64 {
    let mut r = rng(seed);
    let a = random_tensor(&mut r, &[2, 3, 2], -2.0, 2.0);
    let b = random_tensor(&mut r, &[2, 3, 2], -2.0, 2.0);
    check(&mut r, &[a, b], None, |g, v| {
        let s = g.add(v[0], v[1])?;
        g.mul(s, v[0])
    })
}

fn reductions(seed: u64) -> f64 {
    let mut r = rng(seed);
    let x = random_tensor(&mut r, &[3, 2, 3, 2], -2.0, 2.0);
    let e1 = check(&mut r, std::slice::from_ref(&x), None, |g, v| g.mean_per_sample(v[0]));
    let e2 = check(&mut r, std::slice::from_ref(&x), None, |g, v| g.global_avg_pool(v[0]));
    let e3 = check(&mut r, &[x], None, |g, v| g.sum(v[0]));
    e1.max(e2).max(e3)
}

fn scale_concat(seed: u64) -> f64 {
    let mut r = rng(seed);
    let a = random_tensor(&mut r, &[2, 2, 3, 3], -1.0, 1.0);
    let b = random_tensor(&mut r, &[2, 1, 3, 3], -1.0, 1.0);
    let w = random_tensor(&mut r, &[2, 2], 0.1, 0.9);
    check(&mut r, &[a, b, w], None, |g, v| {
        let sa = g.scale_by_sample(v[0], v[2], 0)?;
        let sb = g.scale_by_sample(v[1], v[2], 1)?;
        g.concat(&[sa, sb])
    })
}

fn cross_entropy(seed: u64) -> f64 {
    let mut r = rng(seed);
    let x = random_tensor(&mut r, &[5, 4], -3.0, 3.0);
    let labels: Vec<usize> = (0..5).map(|_| r.gen_range(0..4)).collect();
    check(&mut r, &[x], None, |g, v| g.softmax_cross_entropy(v[0], &labels))
}

fn mcfm_stages(seed: u64) -> f64 {
    let mut r = rng(seed);
    let x = random_tensor(&mut r, &[2, 1, 5, 5], 0.0, 1.0);
    let w = random_tensor(&mut r, &[3, 1, 3, 3], -0.5, 0.5);
    let b = random_tensor(&mut r, &[3], -0.5, 0.5);
    let e1 = check(&mut r, &[x.clone(), w.clone(), b.clone()], None, |g, v| meta_extract(g, v[0], v[1], v[2]));
    let e2 = check(&mut r, &[x, w, b], None, |g, v| {
        let f = meta_extract(g, v[0], v[1], v[2])?;
        gccp(g, f)
    });
    let z = random_tensor(&mut r, &[3, 4], -1.0, 1.0);
    let gate: Vec<Tensor<f64>> = [&[5, 4][..], &[5], &[4, 5], &[4]]
        .iter()
        .map(|s| random_tensor(&mut r, s, -1.0, 1.0))
        .collect();
    let inputs = [vec![z], gate].concat();
    let e3 = check(&mut r, &inputs, None, |g, v| {
        let gv = GateVars { hidden_weight: v[1], hidden_bias: v[2], out_weight: v[3], out_bias: v[4] };
        gate_forward(g, v[0], &gv)
    });
    let f0 = random_tensor(&mut r, &[2, 2, 3, 3], -1.0, 1.0);
    let f1 = random_tensor(&mut r, &[2, 2, 3, 3], -1.0, 1.0);
    let att = random_tensor(&mut r, &[2, 2], 0.1, 0.9);
    let e4 = check(&mut r, &[f0, f1, att], None, |g, v| fuse(g, &[v[0], v[1]], v[2]));
    e1.max(e2).max(e3).max(e4)
}

fn mcfm_module(seed: u64) -> f64 {
    let mut r = rng(seed);
    let cfg = McfmConfig { factors: vec![1.0, 1.5, 2.0], features_per_branch: 2, kernel_size: 3, gate_hidden: 3 };
    let mut store = ParamStore::<f64>::new();
    let module = McfmParams::init(cfg, &mut store, &mut r).unwrap();
    let mut inputs: Vec<Tensor<f64>> = store.iter().map(|(_, t)| t.clone()).collect();
    let n_params = inputs.len();
    for _ in 0..3 {
        inputs.push(random_tensor(&mut r, &[2, 1, 4, 4], 0.0, 1.0));
    }
    check(&mut r, &inputs, None, |g, v| {
        let vars = ParamVars::from(v[..n_params].to_vec());
        let out = module.forward(g, &vars, &v[n_params..])?;
        let att = g.sum(out.attention)?;
        let fused = g.sum(out.fused)?;
        g.mul(att, fused)
    })
}

/// MCFM front end + residual backbone + cross-entropy, random coordinates
/// of every parameter tensor and of the inputs.
fn full_model(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mcfm = McfmConfig { factors: vec![1.0, 2.0], features_per_branch: 2, kernel_size: 3, gate_hidden: 3 };
    let backbone = BackboneConfig { stage_widths: vec![3, 4], blocks_per_stage: 1, num_classes: 3, ..Default::default() };
    let model = ModelBundle::<f64>::new(ModelConfig::mcfm_net(mcfm, backbone), seed).unwrap();
    let mut inputs: Vec<Tensor<f64>> = model.params.iter().map(|(_, t)| t.clone()).collect();
    // non-zero biases so every bias path carries signal
    for (t, (name, _)) in inputs.iter_mut().zip(model.params.iter()) {
        if name.ends_with("bias") {
            t.data_mut().iter_mut().for_each(|b| *b = r.gen_range(-0.2..0.2));
        }
    }
    let n_params = inputs.len();
    inputs.push(random_tensor(&mut r, &[2, 1, 8, 8], 0.0, 1.0));
    inputs.push(random_tensor(&mut r, &[2, 1, 8, 8], 0.0, 1.0));
    let labels = [r.gen_range(0..3), r.gen_range(0..3)];
    check(&mut r, &inputs, Some(6), |g, v| {
        let vars = ParamVars::from(v[..n_params].to_vec());
        let out = model.forward(g, &vars, &v[n_params..])?;
        g.softmax_cross_entropy(out.logits, &labels)
    })
}

pub const CASES: [(&str, Case); 11] = [
    ("conv2d", conv),
    ("linear", linear),
    ("mish", mish),
    ("sigmoid", sigmoid),
    ("add/mul", add_mul),
    ("sum/mean_per_sample/global_avg_pool", reductions),
    ("scale_by_sample/concat", scale_concat),
    ("softmax_cross_entropy", cross_entropy),
    ("meta_extract/gccp/gate/fuse", mcfm_stages),
    ("mcfm module", mcfm_module),
    ("mcfm + backbone + loss", full_model),
];

pub const SEEDS: u64 = 10;
