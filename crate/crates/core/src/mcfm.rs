//! Multi-contrast fusion front end.
//!
//! Each contrast branch of an image gets its own small convolutional
//! meta-extractor (conv + Mish) producing `F` feature maps. Global cross-channel
//! pooling (GCCP) collapses all `F` maps of a branch into one scalar per
//! sample, a two-layer gate turns the `K` scalars into `K` independent sigmoid
//! weights, every map of branch `i` is scaled by weight `i`, and the branches
//! are concatenated along the channel axis into a `K * F` channel tensor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contrast::{validate_factors, ContrastStack, DEFAULT_FACTORS};
use crate::error::{Error, Result};
use crate::init::kaiming_uniform;
use crate::tensor::{Graph, ParamId, ParamStore, ParamVars, Real, Tensor, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McfmConfig {
    /// One branch per factor, in this order.
    pub factors: Vec<f64>,
    /// Feature maps produced by each meta-extractor.
    pub features_per_branch: usize,
    /// Meta-extractor kernel size (odd; same padding).
    pub kernel_size: usize,
    /// Width of the gate's hidden layer.
    pub gate_hidden: usize,
}

impl Default for McfmConfig {
    fn default() -> Self {
        McfmConfig { factors: DEFAULT_FACTORS.to_vec(), features_per_branch: 3, kernel_size: 3, gate_hidden: 8 }
    }
}

impl McfmConfig {
    pub fn branches(&self) -> usize {
        self.factors.len()
    }

    pub fn fused_channels(&self) -> usize {
        self.branches() * self.features_per_branch
    }

    pub fn validate(&self) -> Result<()> {
        validate_factors(&self.factors)?;
        if self.features_per_branch == 0 || self.gate_hidden == 0 {
            return Err(Error::InvalidArgument("feature and gate widths must be positive".into()));
        }
        if self.kernel_size.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "meta-extractor kernel must be odd for same padding, got {}",
                self.kernel_size
            )));
        }
        Ok(())
    }
}

/// Exact learnable-parameter count of the module:
/// `K*F*(k^2 + 1)` for the meta-extractors plus `(K*h + h) + (h*K + K)` for the gate.
pub fn mcfm_param_count(config: &McfmConfig) -> usize {
    let (k, f, ks, h) = (config.branches(), config.features_per_branch, config.kernel_size, config.gate_hidden);
    k * f * (ks * ks + 1) + (k * h + h) + (h * k + k)
}

#[derive(Clone, Copy, Debug)]
pub struct MetaExtractor {
    pub weight: ParamId,
    pub bias: ParamId,
}

#[derive(Clone, Copy, Debug)]
pub struct GateParams {
    pub hidden_weight: ParamId,
    pub hidden_bias: ParamId,
    pub out_weight: ParamId,
    pub out_bias: ParamId,
}

/// Graph handles for the gate network.
#[derive(Clone, Copy, Debug)]
pub struct GateVars {
    pub hidden_weight: Var,
    pub hidden_bias: Var,
    pub out_weight: Var,
    pub out_bias: Var,
}

impl GateParams {
    pub fn vars(&self, vars: &ParamVars) -> GateVars {
        GateVars {
            hidden_weight: vars[self.hidden_weight],
            hidden_bias: vars[self.hidden_bias],
            out_weight: vars[self.out_weight],
            out_bias: vars[self.out_bias],
        }
    }
}

#[derive(Clone, Debug)]
pub struct McfmParams {
    pub config: McfmConfig,
    pub meta: Vec<MetaExtractor>,
    pub gate: GateParams,
}

/// Graph outputs of one forward pass.
#[derive(Clone, Debug)]
pub struct McfmOutput {
    /// `[N, K*F, H, W]`
    pub fused: Var,
    /// `[N, K]`, strictly inside (0, 1).
    pub attention: Var,
    /// Per-branch `[N, F, H, W]` features before weighting.
    pub features: Vec<Var>,
    /// `[N, K]` GCCP statistics.
    pub pooled: Var,
}

fn meta_names(i: usize) -> (String, String) {
    (format!("mcfm.meta.{i}.weight"), format!("mcfm.meta.{i}.bias"))
}

const GATE_NAMES: [&str; 4] = ["mcfm.gate.0.weight", "mcfm.gate.0.bias", "mcfm.gate.1.weight", "mcfm.gate.1.bias"];

impl McfmParams {
    /// Registers freshly initialised module parameters in `store`.
    pub fn init<T: Real, R: Rng>(config: McfmConfig, store: &mut ParamStore<T>, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let (k, f, ks, h) = (config.branches(), config.features_per_branch, config.kernel_size, config.gate_hidden);
        let mut meta = Vec::with_capacity(k);
        for i in 0..k {
            let (wn, bn) = meta_names(i);
            let weight = store.add(wn, kaiming_uniform(rng, &[f, 1, ks, ks], ks * ks))?;
            let bias = store.add(bn, Tensor::zeros([f]))?;
            meta.push(MetaExtractor { weight, bias });
        }
        let gate = GateParams {
            hidden_weight: store.add(GATE_NAMES[0], kaiming_uniform(rng, &[h, k], k))?,
            hidden_bias: store.add(GATE_NAMES[1], Tensor::zeros([h]))?,
            out_weight: store.add(GATE_NAMES[2], kaiming_uniform(rng, &[k, h], h))?,
            out_bias: store.add(GATE_NAMES[3], Tensor::zeros([k]))?,
        };
        Ok(McfmParams { config, meta, gate })
    }

    /// Binds to parameters already present in `store` under the standard names.
    pub fn from_store<T: Real>(config: McfmConfig, store: &ParamStore<T>) -> Result<Self> {
        config.validate()?;
        let find = |name: &str| {
            store.find(name).ok_or_else(|| Error::Checkpoint(format!("missing parameter {name:?}")))
        };
        let meta = (0..config.branches())
            .map(|i| {
                let (wn, bn) = meta_names(i);
                Ok(MetaExtractor { weight: find(&wn)?, bias: find(&bn)? })
            })
            .collect::<Result<_>>()?;
        let gate = GateParams {
            hidden_weight: find(GATE_NAMES[0])?,
            hidden_bias: find(GATE_NAMES[1])?,
            out_weight: find(GATE_NAMES[2])?,
            out_bias: find(GATE_NAMES[3])?,
        };
        Ok(McfmParams { config, meta, gate })
    }

    pub fn param_count(&self) -> usize {
        mcfm_param_count(&self.config)
    }

    /// Runs the module on `K` branch inputs of shape `[N, 1, H, W]`.
    pub fn forward<T: Real>(&self, g: &mut Graph<T>, vars: &ParamVars, branches: &[Var]) -> Result<McfmOutput> {
        if branches.len() != self.meta.len() {
            return Err(Error::shape(
                "mcfm_forward",
                format!("{} contrast branches for a module with K = {}", branches.len(), self.meta.len()),
            ));
        }
        let mut features = Vec::with_capacity(branches.len());
        let mut stats = Vec::with_capacity(branches.len());
        for (&b, m) in branches.iter().zip(&self.meta) {
            let f = meta_extract(g, b, vars[m.weight], vars[m.bias])?;
            stats.push(gccp(g, f)?);
            features.push(f);
        }
        let pooled = g.concat(&stats)?;
        let attention = gate_forward(g, pooled, &self.gate.vars(vars))?;
        let fused = fuse(g, &features, attention)?;
        Ok(McfmOutput { fused, attention, features, pooled })
    }
}

/// Same-padded, stride-1 convolution of a single-channel branch followed by Mish.
pub fn meta_extract<T: Real>(g: &mut Graph<T>, branch: Var, weight: Var, bias: Var) -> Result<Var> {
    let shape = g.value(branch).shape();
    if shape.len() != 4 || shape[1] != 1 {
        return Err(Error::shape("meta_extract", format!("expected a single-channel [N,1,H,W] branch, got {shape:?}")));
    }
    let k = g.value(weight).shape().get(2).copied().unwrap_or(1);
    let conv = g.conv2d(branch, weight, bias, 1, k / 2)?;
    g.mish(conv)
}

/// Global cross-channel pooling: the joint mean over all channels and positions
/// of each sample, `[N, F, H, W] -> [N]`.
pub fn gccp<T: Real>(g: &mut Graph<T>, features: Var) -> Result<Var> {
    if g.value(features).rank() < 2 {
        return Err(Error::shape("gccp", format!("expected [N, ...] features, got {:?}", g.value(features).shape())));
    }
    g.mean_per_sample(features)
}

/// `sigmoid(W2 * mish(W1 * z + b1) + b2)`, `[N, K] -> [N, K]`.
pub fn gate_forward<T: Real>(g: &mut Graph<T>, pooled: Var, gate: &GateVars) -> Result<Var> {
    let hidden = g.linear(pooled, gate.hidden_weight, gate.hidden_bias)?;
    let hidden = g.mish(hidden)?;
    let logits = g.linear(hidden, gate.out_weight, gate.out_bias)?;
    g.sigmoid(logits)
}

/// Scales every map of branch `i` by `weights[:, i]` and concatenates the
/// branches along the channel axis.
pub fn fuse<T: Real>(g: &mut Graph<T>, features: &[Var], weights: Var) -> Result<Var> {
    let ws = g.value(weights).shape();
    if ws.len() != 2 || ws[1] != features.len() {
        return Err(Error::shape("fuse", format!("{} branches but attention weights of shape {ws:?}", features.len())));
    }
    let scaled = features
        .iter()
        .enumerate()
        .map(|(i, &f)| g.scale_by_sample(f, weights, i))
        .collect::<Result<Vec<_>>>()?;
    g.concat(&scaled)
}

/// Packs a batch of stacks into `K` branch tensors of shape `[N, 1, H, W]`.
pub fn branch_tensors<T: Real>(stacks: &[ContrastStack]) -> Result<Vec<Tensor<T>>> {
    let first = stacks.first().ok_or_else(|| Error::InvalidArgument("empty batch".into()))?;
    let (k, h, w) = (first.len(), first.branches()[0].height(), first.branches()[0].width());
    let mut out = vec![Vec::with_capacity(stacks.len() * h * w); k];
    for s in stacks {
        if s.len() != k {
            return Err(Error::shape("branch_tensors", format!("stack with {} branches in a batch of {k}", s.len())));
        }
        for (dst, img) in out.iter_mut().zip(s.branches()) {
            if (img.height(), img.width()) != (h, w) {
                return Err(Error::shape(
                    "branch_tensors",
                    format!("image {}x{} in a batch of {h}x{w}", img.height(), img.width()),
                ));
            }
            dst.extend(img.pixels().iter().map(|&p| T::lit(p)));
        }
    }
    out.into_iter().map(|d| Tensor::new([stacks.len(), 1, h, w], d)).collect()
}

/// Evaluates the module on a batch of stacks without recording gradients.
/// Returns the fused tensor and the attention weights.
pub fn mcfm_forward<T: Real>(
    stacks: &[ContrastStack],
    params: &McfmParams,
    store: &ParamStore<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let mut g = Graph::new();
    let vars = store.attach(&mut g, false);
    let inputs: Vec<Var> = branch_tensors(stacks)?.into_iter().map(|t| g.constant(t)).collect();
    let out = params.forward(&mut g, &vars, &inputs)?;
    Ok((g.value(out.fused).clone(), g.value(out.attention).clone()))
}
