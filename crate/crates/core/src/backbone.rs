//! Small residual classifier and the assembled MCFM-Net / Plain-Net models.
//!
//! Layout: stem conv (stride 2) + Mish, then `stage_widths.len()` stages of
//! `blocks_per_stage` residual blocks (the first block of every stage after
//! the first halves the resolution through a strided 3x3 projection shortcut),
//! global average pooling and a linear head.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::contrast::{expand_stack, GrayImage};
use crate::error::{Error, Result};
use crate::init::kaiming_uniform;
use crate::mcfm::{branch_tensors, McfmConfig, McfmParams};
use crate::tensor::{Graph, ParamId, ParamStore, ParamVars, Real, Tensor, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackboneConfig {
    pub in_channels: usize,
    pub stage_widths: Vec<usize>,
    pub blocks_per_stage: usize,
    pub num_classes: usize,
    pub stem_stride: usize,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        BackboneConfig { in_channels: 12, stage_widths: vec![16, 32, 64], blocks_per_stage: 2, num_classes: 4, stem_stride: 2 }
    }
}

impl BackboneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 {
            return Err(Error::InvalidArgument("backbone needs at least one input channel".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 classes, got {}", self.num_classes)));
        }
        if self.stage_widths.is_empty() || self.stage_widths.contains(&0) {
            return Err(Error::InvalidArgument(format!("stage widths must be positive, got {:?}", self.stage_widths)));
        }
        if self.blocks_per_stage == 0 || self.stem_stride == 0 {
            return Err(Error::InvalidArgument("blocks per stage and stem stride must be >= 1".into()));
        }
        Ok(())
    }

    /// Closed-form parameter count.
    pub fn param_count(&self) -> usize {
        let conv = |cin: usize, cout: usize, k: usize| cout * cin * k * k + cout;
        let w = &self.stage_widths;
        let mut total = conv(self.in_channels, w[0], 3);
        let mut prev = w[0];
        for &width in w {
            for b in 0..self.blocks_per_stage {
                let cin = if b == 0 { prev } else { width };
                total += conv(cin, width, 3) + conv(width, width, 3);
                if b == 0 && cin != width {
                    total += conv(cin, width, 3);
                }
            }
            prev = width;
        }
        total + conv(prev, self.num_classes, 1)
    }
}

/// Architecture of a full classifier: optional MCFM front end plus backbone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mcfm: Option<McfmConfig>,
    pub backbone: BackboneConfig,
}

impl ModelConfig {
    /// MCFM-Net: the stem is widened to the `K * F` fused channels.
    pub fn mcfm_net(mcfm: McfmConfig, backbone: BackboneConfig) -> Self {
        let backbone = BackboneConfig { in_channels: mcfm.fused_channels(), ..backbone };
        ModelConfig { mcfm: Some(mcfm), backbone }
    }

    /// Plain-Net: the same backbone reading the raw image.
    pub fn plain_net(backbone: BackboneConfig) -> Self {
        ModelConfig { mcfm: None, backbone: BackboneConfig { in_channels: 1, ..backbone } }
    }

    pub fn validate(&self) -> Result<()> {
        self.backbone.validate()?;
        let expected = match &self.mcfm {
            Some(m) => {
                m.validate()?;
                m.fused_channels()
            }
            None => 1,
        };
        if self.backbone.in_channels != expected {
            return Err(Error::InvalidArgument(format!(
                "backbone expects {} input channels but the front end provides {expected}",
                self.backbone.in_channels
            )));
        }
        Ok(())
    }

    /// Number of `[N, 1, H, W]` input tensors the model consumes.
    pub fn input_branches(&self) -> usize {
        self.mcfm.as_ref().map_or(1, McfmConfig::branches)
    }

    pub fn total_param_count(&self) -> usize {
        self.backbone.param_count() + self.mcfm.as_ref().map_or(0, crate::mcfm::mcfm_param_count)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConvLayer {
    pub weight: ParamId,
    pub bias: ParamId,
    pub stride: usize,
    pub padding: usize,
}

impl ConvLayer {
    #[allow(clippy::too_many_arguments)]
    fn init<T: Real, R: Rng>(
        store: &mut ParamStore<T>,
        name: &str,
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let weight = store.add(format!("{name}.weight"), kaiming_uniform(rng, &[cout, cin, k, k], cin * k * k))?;
        let bias = store.add(format!("{name}.bias"), Tensor::zeros([cout]))?;
        Ok(ConvLayer { weight, bias, stride, padding: k / 2 })
    }

    pub fn forward<T: Real>(&self, g: &mut Graph<T>, vars: &ParamVars, x: Var) -> Result<Var> {
        g.conv2d(x, vars[self.weight], vars[self.bias], self.stride, self.padding)
    }
}

/// `mish(conv2(mish(conv1(x))) + shortcut(x))`.
#[derive(Clone, Copy, Debug)]
pub struct ResidualBlock {
    pub conv1: ConvLayer,
    pub conv2: ConvLayer,
    /// Projection used when the block changes width or resolution.
    pub shortcut: Option<ConvLayer>,
}

impl ResidualBlock {
    pub fn forward<T: Real>(&self, g: &mut Graph<T>, vars: &ParamVars, x: Var) -> Result<Var> {
        let h = self.conv1.forward(g, vars, x)?;
        let h = g.mish(h)?;
        let h = self.conv2.forward(g, vars, h)?;
        let skip = match &self.shortcut {
            Some(p) => p.forward(g, vars, x)?,
            None => x,
        };
        if g.value(skip).shape() != g.value(h).shape() {
            return Err(Error::shape(
                "residual_block",
                format!("branch {:?} vs shortcut {:?} without projection", g.value(h).shape(), g.value(skip).shape()),
            ));
        }
        let sum = g.add(h, skip)?;
        g.mish(sum)
    }
}

#[derive(Clone, Debug)]
pub struct Backbone {
    pub stem: ConvLayer,
    pub blocks: Vec<ResidualBlock>,
    pub head_weight: ParamId,
    pub head_bias: ParamId,
}

impl Backbone {
    fn init<T: Real>(config: &BackboneConfig, store: &mut ParamStore<T>, seed: u64) -> Result<Self> {
        let mut stem_rng = ChaCha8Rng::seed_from_u64(seed);
        stem_rng.set_stream(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = &config.stage_widths;
        let stem = ConvLayer::init(store, "backbone.stem", config.in_channels, w[0], 3, config.stem_stride, &mut stem_rng)?;
        let mut blocks = Vec::new();
        let mut prev = w[0];
        for (s, &width) in w.iter().enumerate() {
            for b in 0..config.blocks_per_stage {
                let name = format!("backbone.stage{s}.block{b}");
                let (cin, stride) = if b == 0 && s > 0 { (prev, 2) } else if b == 0 { (prev, 1) } else { (width, 1) };
                let conv1 = ConvLayer::init(store, &format!("{name}.conv1"), cin, width, 3, stride, &mut rng)?;
                let conv2 = ConvLayer::init(store, &format!("{name}.conv2"), width, width, 3, 1, &mut rng)?;
                let shortcut = if cin != width || stride != 1 {
                    Some(ConvLayer::init(store, &format!("{name}.shortcut"), cin, width, 3, stride, &mut rng)?)
                } else {
                    None
                };
                blocks.push(ResidualBlock { conv1, conv2, shortcut });
            }
            prev = width;
        }
        let head_weight = store.add("head.weight", kaiming_uniform(&mut rng, &[config.num_classes, prev], prev))?;
        let head_bias = store.add("head.bias", Tensor::zeros([config.num_classes]))?;
        Ok(Backbone { stem, blocks, head_weight, head_bias })
    }

    /// `[N, Cin, H, W] -> [N, num_classes]` logits.
    pub fn forward<T: Real>(&self, g: &mut Graph<T>, vars: &ParamVars, x: Var) -> Result<Var> {
        let h = self.stem.forward(g, vars, x)?;
        let mut h = g.mish(h)?;
        for block in &self.blocks {
            h = block.forward(g, vars, h)?;
        }
        let pooled = g.global_avg_pool(h)?;
        g.linear(pooled, vars[self.head_weight], vars[self.head_bias])
    }
}

#[derive(Clone, Debug)]
pub struct ModelOutput {
    pub logits: Var,
    pub attention: Option<Var>,
}

/// Logits (and MCFM attention weights, when present) for a batch.
#[derive(Clone, Debug)]
pub struct Prediction<T> {
    pub logits: Tensor<T>,
    pub attention: Option<Tensor<T>>,
}

/// Parameters plus architecture of one classifier.
#[derive(Clone, Debug)]
pub struct ModelBundle<T> {
    pub config: ModelConfig,
    pub params: ParamStore<T>,
    pub mcfm: Option<McfmParams>,
    pub backbone: Backbone,
}

pub const CONFIG_RECORD: &str = "config";

impl<T: Real> ModelBundle<T> {
    /// Fresh model; `seed` fixes every initial weight.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        let mcfm = match &config.mcfm {
            Some(m) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(2);
                Some(McfmParams::init(m.clone(), &mut params, &mut rng)?)
            }
            None => None,
        };
        let backbone = Backbone::init(&config.backbone, &mut params, seed)?;
        Ok(ModelBundle { config, params, mcfm, backbone })
    }

    pub fn total_param_count(&self) -> usize {
        self.params.count()
    }

    pub fn mcfm_param_count(&self) -> usize {
        self.mcfm.as_ref().map_or(0, McfmParams::param_count)
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let mut c = Checkpoint::from_params(&self.params);
        c.push_text(CONFIG_RECORD, &serde_json::to_string(&self.config)?);
        Ok(c)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let text = ckpt
            .text(CONFIG_RECORD)
            .ok_or_else(|| Error::Checkpoint("missing config record".into()))?;
        let config: ModelConfig = serde_json::from_str(text)?;
        let mut model = Self::new(config, 0)?;
        model.params.load_from(&ckpt.params()?)?;
        Ok(model)
    }

    /// Records the full forward pass on `g`. `inputs` holds one `[N, 1, H, W]`
    /// tensor per contrast branch (a single raw-image tensor for Plain-Net).
    pub fn forward(&self, g: &mut Graph<T>, vars: &ParamVars, inputs: &[Var]) -> Result<ModelOutput> {
        match &self.mcfm {
            Some(m) => {
                let out = m.forward(g, vars, inputs)?;
                let logits = self.backbone.forward(g, vars, out.fused)?;
                Ok(ModelOutput { logits, attention: Some(out.attention) })
            }
            None => {
                let [x] = inputs else {
                    return Err(Error::shape("model_forward", format!("Plain-Net takes 1 input, got {}", inputs.len())));
                };
                Ok(ModelOutput { logits: self.backbone.forward(g, vars, *x)?, attention: None })
            }
        }
    }

    /// Converts images into the model's input tensors (contrast branches for
    /// MCFM-Net, the raw image for Plain-Net).
    pub fn prepare_inputs(&self, images: &[GrayImage]) -> Result<Vec<Tensor<T>>> {
        prepare_inputs(&self.config, images)
    }

    /// Inference on prepared inputs.
    pub fn predict(&self, inputs: &[Tensor<T>]) -> Result<Prediction<T>> {
        let mut g = Graph::new();
        let vars = self.params.attach(&mut g, false);
        let xs: Vec<Var> = inputs.iter().map(|t| g.constant(t.clone())).collect();
        let out = self.forward(&mut g, &vars, &xs)?;
        Ok(Prediction {
            logits: g.value(out.logits).clone(),
            attention: out.attention.map(|a| g.value(a).clone()),
        })
    }

    /// Logits for a batch of images.
    pub fn model_forward(&self, images: &[GrayImage]) -> Result<Tensor<T>> {
        Ok(self.predict(&self.prepare_inputs(images)?)?.logits)
    }
}

pub fn prepare_inputs<T: Real>(config: &ModelConfig, images: &[GrayImage]) -> Result<Vec<Tensor<T>>> {
    if images.is_empty() {
        return Err(Error::InvalidArgument("empty image batch".into()));
    }
    match &config.mcfm {
        Some(m) => {
            let stacks = images.iter().map(|img| expand_stack(img, &m.factors)).collect::<Result<Vec<_>>>()?;
            branch_tensors(&stacks)
        }
        None => {
            let (h, w) = (images[0].height(), images[0].width());
            let mut data = Vec::with_capacity(images.len() * h * w);
            for img in images {
                if (img.height(), img.width()) != (h, w) {
                    return Err(Error::shape("prepare_inputs", "images of different sizes in one batch"));
                }
                data.extend(img.pixels().iter().map(|&p| T::lit(p)));
            }
            Ok(vec![Tensor::new([images.len(), 1, h, w], data)?])
        }
    }
}
