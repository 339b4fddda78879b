//! Mini-batch training with Adam and cross-entropy, evaluation, ablation.

mod ablation;
pub mod metrics;
mod report;

pub use ablation::{run_ablation, AblationModel, AblationReport, AblationRow, AblationRun, Spread};
pub use report::{argmax, history_csv, pr_csv, roc_csv, ClassReport, EvalReport};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backbone::ModelBundle;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::tensor::{Adam, AdamConfig, Graph, Real, Tensor, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub optimizer: String,
    pub loss: String,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            epochs: 20,
            lr: 0.001,
            optimizer: "adam".into(),
            loss: "cross-entropy".into(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidArgument("batch size and epochs must be >= 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be finite and >= 0, got {}", self.lr)));
        }
        if self.optimizer != "adam" {
            return Err(Error::InvalidArgument(format!("unsupported optimizer {:?} (only \"adam\")", self.optimizer)));
        }
        if self.loss != "cross-entropy" {
            return Err(Error::InvalidArgument(format!("unsupported loss {:?} (only \"cross-entropy\")", self.loss)));
        }
        Ok(())
    }
}

/// Sample-weighted mean loss and accuracy of the batches seen in one epoch
/// (measured on each batch before its update).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

fn batch_inputs<T: Real>(inputs: &[Tensor<T>], rows: &[usize]) -> Result<Vec<Tensor<T>>> {
    inputs.iter().map(|t| t.gather_rows(rows)).collect()
}

fn check_classes<T: Real>(model: &ModelBundle<T>, ds: &Dataset) -> Result<()> {
    let expected = model.config.backbone.num_classes;
    if ds.num_classes() != expected {
        return Err(Error::InvalidArgument(format!(
            "model has {expected} classes but the dataset has {}",
            ds.num_classes()
        )));
    }
    Ok(())
}

/// Trains `model` in place and returns one record per epoch.
pub fn train<T: Real>(model: &mut ModelBundle<T>, ds: &Dataset, cfg: &TrainConfig) -> Result<Vec<EpochRecord>> {
    train_with(model, ds, cfg, &mut |_| {})
}

/// As [`train`], calling `on_epoch` after every epoch.
pub fn train_with<T: Real>(
    model: &mut ModelBundle<T>,
    ds: &Dataset,
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<Vec<EpochRecord>> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    check_classes(model, ds)?;
    let inputs = model.prepare_inputs(&ds.images())?;
    let labels = ds.labels();
    let mut adam = Adam::new(AdamConfig { lr: cfg.lr, ..AdamConfig::default() }, &model.params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for rows in order.chunks(cfg.batch_size) {
            let xs = batch_inputs(&inputs, rows)?;
            let ys: Vec<usize> = rows.iter().map(|&i| labels[i]).collect();
            let mut g = Graph::new();
            let vars = model.params.attach(&mut g, true);
            let step = (|| {
                let xs: Vec<Var> = xs.into_iter().map(|t| g.constant(t)).collect();
                let out = model.forward(&mut g, &vars, &xs)?;
                let loss = g.softmax_cross_entropy(out.logits, &ys)?;
                g.backward(loss)?;
                Ok::<_, Error>((out.logits, loss))
            })();
            let (logits, loss) = match step {
                Ok(v) => v,
                Err(Error::NonFinite { .. }) => return Err(Error::Diverged { epoch, loss: f64::NAN }),
                Err(e) => return Err(e),
            };
            let batch_loss = g.value(loss).item().expect("scalar loss").as_f64();
            loss_sum += batch_loss * rows.len() as f64;
            correct += count_correct(g.value(logits), &ys);
            let grads = model.params.gradients(&g, &vars);
            adam.step(&mut model.params, &grads)?;
        }
        let record = EpochRecord { epoch, loss: loss_sum / ds.len() as f64, accuracy: correct as f64 / ds.len() as f64 };
        if !record.loss.is_finite() || !model.params.iter().all(|(_, t)| t.is_finite()) {
            return Err(Error::Diverged { epoch, loss: record.loss });
        }
        on_epoch(&record);
        history.push(record);
    }
    Ok(history)
}

fn count_correct<T: Real>(logits: &Tensor<T>, labels: &[usize]) -> usize {
    let c = logits.shape()[1];
    logits
        .data()
        .chunks(c)
        .zip(labels)
        .filter(|(row, &y)| argmax(&row.iter().map(|v| v.as_f64()).collect::<Vec<_>>()) == y)
        .count()
}

/// Batched inference: per-sample softmax probabilities and, for MCFM models,
/// per-sample attention weights.
pub struct Scores {
    pub probabilities: Vec<Vec<f64>>,
    pub attention: Option<Vec<Vec<f64>>>,
}

pub const EVAL_BATCH: usize = 64;

pub fn predict_scores<T: Real>(model: &ModelBundle<T>, ds: &Dataset) -> Result<Scores> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("evaluation set is empty".into()));
    }
    check_classes(model, ds)?;
    let inputs = model.prepare_inputs(&ds.images())?;
    let mut probabilities = Vec::with_capacity(ds.len());
    let mut attention: Option<Vec<Vec<f64>>> = model.mcfm.as_ref().map(|_| Vec::with_capacity(ds.len()));
    let all: Vec<usize> = (0..ds.len()).collect();
    for rows in all.chunks(EVAL_BATCH) {
        let p = model.predict(&batch_inputs(&inputs, rows)?)?;
        let c = p.logits.shape()[1];
        for row in p.logits.to_f64_vec().chunks(c) {
            probabilities.push(softmax(row));
        }
        if let (Some(acc), Some(a)) = (attention.as_mut(), p.attention) {
            let k = a.shape()[1];
            acc.extend(a.to_f64_vec().chunks(k).map(<[f64]>::to_vec));
        }
    }
    Ok(Scores { probabilities, attention })
}

pub fn softmax(row: &[f64]) -> Vec<f64> {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// Metrics of `model` on `ds`, scoring each class by its softmax probability.
pub fn evaluate<T: Real>(model: &ModelBundle<T>, ds: &Dataset) -> Result<EvalReport> {
    let scores = predict_scores(model, ds)?;
    EvalReport::from_scores(&scores.probabilities, &ds.labels(), ds.class_names())
}
