use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{evaluate, train, EpochRecord, EvalReport, TrainConfig};
use crate::backbone::{ModelBundle, ModelConfig};
use crate::data::{split, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::tensor::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationModel {
    pub name: String,
    pub config: ModelConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRun {
    pub model: String,
    pub seed: u64,
    pub history: Vec<EpochRecord>,
    pub report: EvalReport,
}

/// Mean and range of one metric over seeds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Self {
        Spread {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "PascalCase")]
pub struct AblationRow {
    pub model: String,
    #[serde(rename = "ACC")]
    pub acc: Spread,
    pub precision: Spread,
    pub recall: Spread,
    #[serde(rename = "F1")]
    pub f1: Spread,
    pub parameter: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub seeds: Vec<u64>,
    pub train_fraction: f64,
    pub train: TrainConfig,
    pub rows: Vec<AblationRow>,
    pub runs: Vec<AblationRun>,
}

/// Trains and evaluates every model under every seed. For a given seed all
/// models see the same split and the same shuffling; the seed also drives
/// weight initialization.
pub fn run_ablation<T: Real>(
    ds: &Dataset,
    models: &[AblationModel],
    train_cfg: &TrainConfig,
    seeds: &[u64],
    train_fraction: f64,
    log: &mut dyn FnMut(&str),
) -> Result<AblationReport> {
    if models.len() < 2 {
        return Err(Error::InvalidArgument("an ablation needs at least two model configs".into()));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("an ablation needs at least one seed".into()));
    }
    let mut runs = Vec::new();
    let mut params = vec![0; models.len()];
    for &seed in seeds {
        let (train_set, test_set) = split(ds, &SplitSpec::new(train_fraction, seed))?;
        for (i, m) in models.iter().enumerate() {
            let mut bundle = ModelBundle::<T>::new(m.config.clone(), seed)?;
            params[i] = bundle.total_param_count();
            let history = train(&mut bundle, &train_set, &TrainConfig { seed, ..train_cfg.clone() })?;
            let report = evaluate(&bundle, &test_set)?;
            log(&format!("seed {seed} {:<10} test accuracy {:.4}", m.name, report.macro_avg.accuracy));
            runs.push(AblationRun { model: m.name.clone(), seed, history, report });
        }
    }
    let rows = models
        .iter()
        .zip(&params)
        .map(|(m, &parameter)| {
            let mine: Vec<&EvalReport> = runs.iter().filter(|r| r.model == m.name).map(|r| &r.report).collect();
            let spread = |f: fn(&EvalReport) -> f64| Spread::of(&mine.iter().map(|r| f(r)).collect::<Vec<_>>());
            AblationRow {
                model: m.name.clone(),
                acc: spread(|r| r.macro_avg.accuracy),
                precision: spread(|r| r.macro_avg.precision),
                recall: spread(|r| r.macro_avg.recall),
                f1: spread(|r| r.macro_avg.f1),
                parameter,
            }
        })
        .collect();
    Ok(AblationReport { seeds: seeds.to_vec(), train_fraction, train: train_cfg.clone(), rows, runs })
}

impl AblationReport {
    /// Aligned text table: `mean ±half-range` per metric.
    pub fn table(&self) -> String {
        let cell = |s: &Spread| format!("{:.4} ±{:.4}", s.mean, (s.max - s.min) / 2.0);
        let mut out = format!("{:<12} {:>15} {:>15} {:>15} {:>15} {:>10}\n", "Model", "ACC", "Precision", "Recall", "F1", "Parameter");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<12} {:>15} {:>15} {:>15} {:>15} {:>10}",
                r.model,
                cell(&r.acc),
                cell(&r.precision),
                cell(&r.recall),
                cell(&r.f1),
                r.parameter
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}
