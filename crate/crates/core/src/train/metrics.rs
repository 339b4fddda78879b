//! Classification metrics: confusion matrix, one-vs-rest precision / recall /
//! F1, ROC with AUC and precision-recall with average precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `c[t][p]` counts samples with true class `t` predicted as `p`.
pub fn confusion_matrix(pred: &[usize], truth: &[usize], classes: usize) -> Result<Vec<Vec<usize>>> {
    if pred.len() != truth.len() {
        return Err(Error::InvalidArgument(format!("{} predictions for {} labels", pred.len(), truth.len())));
    }
    let mut c = vec![vec![0; classes]; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= classes || t >= classes {
            return Err(Error::InvalidArgument(format!("label {} outside {classes} classes", p.max(t))));
        }
        c[t][p] += 1;
    }
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Set when some ratio had a zero denominator and was reported as 0.
    pub zero_division: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Per-class one-vs-rest metrics and their unweighted (macro) means.
pub fn precision_recall_f1(confusion: &[Vec<usize>]) -> Result<(Vec<ClassMetrics>, MacroMetrics)> {
    let c = confusion.len();
    if c == 0 || confusion.iter().any(|r| r.len() != c) {
        return Err(Error::InvalidArgument("confusion matrix must be square and non-empty".into()));
    }
    let total: usize = confusion.iter().flatten().sum();
    let per_class: Vec<ClassMetrics> = (0..c)
        .map(|k| {
            let tp = confusion[k][k];
            let predicted: usize = confusion.iter().map(|r| r[k]).sum();
            let support: usize = confusion[k].iter().sum();
            let (precision, zp) = ratio(tp, predicted);
            let (recall, zr) = ratio(tp, support);
            ClassMetrics { precision, recall, f1: f1_score(precision, recall), support, zero_division: zp || zr }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / c as f64;
    let trace: usize = (0..c).map(|k| confusion[k][k]).sum();
    let macro_avg = MacroMetrics {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
        accuracy: ratio(trace, total).0,
    };
    Ok((per_class, macro_avg))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// `None` for the initial point above every score.
    pub threshold: Option<f64>,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    /// Absent when the class has no positives or no negatives.
    pub auc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    /// Absent when the class has no positives.
    pub ap: Option<f64>,
}

/// Cumulative `(threshold, tp, fp)` after each distinct score, descending.
fn sweep(scores: &[f64], positive: &[bool]) -> Result<Vec<(f64, usize, usize)>> {
    if scores.len() != positive.len() {
        return Err(Error::InvalidArgument(format!("{} scores for {} labels", scores.len(), positive.len())));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("scores must be finite".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out: Vec<(f64, usize, usize)> = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    for (i, &idx) in order.iter().enumerate() {
        if positive[idx] {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_group = order.get(i + 1).is_none_or(|&n| scores[n] != scores[idx]);
        if last_of_group {
            out.push((scores[idx], tp, fp));
        }
    }
    Ok(out)
}

/// ROC curve over distinct thresholds with trapezoidal AUC.
///
/// The area is accumulated as an integer count of `2 * [s+ > s-] + [s+ == s-]`
/// over positive/negative pairs, so ties score one half.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Result<RocCurve> {
    let steps = sweep(scores, positive)?;
    let p = positive.iter().filter(|&&b| b).count();
    let n = positive.len() - p;
    if p == 0 || n == 0 {
        return Ok(RocCurve { points: Vec::new(), auc: None });
    }
    let mut points = vec![RocPoint { threshold: None, fpr: 0.0, tpr: 0.0 }];
    let (mut area, mut prev_tp, mut prev_fp) = (0u128, 0usize, 0usize);
    for &(t, tp, fp) in &steps {
        area += ((fp - prev_fp) * (tp + prev_tp)) as u128;
        points.push(RocPoint { threshold: Some(t), fpr: fp as f64 / n as f64, tpr: tp as f64 / p as f64 });
        (prev_tp, prev_fp) = (tp, fp);
    }
    let auc = area as f64 / (2 * p as u128 * n as u128) as f64;
    Ok(RocCurve { points, auc: Some(auc) })
}

/// Precision-recall points at each distinct threshold and step-sum AP,
/// `sum_k (R_k - R_{k-1}) * P_k`.
pub fn pr_ap(scores: &[f64], positive: &[bool]) -> Result<PrCurve> {
    let steps = sweep(scores, positive)?;
    let p = positive.iter().filter(|&&b| b).count();
    if p == 0 {
        return Ok(PrCurve { points: Vec::new(), ap: None });
    }
    let mut points = Vec::with_capacity(steps.len());
    let (mut ap, mut prev_tp) = (0.0, 0usize);
    for &(t, tp, fp) in &steps {
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (tp - prev_tp) as f64 / p as f64 * precision;
        points.push(PrPoint { threshold: t, recall: tp as f64 / p as f64, precision });
        prev_tp = tp;
    }
    Ok(PrCurve { points, ap: Some(ap) })
}
