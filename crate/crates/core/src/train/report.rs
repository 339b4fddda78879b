use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{confusion_matrix, pr_ap, precision_recall_f1, ClassMetrics, MacroMetrics, PrCurve, RocCurve};
use super::EpochRecord;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub name: String,
    #[serde(flatten)]
    pub metrics: ClassMetrics,
    pub roc: RocCurve,
    pub pr: PrCurve,
}

/// Everything measured on one evaluation set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: usize,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassReport>,
    #[serde(rename = "macro")]
    pub macro_avg: MacroMetrics,
    /// Human-readable notes about metrics that fell back to a convention.
    pub flags: Vec<String>,
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    row.iter().enumerate().fold(0, |best, (i, &v)| if v > row[best] { i } else { best })
}

impl EvalReport {
    /// Builds the report from per-sample class scores (rows) and labels.
    pub fn from_scores(scores: &[Vec<f64>], labels: &[usize], class_names: &[String]) -> Result<Self> {
        let c = class_names.len();
        if scores.iter().any(|r| r.len() != c) {
            return Err(Error::InvalidArgument(format!("score rows must have {c} entries")));
        }
        let pred: Vec<usize> = scores.iter().map(|r| argmax(r)).collect();
        let confusion = confusion_matrix(&pred, labels, c)?;
        let (metrics, macro_avg) = precision_recall_f1(&confusion)?;
        let mut flags = Vec::new();
        let mut per_class = Vec::with_capacity(c);
        for (k, metrics) in metrics.into_iter().enumerate() {
            let name = &class_names[k];
            if metrics.zero_division {
                flags.push(format!("{name}: zero denominator in precision or recall, reported as 0"));
            }
            let column: Vec<f64> = scores.iter().map(|r| r[k]).collect();
            let positive: Vec<bool> = labels.iter().map(|&l| l == k).collect();
            let roc = super::metrics::roc_auc(&column, &positive)?;
            let pr = pr_ap(&column, &positive)?;
            if roc.auc.is_none() {
                flags.push(format!("{name}: AUC undefined (needs positives and negatives)"));
            }
            if pr.ap.is_none() {
                flags.push(format!("{name}: AP undefined (no positives)"));
            }
            per_class.push(ClassReport { name: name.clone(), metrics, roc, pr });
        }
        Ok(EvalReport { samples: labels.len(), confusion, per_class, macro_avg, flags })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// `report.json` plus `curves/roc_<class>.csv` and `curves/pr_<class>.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let curves = dir.join("curves");
        fs::create_dir_all(&curves).map_err(|e| Error::data(&curves, e.to_string()))?;
        write_file(&dir.join("report.json"), &self.to_json()?)?;
        for c in &self.per_class {
            write_file(&curves.join(format!("roc_{}.csv", c.name)), &roc_csv(&c.roc))?;
            write_file(&curves.join(format!("pr_{}.csv", c.name)), &pr_csv(&c.pr))?;
        }
        Ok(())
    }

    /// Short aligned summary, one row per class then the macro row.
    pub fn summary(&self) -> String {
        let mut s = format!("{:<18} {:>9} {:>9} {:>9} {:>9} {:>9}\n", "class", "precision", "recall", "f1", "auc", "ap");
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        for c in &self.per_class {
            let m = &c.metrics;
            let _ = writeln!(
                s,
                "{:<18} {:>9.4} {:>9.4} {:>9.4} {:>9} {:>9}",
                c.name,
                m.precision,
                m.recall,
                m.f1,
                opt(c.roc.auc),
                opt(c.pr.ap)
            );
        }
        let m = &self.macro_avg;
        let _ = writeln!(s, "{:<18} {:>9.4} {:>9.4} {:>9.4}   accuracy {:.4}", "macro", m.precision, m.recall, m.f1, m.accuracy);
        s
    }
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::data(path, e.to_string()))
}

pub fn roc_csv(c: &RocCurve) -> String {
    let mut s = String::from("threshold,fpr,tpr\n");
    for p in &c.points {
        let t = p.threshold.map_or("inf".to_string(), |t| t.to_string());
        let _ = writeln!(s, "{t},{},{}", p.fpr, p.tpr);
    }
    s
}

pub fn pr_csv(c: &PrCurve) -> String {
    let mut s = String::from("threshold,recall,precision\n");
    for p in &c.points {
        let _ = writeln!(s, "{},{},{}", p.threshold, p.recall, p.precision);
    }
    s
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,loss,accuracy\n");
    for r in history {
        let _ = writeln!(s, "{},{},{}", r.epoch, r.loss, r.accuracy);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn perfect_scores() {
        let scores = vec![vec![0.9, 0.1], vec![0.2, 0.8], vec![0.7, 0.3]];
        let r = EvalReport::from_scores(&scores, &[0, 1, 0], &names(2)).unwrap();
        assert_eq!(r.confusion, vec![vec![2, 0], vec![0, 1]]);
        assert_eq!(r.macro_avg.accuracy, 1.0);
        assert!(r.flags.is_empty());
        assert!(r.per_class.iter().all(|c| c.roc.auc == Some(1.0) && c.pr.ap == Some(1.0)));
    }

    #[test]
    fn absent_class_is_flagged_not_zeroed() {
        let scores = vec![vec![0.9, 0.05, 0.05], vec![0.2, 0.7, 0.1]];
        let r = EvalReport::from_scores(&scores, &[0, 1], &names(3)).unwrap();
        assert_eq!(r.per_class[2].pr.ap, None);
        assert_eq!(r.flags.len(), 3);
        let json = r.to_json().unwrap();
        assert!(json.contains("\"ap\": null"));
        assert_eq!(serde_json::from_str::<EvalReport>(&json).unwrap(), r);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[1.0]), 0);
    }

    #[test]
    fn csv_shapes() {
        let r = EvalReport::from_scores(&[vec![0.6, 0.4], vec![0.3, 0.7]], &[0, 1], &names(2)).unwrap();
        let roc = roc_csv(&r.per_class[0].roc);
        assert!(roc.starts_with("threshold,fpr,tpr\ninf,0,0\n"));
        assert_eq!(pr_csv(&r.per_class[0].pr).lines().count(), 3);
    }
}
