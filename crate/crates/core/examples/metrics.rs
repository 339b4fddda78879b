//! Confusion matrix, per-class and macro precision/recall/F1, and one-vs-rest
//! ROC AUC and average precision on a small hand-made score table.
//!
//! cargo run --example metrics

use mcfm::train::metrics::{confusion_matrix, pr_ap, precision_recall_f1, roc_auc};
use mcfm::train::argmax;

fn main() -> mcfm::Result<()> {
    let scores = [
        [0.7, 0.2, 0.1],
        [0.5, 0.4, 0.1],
        [0.1, 0.8, 0.1],
        [0.3, 0.3, 0.4],
        [0.2, 0.5, 0.3],
        [0.1, 0.1, 0.8],
        [0.6, 0.1, 0.3],
        [0.2, 0.2, 0.6],
    ];
    let truth = [0, 1, 1, 0, 1, 2, 2, 2];
    let pred: Vec<usize> = scores.iter().map(|s| argmax(s)).collect();

    let cm = confusion_matrix(&pred, &truth, 3)?;
    println!("confusion (rows = truth): {cm:?}");
    let (per_class, macro_avg) = precision_recall_f1(&cm)?;
    for (c, m) in per_class.iter().enumerate() {
        let column: Vec<f64> = scores.iter().map(|s| s[c]).collect();
        let positive: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        let auc = roc_auc(&column, &positive)?.auc.unwrap_or(f64::NAN);
        let ap = pr_ap(&column, &positive)?.ap.unwrap_or(f64::NAN);
        println!(
            "class {c}: P {:.4} R {:.4} F1 {:.4}  AUC {auc:.4} AP {ap:.4}",
            m.precision, m.recall, m.f1
        );
    }
    println!(
        "macro: P {:.4} R {:.4} F1 {:.4} accuracy {:.4}",
        macro_avg.precision, macro_avg.recall, macro_avg.f1, macro_avg.accuracy
    );
    Ok(())
}
