mod common;

use common::{brute_ap, brute_auc};
use mcfm::train::metrics::{pr_ap, roc_auc};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small labeled score sets; half the seeds draw from a coarse grid so ties
/// are common.
fn instance(seed: u64) -> (Vec<f64>, Vec<bool>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let n = r.gen_range(1..=12);
    let coarse = seed.is_multiple_of(2);
    let scores = (0..n).map(|_| if coarse { r.gen_range(0..4) as f64 / 4.0 } else { r.gen_range(0.0..1.0) }).collect();
    let labels = (0..n).map(|_| r.gen_bool(0.5)).collect();
    (scores, labels)
}

#[test]
fn sweep_auc_equals_pairwise_count_exactly() {
    for seed in 0..2000 {
        let (s, y) = instance(seed);
        assert_eq!(roc_auc(&s, &y).unwrap().auc, brute_auc(&s, &y), "seed {seed}: {s:?} {y:?}");
    }
}

#[test]
fn sweep_ap_equals_step_sum_exactly() {
    for seed in 0..2000 {
        let (s, y) = instance(seed);
        assert_eq!(pr_ap(&s, &y).unwrap().ap, brute_ap(&s, &y), "seed {seed}: {s:?} {y:?}");
    }
}

#[test]
fn degenerate_cases() {
    for n in 2..=12 {
        let y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        assert_eq!(roc_auc(&vec![0.3; n], &y).unwrap().auc, Some(0.5));
        let ranked: Vec<f64> = y.iter().map(|&p| if p { 0.9 } else { 0.1 }).collect();
        assert_eq!(pr_ap(&ranked, &y).unwrap().ap, Some(1.0));
        assert_eq!(roc_auc(&ranked, &y).unwrap().auc, Some(1.0));
    }
    assert_eq!(pr_ap(&[0.2, 0.1], &[false, false]).unwrap().ap, None);
    assert_eq!(roc_auc(&[0.2, 0.1], &[true, true]).unwrap().auc, None);
}

#[test]
fn curves_end_at_full_recall() {
    let (s, y) = (vec![0.9, 0.8, 0.7, 0.1], vec![true, false, true, false]);
    let roc = roc_auc(&s, &y).unwrap();
    let last = roc.points.last().unwrap();
    assert_eq!((roc.points[0].fpr, roc.points[0].tpr, last.fpr, last.tpr), (0.0, 0.0, 1.0, 1.0));
    assert_eq!(pr_ap(&s, &y).unwrap().points.last().unwrap().recall, 1.0);
}

proptest! {
    #[test]
    fn auc_is_invariant_under_increasing_maps(
        pairs in prop::collection::vec((0u8..6, any::<bool>()), 1..20),
        a in 0.1f64..5.0,
        b in -3.0f64..3.0,
    ) {
        let s: Vec<f64> = pairs.iter().map(|p| f64::from(p.0) / 5.0).collect();
        let y: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        let t: Vec<f64> = s.iter().map(|v| (a * v + b).exp()).collect();
        prop_assert_eq!(roc_auc(&s, &y).unwrap().auc, roc_auc(&t, &y).unwrap().auc);
        prop_assert_eq!(pr_ap(&s, &y).unwrap().ap, pr_ap(&t, &y).unwrap().ap);
    }

    #[test]
    fn auc_and_ap_stay_in_unit_interval(pairs in prop::collection::vec((0.0f64..1.0, any::<bool>()), 1..30)) {
        let s: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        if let Some(v) = roc_auc(&s, &y).unwrap().auc {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if let Some(v) = pr_ap(&s, &y).unwrap().ap {
            prop_assert!(v > 0.0 && v <= 1.0);
        }
    }
}
