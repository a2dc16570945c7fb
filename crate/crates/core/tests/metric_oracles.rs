mod common;

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sffda_core::ingest::Label;
use sffda_core::metrics::{confusion, metrics, roc_auc};

fn random_case(rng: &mut ChaCha8Rng, len: usize, levels: u32) -> (Vec<Label>, Vec<f64>) {
    let labels = (0..len)
        .map(|_| if rng.random_bool(0.5) { Label::Anxiety } else { Label::AnxietyFree })
        .collect();
    // Coarse levels force ties.
    let probs = (0..len).map(|_| rng.random_range(0..=levels) as f64 / levels as f64).collect();
    (labels, probs)
}

/// Counts the four outcomes with independent filters.
fn brute_counts(labels: &[Label], probs: &[f64], thr: f64) -> [usize; 4] {
    let pairs: Vec<(bool, bool)> = labels.iter().zip(probs).map(|(l, &p)| (*l == Label::Anxiety, p >= thr)).collect();
    let count = |want: (bool, bool)| pairs.iter().filter(|&&p| p == want).count();
    [count((true, true)), count((false, false)), count((false, true)), count((true, false))]
}

fn pair_auc(labels: &[Label], probs: &[f64]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0usize);
    for (li, pi) in labels.iter().zip(probs) {
        for (lj, pj) in labels.iter().zip(probs) {
            if *li == Label::Anxiety && *lj == Label::AnxietyFree {
                pairs += 1;
                wins += if pi > pj {
                    1.0
                } else if pi == pj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs as f64
}

#[test]
fn confusion_metrics_match_counting_oracle() {
    let mut rng = common::rng(11);
    for _ in 0..1000 {
        let len = rng.random_range(1..80);
        let (labels, probs) = random_case(&mut rng, len, 20);
        let thr = rng.random_range(0.0..=1.0);
        let c = confusion(&labels, &probs, thr).unwrap();
        let [tp, tn, fp, fn_] = brute_counts(&labels, &probs, thr);
        assert_eq!([c.tp, c.tn, c.fp, c.fn_], [tp, tn, fp, fn_]);
        let m = metrics(&c);
        let frac = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        assert_eq!(m.precision, frac(tp, tp + fp));
        assert_eq!(m.sensitivity, frac(tp, tp + fn_));
        assert_eq!(m.specificity, frac(tn, tn + fp));
        assert_eq!(m.accuracy, frac(tp + tn, len));
        assert_eq!(m.f1, frac(2 * tp, 2 * tp + fp + fn_));
    }
}

#[test]
fn auc_matches_pair_counting_with_half_ties() {
    let mut rng = common::rng(12);
    let mut done = 0;
    while done < 1000 {
        let len = rng.random_range(2..80);
        let (labels, probs) = random_case(&mut rng, len, if done % 2 == 0 { 5 } else { 1000 });
        if labels.iter().all(|l| *l == labels[0]) {
            continue;
        }
        let (_, auc) = roc_auc(&labels, &probs).unwrap();
        assert!((auc - pair_auc(&labels, &probs)).abs() <= 1e-9);
        done += 1;
    }
}

#[test]
fn uninformative_scores_give_auc_near_half() {
    let mut rng = common::rng(13);
    let (labels, probs) = random_case(&mut rng, 4000, 1_000_000);
    let (_, auc) = roc_auc(&labels, &probs).unwrap();
    // Standard error at n = 2000 per class is about 0.0065.
    assert!((auc - 0.5).abs() < 0.03, "{auc}");
}

#[test]
fn curve_runs_from_origin_to_corner() {
    let mut rng = common::rng(14);
    let (mut labels, probs) = random_case(&mut rng, 50, 10);
    labels[0] = Label::Anxiety;
    labels[1] = Label::AnxietyFree;
    let (curve, _) = roc_auc(&labels, &probs).unwrap();
    let (first, last) = (curve.points[0], *curve.points.last().unwrap());
    assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
    assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
    let csv = curve.to_csv();
    assert!(csv.starts_with("threshold,fpr,tpr\ninf,0,0\n"));
    assert!(csv.trim_end().ends_with(",1,1"));
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(confusion(&[], &[], 0.5).is_err());
    assert!(confusion(&[Label::Anxiety], &[1.5], 0.5).is_err());
    assert!(confusion(&[Label::Anxiety], &[0.1, 0.2], 0.5).is_err());
    assert!(roc_auc(&[Label::Anxiety, Label::Anxiety], &[0.1, 0.2]).is_err());
}

proptest! {
    #[test]
    fn auc_is_invariant_under_monotone_maps(
        raw in prop::collection::vec((any::<bool>(), 0.0f64..1.0), 2..60),
    ) {
        prop_assume!(raw.iter().any(|r| r.0) && raw.iter().any(|r| !r.0));
        let labels: Vec<Label> = raw.iter().map(|r| if r.0 { Label::Anxiety } else { Label::AnxietyFree }).collect();
        let probs: Vec<f64> = raw.iter().map(|r| r.1).collect();
        let squashed: Vec<f64> = probs.iter().map(|p| p * p * p).collect();
        let (_, a) = roc_auc(&labels, &probs).unwrap();
        let (_, b) = roc_auc(&labels, &squashed).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        let flipped: Vec<f64> = probs.iter().map(|p| 1.0 - p).collect();
        let (_, c) = roc_auc(&labels, &flipped).unwrap();
        prop_assert!((a + c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn roc_points_are_monotone(
        raw in prop::collection::vec((any::<bool>(), 0u8..8), 2..60),
    ) {
        prop_assume!(raw.iter().any(|r| r.0) && raw.iter().any(|r| !r.0));
        let labels: Vec<Label> = raw.iter().map(|r| if r.0 { Label::Anxiety } else { Label::AnxietyFree }).collect();
        let probs: Vec<f64> = raw.iter().map(|r| r.1 as f64 / 7.0).collect();
        let (curve, auc) = roc_auc(&labels, &probs).unwrap();
        for w in curve.points.windows(2) {
            prop_assert!(w[0].threshold > w[1].threshold);
            prop_assert!(w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr);
        }
        prop_assert!((0.0..=1.0).contains(&auc));
    }
}
