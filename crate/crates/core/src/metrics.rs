//! Confusion counts, threshold metrics and ROC/AUC.
//!
//! The positive class is anxiety; a probability equal to the threshold counts
//! as positive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Label;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

fn check_inputs(labels: &[Label], probs: &[f64]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::InvalidArgument("no samples to evaluate".into()));
    }
    if labels.len() != probs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels but {} probabilities",
            labels.len(),
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

pub fn confusion(labels: &[Label], probs: &[f64], thr: f64) -> Result<ConfusionCounts> {
    check_inputs(labels, probs)?;
    let mut c = ConfusionCounts::default();
    for (l, &p) in labels.iter().zip(probs) {
        match (l.is_positive(), p >= thr) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub f1: f64,
    /// Metrics whose denominator was zero and were reported as 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

pub fn metrics(c: &ConfusionCounts) -> Metrics {
    let mut undefined = Vec::new();
    let mut ratio = |name: &str, num: usize, den: usize| {
        if den == 0 {
            log::warn!("{name} is undefined (0/0); reporting 0");
            undefined.push(name.to_string());
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio("precision", c.tp, c.tp + c.fp);
    let sensitivity = ratio("sensitivity", c.tp, c.tp + c.fn_);
    let specificity = ratio("specificity", c.tn, c.tn + c.fp);
    let accuracy = ratio("accuracy", c.tp + c.tn, c.total());
    let f1 = ratio("f1", 2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    Metrics {
        precision,
        sensitivity,
        specificity,
        accuracy,
        f1,
        undefined,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Points by descending threshold, from `(inf, 0, 0)` to `(min prob, 1, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) * 0.5)
            .sum()
    }

    /// `threshold,fpr,tpr` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
        }
        s
    }
}

pub fn roc_auc(labels: &[Label], probs: &[f64]) -> Result<(RocCurve, f64)> {
    check_inputs(labels, probs)?;
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidArgument("ROC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let thr = probs[order[i]];
        while i < order.len() && probs[order[i]] == thr {
            if labels[order[i]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: thr,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    let curve = RocCurve { points };
    let auc = curve.auc();
    Ok((curve, auc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use Label::{Anxiety as A, AnxietyFree as F};

    #[test]
    fn hand_evaluated_metrics() {
        let m = metrics(&ConfusionCounts { tp: 3, tn: 4, fp: 1, fn_: 2 });
        assert_eq!(m.precision, 0.75);
        assert_eq!(m.sensitivity, 0.6);
        assert_eq!(m.specificity, 0.8);
        assert_eq!(m.accuracy, 0.7);
        assert_abs_diff_eq!(m.f1, 0.6667, epsilon = 1e-4);
        let m = metrics(&ConfusionCounts { tp: 5, tn: 5, fp: 0, fn_: 0 });
        assert_eq!([m.precision, m.sensitivity, m.specificity, m.accuracy, m.f1], [1.0; 5]);
        assert!(m.undefined.is_empty());
    }

    #[test]
    fn sentinel_on_zero_denominator() {
        let m = metrics(&ConfusionCounts { tp: 0, tn: 3, fp: 0, fn_: 2 });
        assert_eq!(m.precision, 0.0);
        assert!(m.undefined.contains(&"precision".to_string()));
    }

    #[test]
    fn threshold_ties_are_positive() {
        let c = confusion(&[A, F], &[0.5, 0.5], 0.5).unwrap();
        assert_eq!((c.tp, c.fp), (1, 1));
        let c = confusion(&[A, F, A], &[0.1, 0.0, 0.9], 0.0).unwrap();
        assert_eq!((c.tn, c.fn_), (0, 0));
    }

    #[test]
    fn bad_inputs() {
        assert!(confusion(&[], &[], 0.5).is_err());
        assert!(confusion(&[A], &[1.5], 0.5).is_err());
        assert!(roc_auc(&[A, A], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn roc_with_ties() {
        let (c, auc) = roc_auc(&[A, F, A, F], &[0.9, 0.9, 0.4, 0.1]).unwrap();
        assert_eq!(c.points.len(), 4);
        assert_eq!((c.points[1].fpr, c.points[1].tpr), (0.5, 0.5));
        let last = c.points.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert_abs_diff_eq!(auc, 0.625, epsilon = 1e-15);
        assert!(c.to_csv().starts_with("threshold,fpr,tpr\ninf,0,0\n"));
    }
}
