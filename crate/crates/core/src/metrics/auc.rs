use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rank-based (Mann-Whitney) AUC with average ranks for ties.
///
/// Returns `Ok(None)` when the targets hold only one class.
pub fn binary_auc(scores: &[f64], targets: &[bool]) -> Result<Option<f64>> {
    if scores.len() != targets.len() {
        return Err(Error::Metrics(format!(
            "{} scores but {} targets",
            scores.len(),
            targets.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metrics("NaN score".into()));
    }
    let pos = targets.iter().filter(|&&t| t).count();
    let neg = targets.len() - pos;
    if pos == 0 || neg == 0 {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let avg = (i + 1 + j) as f64 / 2.0;
        let tied_pos = order[i..j].iter().filter(|&&k| targets[k]).count();
        rank_sum_pos += avg * tied_pos as f64;
        i = j;
    }
    let p = pos as f64;
    let n = neg as f64;
    Ok(Some((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n)))
}

/// Scores and binary targets, `[samples][labels]`.
#[derive(Debug, Clone)]
pub struct EvalBatch {
    pub scores: Vec<Vec<f64>>,
    pub targets: Vec<Vec<bool>>,
    pub label_names: Vec<String>,
}

impl EvalBatch {
    pub fn new(scores: Vec<Vec<f64>>, targets: Vec<Vec<bool>>, label_names: Vec<String>) -> Result<Self> {
        if scores.len() != targets.len() {
            return Err(Error::Metrics(format!(
                "{} score rows but {} target rows",
                scores.len(),
                targets.len()
            )));
        }
        let width = label_names.len();
        for (i, (s, t)) in scores.iter().zip(&targets).enumerate() {
            if s.len() != width || t.len() != width {
                return Err(Error::Metrics(format!(
                    "row {i} has {} scores and {} targets for {width} labels",
                    s.len(),
                    t.len()
                )));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Metrics(format!("row {i} has a non-finite score")));
            }
        }
        Ok(Self {
            scores,
            targets,
            label_names,
        })
    }

    pub fn label_count(&self) -> usize {
        self.label_names.len()
    }

    fn column(&self, j: usize) -> (Vec<f64>, Vec<bool>) {
        (
            self.scores.iter().map(|r| r[j]).collect(),
            self.targets.iter().map(|r| r[j]).collect(),
        )
    }

    /// Per-label AUC, `None` where a label is single-class.
    pub fn per_label(&self) -> Result<Vec<Option<f64>>> {
        (0..self.label_count())
            .map(|j| {
                let (s, t) = self.column(j);
                binary_auc(&s, &t)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excluded {
    pub label: String,
    pub reason: String,
}

/// Unweighted mean of the defined per-label AUCs, plus the labels left out.
pub fn macro_auc(batch: &EvalBatch) -> Result<(f64, Vec<Excluded>)> {
    let per_label = batch.per_label()?;
    let (sum, defined, excluded) = aggregate(batch, &per_label);
    if defined == 0 {
        return Err(Error::Metrics("no label has both positive and negative examples".into()));
    }
    Ok((sum / defined as f64, excluded))
}

fn aggregate(batch: &EvalBatch, per_label: &[Option<f64>]) -> (f64, usize, Vec<Excluded>) {
    let mut sum = 0.0;
    let mut defined = 0;
    let mut excluded = Vec::new();
    for (j, auc) in per_label.iter().enumerate() {
        match auc {
            Some(a) => {
                sum += a;
                defined += 1;
            }
            None => {
                let positives = batch.targets.iter().filter(|r| r[j]).count();
                let reason = if positives == 0 { "no positive examples" } else { "no negative examples" };
                excluded.push(Excluded {
                    label: batch.label_names[j].clone(),
                    reason: reason.into(),
                });
            }
        }
    }
    (sum, defined, excluded)
}

/// AUC over all flattened (sample, label) pairs.
pub fn micro_auc(batch: &EvalBatch) -> Result<f64> {
    let scores: Vec<f64> = batch.scores.iter().flatten().copied().collect();
    let targets: Vec<bool> = batch.targets.iter().flatten().copied().collect();
    binary_auc(&scores, &targets)?
        .ok_or_else(|| Error::Metrics("flattened targets contain a single class".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub macro_auc: f64,
    pub micro_auc: f64,
    pub per_label: BTreeMap<String, Option<f64>>,
    pub excluded: Vec<Excluded>,
}

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn evaluate(batch: &EvalBatch) -> Result<MetricsReport> {
    let per_label = batch.per_label()?;
    let (sum, defined, excluded) = aggregate(batch, &per_label);
    if defined == 0 {
        return Err(Error::Metrics("no label has both positive and negative examples".into()));
    }
    Ok(MetricsReport {
        macro_auc: sum / defined as f64,
        micro_auc: micro_auc(batch)?,
        per_label: batch.label_names.iter().cloned().zip(per_label).collect(),
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: &[u8]) -> Vec<bool> {
        v.iter().map(|&x| x == 1).collect()
    }

    #[test]
    fn examples() {
        assert_eq!(binary_auc(&[0.9, 0.8, 0.3, 0.2], &b(&[1, 1, 0, 0])).unwrap(), Some(1.0));
        assert_eq!(binary_auc(&[0.5, 0.5], &b(&[1, 0])).unwrap(), Some(0.5));
        assert_eq!(binary_auc(&[0.8, 0.7, 0.6, 0.2], &b(&[1, 0, 1, 0])).unwrap(), Some(0.75));
        assert_eq!(binary_auc(&[0.1, 0.2], &b(&[1, 1])).unwrap(), None);
        assert!(binary_auc(&[0.1], &b(&[1, 0])).is_err());
        assert!(binary_auc(&[f64::NAN, 0.1], &b(&[1, 0])).is_err());
    }

    #[test]
    fn micro_two_by_two() {
        let batch = EvalBatch::new(
            vec![vec![0.9, 0.1], vec![0.4, 0.6]],
            vec![b(&[1, 0]), b(&[0, 1])],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert_eq!(micro_auc(&batch).unwrap(), 1.0);
    }

    #[test]
    fn macro_mean_and_exclusion() {
        // label a perfectly ranked, b fully tied, c all positive
        let batch = EvalBatch::new(
            vec![vec![0.9, 0.5, 0.3], vec![0.1, 0.5, 0.2]],
            vec![b(&[1, 1, 1]), b(&[0, 0, 1])],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let (m, excluded) = macro_auc(&batch).unwrap();
        assert_eq!(m, 0.75);
        assert_eq!(excluded.len(), 1);
        assert_eq!(excluded[0].label, "c");
        assert_eq!(excluded[0].reason, "no negative examples");
    }

    #[test]
    fn all_undefined_is_error() {
        let batch = EvalBatch::new(vec![vec![0.3], vec![0.4]], vec![b(&[1]), b(&[1])], vec!["a".into()]).unwrap();
        assert!(macro_auc(&batch).is_err());
        assert!(micro_auc(&batch).is_err());
    }

    #[test]
    fn report_json_fields() {
        let batch = EvalBatch::new(
            vec![vec![0.9, 0.2], vec![0.1, 0.3]],
            vec![b(&[1, 0]), b(&[0, 0])],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let r = evaluate(&batch).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["macro_auc"], 1.0);
        assert!(v["per_label"]["b"].is_null());
        assert_eq!(v["excluded"][0]["label"], "b");
    }
}
