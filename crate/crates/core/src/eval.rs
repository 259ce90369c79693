//! Confusion-matrix metrics, ROC curves and AUC.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn check_binary(values: &[u8], what: &str) -> Result<()> {
    match values.iter().position(|v| *v > 1) {
        Some(i) => Err(Error::InvalidArgument(format!("{what}[{i}] = {} is not 0 or 1", values[i]))),
        None => Ok(()),
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension { expected: a, actual: b });
    }
    Ok(())
}

pub fn confusion(labels: &[u8], predictions: &[u8]) -> Result<ConfusionCounts> {
    check_lengths(labels.len(), predictions.len())?;
    check_binary(labels, "labels")?;
    check_binary(predictions, "predictions")?;
    let mut c = ConfusionCounts::default();
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y, p) {
            (1, 1) => c.tp += 1,
            (0, 1) => c.fp += 1,
            (0, 0) => c.tn += 1,
            _ => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Binary,
    Macro,
    #[default]
    Weighted,
}

impl Averaging {
    pub const ALL: [Averaging; 3] = [Averaging::Binary, Averaging::Macro, Averaging::Weighted];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Binary => "binary",
            Self::Macro => "macro",
            Self::Weighted => "weighted",
        }
    }
}

impl FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown averaging mode {s:?}")))
    }
}

impl fmt::Display for Averaging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Precision,
    Recall,
    F1,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Precision => "precision",
            Self::Recall => "recall",
            Self::F1 => "f1",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub binary: Scores,
    #[serde(rename = "macro")]
    pub macro_avg: Scores,
    pub weighted: Scores,
    /// Metrics that hit a zero denominator; those values are reported as 0.
    pub undefined: BTreeSet<(Metric, Averaging)>,
}

impl MetricsReport {
    pub fn get(&self, mode: Averaging) -> &Scores {
        match mode {
            Averaging::Binary => &self.binary,
            Averaging::Macro => &self.macro_avg,
            Averaging::Weighted => &self.weighted,
        }
    }

    pub fn is_undefined(&self, metric: Metric, mode: Averaging) -> bool {
        self.undefined.contains(&(metric, mode))
    }

    /// Flags as `metric/mode` strings, e.g. `precision/binary`.
    pub fn flag_strings(&self) -> Vec<String> {
        self.undefined
            .iter()
            .map(|(m, a)| format!("{}/{}", m.as_str(), a.as_str()))
            .collect()
    }
}

struct ClassStats {
    precision: Option<f64>,
    recall: Option<f64>,
    support: u64,
}

impl ClassStats {
    fn new(tp: u64, fp: u64, fn_: u64) -> Self {
        let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        Self {
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            support: tp + fn_,
        }
    }

    fn f1(&self) -> Option<f64> {
        let (p, r) = (self.precision?, self.recall?);
        Some(harmonic(p, r))
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Accuracy, precision, recall and F1 for every averaging mode.
///
/// Binary scores the positive class. Macro averages the two classes
/// equally; weighted averages them by support. A zero denominator yields 0
/// and an entry in `undefined`.
pub fn metrics(labels: &[u8], predictions: &[u8]) -> Result<MetricsReport> {
    let c = confusion(labels, predictions)?;
    metrics_from_counts(&c)
}

pub fn metrics_from_counts(c: &ConfusionCounts) -> Result<MetricsReport> {
    let n = c.total();
    if n == 0 {
        return Err(Error::Empty("no instances to evaluate"));
    }
    let accuracy = (c.tp + c.tn) as f64 / n as f64;
    let classes = [ClassStats::new(c.tn, c.fn_, c.fp), ClassStats::new(c.tp, c.fp, c.fn_)];
    let mut undefined = BTreeSet::new();

    let pos = &classes[1];
    let p = pos.precision.unwrap_or(0.0);
    let r = pos.recall.unwrap_or(0.0);
    if pos.precision.is_none() {
        undefined.insert((Metric::Precision, Averaging::Binary));
    }
    if pos.recall.is_none() {
        undefined.insert((Metric::Recall, Averaging::Binary));
    }
    let f1 = match pos.f1() {
        Some(f) => f,
        None => {
            undefined.insert((Metric::F1, Averaging::Binary));
            harmonic(p, r)
        }
    };
    let binary = Scores { accuracy, precision: p, recall: r, f1 };

    let mut macro_avg = Scores { accuracy, ..Scores::default() };
    let mut weighted = Scores { accuracy, ..Scores::default() };
    for cls in &classes {
        let w = cls.support as f64 / n as f64;
        let pc = cls.precision.unwrap_or(0.0);
        let rc = cls.recall.unwrap_or(0.0);
        let fc = cls.f1().unwrap_or_else(|| harmonic(pc, rc));
        macro_avg.precision += pc / 2.0;
        macro_avg.recall += rc / 2.0;
        macro_avg.f1 += fc / 2.0;
        weighted.precision += w * pc;
        weighted.f1 += w * fc;
        for (value, metric) in [(cls.precision, Metric::Precision), (cls.recall, Metric::Recall), (cls.f1(), Metric::F1)] {
            if value.is_none() {
                undefined.insert((metric, Averaging::Macro));
                if cls.support > 0 {
                    undefined.insert((metric, Averaging::Weighted));
                }
            }
        }
    }
    // sum_c (support_c / N) * (tp_c / support_c) reduces to the correct count over N
    weighted.recall = accuracy;

    Ok(MetricsReport { binary, macro_avg, weighted, undefined })
}

/// Thresholds scores into 0/1 predictions: `score >= threshold` is positive.
pub fn predict_labels(scores: &[f64], threshold: f64) -> Vec<u8> {
    scores.iter().map(|s| u8::from(*s >= threshold)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

fn class_totals(labels: &[u8], scores: &[f64]) -> Result<(u64, u64)> {
    check_lengths(labels.len(), scores.len())?;
    check_binary(labels, "labels")?;
    if let Some((i, &s)) = scores.iter().enumerate().find(|(_, s)| !s.is_finite()) {
        return Err(Error::NonFinite { index: i, value: s });
    }
    let pos = labels.iter().filter(|l| **l == 1).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 {
        return Err(Error::MissingClass(1));
    }
    if neg == 0 {
        return Err(Error::MissingClass(0));
    }
    Ok((pos, neg))
}

/// ROC curve with one vertex per distinct score, from (0,0) to (1,1).
///
/// The first point carries an infinite threshold; every other point's
/// threshold is the score at which it is reached (`score >= threshold`).
pub fn roc_curve(labels: &[u8], scores: &[f64]) -> Result<RocCurve> {
    let (pos, neg) = class_totals(labels, scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = Vec::new();
    points.push(RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 });
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(RocCurve { points })
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }
}

pub fn auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    Ok(roc_curve(labels, scores)?.area())
}

/// `(concordant + 0.5 * tied) / (P * N)` over all positive/negative pairs.
pub fn pair_auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    let (pos, neg) = class_totals(labels, scores)?;
    let mut credit = 0.0;
    for (i, &yi) in labels.iter().enumerate() {
        if yi != 1 {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj != 0 {
                continue;
            }
            if scores[i] > scores[j] {
                credit += 1.0;
            } else if scores[i] == scores[j] {
                credit += 0.5;
            }
        }
    }
    Ok(credit / (pos as f64 * neg as f64))
}

/// Serializable evaluation summary for one model on one split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub model_kind: String,
    pub seed: u64,
    pub split: String,
    pub average: Averaging,
    pub threshold: f64,
    pub n_instances: u64,
    pub counts: ConfusionCounts,
    pub metrics: ModeScores,
    pub auc: f64,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeScores {
    pub binary: Scores,
    #[serde(rename = "macro")]
    pub macro_avg: Scores,
    pub weighted: Scores,
}

impl EvalReport {
    /// Scores against labels; `threshold` converts scores to predicted labels.
    pub fn evaluate(
        model_kind: &str,
        seed: u64,
        split: &str,
        average: Averaging,
        labels: &[u8],
        scores: &[f64],
        threshold: f64,
    ) -> Result<(Self, RocCurve)> {
        let predictions = predict_labels(scores, threshold);
        let counts = confusion(labels, &predictions)?;
        let m = metrics_from_counts(&counts)?;
        let roc = roc_curve(labels, scores)?;
        let report = Self {
            format_version: REPORT_FORMAT_VERSION,
            model_kind: model_kind.into(),
            seed,
            split: split.into(),
            average,
            threshold,
            n_instances: counts.total(),
            counts,
            metrics: ModeScores {
                binary: m.binary,
                macro_avg: m.macro_avg,
                weighted: m.weighted,
            },
            auc: roc.area(),
            flags: m.flag_strings(),
        };
        Ok((report, roc))
    }

    pub fn selected(&self) -> &Scores {
        match self.average {
            Averaging::Binary => &self.metrics.binary,
            Averaging::Macro => &self.metrics.macro_avg,
            Averaging::Weighted => &self.metrics.weighted,
        }
    }
}
