use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::Label;

/// Counts with hate as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Same counts with non-hate treated as positive.
    pub fn flipped(&self) -> Self {
        Self::new(self.tn, self.fn_, self.fp, self.tp)
    }

    pub fn record(&mut self, predicted: Label, truth: Label) {
        match (predicted, truth) {
            (Label::Hate, Label::Hate) => self.tp += 1,
            (Label::Hate, Label::NonHate) => self.fp += 1,
            (Label::NonHate, Label::Hate) => self.fn_ += 1,
            (Label::NonHate, Label::NonHate) => self.tn += 1,
        }
    }
}

pub fn confusion(predictions: &[Label], truths: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if predictions.len() != truths.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    if truths.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(truths) {
        cm.record(p, t);
    }
    Ok(cm)
}

/// Which ratios hit a zero denominator and were reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Degenerate {
    pub accuracy: bool,
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
    pub fpr: bool,
}

impl Degenerate {
    pub fn any(&self) -> bool {
        self.accuracy || self.precision || self.recall || self.f1 || self.fpr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr: f64,
    pub degenerate: Degenerate,
}

fn ratio(num: f64, den: f64, flag: &mut bool) -> f64 {
    if den == 0.0 {
        *flag = true;
        0.0
    } else {
        num / den
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    let (tp, fp, fn_, tn) = (cm.tp as f64, cm.fp as f64, cm.fn_ as f64, cm.tn as f64);
    let mut d = Degenerate::default();
    let accuracy = ratio(tp + tn, tp + fp + fn_ + tn, &mut d.accuracy);
    let precision = ratio(tp, tp + fp, &mut d.precision);
    let recall = ratio(tp, tp + fn_, &mut d.recall);
    let f1 = ratio(2.0 * precision * recall, precision + recall, &mut d.f1);
    let fpr = ratio(fp, fp + tn, &mut d.fpr);
    Metrics {
        accuracy,
        precision,
        recall,
        f1,
        fpr,
        degenerate: d,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub hate: ClassMetrics,
    pub non_hate: ClassMetrics,
    pub accuracy: f64,
    pub macro_avg: ClassMetrics,
    pub weighted_avg: ClassMetrics,
    /// False positive rate with hate as the positive class.
    pub fpr: f64,
    pub confusion: ConfusionMatrix,
    pub degenerate: bool,
}

fn class_row(cm: &ConfusionMatrix) -> (ClassMetrics, Metrics) {
    let m = metrics(cm);
    (
        ClassMetrics {
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            support: cm.tp + cm.fn_,
        },
        m,
    )
}

pub fn classification_report(cm: &ConfusionMatrix) -> Result<ClassReport, EvalError> {
    if cm.tp + cm.fn_ == 0 || cm.fp + cm.tn == 0 {
        return Err(EvalError::SingleClassDataset);
    }
    let (hate, hm) = class_row(cm);
    let (non_hate, nm) = class_row(&cm.flipped());
    let total = cm.total();
    let (wh, wn) = (hate.support as f64 / total as f64, non_hate.support as f64 / total as f64);
    let avg = |a: f64, b: f64| (a + b) / 2.0;
    let weighted = |a: f64, b: f64| a * wh + b * wn;
    Ok(ClassReport {
        accuracy: hm.accuracy,
        fpr: hm.fpr,
        macro_avg: ClassMetrics {
            precision: avg(hate.precision, non_hate.precision),
            recall: avg(hate.recall, non_hate.recall),
            f1: avg(hate.f1, non_hate.f1),
            support: total,
        },
        weighted_avg: ClassMetrics {
            precision: weighted(hate.precision, non_hate.precision),
            recall: weighted(hate.recall, non_hate.recall),
            f1: weighted(hate.f1, non_hate.f1),
            support: total,
        },
        hate,
        non_hate,
        confusion: *cm,
        degenerate: hm.degenerate.any() || nm.degenerate.any(),
    })
}

impl ClassReport {
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<14}{:>10}{:>10}{:>10}{:>10}\n",
            "", "precision", "recall", "f1-score", "support"
        );
        let mut row = |name: &str, m: &ClassMetrics| {
            let _ = writeln!(
                out,
                "{:<14}{:>10.2}{:>10.2}{:>10.2}{:>10}",
                name, m.precision, m.recall, m.f1, m.support
            );
        };
        row("Hate", &self.hate);
        row("Non-hate", &self.non_hate);
        row("macro avg", &self.macro_avg);
        row("weighted avg", &self.weighted_avg);
        let _ = writeln!(out, "{:<14}{:>30.2}{:>10}", "accuracy", self.accuracy, self.confusion.total());
        let _ = writeln!(out, "{:<14}{:>30.2}", "FPR", self.fpr);
        out
    }
}
