//! Confusion bookkeeping and precision/recall/F1/accuracy.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::gesture::{GestureClass, NUM_CLASSES};
use crate::{Error, Result};

/// One-vs-rest counts for a single class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ClassCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub per_class: [ClassCounts; NUM_CLASSES],
    /// Number of evaluated items; every class row must sum to it.
    pub total: u64,
}

impl ConfusionCounts {
    pub fn validate(&self) -> Result<()> {
        for (c, k) in self.per_class.iter().enumerate() {
            if k.total() != self.total {
                return Err(Error::InconsistentCounts(format!(
                    "{} sums to {} but {} items were evaluated",
                    GestureClass::ALL[c],
                    k.total(),
                    self.total
                )));
            }
        }
        Ok(())
    }
}

/// Rows are true classes; columns are predicted classes plus a final
/// "no event" column for clips where nothing survived suppression.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES + 1]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: GestureClass, predicted: Option<GestureClass>) {
        let col = predicted.map_or(NUM_CLASSES, GestureClass::index);
        self.counts[truth.index()][col] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..NUM_CLASSES).map(|c| self.counts[c][c]).sum()
    }

    pub fn misses(&self) -> u64 {
        self.counts.iter().map(|r| r[NUM_CLASSES]).sum()
    }

    /// Fraction of items whose predicted class equals the true class.
    pub fn overall_accuracy(&self) -> f64 {
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            self.correct() as f64 / t as f64
        }
    }

    pub fn to_counts(&self) -> ConfusionCounts {
        let total = self.total();
        let mut per_class = [ClassCounts::default(); NUM_CLASSES];
        for (c, k) in per_class.iter_mut().enumerate() {
            let tp = self.counts[c][c];
            let row: u64 = self.counts[c].iter().sum();
            let col: u64 = (0..NUM_CLASSES).map(|r| self.counts[r][c]).sum();
            *k = ClassCounts { tp, fn_: row - tp, fp: col - tp, tn: total - row - (col - tp) };
        }
        ConfusionCounts { per_class, total }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("true\\predicted");
        for c in GestureClass::ALL {
            let _ = write!(s, ",{c}");
        }
        s.push_str(",none\n");
        for (c, row) in self.counts.iter().enumerate() {
            let _ = write!(s, "{}", GestureClass::ALL[c]);
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<11}", "")?;
        for c in GestureClass::ALL {
            write!(f, "{:>10}", c.as_str())?;
        }
        writeln!(f, "{:>10}", "none")?;
        for (c, row) in self.counts.iter().enumerate() {
            write!(f, "{:<11}", GestureClass::ALL[c].as_str())?;
            for v in row {
                write!(f, "{v:>10}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: [ClassMetrics; NUM_CLASSES],
    /// Unweighted mean over classes.
    pub macro_avg: ClassMetrics,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn class_metrics(k: &ClassCounts) -> ClassMetrics {
    let precision = ratio(k.tp, k.tp + k.fp);
    let recall = ratio(k.tp, k.tp + k.fn_);
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    ClassMetrics { precision, recall, f1, accuracy: ratio(k.tp + k.tn, k.total()) }
}

pub fn metrics(counts: &ConfusionCounts) -> Result<MetricsReport> {
    counts.validate()?;
    let per_class = counts.per_class.map(|k| class_metrics(&k));
    let n = NUM_CLASSES as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / n;
    Ok(MetricsReport {
        per_class,
        macro_avg: ClassMetrics {
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
            accuracy: mean(|m| m.accuracy),
        },
    })
}
