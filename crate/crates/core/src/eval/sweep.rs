//! Augmentation-ratio sweep: one model per ratio, scored on clean and noisy
//! test clips.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::experiment::{evaluate_clean, evaluate_noisy, train_with_ratio, ExperimentConfig, ExperimentData};
use super::metrics::ClassMetrics;
use crate::model::History;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestCondition {
    Clean,
    Noisy,
}

impl TestCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            TestCondition::Clean => "clean",
            TestCondition::Noisy => "noisy",
        }
    }
}

impl fmt::Display for TestCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ratio: usize,
    pub condition: TestCondition,
    /// Macro-averaged precision, recall and F1.
    pub macro_avg: ClassMetrics,
    /// Correct clips over all clips.
    pub accuracy: f64,
    pub n_clips: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub histories: Vec<(usize, History)>,
}

impl SweepTable {
    pub fn get(&self, ratio: usize, condition: TestCondition) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.ratio == ratio && r.condition == condition)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("ratio,test,precision,recall,f1,accuracy\n");
        for r in &self.rows {
            let m = &r.macro_avg;
            let _ = writeln!(
                s,
                "{},{},{:.6},{:.6},{:.6},{:.6}",
                r.ratio, r.condition, m.precision, m.recall, m.f1, r.accuracy
            );
        }
        s
    }
}

impl fmt::Display for SweepTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>6} {:<6}{:>10}{:>10}{:>10}{:>10}", "ratio", "test", "precision", "recall", "f1", "accuracy")?;
        for r in &self.rows {
            let m = &r.macro_avg;
            writeln!(
                f,
                "{:>6} {:<6}{:>10.4}{:>10.4}{:>10.4}{:>10.4}",
                r.ratio, r.condition, m.precision, m.recall, m.f1, r.accuracy
            )?;
        }
        Ok(())
    }
}

/// Trains one model per ratio with the same seeds and data, and scores each
/// on the clean and noisy test conditions. `on_row` sees rows as they land.
pub fn ratio_sweep(
    data: &ExperimentData,
    ratios: &[usize],
    cfg: &ExperimentConfig,
    mut on_row: impl FnMut(&SweepRow),
) -> Result<SweepTable> {
    let mut seen = BTreeSet::new();
    for &r in ratios {
        if r == 0 {
            return Err(Error::InvalidConfig("augmentation ratio must be >= 1".into()));
        }
        if !seen.insert(r) {
            return Err(Error::DuplicateRatio(r));
        }
    }
    if data.test.is_empty() {
        return Err(Error::EmptySplit("test".into()));
    }
    let mut table = SweepTable::default();
    for &ratio in ratios {
        let (model, history) = train_with_ratio(data, ratio, cfg, |_| {})?;
        for (condition, report) in [
            (TestCondition::Clean, evaluate_clean(&model, data, cfg)?),
            (TestCondition::Noisy, evaluate_noisy(&model, data, cfg)?),
        ] {
            let row = SweepRow {
                ratio,
                condition,
                macro_avg: report.metrics.macro_avg,
                accuracy: report.overall_accuracy,
                n_clips: report.n_clips,
            };
            on_row(&row);
            table.rows.push(row);
        }
        table.histories.push((ratio, history));
    }
    Ok(table)
}
