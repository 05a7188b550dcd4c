use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::signal::FaultClass;

const N: usize = FaultClass::COUNT;

/// Rows are true classes, columns predicted classes, both by ordinal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; N]; N],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, truth: FaultClass, predicted: FaultClass) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn row_total(&self, truth: FaultClass) -> u64 {
        self.counts[truth.index()].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// `100 * count / row_total`; empty rows are all zero.
    pub fn percentages(&self) -> [[f64; N]; N] {
        let mut p = [[0.0; N]; N];
        for (i, row) in self.counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            if total > 0 {
                for (j, &c) in row.iter().enumerate() {
                    p[i][j] = 100.0 * c as f64 / total as f64;
                }
            }
        }
        p
    }

    /// Percent of `truth` segments classified correctly.
    pub fn recall(&self, truth: FaultClass) -> Option<f64> {
        let total = self.row_total(truth);
        (total > 0).then(|| 100.0 * self.counts[truth.index()][truth.index()] as f64 / total as f64)
    }

    /// Macro-averaged recall over the classes present, in percent.
    pub fn accuracy(&self) -> f64 {
        let recalls: Vec<f64> = FaultClass::ALL.iter().filter_map(|&c| self.recall(c)).collect();
        if recalls.is_empty() {
            0.0
        } else {
            recalls.iter().sum::<f64>() / recalls.len() as f64
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for c in FaultClass::ALL {
            out.push(',');
            out.push_str(c.title());
        }
        out.push('\n');
        for (c, row) in FaultClass::ALL.iter().zip(self.percentages()) {
            out.push_str(c.title());
            for v in row {
                write!(out, ",{v:.2}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Plain-text table of row percentages with the macro recall underneath.
    pub fn render(&self, title: &str) -> String {
        let mut out = format!("{title}\n{:<8}", "");
        for c in FaultClass::ALL {
            write!(out, "{:>9}", c.title()).unwrap();
        }
        out.push('\n');
        for (c, row) in FaultClass::ALL.iter().zip(self.percentages()) {
            write!(out, "{:<8}", c.title()).unwrap();
            for v in row {
                write!(out, "{v:>9.1}").unwrap();
            }
            out.push('\n');
        }
        writeln!(out, "accuracy (macro recall): {:.2}%", self.accuracy()).unwrap();
        out
    }
}
