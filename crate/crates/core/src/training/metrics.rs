use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Counts indexed `[true class][predicted class]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Samples per true class.
    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Fraction on the diagonal; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.correct() as f64 / total as f64
        }
    }

    /// Whitespace-separated integer table, one row per true class, preceded
    /// by `#` comment lines naming the classes in order.
    pub fn to_table(&self, labels: &[String]) -> String {
        let mut out = String::from("# rows: true class, columns: predicted class\n");
        writeln!(out, "# classes: {}", labels.join(" ")).unwrap();
        for row in &self.counts {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(out, "{}", cells.join(" ")).unwrap();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchMetrics {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

/// Eval-mode results over one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub samples: usize,
    /// Mean joint loss per sample.
    pub loss: f64,
    pub recognition: Option<BranchMetrics>,
    pub prediction: Option<BranchMetrics>,
}

/// One line of the training history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub acc_r: Option<f64>,
    pub acc_p: Option<f64>,
}

pub const HISTORY_HEADER: &str = "epoch,train_loss,val_loss,acc_r,acc_p";

/// CSV history: header `epoch,train_loss,val_loss,acc_r,acc_p`, one row per
/// epoch, accuracies of disabled branches left empty. Floats use the
/// shortest representation that parses back to the same value.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    let mut out = format!("{HISTORY_HEADER}\n");
    for r in history {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.epoch,
            r.train_loss,
            r.val_loss,
            opt(r.acc_r),
            opt(r.acc_p)
        )
        .unwrap();
    }
    out
}
