//! Extension neural network: one interval per class and feature, scored by
//! extension distance and adapted on misclassified patterns.

use serde::{Deserialize, Serialize};

use crate::decision::Decision;
use crate::error::{Error, Result};
use crate::math::check_dim;
use crate::signal::FaultClass;

pub const DEFAULT_ETA: f64 = 0.219;
pub const DEFAULT_EPOCHS: usize = 100;
const WIDTH_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnnModel {
    /// Row order of the weight matrices.
    pub classes: Vec<FaultClass>,
    pub w_lower: Vec<Vec<f64>>,
    pub w_upper: Vec<Vec<f64>>,
    pub centers: Vec<Vec<f64>>,
    pub eta: f64,
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidLearningRate(eta))
    }
}

impl EnnModel {
    /// Bounds start at the per-class minimum and maximum of every feature.
    pub fn init(data: &[(Vec<f64>, FaultClass)], classes: &[FaultClass], eta: f64) -> Result<Self> {
        check_eta(eta)?;
        let mut classes = classes.to_vec();
        classes.sort();
        classes.dedup();
        let dim = data.first().ok_or(Error::EmptyInput)?.0.len();
        for (x, _) in data {
            check_dim(dim, x.len())?;
        }
        let mut w_lower = vec![vec![f64::INFINITY; dim]; classes.len()];
        let mut w_upper = vec![vec![f64::NEG_INFINITY; dim]; classes.len()];
        let mut seen = vec![false; classes.len()];
        for (x, label) in data {
            let Some(c) = classes.iter().position(|c| c == label) else {
                continue;
            };
            seen[c] = true;
            for j in 0..dim {
                w_lower[c][j] = w_lower[c][j].min(x[j]);
                w_upper[c][j] = w_upper[c][j].max(x[j]);
            }
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::MissingClass(classes[c]));
        }
        let mut model = Self {
            classes,
            centers: w_lower.clone(),
            w_lower,
            w_upper,
            eta,
        };
        for c in 0..model.classes.len() {
            model.refresh_centers(c);
        }
        Ok(model)
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn n_features(&self) -> usize {
        self.centers.first().map_or(0, Vec::len)
    }

    fn refresh_centers(&mut self, c: usize) {
        for j in 0..self.centers[c].len() {
            if self.w_lower[c][j] > self.w_upper[c][j] {
                std::mem::swap(&mut self.w_lower[c][j], &mut self.w_upper[c][j]);
            }
            self.centers[c][j] = (self.w_upper[c][j] + self.w_lower[c][j]) / 2.0;
        }
    }

    pub fn extension_distance(&self, class_index: usize, x: &[f64]) -> Result<f64> {
        if class_index >= self.n_classes() {
            return Err(Error::UnknownClass(class_index));
        }
        check_dim(self.n_features(), x.len())?;
        Ok(self.distance(class_index, x))
    }

    fn distance(&self, c: usize, x: &[f64]) -> f64 {
        let mut ed = 0.0;
        for j in 0..x.len() {
            let half = (self.w_upper[c][j] - self.w_lower[c][j]) / 2.0;
            ed += ((x[j] - self.centers[c][j]).abs() - half) / (half.abs() + WIDTH_GUARD) + 1.0;
        }
        ed
    }

    fn nearest(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = self.distance(0, x);
        for c in 1..self.n_classes() {
            let d = self.distance(c, x);
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        best
    }

    /// Smallest extension distance wins; ties go to the lowest ordinal.
    pub fn classify(&self, x: &[f64]) -> Result<Decision> {
        check_dim(self.n_features(), x.len())?;
        let scores = self
            .classes
            .iter()
            .enumerate()
            .map(|(c, class)| (*class, self.distance(c, x)))
            .collect();
        Ok(Decision::lowest(scores))
    }

    /// One pass over `data` in order. Returns the number of misclassified
    /// patterns, each of which triggered an update.
    pub fn train_epoch(&mut self, data: &[(Vec<f64>, FaultClass)]) -> Result<usize> {
        let mut errors = 0;
        for (x, label) in data {
            check_dim(self.n_features(), x.len())?;
            let truth = self
                .classes
                .iter()
                .position(|c| c == label)
                .ok_or(Error::UnknownClass(label.index()))?;
            let predicted = self.nearest(x);
            if predicted == truth {
                continue;
            }
            errors += 1;
            // shift whole intervals so widths are kept: toward x for the true
            // class, away from x for the class that won
            let eta = self.eta;
            for j in 0..x.len() {
                let pull = eta * (x[j] - self.centers[truth][j]);
                self.w_lower[truth][j] += pull;
                self.w_upper[truth][j] += pull;
                let push = eta * (x[j] - self.centers[predicted][j]);
                self.w_lower[predicted][j] -= push;
                self.w_upper[predicted][j] -= push;
            }
            self.refresh_centers(truth);
            self.refresh_centers(predicted);
        }
        Ok(errors)
    }
}

pub fn extension_distance(model: &EnnModel, class_index: usize, x: &[f64]) -> Result<f64> {
    model.extension_distance(class_index, x)
}

pub fn classify(model: &EnnModel, x: &[f64]) -> Result<Decision> {
    model.classify(x)
}

/// Initializes from the class boxes and runs `epochs` passes. The curve holds
/// the misclassification rate of every epoch.
pub fn train(
    data: &[(Vec<f64>, FaultClass)],
    classes: &[FaultClass],
    epochs: usize,
    eta: f64,
) -> Result<(EnnModel, Vec<f64>)> {
    let mut model = EnnModel::init(data, classes, eta)?;
    let mut curve = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let errors = model.train_epoch(data)?;
        curve.push(errors as f64 / data.len() as f64);
    }
    Ok((model, curve))
}
