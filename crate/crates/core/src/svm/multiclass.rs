use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::smo::{solve, BinarySvmModel, SvmParams};
use crate::decision::Decision;
use crate::error::{Error, Result};
use crate::signal::FaultClass;

/// One-vs-one ensemble. The pair `(a, b)` labels `a` as `+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassSvmModel {
    pub classes: Vec<FaultClass>,
    pub pairwise: Vec<((FaultClass, FaultClass), BinarySvmModel)>,
}

impl MulticlassSvmModel {
    pub fn converged(&self) -> bool {
        self.pairwise.iter().all(|(_, m)| m.converged)
    }

    /// Majority vote. Ties go to the class with the larger summed `|score|`
    /// over its won duels, then to the lowest ordinal.
    pub fn predict(&self, x: &[f64]) -> Result<FaultClass> {
        Ok(self.decide(x)?.class)
    }

    /// Vote outcome with the vote count of every class as its score.
    pub fn decide(&self, x: &[f64]) -> Result<Decision> {
        let mut votes = [0usize; FaultClass::COUNT];
        let mut weight = [0.0f64; FaultClass::COUNT];
        for ((a, b), model) in &self.pairwise {
            let p = model.predict(x)?;
            let winner = if p.sign > 0 { *a } else { *b };
            votes[winner.index()] += 1;
            weight[winner.index()] += p.score.abs();
        }
        let mut best = self.classes[0];
        for &c in &self.classes[1..] {
            let (i, j) = (c.index(), best.index());
            if votes[i] > votes[j] || (votes[i] == votes[j] && weight[i] > weight[j]) {
                best = c;
            }
        }
        Ok(Decision {
            class: best,
            scores: self.classes.iter().map(|c| (*c, votes[c.index()] as f64)).collect(),
        })
    }
}

/// Trains one binary machine per unordered pair of `classes`.
pub fn train_multiclass(
    data: &[(Vec<f64>, FaultClass)],
    classes: &[FaultClass],
    params: &SvmParams,
) -> Result<MulticlassSvmModel> {
    let mut classes = classes.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClassData);
    }
    for &c in &classes {
        if !data.iter().any(|(_, l)| *l == c) {
            return Err(Error::MissingClass(c));
        }
    }
    let mut pairs = Vec::new();
    for (i, &a) in classes.iter().enumerate() {
        for &b in &classes[i + 1..] {
            pairs.push((a, b));
        }
    }
    let pairwise = pairs
        .into_par_iter()
        .map(|(a, b)| {
            let (xs, ys): (Vec<&[f64]>, Vec<i8>) = data
                .iter()
                .filter(|(_, l)| *l == a || *l == b)
                .map(|(x, l)| (x.as_slice(), if *l == a { 1 } else { -1 }))
                .unzip();
            solve(&xs, &ys, params).map(|(m, _)| {
                if !m.converged {
                    log::warn!("SVM pair {a}/{b} stopped before reaching the KKT tolerance");
                }
                ((a, b), m)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MulticlassSvmModel { classes, pairwise })
}
