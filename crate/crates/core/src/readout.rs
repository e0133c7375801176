//! Linear readout: one-vs-rest L2-regularized hinge-loss SVMs.
//!
//! Each binary problem is solved in the dual by cyclic coordinate descent with
//! shrinking (the liblinear `L2R_L1LOSS_SVC_DUAL` scheme). The bias is learned
//! as the weight of a constant extra feature equal to 1. Features are binary,
//! so rows are stored as lists of set indices and every dot product is a
//! gather-sum over the weights.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ca::CellVector;
use crate::error::{RecaError, Result};

pub const DEFAULT_REGULARIZATION: f64 = 1.0;

/// Labelled binary feature rows of a common width.
#[derive(Debug, Clone, Default)]
pub struct TrainingSet {
    width: usize,
    num_classes: usize,
    rows: Vec<(CellVector, usize)>,
}

impl TrainingSet {
    pub fn new(width: usize, num_classes: usize) -> Self {
        TrainingSet {
            width,
            num_classes,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, feature: CellVector, label: usize) -> Result<()> {
        if feature.width() != self.width {
            return Err(RecaError::WidthMismatch {
                expected: self.width,
                actual: feature.width(),
            });
        }
        if label >= self.num_classes {
            return Err(RecaError::Training(format!(
                "label {label} outside 0..{}",
                self.num_classes
            )));
        }
        self.rows.push((feature, label));
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[(CellVector, usize)] {
        &self.rows
    }
}

/// Dual coordinate descent stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Projected-gradient spread at which a binary problem is considered solved.
    pub tolerance: f64,
    pub max_epochs: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 0.1,
            max_epochs: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub num_outputs: usize,
    pub feature_width: usize,
    pub regularization: f64,
    /// One row per output, `feature_width` weights followed by the bias.
    pub weights: Vec<Vec<f64>>,
}

impl ReadoutModel {
    pub fn zeros(num_outputs: usize, feature_width: usize) -> Self {
        ReadoutModel {
            num_outputs,
            feature_width,
            regularization: DEFAULT_REGULARIZATION,
            weights: vec![vec![0.0; feature_width + 1]; num_outputs],
        }
    }

    fn check_width(&self, feature: &CellVector) -> Result<()> {
        if feature.width() != self.feature_width {
            return Err(RecaError::WidthMismatch {
                expected: self.feature_width,
                actual: feature.width(),
            });
        }
        Ok(())
    }

    /// Linear score of every output.
    pub fn scores(&self, feature: &CellVector) -> Result<Vec<f64>> {
        self.check_width(feature)?;
        Ok(self
            .weights
            .iter()
            .map(|w| {
                let bias = w[self.feature_width];
                feature.ones_indices().map(|j| w[j]).sum::<f64>() + bias
            })
            .collect())
    }

    /// Argmax of the scores; the lowest index wins ties.
    pub fn predict(&self, feature: &CellVector) -> Result<usize> {
        let scores = self.scores(feature)?;
        let mut best = 0;
        for (k, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = k;
            }
        }
        Ok(best)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| RecaError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RecaError::io(path, e))?;
        let model: ReadoutModel = serde_json::from_str(&text)?;
        if model.weights.len() != model.num_outputs
            || model.weights.iter().any(|w| w.len() != model.feature_width + 1)
        {
            return Err(RecaError::Parse("weight matrix shape disagrees with header".into()));
        }
        Ok(model)
    }
}

pub fn train(data: &TrainingSet, regularization: f64) -> Result<ReadoutModel> {
    train_with(data, regularization, SolverOptions::default())
}

pub fn train_with(
    data: &TrainingSet,
    regularization: f64,
    options: SolverOptions,
) -> Result<ReadoutModel> {
    if !(regularization.is_finite() && regularization > 0.0) {
        return Err(RecaError::invalid("regularization", "must be a positive number"));
    }
    if data.is_empty() {
        return Err(RecaError::Training("no rows".into()));
    }
    let mut counts = vec![0usize; data.num_classes];
    for &(_, label) in &data.rows {
        counts[label] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(RecaError::Training("need at least two distinct labels".into()));
    }
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(RecaError::Training(format!("class {missing} has no rows")));
    }

    let problem = Problem::from_rows(data);
    let weights = (0..data.num_classes)
        .map(|class| problem.solve(class, regularization, options))
        .collect();
    Ok(ReadoutModel {
        num_outputs: data.num_classes,
        feature_width: data.width,
        regularization,
        weights,
    })
}

/// Deduplicated rows: identical (feature, label) pairs merge into one row
/// whose box constraint is scaled by its multiplicity, which leaves the
/// optimum unchanged.
struct Problem {
    width: usize,
    indices: Vec<Vec<u32>>,
    labels: Vec<usize>,
    multiplicity: Vec<f64>,
}

impl Problem {
    fn from_rows(data: &TrainingSet) -> Self {
        let mut seen: HashMap<(&CellVector, usize), usize> = HashMap::new();
        let mut problem = Problem {
            width: data.width,
            indices: Vec::new(),
            labels: Vec::new(),
            multiplicity: Vec::new(),
        };
        for (feature, label) in &data.rows {
            match seen.get(&(feature, *label)) {
                Some(&slot) => problem.multiplicity[slot] += 1.0,
                None => {
                    seen.insert((feature, *label), problem.labels.len());
                    problem
                        .indices
                        .push(feature.ones_indices().map(|j| j as u32).collect());
                    problem.labels.push(*label);
                    problem.multiplicity.push(1.0);
                }
            }
        }
        problem
    }

    fn solve(&self, class: usize, cost: f64, options: SolverOptions) -> Vec<f64> {
        let n = self.labels.len();
        let bias = self.width;
        let mut w = vec![0.0f64; self.width + 1];
        let y: Vec<f64> = self
            .labels
            .iter()
            .map(|&l| if l == class { 1.0 } else { -1.0 })
            .collect();
        let upper: Vec<f64> = self.multiplicity.iter().map(|m| m * cost).collect();
        // x·x for a binary row plus the constant bias feature
        let diag: Vec<f64> = self.indices.iter().map(|r| r.len() as f64 + 1.0).collect();
        let mut alpha = vec![0.0f64; n];
        let mut active: Vec<usize> = (0..n).collect();
        let mut active_len = n;
        let mut pg_max_old = f64::INFINITY;
        let mut pg_min_old = f64::NEG_INFINITY;
        let mut rng = ChaCha8Rng::seed_from_u64(class as u64);

        for _ in 0..options.max_epochs {
            let mut pg_max = f64::NEG_INFINITY;
            let mut pg_min = f64::INFINITY;
            active[..active_len].shuffle(&mut rng);

            let mut s = 0;
            while s < active_len {
                let i = active[s];
                let row = &self.indices[i];
                let dot = row.iter().map(|&j| w[j as usize]).sum::<f64>() + w[bias];
                let g = y[i] * dot - 1.0;

                let mut pg = 0.0;
                if alpha[i] == 0.0 {
                    if g > pg_max_old {
                        active_len -= 1;
                        active.swap(s, active_len);
                        continue;
                    }
                    if g < 0.0 {
                        pg = g;
                    }
                } else if alpha[i] == upper[i] {
                    if g < pg_min_old {
                        active_len -= 1;
                        active.swap(s, active_len);
                        continue;
                    }
                    if g > 0.0 {
                        pg = g;
                    }
                } else {
                    pg = g;
                }
                pg_max = pg_max.max(pg);
                pg_min = pg_min.min(pg);

                if pg.abs() > 1e-12 {
                    let old = alpha[i];
                    alpha[i] = (old - g / diag[i]).clamp(0.0, upper[i]);
                    let delta = (alpha[i] - old) * y[i];
                    for &j in row {
                        w[j as usize] += delta;
                    }
                    w[bias] += delta;
                }
                s += 1;
            }

            if pg_max - pg_min <= options.tolerance {
                if active_len == n {
                    break;
                }
                active_len = n;
                pg_max_old = f64::INFINITY;
                pg_min_old = f64::NEG_INFINITY;
                continue;
            }
            pg_max_old = if pg_max <= 0.0 { f64::INFINITY } else { pg_max };
            pg_min_old = if pg_min >= 0.0 { f64::NEG_INFINITY } else { pg_min };
        }
        w
    }
}
