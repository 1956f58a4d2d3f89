//! Softness: a linear SVM hyperplane separating rearranging from stable
//! local structures, evaluated as a signed distance.

mod svm;

pub use svm::{solve_l1_svc, DEFAULT_MAX_PASSES, DEFAULT_TOLERANCE};

use crate::features::{featurize, featurize_frame, FeatureGrid, FeatureVector};
use crate::rearrangement::Label;
use crate::trajectory::{Frame, Species, Trajectory};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training needs both classes present (got {rearranging} / {stable})")]
    SingleClass { rearranging: usize, stable: usize },
    #[error("non-finite feature value in example {0}")]
    NonFiniteFeature(usize),
    #[error("solver did not reach gap {target:.1e} within {passes} passes (gap {gap:.1e})")]
    NonConvergence { target: f64, passes: usize, gap: f64 },
    #[error("feature length {found} does not match the model grid ({expected})")]
    GridMismatch { expected: usize, found: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
}

/// Training knobs. With `c: None` the regularization strength is chosen by
/// k-fold cross-validation over `c_grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub c: Option<f64>,
    pub c_grid: Vec<f64>,
    pub folds: usize,
    pub tolerance: f64,
    pub max_passes: usize,
    pub seed: u64,
    /// Central-particle species this model is trained for.
    pub central_species: Species,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            c: None,
            c_grid: vec![0.01, 0.1, 1.0, 10.0],
            folds: 5,
            tolerance: DEFAULT_TOLERANCE,
            max_passes: DEFAULT_MAX_PASSES,
            seed: 0,
            central_species: Species::A,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainingMeta {
    pub temperature: f64,
    pub n_rearranging: usize,
    pub n_stable: usize,
    pub accuracy: f64,
    pub central_species: Option<Species>,
}

/// The learned hyperplane. Weights and bias live in standardized feature
/// space; the per-feature mean/scale used at training are folded in, so
/// [`SoftnessModel::softness_from_features`] always takes raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftnessModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub grid: FeatureGrid,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
    pub meta: TrainingMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_accuracy: f64,
    /// Mean held-out accuracy over the folds at the chosen C.
    pub test_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    /// Training points with margin below 1.
    pub margin_violations: usize,
    pub c: f64,
    pub solver_passes: usize,
    pub duality_gap: f64,
}

impl SoftnessModel {
    /// Signed distance of a raw feature vector from the hyperplane.
    /// Positive predicts rearrangement.
    pub fn softness_from_features(&self, features: &[f64]) -> Result<f64, TrainError> {
        if features.len() != self.weights.len() {
            return Err(TrainError::GridMismatch {
                expected: self.weights.len(),
                found: features.len(),
            });
        }
        let mut acc = self.bias;
        for k in 0..features.len() {
            acc += self.weights[k] * (features[k] - self.feature_means[k])
                / self.feature_scales[k];
        }
        Ok(acc)
    }

    /// Gauge transformation `S -> alpha S + beta` (alpha > 0): rescales the
    /// hyperplane without changing any classification decision or ranking.
    pub fn affine_transformed(&self, alpha: f64, beta: f64) -> SoftnessModel {
        SoftnessModel {
            weights: self.weights.iter().map(|w| alpha * w).collect(),
            bias: alpha * self.bias + beta,
            ..self.clone()
        }
    }
}

/// Softness of particle `i` in a frame, featurizing with the model's grid.
pub fn softness(frame: &Frame, i: usize, model: &SoftnessModel) -> Result<f64, TrainError> {
    let fv = featurize(frame, i, &model.grid);
    model.softness_from_features(&fv.values)
}

/// One row of the learned weight function.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    pub species: Species,
    pub r: f64,
    /// Weight unfolded back to raw-feature space.
    pub w_raw: f64,
    /// `r^(d-1) w(r)`: the kernel integrating the local density into softness.
    pub w_tilde: f64,
}

/// Unfolds standardization and maps bins onto radii: `w_tilde = r^(d-1) w`.
pub fn weight_function(model: &SoftnessModel, dim: usize) -> Vec<WeightRow> {
    let n_bins = model.grid.n_bins();
    let mut rows = Vec::with_capacity(model.weights.len());
    for (bi, &species) in model.grid.species_list.iter().enumerate() {
        for b in 0..n_bins {
            let k = bi * n_bins + b;
            let r = model.grid.radius(b + 1);
            let w_raw = model.weights[k] / model.feature_scales[k];
            rows.push(WeightRow {
                species,
                r,
                w_raw,
                w_tilde: r.powi(dim as i32 - 1) * w_raw,
            });
        }
    }
    rows
}

fn standardize(rows: &[&FeatureVector]) -> (Vec<f64>, Vec<f64>) {
    let n = rows[0].values.len();
    let l = rows.len() as f64;
    let mut means = vec![0.0; n];
    for fv in rows {
        for (m, v) in means.iter_mut().zip(&fv.values) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= l);
    let mut vars = vec![0.0; n];
    for fv in rows {
        for k in 0..n {
            let d = fv.values[k] - means[k];
            vars[k] += d * d;
        }
    }
    let scales: Vec<f64> = vars
        .iter()
        .map(|&v| {
            let s = (v / l).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0 // constant feature: centered to zero, weight immaterial
            }
        })
        .collect();
    (means, scales)
}

fn accuracy_of(
    weights: &[f64],
    bias: f64,
    rows: &[Vec<f64>],
    labels: &[f64],
    subset: &[usize],
) -> f64 {
    let mut hits = 0usize;
    for &k in subset {
        let f: f64 = bias
            + weights
                .iter()
                .zip(&rows[k])
                .map(|(w, x)| w * x)
                .sum::<f64>();
        if (f > 0.0) == (labels[k] > 0.0) {
            hits += 1;
        }
    }
    hits as f64 / subset.len() as f64
}

/// Trains the softness hyperplane on labeled feature vectors built with
/// `grid`.
///
/// Features are standardized internally (zero mean, unit variance per
/// feature); the standardization is stored in the model so downstream
/// softness evaluations use raw features.
pub fn train(
    examples: &[(FeatureVector, Label)],
    grid: &FeatureGrid,
    cfg: &TrainingConfig,
) -> Result<(SoftnessModel, TrainReport), TrainError> {
    let n_rearr = examples
        .iter()
        .filter(|(_, l)| *l == Label::Rearranging)
        .count();
    let n_stable = examples.len() - n_rearr;
    if n_rearr == 0 || n_stable == 0 {
        return Err(TrainError::SingleClass {
            rearranging: n_rearr,
            stable: n_stable,
        });
    }
    for (k, (fv, _)) in examples.iter().enumerate() {
        if !fv.values.iter().all(|v| v.is_finite()) {
            return Err(TrainError::NonFiniteFeature(k));
        }
    }
    if cfg.folds < 2 {
        return Err(TrainError::InvalidConfig("need at least 2 folds".into()));
    }
    let feature_rows: Vec<&FeatureVector> = examples.iter().map(|(fv, _)| fv).collect();
    let (means, scales) = standardize(&feature_rows);
    let rows: Vec<Vec<f64>> = feature_rows
        .iter()
        .map(|fv| {
            fv.values
                .iter()
                .enumerate()
                .map(|(k, v)| (v - means[k]) / scales[k])
                .collect()
        })
        .collect();
    let labels: Vec<f64> = examples
        .iter()
        .map(|(_, l)| if *l == Label::Rearranging { 1.0 } else { -1.0 })
        .collect();

    // deterministic fold assignment
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_f01d);
    order.shuffle(&mut rng);
    let fold_of = |pos: usize| pos % cfg.folds;

    let candidate_cs: Vec<f64> = match cfg.c {
        Some(c) => vec![c],
        None => cfg.c_grid.clone(),
    };
    if candidate_cs.is_empty() {
        return Err(TrainError::InvalidConfig("empty C grid".into()));
    }

    let mut best: Option<(f64, f64, Vec<f64>)> = None; // (mean_acc, c, fold accs)
    for &c in &candidate_cs {
        let mut fold_accs = Vec::with_capacity(cfg.folds);
        for fold in 0..cfg.folds {
            let train_idx: Vec<usize> = order
                .iter()
                .enumerate()
                .filter(|(pos, _)| fold_of(*pos) != fold)
                .map(|(_, &k)| k)
                .collect();
            let test_idx: Vec<usize> = order
                .iter()
                .enumerate()
                .filter(|(pos, _)| fold_of(*pos) == fold)
                .map(|(_, &k)| k)
                .collect();
            if test_idx.is_empty() || train_idx.is_empty() {
                continue;
            }
            let sub_rows: Vec<Vec<f64>> = train_idx.iter().map(|&k| rows[k].clone()).collect();
            let sub_labels: Vec<f64> = train_idx.iter().map(|&k| labels[k]).collect();
            let sol = svm::solve_l1_svc(
                &sub_rows,
                &sub_labels,
                c,
                // folds only rank C values; a looser gap keeps CV cheap
                cfg.tolerance.max(1e-5),
                cfg.max_passes,
                cfg.seed.wrapping_add(fold as u64),
            );
            fold_accs.push(accuracy_of(&sol.weights, sol.bias, &rows, &labels, &test_idx));
        }
        let mean_acc = fold_accs.iter().sum::<f64>() / fold_accs.len() as f64;
        let better = match &best {
            None => true,
            Some((acc, _, _)) => mean_acc > *acc + 1e-12,
        };
        if better {
            best = Some((mean_acc, c, fold_accs));
        }
    }
    let (test_accuracy, c, fold_accuracies) = best.unwrap();

    let sol = svm::solve_l1_svc(&rows, &labels, c, cfg.tolerance, cfg.max_passes, cfg.seed);
    if sol.gap > cfg.tolerance * 10.0 {
        return Err(TrainError::NonConvergence {
            target: cfg.tolerance,
            passes: sol.passes,
            gap: sol.gap,
        });
    }
    let all: Vec<usize> = (0..rows.len()).collect();
    let train_accuracy = accuracy_of(&sol.weights, sol.bias, &rows, &labels, &all);
    let margin_violations = rows
        .iter()
        .zip(&labels)
        .filter(|(x, &y)| {
            let f: f64 = sol.bias
                + sol
                    .weights
                    .iter()
                    .zip(x.iter())
                    .map(|(w, v)| w * v)
                    .sum::<f64>();
            y * f < 1.0 - 1e-9
        })
        .count();

    if grid.feature_len() != rows[0].len() {
        return Err(TrainError::GridMismatch {
            expected: grid.feature_len(),
            found: rows[0].len(),
        });
    }
    let model = SoftnessModel {
        weights: sol.weights,
        bias: sol.bias,
        grid: grid.clone(),
        feature_means: means,
        feature_scales: scales,
        meta: TrainingMeta {
            temperature: 0.0,
            n_rearranging: n_rearr,
            n_stable,
            accuracy: test_accuracy,
            central_species: Some(cfg.central_species),
        },
    };
    let report = TrainReport {
        train_accuracy,
        test_accuracy,
        fold_accuracies,
        margin_violations,
        c,
        solver_passes: sol.passes,
        duality_gap: sol.gap,
    };
    Ok((model, report))
}

/// Accuracy of a trained model on held-out labeled examples.
pub fn evaluate(
    model: &SoftnessModel,
    examples: &[(FeatureVector, Label)],
) -> Result<f64, TrainError> {
    if examples.is_empty() {
        return Ok(f64::NAN);
    }
    let mut hits = 0usize;
    for (fv, label) in examples {
        let s = model.softness_from_features(&fv.values)?;
        let predicted_rearranging = s > 0.0;
        if predicted_rearranging == (*label == Label::Rearranging) {
            hits += 1;
        }
    }
    Ok(hits as f64 / examples.len() as f64)
}

/// Softness of every central-species particle at every frame.
#[derive(Debug, Clone)]
pub struct SoftnessField {
    pub times: Vec<f64>,
    /// Row-major `frames x particles`; NaN for particles outside the
    /// central species.
    pub values: Vec<f64>,
    pub n_particles: usize,
    pub central: Species,
}

impl SoftnessField {
    pub fn compute(traj: &Trajectory, model: &SoftnessModel) -> Result<SoftnessField, TrainError> {
        let central = model
            .meta
            .central_species
            .unwrap_or(Species::A);
        let n = traj.n_particles();
        let mut values = vec![f64::NAN; traj.n_frames() * n];
        for (fidx, frame) in traj.frames.iter().enumerate() {
            for fv in featurize_frame(frame, &model.grid, Some(central)) {
                values[fidx * n + fv.particle] = model.softness_from_features(&fv.values)?;
            }
        }
        Ok(SoftnessField {
            times: traj.frames.iter().map(|f| f.time).collect(),
            values,
            n_particles: n,
            central,
        })
    }

    #[inline]
    pub fn value(&self, frame: usize, particle: usize) -> f64 {
        self.values[frame * self.n_particles + particle]
    }

    /// Mean softness over all defined entries.
    pub fn mean(&self) -> f64 {
        let mut acc = 0.0;
        let mut count = 0usize;
        for v in &self.values {
            if v.is_finite() {
                acc += v;
                count += 1;
            }
        }
        acc / count as f64
    }
}

pub mod persist;

#[cfg(test)]
mod tests;
