//! Structure-dynamics analyses built on the softness field: distributions,
//! rearrangement probabilities, Arrhenius scales, overlap functions, the
//! softness propagator, the facilitated overlap model, and aging.

pub mod aging;
pub mod arrhenius;
pub mod csv;
pub mod facilitation;
pub mod fit;
pub mod histogram;
pub mod overlap;
pub mod propagator;
pub mod rearrange_prob;

pub use aging::{aging_analysis, aging_rows, AgingAnalysis, AgingRow};
pub use arrhenius::{arrhenius_fit, onset_temperature, ArrheniusFit, OnsetResult};
pub use facilitation::{mean_field, model_overlap, MeanFieldOverlap, ModelOverlap};
pub use histogram::{softness_distributions, SoftnessHistogram};
pub use overlap::{overlap, OverlapConfig, OverlapResult};
pub use propagator::{propagator, Propagator, PropagatorConfig};
pub use rearrange_prob::{bayes_composed_curve, rearrangement_probability, RearrangementCurve};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("softness bins do not match between inputs")]
    BinningMismatch,
    #[error("need at least {needed} temperatures, got {found}")]
    TooFewTemperatures { needed: usize, found: usize },
    #[error("onset temperature undefined: {0}")]
    UndefinedOnset(String),
    #[error("degenerate analysis: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Rearrange(#[from] crate::rearrangement::RearrangeError),
    #[error(transparent)]
    Train(#[from] crate::classifier::TrainError),
}

/// Uniform softness binning shared across every analysis of one model.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SBinning {
    pub edges: Vec<f64>,
}

impl SBinning {
    pub fn new(lo: f64, hi: f64, n_bins: usize) -> SBinning {
        assert!(hi > lo && n_bins > 0);
        let w = (hi - lo) / n_bins as f64;
        SBinning {
            edges: (0..=n_bins).map(|k| lo + k as f64 * w).collect(),
        }
    }

    /// Bins spanning `mean +- span_sigmas` standard deviations of the finite
    /// values in `sample`.
    pub fn from_sample(
        sample: impl Iterator<Item = f64>,
        n_bins: usize,
        span_sigmas: f64,
    ) -> Result<SBinning, AnalysisError> {
        let mut n = 0usize;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for v in sample.filter(|v| v.is_finite()) {
            n += 1;
            let d = v - mean;
            mean += d / n as f64;
            m2 += d * (v - mean);
        }
        if n < 2 {
            return Err(AnalysisError::EmptyInput(
                "softness binning needs at least two samples".into(),
            ));
        }
        let std = (m2 / n as f64).sqrt().max(1e-12);
        Ok(SBinning::new(
            mean - span_sigmas * std,
            mean + span_sigmas * std,
            n_bins,
        ))
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn center(&self, b: usize) -> f64 {
        0.5 * (self.edges[b] + self.edges[b + 1])
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_bins()).map(|b| self.center(b)).collect()
    }

    /// Bin index of `s`, outliers clamped into the end bins so a binned
    /// partition always covers every particle.
    pub fn bin_of(&self, s: f64) -> usize {
        let lo = self.edges[0];
        let idx = ((s - lo) / self.width()).floor();
        (idx.max(0.0) as usize).min(self.n_bins() - 1)
    }

    pub fn approx_eq(&self, other: &SBinning) -> bool {
        self.edges.len() == other.edges.len()
            && self
                .edges
                .iter()
                .zip(&other.edges)
                .all(|(a, b)| (a - b).abs() < 1e-9)
    }
}
