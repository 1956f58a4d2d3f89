//! The probability that a particle of given softness is rearranging.

use super::{AnalysisError, SBinning};
use crate::classifier::SoftnessField;
use crate::rearrangement::PhopField;

#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementCurve {
    pub temperature: f64,
    pub edges: Vec<f64>,
    pub s_centers: Vec<f64>,
    /// Per-bin rearranging fraction; NaN where the bin is masked.
    pub p_r: Vec<f64>,
    pub rearranging: Vec<u64>,
    pub total: Vec<u64>,
    pub threshold: f64,
    pub min_count: u64,
}

impl RearrangementCurve {
    /// Bins carrying enough statistics and a nonzero rate.
    pub fn populated(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.s_centers
            .iter()
            .zip(&self.p_r)
            .filter(|(_, p)| p.is_finite() && **p > 0.0)
            .map(|(&s, &p)| (s, p))
    }

    /// Ratio of the largest to smallest populated rate, in decades.
    pub fn dynamic_range_decades(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (_, p) in self.populated() {
            lo = lo.min(p);
            hi = hi.max(p);
        }
        if hi > 0.0 && lo.is_finite() {
            (hi / lo).log10()
        } else {
            0.0
        }
    }
}

/// Direct estimator: the fraction of particle-frames with `p_hop >
/// threshold`, binned by the softness at the same instant. Bins with fewer
/// than `min_count` samples are masked.
pub fn rearrangement_probability(
    field: &SoftnessField,
    phop: &PhopField,
    temperature: f64,
    threshold: f64,
    binning: &SBinning,
    min_count: u64,
) -> Result<RearrangementCurve, AnalysisError> {
    let n_bins = binning.n_bins();
    let mut rearranging = vec![0u64; n_bins];
    let mut total = vec![0u64; n_bins];
    for (row, _) in phop.times.iter().enumerate() {
        let fidx = phop.first_frame + row;
        for i in 0..field.n_particles {
            let s = field.value(fidx, i);
            if !s.is_finite() {
                continue;
            }
            let b = binning.bin_of(s);
            total[b] += 1;
            if phop.value(row, i) > threshold {
                rearranging[b] += 1;
            }
        }
    }
    if total.iter().all(|&t| t == 0) {
        return Err(AnalysisError::EmptyInput(
            "no particle-frames with defined softness".into(),
        ));
    }
    let p_r = (0..n_bins)
        .map(|b| {
            if total[b] >= min_count {
                rearranging[b] as f64 / total[b] as f64
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(RearrangementCurve {
        temperature,
        edges: binning.edges.clone(),
        s_centers: binning.centers(),
        p_r,
        rearranging,
        total,
        threshold,
        min_count,
    })
}

/// Bayes-composed estimator `P(S|R) P(R) / P(S)` evaluated through three
/// separately normalized histograms over the same particle-frames. Agrees
/// with the direct estimator bin-by-bin up to floating-point error; kept as
/// an independent route for consistency checks.
pub fn bayes_composed_curve(
    field: &SoftnessField,
    phop: &PhopField,
    temperature: f64,
    threshold: f64,
    binning: &SBinning,
    min_count: u64,
) -> Result<RearrangementCurve, AnalysisError> {
    let n_bins = binning.n_bins();
    let mut counts = vec![0u64; n_bins];
    let mut counts_r = vec![0u64; n_bins];
    let mut n_all = 0u64;
    let mut n_r = 0u64;
    for (row, _) in phop.times.iter().enumerate() {
        let fidx = phop.first_frame + row;
        for i in 0..field.n_particles {
            let s = field.value(fidx, i);
            if !s.is_finite() {
                continue;
            }
            let b = binning.bin_of(s);
            counts[b] += 1;
            n_all += 1;
            if phop.value(row, i) > threshold {
                counts_r[b] += 1;
                n_r += 1;
            }
        }
    }
    if n_all == 0 {
        return Err(AnalysisError::EmptyInput(
            "no particle-frames with defined softness".into(),
        ));
    }
    let p_of_r = n_r as f64 / n_all as f64;
    let w = binning.width();
    let p_r = (0..n_bins)
        .map(|b| {
            if counts[b] >= min_count && counts[b] > 0 {
                let p_s_given_r = if n_r > 0 {
                    counts_r[b] as f64 / (n_r as f64 * w)
                } else {
                    0.0
                };
                let p_s = counts[b] as f64 / (n_all as f64 * w);
                p_s_given_r * p_of_r / p_s
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(RearrangementCurve {
        temperature,
        edges: binning.edges.clone(),
        s_centers: binning.centers(),
        p_r,
        rearranging: counts_r,
        total: counts,
        threshold,
        min_count,
    })
}
