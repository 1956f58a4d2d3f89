//! Softness distributions P(S) and P(S|R).

use super::{AnalysisError, SBinning};
use crate::classifier::SoftnessField;
use crate::rearrangement::PhopField;

#[derive(Debug, Clone, PartialEq)]
pub struct SoftnessHistogram {
    pub edges: Vec<f64>,
    /// Normalized density over all particle-frames.
    pub p_of_s: Vec<f64>,
    pub counts: Vec<u64>,
    /// Normalized density over currently rearranging particle-frames;
    /// absent when no rearrangements were observed.
    pub p_of_s_given_r: Option<Vec<f64>>,
    pub counts_given_r: Vec<u64>,
    /// Pooled fraction of particle-frames that are rearranging, P(R).
    pub p_of_r: f64,
    pub mean: f64,
    pub std: f64,
    pub mean_given_r: Option<f64>,
    /// Fraction of rearranging particle-frames with S > 0.
    pub fraction_positive_given_r: Option<f64>,
}

fn densities(counts: &[u64], width: f64) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .map(|&c| c as f64 / (total as f64 * width))
        .collect()
}

/// Histograms the softness field, and conditionally on instantaneous
/// rearrangement (`p_hop > p_rearr`) over the hop-evaluable frames.
pub fn softness_distributions(
    field: &SoftnessField,
    phop: &PhopField,
    p_rearr: f64,
    binning: &SBinning,
) -> Result<SoftnessHistogram, AnalysisError> {
    let n_bins = binning.n_bins();
    let mut counts = vec![0u64; n_bins];
    let mut counts_r = vec![0u64; n_bins];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut n_all = 0u64;
    let mut sum_r = 0.0;
    let mut n_r = 0u64;
    let mut n_r_positive = 0u64;
    let mut n_phop_frames = 0u64;
    for (fidx, _) in field.times.iter().enumerate() {
        for i in 0..field.n_particles {
            let s = field.value(fidx, i);
            if !s.is_finite() {
                continue;
            }
            counts[binning.bin_of(s)] += 1;
            sum += s;
            sum_sq += s * s;
            n_all += 1;
        }
    }
    for (row, _) in phop.times.iter().enumerate() {
        let fidx = phop.first_frame + row;
        for i in 0..field.n_particles {
            let s = field.value(fidx, i);
            if !s.is_finite() {
                continue;
            }
            n_phop_frames += 1;
            if phop.value(row, i) > p_rearr {
                counts_r[binning.bin_of(s)] += 1;
                sum_r += s;
                n_r += 1;
                if s > 0.0 {
                    n_r_positive += 1;
                }
            }
        }
    }
    if n_all == 0 {
        return Err(AnalysisError::EmptyInput(
            "no finite softness values".into(),
        ));
    }
    let mean = sum / n_all as f64;
    let std = (sum_sq / n_all as f64 - mean * mean).max(0.0).sqrt();
    let has_r = n_r > 0;
    if !has_r {
        log::warn!("no rearranging particle-frames; P(S|R) omitted");
    }
    Ok(SoftnessHistogram {
        edges: binning.edges.clone(),
        p_of_s: densities(&counts, binning.width()),
        counts,
        p_of_s_given_r: has_r.then(|| densities(&counts_r, binning.width())),
        counts_given_r: counts_r,
        p_of_r: if n_phop_frames > 0 {
            n_r as f64 / n_phop_frames as f64
        } else {
            0.0
        },
        mean,
        std,
        mean_given_r: has_r.then(|| sum_r / n_r as f64),
        fraction_positive_given_r: has_r.then(|| n_r_positive as f64 / n_r as f64),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::trajectory::Species;

    pub(crate) fn synthetic_field(values: Vec<Vec<f64>>) -> SoftnessField {
        let n = values[0].len();
        SoftnessField {
            times: (0..values.len()).map(|k| k as f64).collect(),
            values: values.into_iter().flatten().collect(),
            n_particles: n,
            central: Species::A,
        }
    }

    pub(crate) fn synthetic_phop(first: usize, values: Vec<Vec<f64>>) -> PhopField {
        let n = values[0].len();
        PhopField {
            first_frame: first,
            times: (0..values.len()).map(|k| (first + k) as f64).collect(),
            values: values.into_iter().flatten().collect(),
            n_particles: n,
        }
    }

    #[test]
    fn densities_integrate_to_one() {
        let field = synthetic_field(vec![vec![0.1, -0.5, 1.2], vec![0.3, -1.0, 0.9]]);
        let phop = synthetic_phop(1, vec![vec![0.5, 0.01, 0.01]]);
        let binning = SBinning::new(-2.0, 2.0, 8);
        let h = softness_distributions(&field, &phop, 0.2, &binning).unwrap();
        let int: f64 = h.p_of_s.iter().sum::<f64>() * binning.width();
        assert!((int - 1.0).abs() < 1e-9);
        let int_r: f64 = h.p_of_s_given_r.as_ref().unwrap().iter().sum::<f64>() * binning.width();
        assert!((int_r - 1.0).abs() < 1e-9);
        // one of three particles rearranging on the single hop frame
        assert!((h.p_of_r - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identical_environments_collapse_to_one_bin() {
        let field = synthetic_field(vec![vec![0.25; 5]; 3]);
        let phop = synthetic_phop(1, vec![vec![0.0; 5]]);
        let binning = SBinning::new(-1.0, 1.0, 10);
        let h = softness_distributions(&field, &phop, 0.2, &binning).unwrap();
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert!(h.p_of_s_given_r.is_none(), "no rearrangements seen");
    }

    #[test]
    fn known_gaussian_sample_matches_analytic_density() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 40000;
        let sample: Vec<f64> = (0..n)
            .map(|_| {
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let field = synthetic_field(vec![sample]);
        let phop = synthetic_phop(0, vec![vec![0.0; n]]);
        let binning = SBinning::new(-4.0, 4.0, 40);
        let h = softness_distributions(&field, &phop, 0.2, &binning).unwrap();
        // Kolmogorov-Smirnov style check against the standard normal CDF
        let mut cdf_emp = 0.0;
        let mut ks: f64 = 0.0;
        for b in 0..binning.n_bins() {
            cdf_emp += h.p_of_s[b] * binning.width();
            let x = binning.edges[b + 1];
            let cdf_true = 0.5 * (1.0 + erf_approx(x / std::f64::consts::SQRT_2));
            ks = ks.max((cdf_emp - cdf_true).abs());
        }
        assert!(ks < 0.05, "KS statistic {ks}");
        assert!(h.mean.abs() < 0.02);
        assert!((h.std - 1.0).abs() < 0.02);
    }

    /// Abramowitz-Stegun 7.1.26 rational approximation (|eps| < 1.5e-7).
    fn erf_approx(x: f64) -> f64 {
        let sign = x.signum();
        let x = x.abs();
        let t = 1.0 / (1.0 + 0.3275911 * x);
        let poly = t
            * (0.254829592
                + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
        sign * (1.0 - poly * (-x * x).exp())
    }
}
