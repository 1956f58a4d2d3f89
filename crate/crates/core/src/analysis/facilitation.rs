//! Discrete-time overlap models built from the rearrangement probability
//! and the softness propagator.

use super::fit::interp_log_linear;
use super::{AnalysisError, Propagator, RearrangementCurve, SBinning};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOverlap {
    /// Model times `k tau_R`.
    pub times: Vec<f64>,
    pub edges: Vec<f64>,
    /// Row-major `bins x steps` per-softness model overlap.
    pub q_of_s: Vec<f64>,
    /// P(S)-weighted total.
    pub q: Vec<f64>,
    pub tau_r: f64,
}

impl ModelOverlap {
    pub fn n_steps(&self) -> usize {
        self.times.len()
    }

    pub fn value(&self, bin: usize, step: usize) -> f64 {
        self.q_of_s[bin * self.n_steps() + step]
    }
}

/// Fills masked bins of a rearrangement curve by log-linear interpolation
/// across the populated bins (clamped at the ends).
fn filled_rates(curve: &RearrangementCurve) -> Result<Vec<f64>, AnalysisError> {
    let populated: (Vec<f64>, Vec<f64>) = curve.populated().unzip();
    if populated.0.is_empty() {
        return Err(AnalysisError::EmptyInput(
            "rearrangement curve has no populated bins".into(),
        ));
    }
    Ok(curve
        .s_centers
        .iter()
        .map(|&s| interp_log_linear(&populated.0, &populated.1, s).unwrap())
        .collect())
}

/// Evaluates the facilitated overlap model on the S grid.
///
/// The model advances in discrete steps of `tau_R`: at step `k` the fraction
/// of bin-`b` starters that rearrange is `f_k(b) = sum_b' G(b'|b, t_k)
/// P_R(b')`, and the surviving fraction obeys
/// `q(S, t_{k+1}) = q(S, t_k) (1 - f_k(S))`, which is exactly the
/// complement of the product-sum expansion of first-rearrangement times.
pub fn model_overlap(
    p_r: &RearrangementCurve,
    prop: &Propagator,
    p_s_weights: &[f64],
    horizon_steps: usize,
) -> Result<ModelOverlap, AnalysisError> {
    let binning = SBinning {
        edges: p_r.edges.clone(),
    };
    if !(SBinning {
        edges: prop.edges.clone(),
    })
    .approx_eq(&binning)
    {
        return Err(AnalysisError::BinningMismatch);
    }
    let n_bins = binning.n_bins();
    if p_s_weights.len() != n_bins {
        return Err(AnalysisError::BinningMismatch);
    }
    if !(prop.tau_r > 0.0) {
        return Err(AnalysisError::Degenerate("tau_R must be positive".into()));
    }
    let rates = filled_rates(p_r)?;
    let weight_total: f64 = p_s_weights.iter().sum();
    if weight_total <= 0.0 {
        return Err(AnalysisError::EmptyInput("P(S) weights are empty".into()));
    }

    let n_steps = horizon_steps + 1;
    let mut q_of_s = vec![0.0; n_bins * n_steps];
    let mut survivors = vec![1.0f64; n_bins];
    let mut times = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        let t = k as f64 * prop.tau_r;
        times.push(t);
        for b in 0..n_bins {
            q_of_s[b * n_steps + k] = survivors[b];
        }
        // hop fraction at this step, facilitated by the softness drift
        let lag_idx = prop.nearest_lag(t);
        for (b, survivor) in survivors.iter_mut().enumerate() {
            let row = prop.row(lag_idx, b);
            let f = if row.iter().all(|m| m.is_finite()) {
                row.iter()
                    .zip(&rates)
                    .map(|(m, p)| m * p)
                    .sum::<f64>()
            } else {
                rates[b] // masked row: no facilitation information
            };
            *survivor *= 1.0 - f;
        }
    }
    let q: Vec<f64> = (0..n_steps)
        .map(|k| {
            (0..n_bins)
                .map(|b| q_of_s[b * n_steps + k] * p_s_weights[b])
                .sum::<f64>()
                / weight_total
        })
        .collect();
    Ok(ModelOverlap {
        times,
        edges: p_r.edges.clone(),
        q_of_s,
        q,
        tau_r: prop.tau_r,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldOverlap {
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    /// Rate evaluated at the mean softness.
    pub p_at_mean: f64,
    /// `-tau_R / ln(1 - p)`.
    pub tau_alpha: f64,
    pub tau_r: f64,
    pub degenerate: bool,
}

/// Uniform-structure approximation: every particle carries the mean
/// softness, so `q(t) = (1 - P_R(<S>))^(t / tau_R)`.
pub fn mean_field(
    p_r: &RearrangementCurve,
    mean_softness: f64,
    tau_r: f64,
    horizon_steps: usize,
) -> Result<MeanFieldOverlap, AnalysisError> {
    let populated: (Vec<f64>, Vec<f64>) = p_r.populated().unzip();
    if populated.0.is_empty() {
        return Err(AnalysisError::EmptyInput(
            "rearrangement curve has no populated bins".into(),
        ));
    }
    let p = interp_log_linear(&populated.0, &populated.1, mean_softness).unwrap();
    let degenerate = !(p > 0.0 && p < 1.0);
    if degenerate {
        log::warn!("mean-field rate P_R(<S>) = {p}; relaxation time degenerate");
    }
    let mut times = Vec::with_capacity(horizon_steps + 1);
    let mut q = Vec::with_capacity(horizon_steps + 1);
    let mut survivor = 1.0f64;
    for k in 0..=horizon_steps {
        times.push(k as f64 * tau_r);
        q.push(survivor);
        survivor *= 1.0 - p;
    }
    let tau_alpha = if degenerate {
        f64::NAN
    } else {
        -tau_r / (1.0 - p).ln()
    };
    Ok(MeanFieldOverlap {
        times,
        q,
        p_at_mean: p,
        tau_alpha,
        tau_r,
        degenerate,
    })
}
