//! Overlap functions: the unmoved fraction and its softness decomposition.

use super::fit::{one_over_e_crossing, stretched_exponential_fit};
use super::{AnalysisError, SBinning};
use crate::classifier::SoftnessField;
use crate::geometry;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapConfig {
    /// Displacement cutoff `a` in sigma_AA.
    pub a: f64,
    /// Time-origin stride in frames; None uses the single origin t = 0.
    pub origin_stride: Option<usize>,
    /// Lag subsampling in frames.
    pub lag_stride: usize,
    /// Largest lag in frames (default: the whole run).
    pub max_lag: Option<usize>,
    /// q window for the stretched-exponential fit.
    pub fit_window: (f64, f64),
}

impl Default for OverlapConfig {
    fn default() -> Self {
        OverlapConfig {
            a: 0.5,
            origin_stride: None,
            lag_stride: 1,
            max_lag: None,
            fit_window: (0.05, 0.8),
        }
    }
}

/// Per-softness overlap pieces on a shared binning.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftnessResolvedOverlap {
    pub edges: Vec<f64>,
    /// Row-major `bins x lags`: unmoved fraction of particles starting in
    /// each softness bin.
    pub q: Vec<f64>,
    /// Sample counts per `bins x lags` cell (origin-particle pairs).
    pub counts: Vec<u64>,
    pub n_bins: usize,
}

impl SoftnessResolvedOverlap {
    pub fn n_lags(&self) -> usize {
        self.q.len() / self.n_bins.max(1)
    }

    pub fn value(&self, bin: usize, lag_idx: usize) -> f64 {
        self.q[bin * self.n_lags() + lag_idx]
    }

    pub fn count(&self, bin: usize, lag_idx: usize) -> u64 {
        self.counts[bin * self.n_lags() + lag_idx]
    }
}

/// The overlap decays from one as particles move beyond `a`; note this is
/// the complement of a moved-fraction convention.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapResult {
    pub a: f64,
    /// Lag times, starting at zero.
    pub times: Vec<f64>,
    /// Unmoved fraction over all particles.
    pub q: Vec<f64>,
    /// Unmoved fraction over the central species only (when a softness
    /// field is supplied); the softness decomposition recombines to this.
    pub q_central: Option<Vec<f64>>,
    pub by_softness: Option<SoftnessResolvedOverlap>,
    /// Stretched-exponential fit `exp(-(t/tau)^beta)` over the fit window.
    pub tau_alpha: Option<f64>,
    pub beta: Option<f64>,
    pub fit_r2: Option<f64>,
    /// 1/e crossing when the run decays that far.
    pub tau_alpha_crossing: Option<f64>,
    /// The run never decayed below 0.3; tau comes from extrapolation.
    pub extrapolated: bool,
}

/// Computes the overlap `q(t)`: the fraction of particles that have moved
/// less than `a` since the time origin, averaged over origins when a stride
/// is configured. With a softness field, also resolves `q(S, t)` by the
/// softness bin at the origin.
pub fn overlap(
    traj: &Trajectory,
    field: Option<&SoftnessField>,
    binning: Option<&SBinning>,
    cfg: &OverlapConfig,
) -> Result<OverlapResult, AnalysisError> {
    let n_frames = traj.n_frames();
    if n_frames < 2 {
        return Err(AnalysisError::EmptyInput("overlap needs >= 2 frames".into()));
    }
    let n = traj.n_particles();
    let d = traj.dim();
    let box_edges = traj.frames[0].box_edges.clone();
    let max_lag = cfg.max_lag.unwrap_or(n_frames - 1).min(n_frames - 1);
    let lags: Vec<usize> = (0..=max_lag).step_by(cfg.lag_stride.max(1)).collect();
    let origins: Vec<usize> = match cfg.origin_stride {
        None => vec![0],
        Some(stride) => (0..n_frames.saturating_sub(1))
            .step_by(stride.max(1))
            .collect(),
    };
    let a_sq = cfg.a * cfg.a;
    let with_s = field.is_some() && binning.is_some();
    let n_bins = binning.map_or(0, SBinning::n_bins);

    let mut unmoved_all = vec![0u64; lags.len()];
    let mut total_all = vec![0u64; lags.len()];
    let mut unmoved_central = vec![0u64; lags.len()];
    let mut total_central = vec![0u64; lags.len()];
    let mut unmoved_s = vec![0u64; n_bins * lags.len()];
    let mut total_s = vec![0u64; n_bins * lags.len()];

    // origin-major sweep; bins at the origin are reused across lags
    let mut origin_bins: Vec<i32> = vec![-1; n];
    for &o in &origins {
        if with_s {
            let field = field.unwrap();
            let binning = binning.unwrap();
            for (i, ob) in origin_bins.iter_mut().enumerate() {
                let s = field.value(o, i);
                *ob = if s.is_finite() {
                    binning.bin_of(s) as i32
                } else {
                    -1
                };
            }
        }
        let origin_frame = &traj.frames[o];
        for (li, &lag) in lags.iter().enumerate() {
            if o + lag >= n_frames {
                break;
            }
            let later = &traj.frames[o + lag];
            for i in 0..n {
                let mut r2 = 0.0;
                for k in 0..d {
                    let dx = geometry::min_image(
                        later.positions[i * d + k] - origin_frame.positions[i * d + k],
                        box_edges[k],
                    );
                    r2 += dx * dx;
                }
                let stays = r2 < a_sq;
                total_all[li] += 1;
                if stays {
                    unmoved_all[li] += 1;
                }
                if with_s && origin_bins[i] >= 0 {
                    let b = origin_bins[i] as usize;
                    total_central[li] += 1;
                    total_s[b * lags.len() + li] += 1;
                    if stays {
                        unmoved_central[li] += 1;
                        unmoved_s[b * lags.len() + li] += 1;
                    }
                }
            }
        }
    }

    let times: Vec<f64> = lags.iter().map(|&l| l as f64 * traj.spacing).collect();
    let q: Vec<f64> = unmoved_all
        .iter()
        .zip(&total_all)
        .map(|(&u, &t)| if t > 0 { u as f64 / t as f64 } else { f64::NAN })
        .collect();
    let q_central = with_s.then(|| {
        unmoved_central
            .iter()
            .zip(&total_central)
            .map(|(&u, &t)| if t > 0 { u as f64 / t as f64 } else { f64::NAN })
            .collect::<Vec<f64>>()
    });
    let by_softness = with_s.then(|| SoftnessResolvedOverlap {
        edges: binning.unwrap().edges.clone(),
        q: unmoved_s
            .iter()
            .zip(&total_s)
            .map(|(&u, &t)| if t > 0 { u as f64 / t as f64 } else { f64::NAN })
            .collect(),
        counts: total_s,
        n_bins,
    });

    let min_q = q.iter().cloned().fold(f64::INFINITY, f64::min);
    let extrapolated = min_q > 0.3;
    if extrapolated {
        log::warn!(
            "overlap only decayed to {min_q:.3}; relaxation time extrapolated from the fit"
        );
    }
    let fit = stretched_exponential_fit(&times, &q, cfg.fit_window);
    Ok(OverlapResult {
        a: cfg.a,
        tau_alpha: fit.map(|f| f.0),
        beta: fit.map(|f| f.1),
        fit_r2: fit.map(|f| f.2),
        tau_alpha_crossing: one_over_e_crossing(&times, &q),
        extrapolated,
        times,
        q,
        q_central,
        by_softness,
    })
}
