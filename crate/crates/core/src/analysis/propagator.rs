//! The softness propagator: where non-rearranging particles' softness goes.

use super::{AnalysisError, SBinning};
use crate::classifier::SoftnessField;
use crate::rearrangement::RearrangementEvent;

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorConfig {
    /// Lags in frames (0 included gives the identity row block).
    pub lags: Vec<usize>,
    pub origin_stride: usize,
    /// Rows with fewer samples are masked.
    pub min_count: u64,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            lags: (0..=20).collect(),
            origin_stride: 5,
            min_count: 20,
        }
    }
}

/// Conditional softness distribution `G(S, S0, t)` for particles that did
/// not rearrange during `[t0, t0 + t]`, stored as transition masses (each
/// unmasked row sums to one; divide by the bin width for densities).
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    pub edges: Vec<f64>,
    pub lag_times: Vec<f64>,
    /// `[lag][s0][s]` transition mass; NaN rows are masked.
    pub mass: Vec<f64>,
    /// Samples per `[lag][s0]` row.
    pub row_counts: Vec<u64>,
    pub n_bins: usize,
    /// Mean event duration, the model timestep.
    pub tau_r: f64,
}

impl Propagator {
    #[inline]
    pub fn mass_at(&self, lag_idx: usize, s0: usize, s: usize) -> f64 {
        self.mass[(lag_idx * self.n_bins + s0) * self.n_bins + s]
    }

    pub fn row(&self, lag_idx: usize, s0: usize) -> &[f64] {
        let start = (lag_idx * self.n_bins + s0) * self.n_bins;
        &self.mass[start..start + self.n_bins]
    }

    pub fn row_count(&self, lag_idx: usize, s0: usize) -> u64 {
        self.row_counts[lag_idx * self.n_bins + s0]
    }

    /// Density view: `int dS G(S, S0, t) = 1` for unmasked rows.
    pub fn density(&self, lag_idx: usize, s0: usize, s: usize) -> f64 {
        let width = self.edges[1] - self.edges[0];
        self.mass_at(lag_idx, s0, s) / width
    }

    /// Identity propagator on a binning (every particle keeps its bin).
    pub fn identity(binning: &SBinning, lag_times: Vec<f64>, tau_r: f64) -> Propagator {
        let n = binning.n_bins();
        let n_lags = lag_times.len();
        let mut mass = vec![0.0; n_lags * n * n];
        for l in 0..n_lags {
            for b in 0..n {
                mass[(l * n + b) * n + b] = 1.0;
            }
        }
        Propagator {
            edges: binning.edges.clone(),
            lag_times,
            mass,
            row_counts: vec![u64::MAX; n_lags * n],
            n_bins: n,
            tau_r,
        }
    }

    /// Index of the measured lag nearest to time `t` (clamped).
    pub fn nearest_lag(&self, t: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, &lt) in self.lag_times.iter().enumerate() {
            let d = (lt - t).abs();
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }
}

/// Measures the propagator from a softness field and the detected events.
///
/// A particle contributes to lag `t` from origin `o` only when no event
/// interval `[t_start, t_end]` intersects `[time(o), time(o) + t]`.
pub fn propagator(
    field: &SoftnessField,
    events: &[RearrangementEvent],
    binning: &SBinning,
    frame_spacing: f64,
    cfg: &PropagatorConfig,
) -> Result<Propagator, AnalysisError> {
    if events.is_empty() {
        return Err(AnalysisError::EmptyInput(
            "propagator needs detected events for tau_R".into(),
        ));
    }
    let n_frames = field.times.len();
    let n = field.n_particles;
    let n_bins = binning.n_bins();
    let mut intervals: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    let mut tau_r_acc = 0.0;
    for ev in events {
        intervals[ev.particle].push((ev.t_start, ev.t_end));
        tau_r_acc += ev.t_end - ev.t_start;
    }
    let tau_r = tau_r_acc / events.len() as f64;
    for list in intervals.iter_mut() {
        list.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let quiet = |i: usize, lo: f64, hi: f64| -> bool {
        // any interval with t_start <= hi and t_end >= lo intersects
        let list = &intervals[i];
        let idx = list.partition_point(|iv| iv.0 <= hi);
        list[..idx].iter().rev().all(|iv| iv.1 < lo)
    };

    let mut counts = vec![0u64; cfg.lags.len() * n_bins * n_bins];
    let mut row_counts = vec![0u64; cfg.lags.len() * n_bins];
    for o in (0..n_frames).step_by(cfg.origin_stride.max(1)) {
        for (li, &lag) in cfg.lags.iter().enumerate() {
            if o + lag >= n_frames {
                continue;
            }
            let t_lo = field.times[o];
            let t_hi = field.times[o + lag];
            for i in 0..n {
                let s0 = field.value(o, i);
                let s1 = field.value(o + lag, i);
                if !s0.is_finite() || !s1.is_finite() {
                    continue;
                }
                if !quiet(i, t_lo, t_hi) {
                    continue;
                }
                let b0 = binning.bin_of(s0);
                let b1 = binning.bin_of(s1);
                counts[(li * n_bins + b0) * n_bins + b1] += 1;
                row_counts[li * n_bins + b0] += 1;
            }
        }
    }
    let mass: Vec<f64> = counts
        .iter()
        .enumerate()
        .map(|(idx, &c)| {
            let row = idx / n_bins;
            let total = row_counts[row];
            if total >= cfg.min_count.max(1) {
                c as f64 / total as f64
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(Propagator {
        edges: binning.edges.clone(),
        lag_times: cfg.lags.iter().map(|&l| l as f64 * frame_spacing).collect(),
        mass,
        row_counts,
        n_bins,
        tau_r,
    })
}
