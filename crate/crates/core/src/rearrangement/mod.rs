//! Rearrangement detection: the hop indicator, event extraction, and the
//! labeled training populations.

mod d2min;

pub use d2min::{d2min, DEFAULT_NEIGHBOR_RADIUS};

use crate::geometry;
use crate::trajectory::{displacement, Species, Trajectory, TrajectoryError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RearrangeError {
    #[error("hop window around t={t} falls outside the usable range [{lo}, {hi}]")]
    WindowOutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("frame spacing {spacing} too coarse for window {t_r} (need spacing <= t_R/4)")]
    SpacingTooCoarse { spacing: f64, t_r: f64 },
    #[error("degenerate affine fit: {neighbors} neighbors (need at least d+1)")]
    DegenerateFit { neighbors: usize },
    #[error(
        "training shortfall: {rearranging} rearranging / {stable} stable candidates, \
         need {required} per class"
    )]
    Shortfall {
        rearranging: usize,
        stable: usize,
        required: usize,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// Thresholds and windows for the hop indicator, in sigma_AA^2 / tau units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhopConfig {
    /// Rearrangement duration scale; the two averaging windows span t_R/2 each.
    pub t_r: f64,
    /// Lower excursion threshold defining an event.
    pub p_l: f64,
    /// Large-event threshold for the rearranging training class.
    pub p_c: f64,
    /// Quiescence span for the stable class; `None` falls back to 100 tau
    /// (use the measured relaxation time when available).
    pub tau_c: Option<f64>,
    /// Snapshot offset before `t_start` for rearranging examples.
    pub lead_time: f64,
    /// Instantaneous-rearrangement threshold for probability binning.
    pub p_rearr: f64,
}

pub const TAU_C_FALLBACK: f64 = 100.0;

impl Default for PhopConfig {
    fn default() -> Self {
        PhopConfig {
            t_r: 10.0,
            p_l: 0.05,
            p_c: 0.6,
            tau_c: None,
            lead_time: 2.0,
            p_rearr: 0.2,
        }
    }
}

impl PhopConfig {
    pub fn resolved_tau_c(&self) -> f64 {
        self.tau_c.unwrap_or(TAU_C_FALLBACK)
    }

    pub fn validate(&self) -> Result<(), RearrangeError> {
        if !(0.0 < self.p_l && self.p_l < self.p_c) {
            return Err(RearrangeError::InvalidConfig(
                "thresholds must satisfy 0 < p_L < p_c".into(),
            ));
        }
        if self.t_r <= 0.0 {
            return Err(RearrangeError::InvalidConfig("t_R must be positive".into()));
        }
        if self.lead_time >= self.resolved_tau_c() {
            return Err(RearrangeError::InvalidConfig(
                "lead_time must be shorter than tau_c".into(),
            ));
        }
        Ok(())
    }
}

/// One excursion of the hop indicator above `p_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementEvent {
    pub particle: usize,
    /// Time of the upward crossing.
    pub t_start: f64,
    /// Time of the downward crossing (first frame back at or below `p_L`).
    pub t_end: f64,
    /// Peak indicator value inside the event.
    pub p_star: f64,
    /// Minimum-image displacement over `[t_start, t_end]`.
    pub displacement: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Rearranging,
    Stable,
}

/// A training example: a particle in a specific frame with a class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    /// Index into the trajectory list handed to the builder.
    pub trajectory: usize,
    pub frame: usize,
    pub particle: usize,
    pub label: Label,
    pub snapshot_time: f64,
}

const TIME_EPS: f64 = 1e-9;

/// Frame-index windows `[a_lo..=a_hi]`, `[b_lo..=b_hi]` around time `t`.
fn window_indices(
    traj: &Trajectory,
    t: f64,
    cfg: &PhopConfig,
) -> Result<(usize, usize, usize, usize), RearrangeError> {
    let sp = traj.spacing;
    if sp <= 0.0 || traj.n_frames() < 2 {
        return Err(RearrangeError::InvalidConfig(
            "hop indicator needs at least two frames".into(),
        ));
    }
    if sp > cfg.t_r / 4.0 + TIME_EPS {
        return Err(RearrangeError::SpacingTooCoarse {
            spacing: sp,
            t_r: cfg.t_r,
        });
    }
    let t0 = traj.start_time();
    let half = cfg.t_r / 2.0;
    let lo = t0 + half;
    let hi = traj.end_time() - half;
    if t < lo - TIME_EPS || t > hi + TIME_EPS {
        return Err(RearrangeError::WindowOutOfRange { t, lo, hi });
    }
    let idx = |time: f64| -> f64 { (time - t0) / sp };
    let a_lo = idx(t - half - TIME_EPS).ceil().max(0.0) as usize;
    let a_hi = idx(t + TIME_EPS).floor() as usize;
    let b_lo = idx(t - TIME_EPS).ceil() as usize;
    let b_hi = (idx(t + half + TIME_EPS).floor() as usize).min(traj.n_frames() - 1);
    if a_hi < a_lo || b_hi < b_lo {
        return Err(RearrangeError::WindowOutOfRange { t, lo, hi });
    }
    Ok((a_lo, a_hi, b_lo, b_hi))
}

/// The hop indicator of particle `i` at time `t`:
/// `sqrt( <(x - <x>_B)^2>_A * <(x - <x>_A)^2>_B )`, the inner squares summed
/// over coordinates. Window A covers `[t - t_R/2, t]`, window B
/// `[t, t + t_R/2]`; at frame times the endpoint frame belongs to both.
/// Positions are unwrapped by minimum image relative to the window start.
pub fn p_hop(
    traj: &Trajectory,
    i: usize,
    t: f64,
    cfg: &PhopConfig,
) -> Result<f64, RearrangeError> {
    let (a_lo, a_hi, b_lo, b_hi) = window_indices(traj, t, cfg)?;
    Ok(p_hop_windows(traj, i, a_lo, a_hi, b_lo, b_hi))
}

fn p_hop_windows(
    traj: &Trajectory,
    i: usize,
    a_lo: usize,
    a_hi: usize,
    b_lo: usize,
    b_hi: usize,
) -> f64 {
    let d = traj.dim();
    let box_edges = &traj.frames[0].box_edges;
    let reference = traj.frames[a_lo].position(i).to_vec();
    let unwrap = |fidx: usize, out: &mut [f64]| {
        let pos = traj.frames[fidx].position(i);
        for k in 0..d {
            out[k] = geometry::min_image(pos[k] - reference[k], box_edges[k]);
        }
    };
    let mut buf = [0.0f64; 3];
    let mut mean_a = [0.0f64; 3];
    let mut mean_b = [0.0f64; 3];
    let na = (a_hi - a_lo + 1) as f64;
    let nb = (b_hi - b_lo + 1) as f64;
    for fidx in a_lo..=a_hi {
        unwrap(fidx, &mut buf);
        for k in 0..d {
            mean_a[k] += buf[k];
        }
    }
    for fidx in b_lo..=b_hi {
        unwrap(fidx, &mut buf);
        for k in 0..d {
            mean_b[k] += buf[k];
        }
    }
    for k in 0..d {
        mean_a[k] /= na;
        mean_b[k] /= nb;
    }
    let mut spread_a = 0.0; // <(x - <x>_B)^2>_A
    for fidx in a_lo..=a_hi {
        unwrap(fidx, &mut buf);
        for k in 0..d {
            let dev = buf[k] - mean_b[k];
            spread_a += dev * dev;
        }
    }
    spread_a /= na;
    let mut spread_b = 0.0; // <(x - <x>_A)^2>_B
    for fidx in b_lo..=b_hi {
        unwrap(fidx, &mut buf);
        for k in 0..d {
            let dev = buf[k] - mean_a[k];
            spread_b += dev * dev;
        }
    }
    spread_b /= nb;
    (spread_a * spread_b).sqrt()
}

/// Hop indicator evaluated for every particle at every usable frame time.
#[derive(Debug, Clone)]
pub struct PhopField {
    /// Frame index of the first evaluated time.
    pub first_frame: usize,
    /// Evaluation times (frame times with both windows inside the run).
    pub times: Vec<f64>,
    /// Row-major `times x particles`.
    pub values: Vec<f64>,
    pub n_particles: usize,
}

impl PhopField {
    pub fn compute(traj: &Trajectory, cfg: &PhopConfig) -> Result<PhopField, RearrangeError> {
        cfg.validate()?;
        let sp = traj.spacing;
        if sp <= 0.0 || traj.n_frames() < 2 {
            return Err(RearrangeError::InvalidConfig(
                "hop field needs at least two frames".into(),
            ));
        }
        if sp > cfg.t_r / 4.0 + TIME_EPS {
            return Err(RearrangeError::SpacingTooCoarse {
                spacing: sp,
                t_r: cfg.t_r,
            });
        }
        let half_frames = (cfg.t_r / 2.0 / sp + TIME_EPS).floor() as usize;
        let n_frames = traj.n_frames();
        if 2 * half_frames >= n_frames {
            return Err(RearrangeError::WindowOutOfRange {
                t: traj.start_time(),
                lo: traj.start_time() + cfg.t_r / 2.0,
                hi: traj.end_time() - cfg.t_r / 2.0,
            });
        }
        let first = half_frames;
        let last = n_frames - 1 - half_frames;
        let n_particles = traj.n_particles();
        let n_times = last - first + 1;
        let mut values = vec![0.0f64; n_times * n_particles];
        let times: Vec<f64> = (first..=last).map(|f| traj.frames[f].time).collect();
        for i in 0..n_particles {
            for (row, fidx) in (first..=last).enumerate() {
                values[row * n_particles + i] = p_hop_windows(
                    traj,
                    i,
                    fidx - half_frames,
                    fidx,
                    fidx,
                    fidx + half_frames,
                );
            }
        }
        Ok(PhopField {
            first_frame: first,
            times,
            values,
            n_particles,
        })
    }

    #[inline]
    pub fn value(&self, time_idx: usize, particle: usize) -> f64 {
        self.values[time_idx * self.n_particles + particle]
    }

    /// Per-particle series as a strided iterator.
    pub fn series(&self, particle: usize) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .skip(particle)
            .step_by(self.n_particles)
            .copied()
    }
}

/// Extracts maximal excursions of the hop indicator above `p_L` for one
/// particle series. Excursions separated by a single sub-threshold frame are
/// merged; excursions still open at either end of the series are dropped.
fn events_from_series(
    series: &[f64],
    times: &[f64],
    p_l: f64,
) -> Vec<(usize, usize, f64)> {
    // (first_above, last_above, p_star) in series indices
    let mut runs: Vec<(usize, usize, f64)> = Vec::new();
    let mut start: Option<usize> = None;
    for (k, &v) in series.iter().enumerate() {
        if v > p_l {
            if start.is_none() {
                start = Some(k);
            }
        } else if let Some(s) = start.take() {
            let peak = series[s..k].iter().cloned().fold(0.0, f64::max);
            runs.push((s, k - 1, peak));
        }
    }
    // an excursion still open at the series end has no downward crossing
    let _ = times;
    // merge runs separated by exactly one sub-threshold frame
    let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(runs.len());
    for run in runs {
        if let Some(last) = merged.last_mut() {
            if run.0 == last.1 + 2 {
                last.1 = run.1;
                last.2 = last.2.max(run.2);
                continue;
            }
        }
        merged.push(run);
    }
    // drop a leading run that was already in progress at the series start
    if let Some(first) = merged.first() {
        if first.0 == 0 {
            merged.remove(0);
        }
    }
    merged
}

/// Detects the rearrangement events of particle `i`.
pub fn detect_events(
    traj: &Trajectory,
    i: usize,
    cfg: &PhopConfig,
) -> Result<Vec<RearrangementEvent>, RearrangeError> {
    let field = PhopField::compute(traj, cfg)?;
    events_for_particle(traj, &field, i, cfg)
}

fn events_for_particle(
    traj: &Trajectory,
    field: &PhopField,
    i: usize,
    cfg: &PhopConfig,
) -> Result<Vec<RearrangementEvent>, RearrangeError> {
    let series: Vec<f64> = field.series(i).collect();
    let runs = events_from_series(&series, &field.times, cfg.p_l);
    let mut events = Vec::with_capacity(runs.len());
    for (s, e, p_star) in runs {
        // downward crossing = first frame back at/below threshold
        let end_idx = (e + 1).min(field.times.len() - 1);
        let f_start = field.first_frame + s;
        let f_end = field.first_frame + end_idx;
        let disp = displacement(&traj.frames[f_start], &traj.frames[f_end], i)?;
        events.push(RearrangementEvent {
            particle: i,
            t_start: field.times[s],
            t_end: field.times[end_idx],
            p_star,
            displacement: disp,
        });
    }
    Ok(events)
}

/// Events for all particles, sharing one hop-field computation.
pub fn detect_events_all(
    traj: &Trajectory,
    field: &PhopField,
    cfg: &PhopConfig,
) -> Result<Vec<RearrangementEvent>, RearrangeError> {
    let mut all = Vec::new();
    for i in 0..field.n_particles {
        all.extend(events_for_particle(traj, field, i, cfg)?);
    }
    Ok(all)
}

/// Builds balanced rearranging/stable training populations.
///
/// Rearranging: events with `p* > p_c`, snapshot `lead_time` before the
/// upward crossing. Stable: particles with no excursion above `p_L` for at
/// least `tau_c`, one example per non-overlapping `tau_c` window, snapshot at
/// the window midpoint. The larger class is down-sampled to the smaller.
pub fn build_training_populations(
    trajs: &[&Trajectory],
    cfg: &PhopConfig,
    min_per_class: usize,
    central_species: Option<Species>,
    seed: u64,
) -> Result<Vec<LabeledExample>, RearrangeError> {
    cfg.validate()?;
    let tau_c = cfg.resolved_tau_c();
    let mut rearranging: Vec<LabeledExample> = Vec::new();
    let mut stable: Vec<LabeledExample> = Vec::new();
    for (t_idx, traj) in trajs.iter().enumerate() {
        let field = PhopField::compute(traj, cfg)?;
        let sp = traj.spacing;
        let t0 = traj.start_time();
        let valid_lo = field.times[0];
        let valid_hi = *field.times.last().unwrap();
        for i in 0..field.n_particles {
            if let Some(species) = central_species {
                if traj.frames[0].species[i] != species {
                    continue;
                }
            }
            let events = events_for_particle(traj, &field, i, cfg)?;
            for ev in &events {
                if ev.p_star > cfg.p_c {
                    let snap_t = ev.t_start - cfg.lead_time;
                    let fidx = ((snap_t - t0) / sp).round();
                    if fidx < 0.0 || ((snap_t - t0) / sp - fidx).abs() > 1e-6 {
                        continue;
                    }
                    let fidx = fidx as usize;
                    if fidx >= traj.n_frames() {
                        continue;
                    }
                    rearranging.push(LabeledExample {
                        trajectory: t_idx,
                        frame: fidx,
                        particle: i,
                        label: Label::Rearranging,
                        snapshot_time: traj.frames[fidx].time,
                    });
                }
            }
            // quiescent gaps between events (and the series ends)
            let mut gaps: Vec<(f64, f64)> = Vec::new();
            let mut cursor = valid_lo;
            for ev in &events {
                if ev.t_start > cursor {
                    gaps.push((cursor, ev.t_start));
                }
                cursor = cursor.max(ev.t_end);
            }
            if valid_hi > cursor {
                gaps.push((cursor, valid_hi));
            }
            for (lo, hi) in gaps {
                let n_windows = ((hi - lo) / tau_c + TIME_EPS).floor() as usize;
                for w in 0..n_windows {
                    let mid = lo + (w as f64 + 0.5) * tau_c;
                    let fidx = ((mid - t0) / sp).round() as usize;
                    if fidx >= traj.n_frames() {
                        continue;
                    }
                    stable.push(LabeledExample {
                        trajectory: t_idx,
                        frame: fidx,
                        particle: i,
                        label: Label::Stable,
                        snapshot_time: traj.frames[fidx].time,
                    });
                }
            }
        }
    }
    if rearranging.len() < min_per_class || stable.len() < min_per_class {
        return Err(RearrangeError::Shortfall {
            rearranging: rearranging.len(),
            stable: stable.len(),
            required: min_per_class,
        });
    }
    let target = rearranging.len().min(stable.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for class in [&mut rearranging, &mut stable] {
        if class.len() > target {
            class.shuffle(&mut rng);
            class.truncate(target);
            class.sort_by(|a, b| {
                (a.trajectory, a.particle, a.frame).cmp(&(b.trajectory, b.particle, b.frame))
            });
        }
    }
    rearranging.extend(stable);
    Ok(rearranging)
}

/// CSV export of an event list: `particle,t_start,t_end,p_star`.
pub fn write_events_csv<W: std::io::Write>(
    events: &[RearrangementEvent],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "particle,t_start,t_end,p_star")?;
    for ev in events {
        writeln!(w, "{},{},{},{}", ev.particle, ev.t_start, ev.t_end, ev.p_star)?;
    }
    Ok(())
}

/// CSV export of labeled examples:
/// `example,label,particle,trajectory,frame,snapshot_time`.
pub fn write_labels_csv<W: std::io::Write>(
    examples: &[LabeledExample],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "example,label,particle,trajectory,frame,snapshot_time")?;
    for (k, ex) in examples.iter().enumerate() {
        let label = match ex.label {
            Label::Rearranging => "rearranging",
            Label::Stable => "stable",
        };
        writeln!(
            w,
            "{},{},{},{},{},{}",
            k, label, ex.particle, ex.trajectory, ex.frame, ex.snapshot_time
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
