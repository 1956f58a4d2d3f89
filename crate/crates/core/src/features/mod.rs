//! Radial symmetry functions embedding each particle's neighborhood into a
//! fixed-length, species-resolved feature vector.

use crate::geometry;
use crate::md::collect_pairs;
use crate::trajectory::{Frame, Species, Trajectory};
use serde::{Deserialize, Serialize};

const INV_SQRT_2PI: f64 = 0.3989422804014327;
/// Gaussian tails are dropped beyond this many sigmas. Each dropped term is
/// below 1.1e-7 of a full count, so features stay continuous to 1e-6 even
/// when a neighbor crosses the truncation boundary.
const TAIL_SIGMAS: f64 = 5.5;

/// Radial grid on which the symmetry functions are sampled: `r_n = n delta`
/// for `n = 1..=n_bins`, one block per species in `species_list` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureGrid {
    /// Gaussian smearing width, in sigma_AA.
    pub sigma: f64,
    /// Grid spacing, in sigma_AA.
    pub delta: f64,
    /// Largest sampled radius.
    pub r_max: f64,
    pub species_list: Vec<Species>,
}

impl Default for FeatureGrid {
    fn default() -> Self {
        FeatureGrid {
            sigma: 0.1,
            delta: 0.1,
            r_max: 5.0,
            species_list: vec![Species::A, Species::B],
        }
    }
}

impl FeatureGrid {
    pub fn n_bins(&self) -> usize {
        (self.r_max / self.delta + 1e-9).floor() as usize
    }

    pub fn feature_len(&self) -> usize {
        self.n_bins() * self.species_list.len()
    }

    /// Radius of bin `n` (1-based within a species block).
    pub fn radius(&self, n: usize) -> f64 {
        n as f64 * self.delta
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.delta > 0.0 && self.sigma > 0.0 && self.r_max > self.delta) {
            return Err("feature grid needs delta > 0, sigma > 0, r_max > delta".into());
        }
        if self.species_list.is_empty() {
            return Err("feature grid needs at least one species".into());
        }
        Ok(())
    }

    /// Neighbor search radius covering every bin plus the Gaussian tails.
    pub fn interaction_range(&self) -> f64 {
        self.r_max + TAIL_SIGMAS * self.sigma
    }
}

/// Feature vector of one particle in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub particle: usize,
    pub snapshot_time: f64,
}

/// Gaussian-smeared count of species-`x` neighbors of particle `i` at
/// distance `r`: `(1/sqrt(2 pi)) sum_j exp(-(R_ij - r)^2 / 2 sigma^2)`.
pub fn radial_symmetry(frame: &Frame, i: usize, x: Species, r: f64, sigma: f64) -> f64 {
    let d = frame.dim();
    let pos_i = frame.position(i);
    let mut acc = 0.0;
    for j in 0..frame.n_particles() {
        if j == i || frame.species[j] != x {
            continue;
        }
        let mut r2 = 0.0;
        for k in 0..d {
            let dx = geometry::min_image(frame.position(j)[k] - pos_i[k], frame.box_edges[k]);
            r2 += dx * dx;
        }
        let dist = r2.sqrt();
        if (dist - r).abs() > TAIL_SIGMAS * sigma {
            continue;
        }
        let u = (dist - r) / sigma;
        acc += (-0.5 * u * u).exp();
    }
    INV_SQRT_2PI * acc
}

/// Species block offset within a feature vector.
fn block_of(grid: &FeatureGrid, s: Species) -> Option<usize> {
    grid.species_list.iter().position(|&g| g == s)
}

/// Adds one neighbor at distance `dist` to the feature accumulator `out`.
///
/// Uses the Gaussian ratio recurrence: two `exp` calls cover the whole bin
/// window instead of one per bin.
#[inline]
fn accumulate_neighbor(out: &mut [f64], grid: &FeatureGrid, block: usize, dist: f64, decay: f64) {
    let n_bins = grid.n_bins();
    let lo_r = dist - TAIL_SIGMAS * grid.sigma;
    let hi_r = dist + TAIL_SIGMAS * grid.sigma;
    let n_lo = ((lo_r / grid.delta).ceil() as i64).max(1);
    let n_hi = ((hi_r / grid.delta).floor() as i64).min(n_bins as i64);
    if n_lo > n_hi {
        return;
    }
    let inv_s2 = 1.0 / (grid.sigma * grid.sigma);
    let u0 = dist - n_lo as f64 * grid.delta;
    let mut g = INV_SQRT_2PI * (-0.5 * u0 * u0 * inv_s2).exp();
    // g(n+1) = g(n) * t_n,  t_{n+1} = t_n * decay
    let mut t = (grid.delta * (u0 - 0.5 * grid.delta) * inv_s2).exp();
    let base = block * n_bins;
    for n in n_lo..=n_hi {
        out[base + (n - 1) as usize] += g;
        g *= t;
        t *= decay;
    }
}

/// Embeds the neighborhood of particle `i` into the grid's feature space.
pub fn featurize(frame: &Frame, i: usize, grid: &FeatureGrid) -> FeatureVector {
    let d = frame.dim();
    let pos_i = frame.position(i);
    let mut values = vec![0.0; grid.feature_len()];
    let range = grid.interaction_range();
    let decay = (-grid.delta * grid.delta / (grid.sigma * grid.sigma)).exp();
    for j in 0..frame.n_particles() {
        if j == i {
            continue;
        }
        let Some(block) = block_of(grid, frame.species[j]) else {
            continue;
        };
        let mut r2 = 0.0;
        for k in 0..d {
            let dx = geometry::min_image(frame.position(j)[k] - pos_i[k], frame.box_edges[k]);
            r2 += dx * dx;
        }
        if r2 > range * range {
            continue;
        }
        accumulate_neighbor(&mut values, grid, block, r2.sqrt(), decay);
    }
    FeatureVector {
        values,
        particle: i,
        snapshot_time: frame.time,
    }
}

/// Feature vectors for every selected particle of a frame, sharing one pair
/// search. `central` restricts the rows that are produced (None = all).
pub fn featurize_frame(
    frame: &Frame,
    grid: &FeatureGrid,
    central: Option<Species>,
) -> Vec<FeatureVector> {
    let d = frame.dim();
    let n = frame.n_particles();
    let range = grid.interaction_range();
    let decay = (-grid.delta * grid.delta / (grid.sigma * grid.sigma)).exp();
    let flen = grid.feature_len();
    let wants = |i: usize| central.is_none_or(|c| frame.species[i] == c);
    let mut rows: Vec<Option<Vec<f64>>> = (0..n)
        .map(|i| wants(i).then(|| vec![0.0; flen]))
        .collect();
    let pairs = collect_pairs(&frame.positions, &frame.box_edges, d, range);
    let half: Vec<f64> = frame.box_edges.iter().map(|&l| 0.5 * l).collect();
    for &(i, j) in &pairs {
        let (i, j) = (i as usize, j as usize);
        let mut r2 = 0.0;
        for k in 0..d {
            let dx = geometry::min_image_fast(
                frame.positions[i * d + k] - frame.positions[j * d + k],
                frame.box_edges[k],
                half[k],
            );
            r2 += dx * dx;
        }
        if r2 > range * range {
            continue;
        }
        let dist = r2.sqrt();
        if let Some(row) = rows[i].as_mut() {
            if let Some(block) = block_of(grid, frame.species[j]) {
                accumulate_neighbor(row, grid, block, dist, decay);
            }
        }
        if let Some(row) = rows[j].as_mut() {
            if let Some(block) = block_of(grid, frame.species[i]) {
                accumulate_neighbor(row, grid, block, dist, decay);
            }
        }
    }
    rows.into_iter()
        .enumerate()
        .filter_map(|(i, row)| {
            row.map(|values| FeatureVector {
                values,
                particle: i,
                snapshot_time: frame.time,
            })
        })
        .collect()
}

/// Mean-structure diagnostic: `r^(1-d) <G_i^X(r; sigma)>` averaged over all
/// central particles of species `pair.0` and all frames, for neighbor
/// species `pair.1`. In the small-sigma limit this approaches the
/// species-resolved pair correlation function (up to normalization).
pub fn mean_structure(
    traj: &Trajectory,
    grid: &FeatureGrid,
    pair: (Species, Species),
) -> Vec<(f64, f64)> {
    let d = traj.dim();
    let n_bins = grid.n_bins();
    let block = block_of(grid, pair.1).expect("neighbor species not on the grid");
    let mut acc = vec![0.0f64; n_bins];
    let mut count = 0usize;
    for frame in &traj.frames {
        for fv in featurize_frame(frame, grid, Some(pair.0)) {
            for b in 0..n_bins {
                acc[b] += fv.values[block * n_bins + b];
            }
            count += 1;
        }
    }
    (0..n_bins)
        .map(|b| {
            let r = grid.radius(b + 1);
            let mean = if count > 0 { acc[b] / count as f64 } else { 0.0 };
            (r, r.powi(1 - d as i32) * mean)
        })
        .collect()
}

/// CSV export of feature vectors with an r-grid header per species:
/// `particle,time,A_r0.1,...,B_r5`.
pub fn write_features_csv<W: std::io::Write>(
    rows: &[FeatureVector],
    grid: &FeatureGrid,
    mut w: W,
) -> std::io::Result<()> {
    write!(w, "particle,time")?;
    for &species in &grid.species_list {
        for n in 1..=grid.n_bins() {
            write!(w, ",{}_r{}", species, grid.radius(n))?;
        }
    }
    writeln!(w)?;
    for fv in rows {
        write!(w, "{},{}", fv.particle, fv.snapshot_time)?;
        for v in &fv.values {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Compact binary block of a feature matrix for the trajectory container:
/// header `(n_rows u32, n_features u32)` then per row `(particle u32,
/// time f64, values n_features x f64)`, all little-endian.
pub fn features_to_block(rows: &[FeatureVector], grid: &FeatureGrid) -> Vec<u8> {
    let flen = grid.feature_len();
    let mut out = Vec::with_capacity(8 + rows.len() * (12 + 8 * flen));
    out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    out.extend_from_slice(&(flen as u32).to_le_bytes());
    for fv in rows {
        debug_assert_eq!(fv.values.len(), flen);
        out.extend_from_slice(&(fv.particle as u32).to_le_bytes());
        out.extend_from_slice(&fv.snapshot_time.to_le_bytes());
        for v in &fv.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Parses a block produced by [`features_to_block`].
pub fn features_from_block(payload: &[u8]) -> Option<Vec<FeatureVector>> {
    if payload.len() < 8 {
        return None;
    }
    let n_rows = u32::from_le_bytes(payload[0..4].try_into().ok()?) as usize;
    let flen = u32::from_le_bytes(payload[4..8].try_into().ok()?) as usize;
    let row_bytes = 12 + 8 * flen;
    if payload.len() != 8 + n_rows * row_bytes {
        return None;
    }
    let mut rows = Vec::with_capacity(n_rows);
    for r in 0..n_rows {
        let base = 8 + r * row_bytes;
        let particle = u32::from_le_bytes(payload[base..base + 4].try_into().ok()?) as usize;
        let snapshot_time = f64::from_le_bytes(payload[base + 4..base + 12].try_into().ok()?);
        let mut values = Vec::with_capacity(flen);
        for k in 0..flen {
            let off = base + 12 + k * 8;
            values.push(f64::from_le_bytes(payload[off..off + 8].try_into().ok()?));
        }
        rows.push(FeatureVector {
            values,
            particle,
            snapshot_time,
        });
    }
    Some(rows)
}
