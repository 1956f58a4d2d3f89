//! Total force and potential-energy evaluation over a neighbor list.

use super::neighbor::NeighborList;
use super::potential::{PairTable, PotentialParams};
use super::SimulationState;
use crate::trajectory::Species;

/// Separation below which a pair is reported as a numerical hazard.
pub const OVERLAP_FLOOR: f64 = 0.1;

/// Cached force engine: pair table plus a skin-buffered neighbor list.
#[derive(Debug, Clone)]
pub struct ForceEngine {
    pub table: PairTable,
    list: NeighborList,
    dim: usize,
}

/// Dimension-monomorphized pair sweep. One division and one square root per
/// interacting pair; the force-shift terms reuse `1/r = r / r^2`.
fn kernel<const D: usize>(
    positions: &[f64],
    species: &[Species],
    box_edges: &[f64],
    pairs: &[(u32, u32)],
    table: &PairTable,
    forces: &mut [f64],
) -> (f64, usize) {
    let (pos, rem) = positions.as_chunks::<D>();
    debug_assert!(rem.is_empty());
    let (frc, _) = forces.as_chunks_mut::<D>();
    let mut edge = [0.0f64; D];
    let mut half_edge = [0.0f64; D];
    for k in 0..D {
        edge[k] = box_edges[k];
        half_edge[k] = 0.5 * box_edges[k];
    }
    let cutoff_sq = table.cutoff_sq;
    let overlap_sq = OVERLAP_FLOOR * OVERLAP_FLOOR;
    let mut energy = 0.0;
    let mut hazards = 0usize;
    for &(i, j) in pairs {
        let (i, j) = (i as usize, j as usize);
        let pi = pos[i];
        let pj = pos[j];
        let mut dx = [0.0f64; D];
        let mut r2 = 0.0;
        for k in 0..D {
            let d = crate::geometry::min_image_fast(pi[k] - pj[k], edge[k], half_edge[k]);
            dx[k] = d;
            r2 += d * d;
        }
        if r2 >= cutoff_sq {
            continue;
        }
        hazards += (r2 < overlap_sq) as usize;
        let pair_idx = species[i] as usize * 2 + species[j] as usize;
        let c12 = table.c12[pair_idx];
        let c6 = table.c6[pair_idx];
        let inv2 = 1.0 / r2;
        let inv6 = inv2 * inv2 * inv2;
        let c12_inv12 = c12 * inv6 * inv6;
        let c6_inv6 = c6 * inv6;
        let r = r2.sqrt();
        let inv_r = r * inv2;
        // energy: bare - v_cut + (r - rc) f_cut; force/r: bare/r - f_cut/r
        energy += c12_inv12 - c6_inv6 - table.v_cut[pair_idx]
            + (r - table.cutoff) * table.f_cut[pair_idx];
        let f_over_r =
            (12.0 * c12_inv12 - 6.0 * c6_inv6) * inv2 - table.f_cut[pair_idx] * inv_r;
        for k in 0..D {
            let fk = f_over_r * dx[k];
            frc[i][k] += fk;
            frc[j][k] -= fk;
        }
    }
    (energy, hazards)
}

impl ForceEngine {
    pub fn new(params: &PotentialParams, dim: usize, skin: f64) -> ForceEngine {
        ForceEngine {
            table: PairTable::new(params),
            list: NeighborList::new(params.cutoff, skin),
            dim,
        }
    }

    /// Marks the neighbor list stale (call after teleporting particles).
    pub fn invalidate(&mut self) {
        self.list.invalidate();
    }

    pub fn rebuild_count(&self) -> u64 {
        self.list.rebuilds
    }

    /// Computes forces into `forces` (resized as needed) and returns the
    /// total potential energy. Positions must be wrapped into the box.
    pub fn compute(
        &mut self,
        positions: &[f64],
        species: &[Species],
        box_edges: &[f64],
        forces: &mut Vec<f64>,
    ) -> f64 {
        self.list.ensure_fresh(positions, box_edges, self.dim);
        forces.clear();
        forces.resize(positions.len(), 0.0);
        let (energy, hazards) = match self.dim {
            2 => kernel::<2>(
                positions,
                species,
                box_edges,
                &self.list.pairs,
                &self.table,
                forces,
            ),
            _ => kernel::<3>(
                positions,
                species,
                box_edges,
                &self.list.pairs,
                &self.table,
                forces,
            ),
        };
        if hazards > 0 {
            log::warn!(
                "{hazards} pair(s) closer than {OVERLAP_FLOOR} sigma; forces may be extreme"
            );
        }
        energy
    }
}

/// One-shot force computation matching the engine result.
///
/// Forces are the negative gradient of the total potential energy; the net
/// force vanishes by construction of the pair sum.
pub fn compute_forces(state: &SimulationState, params: &PotentialParams) -> (Vec<f64>, f64) {
    let mut engine = ForceEngine::new(params, state.dim, 0.0);
    let mut forces = Vec::new();
    let energy = engine.compute(
        &state.positions,
        &state.species,
        &state.box_edges,
        &mut forces,
    );
    (forces, energy)
}
