//! Binary Lennard-Jones pair potential with a force-shifted cutoff.

use crate::trajectory::Species;
use serde::{Deserialize, Serialize};

use super::MdError;

/// Species-pair LJ parameters in reduced units (epsilon_AA, sigma_AA).
///
/// Defaults are the standard Kob-Andersen 80:20 constants from the model
/// literature: eps_AB = 1.5, eps_BB = 0.5, sigma_AB = 0.8, sigma_BB = 0.88.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PotentialParams {
    /// Symmetric 2x2 epsilon matrix `[A][A/B]`.
    pub epsilon: [[f64; 2]; 2],
    /// Symmetric 2x2 sigma matrix.
    pub sigma: [[f64; 2]; 2],
    /// Cutoff distance shared by all pairs, in sigma_AA units.
    pub cutoff: f64,
    /// Force-shift smoothing so force and energy both vanish at the cutoff.
    pub force_shift: bool,
}

impl Default for PotentialParams {
    fn default() -> Self {
        PotentialParams {
            epsilon: [[1.0, 1.5], [1.5, 0.5]],
            sigma: [[1.0, 0.8], [0.8, 0.88]],
            cutoff: 2.5,
            force_shift: true,
        }
    }
}

impl PotentialParams {
    pub fn validate(&self) -> Result<(), MdError> {
        if self.cutoff <= 0.0 || !self.cutoff.is_finite() {
            return Err(MdError::InvalidSpec("cutoff must be positive".into()));
        }
        for m in [&self.epsilon, &self.sigma] {
            if (m[0][1] - m[1][0]).abs() > 1e-12 {
                return Err(MdError::InvalidSpec(
                    "epsilon/sigma matrices must be symmetric".into(),
                ));
            }
        }
        if self
            .sigma
            .iter()
            .flatten()
            .chain(self.epsilon.iter().flatten())
            .any(|&v| v <= 0.0 || !v.is_finite())
        {
            return Err(MdError::InvalidSpec(
                "epsilon/sigma entries must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Precomputed per-species-pair coefficients for the hot loop, indexed by
/// `species_i * 2 + species_j`.
#[derive(Debug, Clone)]
pub struct PairTable {
    pub c12: [f64; 4],
    pub c6: [f64; 4],
    /// Bare force at the cutoff (zero when force-shift is off).
    pub f_cut: [f64; 4],
    /// Energy offset at the cutoff.
    pub v_cut: [f64; 4],
    pub cutoff: f64,
    pub cutoff_sq: f64,
    pub force_shift: bool,
}

impl PairTable {
    pub fn new(params: &PotentialParams) -> PairTable {
        let mut t = PairTable {
            c12: [0.0; 4],
            c6: [0.0; 4],
            f_cut: [0.0; 4],
            v_cut: [0.0; 4],
            cutoff: params.cutoff,
            cutoff_sq: params.cutoff * params.cutoff,
            force_shift: params.force_shift,
        };
        for si in 0..2 {
            for sj in 0..2 {
                let idx = si * 2 + sj;
                let eps = params.epsilon[si][sj];
                let sig = params.sigma[si][sj];
                let s6 = sig.powi(6);
                t.c12[idx] = 4.0 * eps * s6 * s6;
                t.c6[idx] = 4.0 * eps * s6;
                let rc = params.cutoff;
                let inv6 = rc.powi(-6);
                let v_rc = t.c12[idx] * inv6 * inv6 - t.c6[idx] * inv6;
                let f_rc = (12.0 * t.c12[idx] * inv6 * inv6 - 6.0 * t.c6[idx] * inv6) / rc;
                if params.force_shift {
                    t.f_cut[idx] = f_rc;
                }
                t.v_cut[idx] = v_rc;
            }
        }
        t
    }

    /// Pair energy and radial force magnitude at squared distance `r_sq`.
    ///
    /// The force is the coefficient of the unit vector from j to i acting on
    /// i (positive = repulsive). Returns `(0, 0)` beyond the cutoff.
    #[inline(always)]
    pub fn energy_force_r2(&self, r_sq: f64, pair_idx: usize) -> (f64, f64) {
        if r_sq >= self.cutoff_sq {
            return (0.0, 0.0);
        }
        let inv2 = 1.0 / r_sq;
        let inv6 = inv2 * inv2 * inv2;
        let c12 = self.c12[pair_idx];
        let c6 = self.c6[pair_idx];
        let v_bare = c12 * inv6 * inv6 - c6 * inv6;
        let r = r_sq.sqrt();
        let f_bare = (12.0 * c12 * inv6 * inv6 - 6.0 * c6 * inv6) / r;
        let f = f_bare - self.f_cut[pair_idx];
        let v = v_bare - self.v_cut[pair_idx] + (r - self.cutoff) * self.f_cut[pair_idx];
        (v, f)
    }
}

/// Pair energy and force magnitude at separation `r` for one species pair.
///
/// Positive force means repulsion. Beyond the cutoff both are exactly zero;
/// at the cutoff the force-shifted form makes both continuous.
pub fn pair_energy_force(
    r: f64,
    species_i: Species,
    species_j: Species,
    params: &PotentialParams,
) -> Result<(f64, f64), MdError> {
    if !r.is_finite() || r <= 0.0 {
        return Err(MdError::InvalidSpec(format!(
            "pair separation must be positive and finite, got {r}"
        )));
    }
    let table = PairTable::new(params);
    let idx = species_i as usize * 2 + species_j as usize;
    Ok(table.energy_force_r2(r * r, idx))
}
