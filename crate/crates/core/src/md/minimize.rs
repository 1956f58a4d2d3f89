//! Inherent-structure quenches: FIRE descent with conjugate-gradient
//! polishing when FIRE stalls.

use super::forces::ForceEngine;
use super::{MdError, PotentialParams, SimulationState};
use crate::geometry;
use crate::trajectory::{Frame, FrameKind, Species};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FireParams {
    pub dt_initial: f64,
    pub dt_max: f64,
    pub f_inc: f64,
    pub f_dec: f64,
    pub alpha_start: f64,
    pub f_alpha: f64,
    pub n_min: usize,
    /// Per-particle displacement cap per iteration, in sigma_AA.
    pub max_disp: f64,
}

impl Default for FireParams {
    fn default() -> Self {
        FireParams {
            dt_initial: 0.0025,
            dt_max: 0.025,
            f_inc: 1.1,
            f_dec: 0.5,
            alpha_start: 0.1,
            f_alpha: 0.99,
            n_min: 5,
            max_disp: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizerConfig {
    /// Convergence threshold on the max per-particle force magnitude.
    pub force_tolerance: f64,
    pub max_iterations: usize,
    pub fire: FireParams,
    /// FIRE iterations without measurable progress before CG polishing runs.
    pub cg_switch: usize,
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        MinimizerConfig {
            force_tolerance: 1e-8,
            max_iterations: 100_000,
            fire: FireParams::default(),
            cg_switch: 400,
        }
    }
}

impl MinimizerConfig {
    pub fn validate(&self) -> Result<(), MdError> {
        let f = &self.fire;
        let all_positive = self.force_tolerance > 0.0
            && f.dt_initial > 0.0
            && f.dt_max > 0.0
            && f.alpha_start > 0.0
            && f.max_disp > 0.0;
        if !all_positive {
            return Err(MdError::InvalidSpec(
                "minimizer tolerances and FIRE parameters must be positive".into(),
            ));
        }
        if !(0.0 < f.f_dec && f.f_dec < 1.0 && 1.0 < f.f_inc) {
            return Err(MdError::InvalidSpec(
                "FIRE factors must satisfy 0 < f_dec < 1 < f_inc".into(),
            ));
        }
        Ok(())
    }
}

/// Max per-particle force magnitude.
fn max_force(forces: &[f64], dim: usize) -> f64 {
    forces
        .chunks_exact(dim)
        .map(|f| f.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

struct Workspace<'a> {
    engine: ForceEngine,
    species: &'a [Species],
    box_edges: &'a [f64],
    dim: usize,
    forces: Vec<f64>,
    evals: usize,
}

impl Workspace<'_> {
    fn energy_forces(&mut self, positions: &[f64]) -> f64 {
        self.evals += 1;
        self.engine
            .compute(positions, self.species, self.box_edges, &mut self.forces)
    }
}

/// Relaxes `positions` in place until the max per-particle force is at or
/// below the tolerance. Returns `(iterations, residual_max_force)`.
pub fn minimize_positions(
    positions: &mut [f64],
    species: &[Species],
    box_edges: &[f64],
    params: &PotentialParams,
    cfg: &MinimizerConfig,
) -> Result<(usize, f64), MdError> {
    cfg.validate()?;
    let dim = box_edges.len();
    let mut ws = Workspace {
        engine: ForceEngine::new(params, dim, 0.3),
        species,
        box_edges,
        dim,
        forces: Vec::new(),
        evals: 0,
    };
    let n_dof = positions.len();
    let mut velocity = vec![0.0f64; n_dof];

    let fire = &cfg.fire;
    let mut dt = fire.dt_initial;
    let mut alpha = fire.alpha_start;
    let mut n_pos = 0usize;
    let mut iterations = 0usize;

    let mut energy = ws.energy_forces(positions);
    let mut fmax = max_force(&ws.forces, dim);
    let mut best_fmax = fmax;
    let mut since_progress = 0usize;

    while fmax > cfg.force_tolerance && iterations < cfg.max_iterations {
        // FIRE velocity mixing
        let power: f64 = ws.forces.iter().zip(&velocity).map(|(f, v)| f * v).sum();
        let v_norm = velocity.iter().map(|v| v * v).sum::<f64>().sqrt();
        let f_norm = ws.forces.iter().map(|f| f * f).sum::<f64>().sqrt();
        if f_norm > 0.0 {
            let mix = alpha * v_norm / f_norm;
            for (v, f) in velocity.iter_mut().zip(&ws.forces) {
                *v = (1.0 - alpha) * *v + mix * f;
            }
        }
        if power > 0.0 {
            n_pos += 1;
            if n_pos > fire.n_min {
                dt = (dt * fire.f_inc).min(fire.dt_max);
                alpha *= fire.f_alpha;
            }
        } else {
            n_pos = 0;
            dt *= fire.f_dec;
            alpha = fire.alpha_start;
            velocity.iter_mut().for_each(|v| *v = 0.0);
        }
        // semi-implicit Euler with a displacement cap
        for (v, f) in velocity.iter_mut().zip(&ws.forces) {
            *v += dt * f;
        }
        for i in 0..n_dof / dim {
            let chunk = &velocity[i * dim..(i + 1) * dim];
            let disp: f64 = chunk.iter().map(|v| (v * dt) * (v * dt)).sum::<f64>().sqrt();
            let scale = if disp > fire.max_disp {
                fire.max_disp / disp
            } else {
                1.0
            };
            for k in 0..dim {
                let x = positions[i * dim + k] + scale * dt * velocity[i * dim + k];
                positions[i * dim + k] = geometry::wrap(x, box_edges[k]);
            }
        }
        energy = ws.energy_forces(positions);
        fmax = max_force(&ws.forces, dim);
        iterations += 1;

        if fmax < 0.98 * best_fmax {
            best_fmax = fmax;
            since_progress = 0;
        } else {
            since_progress += 1;
        }
        if since_progress >= cfg.cg_switch && fmax > cfg.force_tolerance {
            let (cg_iters, _cg_fmax) =
                cg_polish(positions, &mut ws, cfg, energy, cfg.max_iterations - iterations);
            iterations += cg_iters;
            energy = ws.energy_forces(positions);
            fmax = max_force(&ws.forces, dim);
            best_fmax = best_fmax.min(fmax);
            since_progress = 0;
            velocity.iter_mut().for_each(|v| *v = 0.0);
            dt = fire.dt_initial;
            alpha = fire.alpha_start;
            n_pos = 0;
        }
    }
    let _ = energy;
    if fmax > cfg.force_tolerance {
        return Err(MdError::NonConvergence {
            residual: fmax,
            iterations,
        });
    }
    Ok((iterations, fmax))
}

/// Polak-Ribiere conjugate gradient with a secant line search on the
/// directional derivative. Force evaluations double as gradients, so an
/// accepted trial costs one evaluation. Runs until converged, stalled, or
/// out of budget.
fn cg_polish(
    positions: &mut [f64],
    ws: &mut Workspace,
    cfg: &MinimizerConfig,
    mut energy: f64,
    budget: usize,
) -> (usize, f64) {
    let dim = ws.dim;
    let n_dof = positions.len();
    let mut force = ws.forces.clone();
    let mut direction = force.clone();
    let mut alpha_prev = 1e-3f64;
    let mut trial = vec![0.0f64; n_dof];
    let mut trial_force = vec![0.0f64; n_dof];
    let mut iters = 0usize;
    let mut fmax = max_force(&force, dim);
    let mut stalls = 0usize;

    while iters < budget && fmax > cfg.force_tolerance && stalls < 4 {
        let mut slope0: f64 = -force.iter().zip(&direction).map(|(f, d)| f * d).sum::<f64>();
        if slope0 >= 0.0 {
            direction.copy_from_slice(&force);
            slope0 = -force.iter().map(|f| f * f).sum::<f64>();
            alpha_prev = 1e-3;
        }
        let d_max = direction
            .chunks_exact(dim)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let alpha_cap = cfg.fire.max_disp / d_max.max(1e-300);
        let mut alpha = alpha_prev.min(alpha_cap);

        let mut accepted = false;
        let mut e1 = energy;
        for _ in 0..6 {
            for (t, (x, d)) in trial
                .iter_mut()
                .zip(positions.iter().zip(direction.iter()))
            {
                *t = x + alpha * d;
            }
            for (idx, t) in trial.iter_mut().enumerate() {
                *t = geometry::wrap(*t, ws.box_edges[idx % dim]);
            }
            e1 = ws.energy_forces(&trial);
            iters += 1;
            let slope1: f64 = -ws
                .forces
                .iter()
                .zip(&direction)
                .map(|(f, d)| f * d)
                .sum::<f64>();
            // accept once the energy decreased and the slope has flattened
            if e1 <= energy && slope1.abs() <= 0.9 * slope0.abs() {
                trial_force.copy_from_slice(&ws.forces);
                accepted = true;
                break;
            }
            // secant step toward the slope zero (exact for quadratics)
            let denom = slope0 - slope1;
            let alpha_new = if denom.abs() > 1e-300 {
                (alpha * slope0 / denom).clamp(0.1 * alpha, 4.0 * alpha)
            } else {
                0.5 * alpha
            };
            alpha = if e1 > energy {
                alpha_new.min(0.5 * alpha)
            } else {
                alpha_new
            }
            .min(alpha_cap);
        }
        if !accepted {
            stalls += 1;
            alpha_prev = (0.25 * alpha_prev).max(1e-8);
            continue;
        }
        positions.copy_from_slice(&trial);
        energy = e1;
        alpha_prev = alpha.max(1e-8);
        fmax = max_force(&trial_force, dim);
        stalls = 0;

        let denom: f64 = force.iter().map(|f| f * f).sum();
        let numer: f64 = trial_force
            .iter()
            .zip(&force)
            .map(|(fn_, fo)| fn_ * (fn_ - fo))
            .sum();
        let beta = (numer / denom.max(1e-300)).max(0.0);
        for (d, (f, fo)) in direction
            .iter_mut()
            .zip(trial_force.iter().zip(force.iter()))
        {
            let _ = fo;
            *d = f + beta * *d;
        }
        force.copy_from_slice(&trial_force);
    }
    // leave ws.forces in sync with the returned positions
    let _ = ws.energy_forces(positions);
    fmax = max_force(&ws.forces, dim);
    (iters, fmax)
}

/// Quenches a state to its nearest inherent structure.
///
/// The input state is untouched; the returned frame carries the state's time
/// stamp and the minimized positions. Velocities are not part of the output.
pub fn quench_to_inherent_structure(
    state: &SimulationState,
    params: &PotentialParams,
    cfg: &MinimizerConfig,
) -> Result<Frame, MdError> {
    let mut positions = state.positions.clone();
    minimize_positions(
        &mut positions,
        &state.species,
        &state.box_edges,
        params,
        cfg,
    )?;
    Ok(Frame {
        time: state.time,
        box_edges: state.box_edges.clone(),
        positions,
        species: state.species.clone(),
        kind: FrameKind::Inherent,
    })
}
