//! NVT molecular dynamics of the binary Lennard-Jones mixture, inherent
//! structure quenches, and the sampling/aging protocols.

mod forces;
mod integrate;
mod minimize;
mod neighbor;
mod potential;
mod protocol;

pub use forces::{compute_forces, ForceEngine, OVERLAP_FLOOR};
pub use integrate::{nvt_step, NoseHooverChain, Simulation};
pub use minimize::{minimize_positions, quench_to_inherent_structure, FireParams, MinimizerConfig};
pub use neighbor::{collect_pairs, NeighborList};
pub use potential::{pair_energy_force, PairTable, PotentialParams};
pub use protocol::{
    equilibrated_state, run_aging_protocol, run_sampling_protocol, AgingOptions, ProtocolOptions,
    SamplingOutput,
};

use crate::geometry;
use crate::trajectory::Species;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MdError {
    #[error("invalid system specification: {0}")]
    InvalidSpec(String),
    #[error("integration blow-up: non-finite coordinates after step {step}")]
    Blowup { step: u64 },
    #[error(
        "minimization did not converge within {iterations} iterations \
         (residual max force {residual:.3e})"
    )]
    NonConvergence { residual: f64, iterations: usize },
    #[error("protocol error: {0}")]
    Protocol(String),
}

/// Global description of the simulated system, reduced units throughout
/// (lengths in sigma_AA, energies in epsilon_AA, k_B = 1, m = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemSpec {
    pub n_particles: usize,
    /// Spatial dimension, 2 or 3.
    pub dimension: usize,
    /// Number density in sigma_AA^-d.
    pub density: f64,
    /// Fraction of species A.
    pub fraction_a: f64,
    /// Reduced temperature.
    pub temperature: f64,
    /// Integration timestep in tau.
    pub dt: f64,
    pub rng_seed: u64,
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec {
            n_particles: 2000,
            dimension: 3,
            density: 1.2,
            fraction_a: 0.8,
            temperature: 0.47,
            dt: 0.0025,
            rng_seed: 0,
        }
    }
}

impl SystemSpec {
    pub fn validate(&self) -> Result<(), MdError> {
        if self.n_particles < 2 {
            return Err(MdError::InvalidSpec("need at least 2 particles".into()));
        }
        if !(2..=3).contains(&self.dimension) {
            return Err(MdError::InvalidSpec("dimension must be 2 or 3".into()));
        }
        if !(self.density > 0.0) {
            return Err(MdError::InvalidSpec("density must be positive".into()));
        }
        if !(self.fraction_a > 0.0 && self.fraction_a < 1.0) {
            return Err(MdError::InvalidSpec(
                "fraction_a must lie strictly between 0 and 1".into(),
            ));
        }
        if !(self.dt > 0.0) {
            return Err(MdError::InvalidSpec("dt must be positive".into()));
        }
        if !(self.temperature > 0.0) {
            return Err(MdError::InvalidSpec("temperature must be positive".into()));
        }
        Ok(())
    }

    /// Periodic box edge `L = (N / rho)^(1/d)`.
    pub fn box_edge(&self) -> f64 {
        (self.n_particles as f64 / self.density).powf(1.0 / self.dimension as f64)
    }

    pub fn n_species_a(&self) -> usize {
        (self.fraction_a * self.n_particles as f64).round() as usize
    }

    /// Species labels: the first `n_A` particles are A.
    pub fn species(&self) -> Vec<Species> {
        let n_a = self.n_species_a();
        (0..self.n_particles)
            .map(|i| if i < n_a { Species::A } else { Species::B })
            .collect()
    }
}

/// Full dynamical state of one simulation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    /// Flat row-major `n x d`, wrapped into the box.
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub species: Vec<Species>,
    pub box_edges: Vec<f64>,
    pub thermostat: NoseHooverChain,
    /// Simulation time in tau.
    pub time: f64,
    /// Completed integration steps.
    pub steps: u64,
    pub dim: usize,
}

impl SimulationState {
    pub fn from_parts(
        positions: Vec<f64>,
        velocities: Vec<f64>,
        species: Vec<Species>,
        box_edges: Vec<f64>,
    ) -> SimulationState {
        let dim = box_edges.len();
        SimulationState {
            positions,
            velocities,
            species,
            box_edges,
            thermostat: NoseHooverChain::disabled(),
            time: 0.0,
            steps: 0,
            dim,
        }
    }

    pub fn n_particles(&self) -> usize {
        self.species.len()
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.velocities.iter().map(|v| v * v).sum::<f64>()
    }

    /// Momentum-free degrees of freedom `d (N - 1)`.
    pub fn dof(&self) -> usize {
        self.dim * (self.n_particles() - 1)
    }

    pub fn kinetic_temperature(&self) -> f64 {
        2.0 * self.kinetic_energy() / self.dof() as f64
    }

    /// Snapshot of the positions as a trajectory frame.
    pub fn to_frame(&self, kind: crate::trajectory::FrameKind) -> crate::trajectory::Frame {
        crate::trajectory::Frame {
            time: self.time,
            box_edges: self.box_edges.clone(),
            positions: self.positions.clone(),
            species: self.species.clone(),
            kind,
        }
    }

    /// Removes the center-of-mass velocity.
    pub fn zero_momentum(&mut self) {
        let n = self.n_particles() as f64;
        for k in 0..self.dim {
            let mean: f64 = self.velocities.iter().skip(k).step_by(self.dim).sum::<f64>() / n;
            for v in self.velocities.iter_mut().skip(k).step_by(self.dim) {
                *v -= mean;
            }
        }
    }

    /// Rescales velocities so the kinetic temperature equals `t` exactly.
    pub fn rescale_to_temperature(&mut self, t: f64) {
        let current = self.kinetic_temperature();
        if current > 0.0 {
            let s = (t / current).sqrt();
            for v in self.velocities.iter_mut() {
                *v *= s;
            }
        }
    }

    /// Draws Maxwell-Boltzmann velocities at the spec temperature, removes
    /// center-of-mass drift and rescales to the exact target.
    pub fn thermalize_velocities(&mut self, temperature: f64, rng: &mut ChaCha8Rng) {
        let dist = rand_distr_normal();
        for v in self.velocities.iter_mut() {
            *v = dist(rng) * temperature.sqrt();
        }
        self.zero_momentum();
        self.rescale_to_temperature(temperature);
    }
}

/// Standard normal sampler (Box-Muller; avoids an extra dependency on
/// rand_distr for one distribution).
fn rand_distr_normal() -> impl Fn(&mut ChaCha8Rng) -> f64 {
    |rng: &mut ChaCha8Rng| {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Random placement at the spec density with thermal velocities. Positions
/// are uniform; callers should disperse overlaps before integrating
/// (see [`equilibrated_state`]).
pub fn random_state(spec: &SystemSpec) -> SimulationState {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let l = spec.box_edge();
    let d = spec.dimension;
    let n = spec.n_particles;
    let positions: Vec<f64> = (0..n * d).map(|_| rng.gen_range(0.0..l)).collect();
    let mut state = SimulationState::from_parts(
        positions,
        vec![0.0; n * d],
        spec.species(),
        vec![l; d],
    );
    state.thermalize_velocities(spec.temperature, &mut rng);
    state
}

/// Pushes overlapping particles apart with a soft harmonic repulsion so the
/// LJ potential can take over without blowing up. Purely repulsive
/// `(1 - r/sigma_ij)^2` contact cost, relaxed by damped steepest descent.
pub fn soft_disperse(state: &mut SimulationState, params: &PotentialParams, sweeps: usize) {
    let d = state.dim;
    let n = state.n_particles();
    let max_sigma = params
        .sigma
        .iter()
        .flatten()
        .cloned()
        .fold(0.0f64, f64::max);
    let half: Vec<f64> = state.box_edges.iter().map(|&l| 0.5 * l).collect();
    let mut grad = vec![0.0; n * d];
    for _ in 0..sweeps {
        let pairs = collect_pairs(&state.positions, &state.box_edges, d, max_sigma);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut any = false;
        for &(i, j) in &pairs {
            let (i, j) = (i as usize, j as usize);
            let sij = params.sigma[state.species[i] as usize][state.species[j] as usize];
            let mut dx = [0.0f64; 3];
            let mut r2 = 0.0;
            for k in 0..d {
                dx[k] = geometry::min_image_fast(
                    state.positions[i * d + k] - state.positions[j * d + k],
                    state.box_edges[k],
                    half[k],
                );
                r2 += dx[k] * dx[k];
            }
            let r = r2.sqrt().max(1e-12);
            if r >= sij {
                continue;
            }
            any = true;
            // f = -dE/dr with E = (1 - r/s)^2
            let f = 2.0 * (1.0 - r / sij) / sij;
            for k in 0..d {
                let fk = f * dx[k] / r;
                grad[i * d + k] += fk;
                grad[j * d + k] -= fk;
            }
        }
        if !any {
            break;
        }
        let max_g = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let step = (0.05 / max_g).min(0.1);
        for (x, g) in state.positions.iter_mut().zip(&grad) {
            *x += step * g;
        }
        let box_edges = state.box_edges.clone();
        for (idx, x) in state.positions.iter_mut().enumerate() {
            *x = geometry::wrap(*x, box_edges[idx % d]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_edge_matches_density() {
        let spec = SystemSpec {
            n_particles: 2000,
            ..Default::default()
        };
        let l = spec.box_edge();
        assert!((2000.0 / l.powi(3) - 1.2).abs() < 1e-12);
    }

    #[test]
    fn species_counts_match_fraction() {
        let spec = SystemSpec {
            n_particles: 2000,
            ..Default::default()
        };
        let species = spec.species();
        let n_a = species.iter().filter(|&&s| s == Species::A).count();
        assert_eq!(n_a, 1600);
    }

    #[test]
    fn spec_validation_catches_bad_fields() {
        let ok = SystemSpec::default();
        assert!(ok.validate().is_ok());
        for bad in [
            SystemSpec { n_particles: 1, ..ok.clone() },
            SystemSpec { dimension: 4, ..ok.clone() },
            SystemSpec { density: -1.0, ..ok.clone() },
            SystemSpec { fraction_a: 1.0, ..ok.clone() },
            SystemSpec { dt: 0.0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn thermalized_velocities_have_target_temperature_and_no_drift() {
        let spec = SystemSpec {
            n_particles: 500,
            temperature: 0.47,
            rng_seed: 11,
            ..Default::default()
        };
        let state = random_state(&spec);
        assert!((state.kinetic_temperature() - 0.47).abs() < 1e-12);
        for k in 0..3 {
            let p: f64 = state.velocities.iter().skip(k).step_by(3).sum();
            assert!(p.abs() < 1e-10);
        }
    }

    #[test]
    fn soft_disperse_removes_overlaps() {
        let spec = SystemSpec {
            n_particles: 200,
            temperature: 1.0,
            rng_seed: 4,
            ..Default::default()
        };
        let params = PotentialParams::default();
        let mut state = random_state(&spec);
        soft_disperse(&mut state, &params, 2000);
        let pairs = collect_pairs(&state.positions, &state.box_edges, 3, 1.0);
        let half: Vec<f64> = state.box_edges.iter().map(|&l| 0.5 * l).collect();
        let mut min_r2 = f64::INFINITY;
        for &(i, j) in &pairs {
            let (i, j) = (i as usize, j as usize);
            let mut r2 = 0.0;
            for k in 0..3 {
                let d = geometry::min_image_fast(
                    state.positions[i * 3 + k] - state.positions[j * 3 + k],
                    state.box_edges[k],
                    half[k],
                );
                r2 += d * d;
            }
            min_r2 = min_r2.min(r2);
        }
        assert!(min_r2.sqrt() > 0.5, "closest pair {}", min_r2.sqrt());
    }
}
