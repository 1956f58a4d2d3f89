//! Velocity-Verlet integration coupled to a Nosé-Hoover chain thermostat.

use super::forces::ForceEngine;
use super::{MdError, PotentialParams, SimulationState, SystemSpec};
use serde::{Deserialize, Serialize};

/// Default chain length.
pub const CHAIN_LENGTH: usize = 3;
/// Thermostat time constant in units of the timestep.
pub const THERMOSTAT_TAU_STEPS: f64 = 100.0;
/// Default neighbor-list skin in sigma_AA.
pub const DEFAULT_SKIN: f64 = 0.3;

/// Thermostat chain state. With `enabled == false` the integrator reduces to
/// plain NVE velocity Verlet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoseHooverChain {
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub masses: Vec<f64>,
    pub target_temperature: f64,
    pub enabled: bool,
}

impl NoseHooverChain {
    pub fn disabled() -> NoseHooverChain {
        NoseHooverChain {
            positions: vec![0.0; CHAIN_LENGTH],
            velocities: vec![0.0; CHAIN_LENGTH],
            masses: vec![1.0; CHAIN_LENGTH],
            target_temperature: 0.0,
            enabled: false,
        }
    }

    /// Chain of `CHAIN_LENGTH` thermostats with masses set from the
    /// target temperature and coupling time `tau_t`.
    pub fn new(target_temperature: f64, dof: usize, tau_t: f64) -> NoseHooverChain {
        let q0 = dof as f64 * target_temperature * tau_t * tau_t;
        let qk = target_temperature * tau_t * tau_t;
        let mut masses = vec![qk; CHAIN_LENGTH];
        masses[0] = q0;
        NoseHooverChain {
            positions: vec![0.0; CHAIN_LENGTH],
            velocities: vec![0.0; CHAIN_LENGTH],
            masses,
            target_temperature,
            enabled: true,
        }
    }

    /// Retargets the chain to a new temperature and zeroes its variables
    /// (used by the instantaneous quench of the aging protocol).
    pub fn retarget(&mut self, temperature: f64, dof: usize, tau_t: f64) {
        *self = NoseHooverChain::new(temperature, dof, tau_t);
    }

    /// Half-step chain propagation; returns the velocity scale factor.
    fn half_step(&mut self, kinetic_energy: f64, dof: usize, dt_half: f64) -> f64 {
        let m = self.positions.len();
        let t = self.target_temperature;
        let dt4 = 0.5 * dt_half;
        let dt8 = 0.25 * dt_half;
        let mut g = vec![0.0; m];
        g[0] = (2.0 * kinetic_energy - dof as f64 * t) / self.masses[0];
        for k in 1..m {
            g[k] = (self.masses[k - 1] * self.velocities[k - 1] * self.velocities[k - 1] - t)
                / self.masses[k];
        }
        self.velocities[m - 1] += g[m - 1] * dt4;
        for k in (0..m - 1).rev() {
            let decay = (-self.velocities[k + 1] * dt8).exp();
            self.velocities[k] = (self.velocities[k] * decay + g[k] * dt4) * decay;
        }
        let scale = (-self.velocities[0] * dt_half).exp();
        let ke = kinetic_energy * scale * scale;
        for k in 0..m {
            self.positions[k] += self.velocities[k] * dt_half;
        }
        g[0] = (2.0 * ke - dof as f64 * t) / self.masses[0];
        for k in 0..m - 1 {
            let decay = (-self.velocities[k + 1] * dt8).exp();
            self.velocities[k] = (self.velocities[k] * decay + g[k] * dt4) * decay;
            g[k + 1] = (self.masses[k] * self.velocities[k] * self.velocities[k] - t)
                / self.masses[k + 1];
        }
        self.velocities[m - 1] += g[m - 1] * dt4;
        scale
    }
}

/// A running simulation: state plus cached forces.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub state: SimulationState,
    pub params: PotentialParams,
    pub dt: f64,
    engine: ForceEngine,
    pub forces: Vec<f64>,
    pub potential_energy: f64,
}

impl Simulation {
    /// Wraps an existing state. The thermostat is enabled at the spec
    /// temperature with the default chain.
    pub fn new(
        state: SimulationState,
        spec: &SystemSpec,
        params: PotentialParams,
    ) -> Result<Simulation, MdError> {
        spec.validate()?;
        params.validate()?;
        let mut sim = Simulation {
            engine: ForceEngine::new(&params, state.dim, DEFAULT_SKIN),
            state,
            params,
            dt: spec.dt,
            forces: Vec::new(),
            potential_energy: 0.0,
        };
        sim.state.thermostat = NoseHooverChain::new(
            spec.temperature,
            sim.state.dof(),
            THERMOSTAT_TAU_STEPS * spec.dt,
        );
        sim.refresh_forces();
        Ok(sim)
    }

    pub fn refresh_forces(&mut self) {
        self.potential_energy = self.engine.compute(
            &self.state.positions,
            &self.state.species,
            &self.state.box_edges,
            &mut self.forces,
        );
    }

    pub fn total_energy(&self) -> f64 {
        self.potential_energy + self.state.kinetic_energy()
    }

    /// Switches thermostat coupling on or off (off = NVE).
    pub fn set_thermostat_enabled(&mut self, enabled: bool) {
        self.state.thermostat.enabled = enabled;
    }

    /// Retargets the thermostat and zeroes the chain variables.
    pub fn retarget_thermostat(&mut self, temperature: f64) {
        let dof = self.state.dof();
        self.state
            .thermostat
            .retarget(temperature, dof, THERMOSTAT_TAU_STEPS * self.dt);
    }

    /// Advances one step of velocity Verlet, optionally wrapped in
    /// half-step thermostat updates. Deterministic given the state.
    pub fn step(&mut self) -> Result<(), MdError> {
        let d = self.state.dim;
        let dt = self.dt;
        let dof = self.state.dof();
        if self.state.thermostat.enabled {
            let ke = self.state.kinetic_energy();
            let scale = self.state.thermostat.half_step(ke, dof, 0.5 * dt);
            for v in self.state.velocities.iter_mut() {
                *v *= scale;
            }
        }
        let half = 0.5 * dt;
        for (v, f) in self.state.velocities.iter_mut().zip(&self.forces) {
            *v += half * f;
        }
        for i in 0..self.state.positions.len() {
            let x = self.state.positions[i] + dt * self.state.velocities[i];
            self.state.positions[i] = crate::geometry::wrap(x, self.state.box_edges[i % d]);
        }
        self.refresh_forces();
        for (v, f) in self.state.velocities.iter_mut().zip(&self.forces) {
            *v += half * f;
        }
        if self.state.thermostat.enabled {
            let ke = self.state.kinetic_energy();
            let scale = self.state.thermostat.half_step(ke, dof, 0.5 * dt);
            for v in self.state.velocities.iter_mut() {
                *v *= scale;
            }
        }
        self.state.steps += 1;
        self.state.time = self.state.steps as f64 * dt;
        if !self.state.positions.iter().all(|x| x.is_finite())
            || !self.state.velocities.iter().all(|v| v.is_finite())
        {
            return Err(MdError::Blowup {
                step: self.state.steps,
            });
        }
        Ok(())
    }

    pub fn run(&mut self, steps: u64) -> Result<(), MdError> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    /// Steps covering a time span of `duration` tau.
    pub fn steps_for(&self, duration: f64) -> u64 {
        (duration / self.dt).round() as u64
    }
}

/// Single NVT step on a state, returning the advanced state.
pub fn nvt_step(
    state: &SimulationState,
    params: &PotentialParams,
    spec: &SystemSpec,
) -> Result<SimulationState, MdError> {
    if state.thermostat.enabled && state.thermostat.positions.len() < 2 {
        return Err(MdError::InvalidSpec(
            "thermostat chain must have length >= 2".into(),
        ));
    }
    let mut sim = Simulation {
        engine: ForceEngine::new(params, state.dim, DEFAULT_SKIN),
        state: state.clone(),
        params: params.clone(),
        dt: spec.dt,
        forces: Vec::new(),
        potential_energy: 0.0,
    };
    sim.refresh_forces();
    sim.step()?;
    Ok(sim.state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::md::{random_state, soft_disperse};

    fn prepared_sim(n: usize, t: f64, seed: u64) -> Simulation {
        let spec = SystemSpec {
            n_particles: n,
            temperature: t,
            rng_seed: seed,
            ..Default::default()
        };
        let params = PotentialParams::default();
        let mut state = random_state(&spec);
        soft_disperse(&mut state, &params, 3000);
        Simulation::new(state, &spec, params).unwrap()
    }

    #[test]
    fn zero_velocity_zero_force_is_fixed_point() {
        // two particles beyond the cutoff, thermostat off
        let state = SimulationState::from_parts(
            vec![1.0, 1.0, 1.0, 6.0, 6.0, 6.0],
            vec![0.0; 6],
            vec![crate::trajectory::Species::A; 2],
            vec![12.0; 3],
        );
        let spec = SystemSpec {
            n_particles: 2,
            temperature: 1.0,
            ..Default::default()
        };
        let next = nvt_step(&state, &PotentialParams::default(), &spec).unwrap();
        assert_eq!(next.positions, state.positions);
        assert_eq!(next.velocities, state.velocities);
    }

    #[test]
    fn nvt_step_is_deterministic() {
        let sim = prepared_sim(60, 0.8, 9);
        let spec = SystemSpec {
            n_particles: 60,
            temperature: 0.8,
            ..Default::default()
        };
        let a = nvt_step(&sim.state, &sim.params, &spec).unwrap();
        let b = nvt_step(&sim.state, &sim.params, &spec).unwrap();
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.velocities, b.velocities);
        assert_eq!(a.thermostat, b.thermostat);
    }

    #[test]
    fn nve_energy_drift_is_small() {
        // thermostat off -> plain velocity Verlet
        let mut sim = prepared_sim(108, 0.47, 3);
        sim.set_thermostat_enabled(true);
        sim.run(2000).unwrap(); // settle
        sim.set_thermostat_enabled(false);
        let e0 = sim.total_energy();
        let n = sim.state.n_particles() as f64;
        let mut max_drift = 0.0f64;
        for _ in 0..20 {
            sim.run(100).unwrap();
            max_drift = max_drift.max((sim.total_energy() - e0).abs() / n);
        }
        assert!(max_drift < 1e-4, "energy drift {max_drift}");
    }

    #[test]
    fn thermostat_holds_target_temperature() {
        let mut sim = prepared_sim(108, 0.7, 4);
        sim.run(4000).unwrap(); // equilibrate
        let mut acc = 0.0;
        let samples = 6000;
        for _ in 0..samples {
            sim.step().unwrap();
            acc += sim.state.kinetic_temperature();
        }
        let mean_t = acc / samples as f64;
        assert!(
            (mean_t - 0.7).abs() / 0.7 < 0.02,
            "mean kinetic temperature {mean_t}"
        );
    }

    #[test]
    fn blowup_is_reported_with_step() {
        // two particles exactly coincident: the pair energy is NaN and the
        // first step must fail with the step number
        let state = SimulationState::from_parts(
            vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            vec![0.0; 6],
            vec![crate::trajectory::Species::A; 2],
            vec![8.0; 3],
        );
        let spec = SystemSpec {
            n_particles: 2,
            temperature: 0.5,
            ..Default::default()
        };
        let params = PotentialParams::default();
        let mut sim = Simulation::new(state, &spec, params).unwrap();
        sim.set_thermostat_enabled(false);
        match sim.step() {
            Err(MdError::Blowup { step }) => assert_eq!(step, 1),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
