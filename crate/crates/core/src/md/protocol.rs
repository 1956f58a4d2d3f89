//! Sampling and aging protocols that turn raw dynamics into trajectories.

use super::minimize::{minimize_positions, MinimizerConfig};
use super::{
    random_state, soft_disperse, MdError, PotentialParams, Simulation, SimulationState, SystemSpec,
};
use crate::trajectory::{Frame, FrameKind, Trajectory, TrajectoryMeta};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolOptions {
    /// Burn-in time at the target temperature before sampling, in tau.
    pub equilibration: f64,
    /// Also record the thermal (instantaneous) frames.
    pub record_instantaneous: bool,
    pub minimizer: MinimizerConfig,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        ProtocolOptions {
            equilibration: 1000.0,
            record_instantaneous: false,
            minimizer: MinimizerConfig::default(),
        }
    }
}

/// Result of a sampling run: the quenched trajectory, optionally the thermal
/// one, and the final state for chaining runs across temperatures.
#[derive(Debug, Clone)]
pub struct SamplingOutput {
    pub inherent: Trajectory,
    pub instantaneous: Option<Trajectory>,
    pub final_state: SimulationState,
}

fn meta_for(spec: &SystemSpec) -> TrajectoryMeta {
    TrajectoryMeta {
        temperature: spec.temperature,
        density: spec.density,
        n_particles: spec.n_particles,
        seed: spec.rng_seed,
        extra: Default::default(),
    }
}

/// Builds and equilibrates a fresh state at the spec temperature, or
/// continues from `initial` (retargeting its thermostat).
pub fn equilibrated_state(
    spec: &SystemSpec,
    params: &PotentialParams,
    equilibration: f64,
    minimizer: &MinimizerConfig,
    initial: Option<SimulationState>,
) -> Result<SimulationState, MdError> {
    spec.validate()?;
    params.validate()?;
    let state = match initial {
        Some(s) => s,
        None => {
            let mut s = random_state(spec);
            soft_disperse(&mut s, params, 5000);
            // loose pre-relaxation so the LJ forces start integrable
            let loose = MinimizerConfig {
                force_tolerance: 2.0,
                max_iterations: 5000,
                ..minimizer.clone()
            };
            minimize_positions(
                &mut s.positions,
                &s.species,
                &s.box_edges,
                params,
                &loose,
            )?;
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(
                spec.rng_seed ^ 0x9e37_79b9_7f4a_7c15,
            );
            s.thermalize_velocities(spec.temperature, &mut rng);
            s
        }
    };
    let mut sim = Simulation::new(state, spec, params.clone())?;
    sim.retarget_thermostat(spec.temperature);
    let steps = sim.steps_for(equilibration);
    log::info!(
        "equilibrating N={} at T={} for {} tau ({} steps)",
        spec.n_particles,
        spec.temperature,
        equilibration,
        steps
    );
    sim.run(steps)?;
    Ok(sim.state)
}

/// Runs NVT sampling, quenching to the inherent structure every
/// `quench_interval` after the burn-in. Emits `floor(duration / interval)`
/// frames at uniform spacing.
pub fn run_sampling_protocol(
    spec: &SystemSpec,
    params: &PotentialParams,
    duration: f64,
    quench_interval: f64,
    opts: &ProtocolOptions,
    initial: Option<SimulationState>,
) -> Result<SamplingOutput, MdError> {
    if quench_interval <= 0.0 || duration < quench_interval {
        return Err(MdError::Protocol(format!(
            "duration {duration} must cover at least one interval {quench_interval}"
        )));
    }
    let state = equilibrated_state(spec, params, opts.equilibration, &opts.minimizer, initial)?;
    let mut sim = Simulation::new(state, spec, params.clone())?;
    let steps_per_frame = sim.steps_for(quench_interval);
    if steps_per_frame == 0 {
        return Err(MdError::Protocol(
            "quench interval shorter than the timestep".into(),
        ));
    }
    let n_frames = (duration / quench_interval + 1e-9).floor() as u64;
    let mut inherent = Vec::with_capacity(n_frames as usize);
    let mut instantaneous = Vec::new();
    for k in 0..n_frames {
        sim.run(steps_per_frame)?;
        let frame = quench_state_to_frame(&sim.state, params, &opts.minimizer)?;
        inherent.push(frame);
        if opts.record_instantaneous {
            instantaneous.push(sim.state.to_frame(FrameKind::Instantaneous));
        }
        if k % 200 == 199 {
            log::info!(
                "sampling T={}: {}/{} frames",
                spec.temperature,
                k + 1,
                n_frames
            );
        }
    }
    let meta = meta_for(spec);
    Ok(SamplingOutput {
        inherent: Trajectory::new(inherent, meta.clone()).map_err(protocol_err)?,
        instantaneous: if opts.record_instantaneous {
            Some(Trajectory::new(instantaneous, meta).map_err(protocol_err)?)
        } else {
            None
        },
        final_state: sim.state,
    })
}

fn protocol_err(e: crate::trajectory::TrajectoryError) -> MdError {
    MdError::Protocol(e.to_string())
}

fn quench_state_to_frame(
    state: &SimulationState,
    params: &PotentialParams,
    minimizer: &MinimizerConfig,
) -> Result<Frame, MdError> {
    super::minimize::quench_to_inherent_structure(state, params, minimizer)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgingOptions {
    /// Equilibration time at the initial (hot) temperature.
    pub equilibration: f64,
    /// Length of each recorded segment, in tau.
    pub segment_duration: f64,
    pub quench_interval: f64,
    pub minimizer: MinimizerConfig,
}

impl Default for AgingOptions {
    fn default() -> Self {
        AgingOptions {
            equilibration: 200.0,
            segment_duration: 500.0,
            quench_interval: 1.0,
            minimizer: MinimizerConfig::default(),
        }
    }
}

/// Equilibrates at `t_initial`, instantaneously retargets the thermostat to
/// `t_final` at time zero (chain variables zeroed, no gradual ramp), and
/// records a quenched trajectory segment starting at each waiting time.
///
/// Waiting times are rounded to the quench interval; segment frame times are
/// absolute (tau since the quench).
pub fn run_aging_protocol(
    spec: &SystemSpec,
    params: &PotentialParams,
    t_initial: f64,
    t_final: f64,
    waiting_times: &[f64],
    opts: &AgingOptions,
) -> Result<Vec<(f64, Trajectory)>, MdError> {
    if t_final > t_initial {
        return Err(MdError::Protocol(format!(
            "final temperature {t_final} must not exceed initial {t_initial}"
        )));
    }
    if waiting_times.is_empty() {
        return Err(MdError::Protocol("no waiting times given".into()));
    }
    let hot_spec = SystemSpec {
        temperature: t_initial,
        ..spec.clone()
    };
    let state = equilibrated_state(
        &hot_spec,
        params,
        opts.equilibration,
        &opts.minimizer,
        None,
    )?;
    let cold_spec = SystemSpec {
        temperature: t_final,
        ..spec.clone()
    };
    let mut sim = Simulation::new(state, &cold_spec, params.clone())?;
    // instantaneous quench: retarget and zero the chain, reset the clock
    sim.retarget_thermostat(t_final);
    sim.state.steps = 0;
    sim.state.time = 0.0;

    let steps_per_frame = sim.steps_for(opts.quench_interval);
    let interval = opts.quench_interval;
    let frames_per_segment = (opts.segment_duration / interval + 1e-9).floor() as i64;
    let mut ages: Vec<i64> = waiting_times
        .iter()
        .map(|&t| (t / interval).round() as i64)
        .collect();
    ages.sort_unstable();
    ages.dedup();

    // union of needed frame indices (in units of the interval)
    let mut needed: Vec<i64> = ages
        .iter()
        .flat_map(|&a| (0..=frames_per_segment).map(move |k| a + k))
        .collect();
    needed.sort_unstable();
    needed.dedup();

    let mut recorded: Vec<(i64, Frame)> = Vec::with_capacity(needed.len());
    let mut current: i64 = 0;
    for &idx in &needed {
        let delta = idx - current;
        sim.run(delta as u64 * steps_per_frame)?;
        current = idx;
        recorded.push((
            idx,
            quench_state_to_frame(&sim.state, params, &opts.minimizer)?,
        ));
    }

    let meta = TrajectoryMeta {
        temperature: t_final,
        ..meta_for(spec)
    };
    let mut segments = Vec::with_capacity(ages.len());
    for &a in &ages {
        let frames: Vec<Frame> = recorded
            .iter()
            .filter(|(idx, _)| *idx >= a && *idx <= a + frames_per_segment)
            .map(|(_, f)| f.clone())
            .collect();
        let mut meta = meta.clone();
        meta.extra.insert(
            "t_age".into(),
            serde_json::json!(a as f64 * interval),
        );
        segments.push((
            a as f64 * interval,
            Trajectory::new(frames, meta).map_err(protocol_err)?,
        ));
    }
    Ok(segments)
}
