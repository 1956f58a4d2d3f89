//! Manual pilot probes for calibrating run durations (ignored by default).

use softglass::md::{
    equilibrated_state, minimize_positions, FireParams, MinimizerConfig, PotentialParams,
    Simulation, SystemSpec,
};
use std::time::Instant;

#[test]
#[ignore]
fn pilot_step_and_quench_cost() {
    let spec = SystemSpec {
        n_particles: 2000,
        temperature: 0.47,
        rng_seed: 1,
        ..Default::default()
    };
    let params = PotentialParams::default();
    let minimizer = MinimizerConfig {
        force_tolerance: 1e-6,
        ..Default::default()
    };
    let t0 = Instant::now();
    let state = equilibrated_state(&spec, &params, 10.0, &minimizer, None).unwrap();
    println!("equilibration 10 tau: {:.2?}", t0.elapsed());

    let mut sim = Simulation::new(state, &spec, params.clone()).unwrap();
    let t0 = Instant::now();
    sim.run(4000).unwrap(); // 10 tau
    let dt = t0.elapsed();
    println!(
        "4000 steps: {:.2?} ({:.1} us/step, {:.3} s/tau)",
        dt,
        dt.as_secs_f64() * 1e6 / 4000.0,
        dt.as_secs_f64() / 10.0
    );

    for (label, cfg) in [
        (
            "default fire, tol 1e-6",
            MinimizerConfig {
                force_tolerance: 1e-6,
                ..Default::default()
            },
        ),
        (
            "default fire, tol 1e-8",
            MinimizerConfig {
                force_tolerance: 1e-8,
                ..Default::default()
            },
        ),
        (
            "fast fire, tol 1e-6",
            MinimizerConfig {
                force_tolerance: 1e-6,
                fire: FireParams {
                    dt_initial: 0.005,
                    dt_max: 0.05,
                    ..Default::default()
                },
                ..Default::default()
            },
        ),
        (
            "fast fire no cg, tol 1e-6",
            MinimizerConfig {
                force_tolerance: 1e-6,
                cg_switch: usize::MAX,
                fire: FireParams {
                    dt_initial: 0.005,
                    dt_max: 0.05,
                    ..Default::default()
                },
                ..Default::default()
            },
        ),
        (
            "faster fire no cg, tol 1e-6",
            MinimizerConfig {
                force_tolerance: 1e-6,
                cg_switch: usize::MAX,
                fire: FireParams {
                    dt_initial: 0.01,
                    dt_max: 0.1,
                    ..Default::default()
                },
                ..Default::default()
            },
        ),
    ] {
        let t0 = Instant::now();
        let mut total_iters = 0usize;
        for k in 0..3 {
            sim.run(400).unwrap();
            let mut positions = sim.state.positions.clone();
            let (iters, _res) = minimize_positions(
                &mut positions,
                &sim.state.species,
                &sim.state.box_edges,
                &params,
                &cfg,
            )
            .unwrap();
            total_iters += iters;
            let _ = k;
        }
        println!(
            "{label}: {:.2?}/quench, {} iters/quench",
            t0.elapsed() / 3,
            total_iters / 3
        );
    }
}
