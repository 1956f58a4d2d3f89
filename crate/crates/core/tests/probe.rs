use softglass::md::{equilibrated_state, minimize_positions, MinimizerConfig, PotentialParams, Simulation, SystemSpec};
use std::time::Instant;

#[test]
#[ignore]
fn probe_quench_final() {
    let spec = SystemSpec { n_particles: 2000, temperature: 0.47, rng_seed: 1, ..Default::default() };
    let params = PotentialParams::default();
    let state = equilibrated_state(&spec, &params, 5.0, &MinimizerConfig::default(), None).unwrap();
    let mut sim = Simulation::new(state, &spec, params.clone()).unwrap();
    // collect 4 thermal states first so every variant sees the same inputs
    let mut states = Vec::new();
    for _ in 0..4 {
        sim.run(400).unwrap();
        states.push(sim.state.clone());
    }
    for (label, cfg) in [
        ("switch 60 tol 1e-4", MinimizerConfig { force_tolerance: 1e-4, cg_switch: 60, ..Default::default() }),
        ("switch 60 tol 1e-6", MinimizerConfig { force_tolerance: 1e-6, cg_switch: 60, ..Default::default() }),
        ("switch 60 tol 1e-8", MinimizerConfig { force_tolerance: 1e-8, cg_switch: 60, ..Default::default() }),
        ("switch 150 tol 1e-6", MinimizerConfig { force_tolerance: 1e-6, cg_switch: 150, ..Default::default() }),
        ("switch 400 tol 1e-8", MinimizerConfig { force_tolerance: 1e-8, cg_switch: 400, ..Default::default() }),
    ] {
        let t0 = Instant::now();
        let mut total = 0usize;
        for st in &states {
            let mut positions = st.positions.clone();
            let (iters, _) = minimize_positions(&mut positions, &st.species, &st.box_edges, &params, &cfg).unwrap();
            total += iters;
        }
        println!("{label}: {:.2?}/quench, {} iters", t0.elapsed() / 4, total / 4);
    }
}
