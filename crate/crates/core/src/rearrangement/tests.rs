use super::*;
use crate::trajectory::{Frame, FrameKind, TrajectoryMeta};
use rand::{Rng, SeedableRng};

const BOX: f64 = 1000.0;

/// Trajectory holding independent per-particle traces (no wrapping expected).
fn traj_from_traces(traces: &[Vec<[f64; 3]>]) -> Trajectory {
    let n_frames = traces[0].len();
    let n = traces.len();
    let frames: Vec<Frame> = (0..n_frames)
        .map(|f| {
            let mut positions = Vec::with_capacity(n * 3);
            for trace in traces {
                positions.extend_from_slice(&trace[f]);
            }
            Frame {
                time: f as f64,
                box_edges: vec![BOX; 3],
                positions,
                species: vec![Species::A; n],
                kind: FrameKind::Inherent,
            }
        })
        .collect();
    Trajectory::new(frames, TrajectoryMeta::default()).unwrap()
}

fn constant_trace(n_frames: usize, p: [f64; 3]) -> Vec<[f64; 3]> {
    vec![p; n_frames]
}

fn step_trace(n_frames: usize, step_at: usize, delta: f64) -> Vec<[f64; 3]> {
    (0..n_frames)
        .map(|f| {
            if f < step_at {
                [10.0, 10.0, 10.0]
            } else {
                [10.0 + delta, 10.0, 10.0]
            }
        })
        .collect()
}

/// Step trace built from dyadic values so window means are exact in binary.
fn dyadic_step_trace(n_frames: usize, step_at: usize, delta: f64) -> Vec<[f64; 3]> {
    (0..n_frames)
        .map(|f| {
            if f < step_at {
                [0.0, 0.0, 0.0]
            } else {
                [delta, 0.0, 0.0]
            }
        })
        .collect()
}

#[test]
fn stationary_particle_has_zero_phop() {
    let traj = traj_from_traces(&[constant_trace(30, [5.0, 5.0, 5.0])]);
    let cfg = PhopConfig::default();
    for t in [5.0, 10.0, 20.0, 24.0] {
        assert_eq!(p_hop(&traj, 0, t, &cfg).unwrap(), 0.0);
    }
}

#[test]
fn step_between_windows_gives_delta_squared_exactly() {
    // evaluated midway between frames, window A is entirely pre-step and
    // window B entirely post-step, so both factors are exactly delta^2
    let cfg = PhopConfig::default();
    // dyadic positions: the closed form holds bitwise
    let delta = 0.5;
    let traj = traj_from_traces(&[dyadic_step_trace(60, 30, delta)]);
    let v = p_hop(&traj, 0, 29.5, &cfg).unwrap();
    assert_eq!(v, delta * delta);
    // general values: exact up to rounding of the window means
    let delta = 0.7;
    let traj = traj_from_traces(&[step_trace(60, 30, delta)]);
    let v = p_hop(&traj, 0, 29.5, &cfg).unwrap();
    assert!((v - delta * delta).abs() < 1e-14);
}

#[test]
fn out_of_range_window_is_an_error() {
    let traj = traj_from_traces(&[constant_trace(30, [5.0, 5.0, 5.0])]);
    let cfg = PhopConfig::default();
    assert!(matches!(
        p_hop(&traj, 0, 2.0, &cfg),
        Err(RearrangeError::WindowOutOfRange { .. })
    ));
    assert!(matches!(
        p_hop(&traj, 0, 27.0, &cfg),
        Err(RearrangeError::WindowOutOfRange { .. })
    ));
}

#[test]
fn coarse_spacing_is_rejected() {
    let mut traj = traj_from_traces(&[constant_trace(10, [5.0, 5.0, 5.0])]);
    for (k, f) in traj.frames.iter_mut().enumerate() {
        f.time = 3.0 * k as f64;
    }
    traj.spacing = 3.0;
    assert!(matches!(
        p_hop(&traj, 0, 15.0, &PhopConfig::default()),
        Err(RearrangeError::SpacingTooCoarse { .. })
    ));
}

/// Independent two-pass evaluation of the hop indicator on an unwrapped
/// trace: means first, then the two cross-spreads.
fn phop_oracle(trace: &[[f64; 3]], t: usize, half: usize) -> f64 {
    let a: Vec<[f64; 3]> = trace[t - half..=t].to_vec();
    let b: Vec<[f64; 3]> = trace[t..=t + half].to_vec();
    let mean = |w: &[[f64; 3]]| -> [f64; 3] {
        let mut m = [0.0; 3];
        for p in w {
            for k in 0..3 {
                m[k] += p[k];
            }
        }
        for k in 0..3 {
            m[k] /= w.len() as f64;
        }
        m
    };
    let spread = |w: &[[f64; 3]], about: &[f64; 3]| -> f64 {
        let mut s = 0.0;
        for p in w {
            for k in 0..3 {
                let d = p[k] - about[k];
                s += d * d;
            }
        }
        s / w.len() as f64
    };
    let ma = mean(&a);
    let mb = mean(&b);
    (spread(&a, &mb) * spread(&b, &ma)).sqrt()
}

#[test]
fn random_walk_traces_match_two_pass_oracle() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    let cfg = PhopConfig::default();
    for _ in 0..25 {
        let mut trace = Vec::with_capacity(40);
        let mut p = [500.0, 500.0, 500.0];
        for _ in 0..40 {
            for c in p.iter_mut() {
                *c += rng.gen_range(-0.11..0.11);
            }
            trace.push(p);
        }
        let traj = traj_from_traces(&[trace.clone()]);
        for t in 5..35 {
            let got = p_hop(&traj, 0, t as f64, &cfg).unwrap();
            let want = phop_oracle(&trace, t, 5);
            assert!(
                (got - want).abs() <= 1e-12 * want.max(1.0),
                "t={t}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn phop_invariant_under_global_translation() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut trace = Vec::new();
    let mut p = [500.0, 500.0, 500.0];
    for _ in 0..40 {
        for c in p.iter_mut() {
            *c += rng.gen_range(-0.3..0.3);
        }
        trace.push(p);
    }
    let base = traj_from_traces(&[trace.clone()]);
    let shift = [700.3, 123.4, 987.6];
    let mut shifted = traj_from_traces(&[trace]);
    for f in shifted.frames.iter_mut() {
        for (k, x) in f.positions.iter_mut().enumerate() {
            *x = crate::geometry::wrap(*x + shift[k % 3], BOX);
        }
    }
    let cfg = PhopConfig::default();
    for t in 5..35 {
        let a = p_hop(&base, 0, t as f64, &cfg).unwrap();
        let b = p_hop(&shifted, 0, t as f64, &cfg).unwrap();
        assert!((a - b).abs() < 1e-10, "t={t}: {a} vs {b}");
    }
}

#[test]
fn quiet_trace_yields_no_events() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let trace: Vec<[f64; 3]> = (0..60)
        .map(|_| {
            [
                10.0 + rng.gen_range(-0.01..0.01),
                10.0 + rng.gen_range(-0.01..0.01),
                10.0,
            ]
        })
        .collect();
    let traj = traj_from_traces(&[trace]);
    assert!(detect_events(&traj, 0, &PhopConfig::default())
        .unwrap()
        .is_empty());
}

#[test]
fn single_step_yields_one_event_containing_the_step() {
    let delta = 1.0;
    let traj = traj_from_traces(&[step_trace(80, 40, delta)]);
    let events = detect_events(&traj, 0, &PhopConfig::default()).unwrap();
    assert_eq!(events.len(), 1);
    let ev = &events[0];
    assert!(ev.t_start < 40.0 && 40.0 < ev.t_end, "{ev:?}");
    // discrete shared-endpoint windows cap the peak at (125/216)^(1/2) d^2
    let peak_factor = (125.0f64 / 216.0).sqrt();
    assert!(
        (ev.p_star - peak_factor * delta * delta).abs() < 1e-9,
        "p* = {}",
        ev.p_star
    );
    assert!(ev.p_star >= 0.05);
    assert!((ev.displacement[0] - delta).abs() < 1e-12);
}

#[test]
fn two_separated_steps_yield_two_ordered_events() {
    let mut trace = step_trace(100, 30, 1.0);
    for item in trace.iter_mut().skip(60) {
        item[1] += 1.0;
    }
    let traj = traj_from_traces(&[trace]);
    let events = detect_events(&traj, 0, &PhopConfig::default()).unwrap();
    assert_eq!(events.len(), 2);
    assert!(events[0].t_end < events[1].t_start);
    assert!(events[0].t_start < 30.0 && 30.0 < events[0].t_end);
    assert!(events[1].t_start < 60.0 && 60.0 < events[1].t_end);
}

#[test]
fn excursions_split_by_one_quiet_frame_merge() {
    let series = [0.0, 0.2, 0.3, 0.01, 0.4, 0.0, 0.0, 0.3, 0.0];
    let times: Vec<f64> = (0..series.len()).map(|k| k as f64).collect();
    let runs = events_from_series(&series, &times, 0.05);
    assert_eq!(runs.len(), 2);
    assert_eq!(runs[0], (1, 4, 0.4));
    assert_eq!(runs[1], (7, 7, 0.3));
}

#[test]
fn planted_events_label_rearranging_examples_at_lead_time() {
    let n_frames = 200;
    let mut traces = vec![
        constant_trace(n_frames, [5.0, 5.0, 5.0]),
        step_trace(n_frames, 60, 1.0),
        constant_trace(n_frames, [20.0, 20.0, 20.0]),
        step_trace(n_frames, 130, 1.0),
        constant_trace(n_frames, [40.0, 40.0, 40.0]),
    ];
    // move the second step trace to a distinct location
    for p in traces[3].iter_mut() {
        p[2] += 15.0;
    }
    let traj = traj_from_traces(&traces);
    let cfg = PhopConfig {
        tau_c: Some(20.0),
        ..Default::default()
    };
    let examples = build_training_populations(&[&traj], &cfg, 2, None, 9).unwrap();
    let rearr: Vec<&LabeledExample> = examples
        .iter()
        .filter(|e| e.label == Label::Rearranging)
        .collect();
    let stable: Vec<&LabeledExample> = examples
        .iter()
        .filter(|e| e.label == Label::Stable)
        .collect();
    assert_eq!(rearr.len(), stable.len(), "classes balanced");
    assert_eq!(rearr.len(), 2);
    for ev in &rearr {
        assert!(ev.particle == 1 || ev.particle == 3);
        let events = detect_events(&traj, ev.particle, &cfg).unwrap();
        assert_eq!(ev.snapshot_time, events[0].t_start - cfg.lead_time);
    }
    // stable examples only from particles without events
    for ex in &stable {
        assert!([0usize, 2, 4].contains(&ex.particle), "{ex:?}");
    }
}

#[test]
fn frozen_system_has_only_stable_candidates() {
    let traj = traj_from_traces(&[
        constant_trace(120, [5.0, 5.0, 5.0]),
        constant_trace(120, [9.0, 9.0, 9.0]),
    ]);
    let cfg = PhopConfig {
        tau_c: Some(25.0),
        ..Default::default()
    };
    let err = build_training_populations(&[&traj], &cfg, 1, None, 0).unwrap_err();
    match err {
        RearrangeError::Shortfall {
            rearranging,
            stable,
            required,
        } => {
            assert_eq!(rearranging, 0);
            assert!(stable > 0);
            assert_eq!(required, 1);
        }
        other => panic!("expected shortfall, got {other}"),
    }
}

#[test]
fn species_filter_restricts_examples() {
    let n_frames = 200;
    let traces = vec![step_trace(n_frames, 60, 1.0), step_trace(n_frames, 130, 1.0)];
    let mut traj = traj_from_traces(&traces);
    for f in traj.frames.iter_mut() {
        f.species[1] = Species::B;
    }
    let cfg = PhopConfig {
        tau_c: Some(20.0),
        ..Default::default()
    };
    let examples =
        build_training_populations(&[&traj], &cfg, 1, Some(Species::B), 1).unwrap();
    assert!(examples.iter().all(|e| e.particle == 1));
}
