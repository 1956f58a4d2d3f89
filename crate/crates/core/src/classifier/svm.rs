//! L2-regularized L1-loss linear SVM solved by dual coordinate descent.
//!
//! Minimizes `(1/2)|w|^2 + C sum_k max(0, 1 - y_k (w . x_k + b))` with the
//! bias handled as an augmented constant feature. Deterministic for a fixed
//! seed; converges to a stated relative duality gap.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct SolveResult {
    /// Weights, one per feature (bias excluded).
    pub weights: Vec<f64>,
    pub bias: f64,
    pub passes: usize,
    /// Relative duality gap at exit.
    pub gap: f64,
    pub primal_objective: f64,
}

/// Relative duality-gap target.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_PASSES: usize = 20_000;

/// `labels[k]` must be +1 or -1; `rows` holds `l` examples of `n` features.
pub fn solve_l1_svc(
    rows: &[Vec<f64>],
    labels: &[f64],
    c: f64,
    tolerance: f64,
    max_passes: usize,
    seed: u64,
) -> SolveResult {
    let l = rows.len();
    assert_eq!(l, labels.len());
    let n = rows.first().map_or(0, Vec::len);
    // augmented bias feature of value 1 (regularized like the weights)
    let mut w = vec![0.0f64; n + 1];
    let mut alpha = vec![0.0f64; l];
    let qd: Vec<f64> = rows
        .iter()
        .map(|x| x.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .collect();
    let mut order: Vec<usize> = (0..l).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let decision = |w: &[f64], x: &[f64]| -> f64 {
        let mut acc = w[n];
        for (wi, xi) in w[..n].iter().zip(x) {
            acc += wi * xi;
        }
        acc
    };

    let objectives = |w: &[f64], alpha: &[f64]| -> (f64, f64) {
        let reg: f64 = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        let mut hinge = 0.0;
        for (x, &y) in rows.iter().zip(labels) {
            hinge += (1.0 - y * decision(w, x)).max(0.0);
        }
        let primal = reg + c * hinge;
        let dual: f64 = alpha.iter().sum::<f64>() - reg;
        (primal, dual)
    };

    let mut passes = 0usize;
    let mut gap = f64::INFINITY;
    let mut primal = f64::INFINITY;
    while passes < max_passes {
        order.shuffle(&mut rng);
        let mut max_pg: f64 = f64::NEG_INFINITY;
        let mut min_pg: f64 = f64::INFINITY;
        for &k in &order {
            let x = &rows[k];
            let y = labels[k];
            let g = y * decision(&w, x) - 1.0;
            // projected gradient against the box 0 <= alpha <= C
            let pg = if alpha[k] == 0.0 {
                g.min(0.0)
            } else if alpha[k] == c {
                g.max(0.0)
            } else {
                g
            };
            max_pg = max_pg.max(pg);
            min_pg = min_pg.min(pg);
            if pg.abs() > 1e-14 {
                let old = alpha[k];
                alpha[k] = (old - g / qd[k]).clamp(0.0, c);
                let delta = (alpha[k] - old) * y;
                for (wi, xi) in w[..n].iter_mut().zip(x) {
                    *wi += delta * xi;
                }
                w[n] += delta;
            }
        }
        passes += 1;
        // projected-gradient spread is a cheap early exit; the duality gap
        // certifies convergence
        if max_pg - min_pg < 1e-12 || passes % 8 == 0 || passes == max_passes {
            let (p, d) = objectives(&w, &alpha);
            primal = p;
            gap = (p - d) / p.abs().max(1e-300);
            if gap <= tolerance {
                break;
            }
        }
    }
    let bias = w[n];
    w.truncate(n);
    SolveResult {
        weights: w,
        bias,
        passes,
        gap,
        primal_objective: primal,
    }
}
