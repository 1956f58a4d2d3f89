//! Mean-squared non-affine displacement of a particle's neighborhood.

use super::RearrangeError;
use crate::geometry::{self, solve_dense};
use crate::trajectory::Frame;

/// Default neighborhood radius in sigma_AA.
pub const DEFAULT_NEIGHBOR_RADIUS: f64 = 2.5;

/// Fits the best local affine deformation mapping the neighborhood of `i` in
/// `frame_then` onto `frame_now` and returns the mean-squared residual.
///
/// Neighbors are selected within `neighbor_radius` of `i` in `frame_then`.
/// Zero for any exact affine transformation (translation, rotation, shear).
pub fn d2min(
    frame_then: &Frame,
    frame_now: &Frame,
    i: usize,
    neighbor_radius: f64,
) -> Result<f64, RearrangeError> {
    if frame_then.box_edges != frame_now.box_edges {
        return Err(crate::trajectory::TrajectoryError::BoxMismatch(
            frame_then.box_edges.clone(),
            frame_now.box_edges.clone(),
        )
        .into());
    }
    let d = frame_then.dim();
    let n = frame_then.n_particles();
    let box_edges = &frame_then.box_edges;
    let r2_cut = neighbor_radius * neighbor_radius;
    let xi_then = frame_then.position(i);
    let xi_now = frame_now.position(i);

    let mut rel_then: Vec<[f64; 3]> = Vec::new();
    let mut rel_now: Vec<[f64; 3]> = Vec::new();
    for j in 0..n {
        if j == i {
            continue;
        }
        let mut dt = [0.0f64; 3];
        let mut r2 = 0.0;
        for k in 0..d {
            dt[k] = geometry::min_image(frame_then.position(j)[k] - xi_then[k], box_edges[k]);
            r2 += dt[k] * dt[k];
        }
        if r2 > r2_cut {
            continue;
        }
        let mut dn = [0.0f64; 3];
        for k in 0..d {
            dn[k] = geometry::min_image(frame_now.position(j)[k] - xi_now[k], box_edges[k]);
        }
        rel_then.push(dt);
        rel_now.push(dn);
    }
    let n_neigh = rel_then.len();
    if n_neigh < d + 1 {
        return Err(RearrangeError::DegenerateFit { neighbors: n_neigh });
    }

    // normal equations: X = sum d_then d_then^T, Y = sum d_now d_then^T,
    // best affine J solves J X = Y.
    let mut x = vec![0.0f64; d * d];
    let mut y = vec![0.0f64; d * d];
    for (dt, dn) in rel_then.iter().zip(&rel_now) {
        for r in 0..d {
            for c in 0..d {
                x[r * d + c] += dt[r] * dt[c];
                y[r * d + c] += dn[r] * dt[c];
            }
        }
    }
    let mut jmat = vec![0.0f64; d * d];
    for r in 0..d {
        let mut x_copy = x.clone();
        let mut rhs: Vec<f64> = (0..d).map(|c| y[r * d + c]).collect();
        let row = solve_dense(&mut x_copy, &mut rhs, d)
            .ok_or(RearrangeError::DegenerateFit { neighbors: n_neigh })?;
        jmat[r * d..(r + 1) * d].copy_from_slice(&row);
    }

    let mut residual = 0.0;
    for (dt, dn) in rel_then.iter().zip(&rel_now) {
        for r in 0..d {
            let mut pred = 0.0;
            for c in 0..d {
                pred += jmat[r * d + c] * dt[c];
            }
            let dev = dn[r] - pred;
            residual += dev * dev;
        }
    }
    Ok(residual / n_neigh as f64)
}
