//! Cell-list pair search and a skin-buffered Verlet neighbor list.

use crate::geometry::min_image_fast;

/// Collects all unordered pairs `(i, j)`, `i < j`, with minimum-image
/// separation below `cutoff`. Uses a cell grid when the box accommodates at
/// least three cells per side, otherwise falls back to the O(N^2) sweep.
///
/// Pair order is deterministic: sorted by cell index, then particle index.
pub fn collect_pairs(
    positions: &[f64],
    box_edges: &[f64],
    dim: usize,
    cutoff: f64,
) -> Vec<(u32, u32)> {
    let n = positions.len() / dim;
    let cells_per_side: Vec<usize> = box_edges
        .iter()
        .map(|&l| (l / cutoff).floor() as usize)
        .collect();
    if cells_per_side.iter().any(|&c| c < 3) {
        return brute_force_pairs(positions, box_edges, dim, cutoff, n);
    }
    cell_pairs(positions, box_edges, dim, cutoff, n, &cells_per_side)
}

fn brute_force_pairs(
    positions: &[f64],
    box_edges: &[f64],
    dim: usize,
    cutoff: f64,
    n: usize,
) -> Vec<(u32, u32)> {
    let cut2 = cutoff * cutoff;
    let half: Vec<f64> = box_edges.iter().map(|&l| 0.5 * l).collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut r2 = 0.0;
            for k in 0..dim {
                let d = min_image_fast(
                    positions[i * dim + k] - positions[j * dim + k],
                    box_edges[k],
                    half[k],
                );
                r2 += d * d;
            }
            if r2 < cut2 {
                pairs.push((i as u32, j as u32));
            }
        }
    }
    pairs
}

fn cell_pairs(
    positions: &[f64],
    box_edges: &[f64],
    dim: usize,
    cutoff: f64,
    n: usize,
    cells_per_side: &[usize],
) -> Vec<(u32, u32)> {
    let cut2 = cutoff * cutoff;
    let inv: Vec<f64> = box_edges.iter().map(|&l| 1.0 / l).collect();
    let half: Vec<f64> = box_edges.iter().map(|&l| 0.5 * l).collect();
    let n_cells: usize = cells_per_side.iter().product();
    let strides = match dim {
        2 => vec![1, cells_per_side[0]],
        3 => vec![1, cells_per_side[0], cells_per_side[0] * cells_per_side[1]],
        _ => vec![1],
    };

    let cell_of = |i: usize| -> usize {
        let mut idx = 0;
        for k in 0..dim {
            let c = ((positions[i * dim + k] * inv[k] * cells_per_side[k] as f64) as usize)
                .min(cells_per_side[k] - 1);
            idx += c * strides[k];
        }
        idx
    };

    // bucket particles, preserving index order within each cell
    let mut heads = vec![u32::MAX; n_cells];
    let mut next = vec![u32::MAX; n];
    for i in (0..n).rev() {
        let c = cell_of(i);
        next[i] = heads[c];
        heads[c] = i as u32;
    }

    // half set of neighbor cell offsets (self cell handled with i < j)
    let offsets: Vec<Vec<isize>> = match dim {
        2 => vec![vec![1, 0], vec![-1, 1], vec![0, 1], vec![1, 1]],
        3 => {
            let mut v = Vec::new();
            for dz in -1isize..=1 {
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        if dz > 0 || (dz == 0 && dy > 0) || (dz == 0 && dy == 0 && dx > 0) {
                            v.push(vec![dx, dy, dz]);
                        }
                    }
                }
            }
            v
        }
        _ => vec![vec![1]],
    };

    let mut cell_coord = vec![0usize; dim];
    let mut pairs = Vec::with_capacity(n * 32);
    for cell in 0..n_cells {
        let mut rem = cell;
        for k in 0..dim {
            cell_coord[k] = rem % cells_per_side[k];
            rem /= cells_per_side[k];
        }
        // pairs within the cell
        let mut i = heads[cell];
        while i != u32::MAX {
            let mut j = next[i as usize];
            while j != u32::MAX {
                if dist2(positions, dim, box_edges, &half, i as usize, j as usize) < cut2 {
                    pairs.push((i.min(j), i.max(j)));
                }
                j = next[j as usize];
            }
            i = next[i as usize];
        }
        // pairs with the half neighborhood
        for off in &offsets {
            let mut other = 0usize;
            for k in 0..dim {
                let c = (cell_coord[k] as isize + off[k])
                    .rem_euclid(cells_per_side[k] as isize) as usize;
                other += c * strides[k];
            }
            let mut i = heads[cell];
            while i != u32::MAX {
                let mut j = heads[other];
                while j != u32::MAX {
                    if dist2(positions, dim, box_edges, &half, i as usize, j as usize) < cut2 {
                        pairs.push((i.min(j), i.max(j)));
                    }
                    j = next[j as usize];
                }
                i = next[i as usize];
            }
        }
    }
    pairs
}

#[inline(always)]
fn dist2(
    positions: &[f64],
    dim: usize,
    box_edges: &[f64],
    half: &[f64],
    i: usize,
    j: usize,
) -> f64 {
    let mut r2 = 0.0;
    for k in 0..dim {
        let d = min_image_fast(
            positions[i * dim + k] - positions[j * dim + k],
            box_edges[k],
            half[k],
        );
        r2 += d * d;
    }
    r2
}

/// Verlet list: pairs within `cutoff + skin`, rebuilt once any particle has
/// moved more than half the skin since the last build.
#[derive(Debug, Clone)]
pub struct NeighborList {
    pub pairs: Vec<(u32, u32)>,
    pos_at_build: Vec<f64>,
    cutoff: f64,
    skin: f64,
    pub rebuilds: u64,
}

impl NeighborList {
    pub fn new(cutoff: f64, skin: f64) -> NeighborList {
        NeighborList {
            pairs: Vec::new(),
            pos_at_build: Vec::new(),
            cutoff,
            skin,
            rebuilds: 0,
        }
    }

    pub fn ensure_fresh(&mut self, positions: &[f64], box_edges: &[f64], dim: usize) {
        if self.pos_at_build.len() == positions.len() {
            let half_skin_sq = 0.25 * self.skin * self.skin;
            let half: Vec<f64> = box_edges.iter().map(|&l| 0.5 * l).collect();
            let n = positions.len() / dim;
            let mut stale = false;
            for i in 0..n {
                let mut d2 = 0.0;
                for k in 0..dim {
                    let d = min_image_fast(
                        positions[i * dim + k] - self.pos_at_build[i * dim + k],
                        box_edges[k],
                        half[k],
                    );
                    d2 += d * d;
                }
                if d2 > half_skin_sq {
                    stale = true;
                    break;
                }
            }
            if !stale {
                return;
            }
        }
        self.pairs = collect_pairs(positions, box_edges, dim, self.cutoff + self.skin);
        self.pos_at_build.clear();
        self.pos_at_build.extend_from_slice(positions);
        self.rebuilds += 1;
    }

    pub fn invalidate(&mut self) {
        self.pos_at_build.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_positions(n: usize, l: f64, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n * 3).map(|_| rng.gen_range(0.0..l)).collect()
    }

    fn canon(mut pairs: Vec<(u32, u32)>) -> Vec<(u32, u32)> {
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    #[test]
    fn cell_list_matches_brute_force() {
        for seed in 0..4 {
            let l = 9.0;
            let pos = random_positions(200, l, seed);
            let boxe = vec![l; 3];
            let cell = canon(cell_pairs(&pos, &boxe, 3, 2.8, 200, &[3, 3, 3]));
            let brute = canon(brute_force_pairs(&pos, &boxe, 3, 2.8, 200));
            assert_eq!(cell, brute, "seed {seed}");
        }
    }

    #[test]
    fn cell_list_matches_brute_force_2d() {
        for seed in 0..4 {
            let l = 12.0;
            let n = 150;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pos: Vec<f64> = (0..n * 2).map(|_| rng.gen_range(0.0..l)).collect();
            let boxe = vec![l; 2];
            let cell = canon(cell_pairs(&pos, &boxe, 2, 2.8, n, &[4, 4]));
            let brute = canon(brute_force_pairs(&pos, &boxe, 2, 2.8, n));
            assert_eq!(cell, brute, "seed {seed}");
        }
    }

    #[test]
    fn small_box_falls_back_to_brute_force() {
        let l = 6.0; // under 3 cells of 2.8
        let pos = random_positions(50, l, 1);
        let pairs = collect_pairs(&pos, &[l; 3], 3, 2.8);
        let brute = canon(brute_force_pairs(&pos, &[l; 3], 3, 2.8, 50));
        assert_eq!(canon(pairs), brute);
    }

    #[test]
    fn neighbor_list_rebuild_on_motion() {
        let l = 12.0;
        let mut pos = random_positions(100, l, 2);
        let boxe = vec![l; 3];
        let mut nl = NeighborList::new(2.5, 0.3);
        nl.ensure_fresh(&pos, &boxe, 3);
        assert_eq!(nl.rebuilds, 1);
        nl.ensure_fresh(&pos, &boxe, 3);
        assert_eq!(nl.rebuilds, 1, "no motion, no rebuild");
        pos[0] += 0.2; // beyond half skin
        nl.ensure_fresh(&pos, &boxe, 3);
        assert_eq!(nl.rebuilds, 2);
    }
}
