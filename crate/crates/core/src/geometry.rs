//! Periodic-box geometry helpers and small dense linear solves.

/// Minimum-image convention for a single displacement component.
///
/// Returns the representative of `dx` modulo `l` lying in `(-l/2, l/2]`.
/// Displacements already in range pass through exactly; differences of
/// wrapped coordinates take a single shift.
#[inline]
pub fn min_image(dx: f64, l: f64) -> f64 {
    let half = 0.5 * l;
    if dx > -half && dx <= half {
        dx
    } else if dx > half && dx <= l + half {
        dx - l
    } else if dx > -l - half && dx <= -half {
        dx + l
    } else {
        half - (half - dx).rem_euclid(l)
    }
}

/// Minimum image for differences of coordinates wrapped into `[0, l)`:
/// `|dx| < l`, so one shift suffices. No libm in the hot path.
#[inline(always)]
pub fn min_image_fast(dx: f64, l: f64, half_l: f64) -> f64 {
    if dx > half_l {
        dx - l
    } else if dx < -half_l {
        dx + l
    } else {
        dx
    }
}

/// Wraps a coordinate into `[0, l)`. In-range values pass through.
#[inline]
pub fn wrap(x: f64, l: f64) -> f64 {
    if (0.0..l).contains(&x) {
        return x;
    }
    let w = x.rem_euclid(l);
    // rem_euclid can return exactly `l` when x is a tiny negative number
    if w >= l {
        0.0
    } else {
        w
    }
}

/// Minimum-image displacement vector `b - a` for a `dim`-dimensional box.
pub fn min_image_vec(a: &[f64], b: &[f64], box_edges: &[f64], out: &mut [f64]) {
    for k in 0..box_edges.len() {
        out[k] = min_image(b[k] - a[k], box_edges[k]);
    }
}

/// Squared minimum-image distance between two points.
#[inline]
pub fn min_image_dist_sq(a: &[f64], b: &[f64], box_edges: &[f64]) -> f64 {
    let mut r2 = 0.0;
    for k in 0..box_edges.len() {
        let d = min_image(b[k] - a[k], box_edges[k]);
        r2 += d * d;
    }
    r2
}

/// Solves the dense system `m x = rhs` in place by Gaussian elimination with
/// partial pivoting. `m` is row-major `n x n`. Returns `None` when a pivot
/// falls below `1e-12` times the largest initial coefficient.
pub fn solve_dense(m: &mut [f64], rhs: &mut [f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(m.len(), n * n);
    debug_assert_eq!(rhs.len(), n);
    let scale = m
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = m[col * n + col].abs();
        for row in col + 1..n {
            let v = m[row * n + col].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = row;
            }
        }
        if pivot_val < 1e-12 * scale {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                m.swap(col * n + k, pivot_row * n + k);
            }
            rhs.swap(col, pivot_row);
        }
        let inv = 1.0 / m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] * inv;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = rhs[col];
        for k in col + 1..n {
            acc -= m[col * n + k] * x[k];
        }
        x[col] = acc / m[col * n + col];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_image_halfbox_convention() {
        let l = 10.0;
        assert_eq!(min_image(5.0, l), 5.0);
        assert_eq!(min_image(-5.0, l), 5.0);
        assert!((min_image(6.0, l) + 4.0).abs() < 1e-12);
        assert!((min_image(-6.0, l) - 4.0).abs() < 1e-12);
        assert_eq!(min_image(0.0, l), 0.0);
    }

    #[test]
    fn wrap_into_box() {
        assert!((wrap(10.3, 10.0) - 0.3).abs() < 1e-12);
        assert!((wrap(-0.2, 10.0) - 9.8).abs() < 1e-12);
        assert_eq!(wrap(0.0, 10.0), 0.0);
        let w = wrap(-1e-17, 10.0);
        assert!((0.0..10.0).contains(&w));
    }

    #[test]
    fn solve_dense_3x3() {
        let mut m = vec![2.0, 1.0, -1.0, -3.0, -1.0, 2.0, -2.0, 1.0, 2.0];
        let mut rhs = vec![8.0, -11.0, -3.0];
        let x = solve_dense(&mut m, &mut rhs, 3).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
        assert!((x[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn solve_dense_singular() {
        let mut m = vec![1.0, 2.0, 2.0, 4.0];
        let mut rhs = vec![1.0, 2.0];
        assert!(solve_dense(&mut m, &mut rhs, 2).is_none());
    }
}
