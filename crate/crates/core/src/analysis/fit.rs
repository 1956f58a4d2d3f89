//! Small least-squares and rank-statistics helpers used by the analyses.

use crate::geometry::solve_dense;

/// Ordinary least squares `y = slope x + intercept`. Returns
/// `(slope, intercept, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Some((slope, intercept, r2))
}

/// Least-squares quadratic `y = a0 + a1 x + a2 x^2`; returns
/// `([a0, a1, a2], r_squared)`.
pub fn quadratic_fit(x: &[f64], y: &[f64]) -> Option<([f64; 3], f64)> {
    let n = x.len();
    if n < 3 || n != y.len() {
        return None;
    }
    let mut m = [0.0f64; 9];
    let mut rhs = [0.0f64; 3];
    for (xi, yi) in x.iter().zip(y) {
        let p = [1.0, *xi, xi * xi];
        for r in 0..3 {
            for c in 0..3 {
                m[r * 3 + c] += p[r] * p[c];
            }
            rhs[r] += p[r] * yi;
        }
    }
    let mut m_vec = m.to_vec();
    let mut rhs_vec = rhs.to_vec();
    let coeffs = solve_dense(&mut m_vec, &mut rhs_vec, 3)?;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let pred = coeffs[0] + coeffs[1] * xi + coeffs[2] * xi * xi;
        ss_res += (yi - pred) * (yi - pred);
        ss_tot += (yi - my) * (yi - my);
    }
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Some(([coeffs[0], coeffs[1], coeffs[2]], r2))
}

/// Average ranks (1-based), ties sharing their mean rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = vec![0.0; n];
    let mut k = 0;
    while k < n {
        let mut j = k;
        while j + 1 < n && values[order[j + 1]] == values[order[k]] {
            j += 1;
        }
        let mean_rank = (k + j) as f64 / 2.0 + 1.0;
        for &idx in &order[k..=j] {
            out[idx] = mean_rank;
        }
        k = j + 1;
    }
    out
}

/// Spearman rank correlation.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let (slope, _, r2) = linear_fit(&rx, &ry)?;
    Some(slope.signum() * r2.sqrt())
}

/// Excess kurtosis of a sample.
pub fn excess_kurtosis(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 4 {
        return None;
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
    if m2 == 0.0 {
        return None;
    }
    Some(m4 / (m2 * m2) - 3.0)
}

/// Stretched-exponential fit `q(t) = exp(-(t / tau)^beta)` by linear
/// regression of `ln(-ln q)` on `ln t` over points with `q` inside `window`.
/// Returns `(tau, beta, r_squared)`.
pub fn stretched_exponential_fit(
    times: &[f64],
    q: &[f64],
    window: (f64, f64),
) -> Option<(f64, f64, f64)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &qi) in times.iter().zip(q) {
        if t > 0.0 && qi > window.0 && qi < window.1 {
            xs.push(t.ln());
            ys.push((-qi.ln()).ln());
        }
    }
    if xs.len() < 3 {
        return None;
    }
    let (beta, intercept, r2) = linear_fit(&xs, &ys)?;
    if beta <= 0.0 {
        return None;
    }
    let tau = (-intercept / beta).exp();
    Some((tau, beta, r2))
}

/// Time of the `1/e` crossing of `q(t)`, linearly interpolated; None when
/// the series never decays that far.
pub fn one_over_e_crossing(times: &[f64], q: &[f64]) -> Option<f64> {
    let target = (-1.0f64).exp();
    for k in 1..q.len() {
        if q[k] <= target && q[k - 1] > target {
            let f = (q[k - 1] - target) / (q[k - 1] - q[k]);
            return Some(times[k - 1] + f * (times[k] - times[k - 1]));
        }
    }
    None
}

/// Piecewise-linear interpolation of `ln y` over `x` (positive `y` only),
/// clamped to the boundary values outside the populated range.
pub fn interp_log_linear(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let points: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0 && y.is_finite())
        .map(|(&x, &y)| (x, y.ln()))
        .collect();
    if points.is_empty() {
        return None;
    }
    if x <= points[0].0 {
        return Some(points[0].1.exp());
    }
    if x >= points[points.len() - 1].0 {
        return Some(points[points.len() - 1].1.exp());
    }
    for w in points.windows(2) {
        if x >= w[0].0 && x <= w[1].0 {
            let f = (x - w[0].0) / (w[1].0 - w[0].0);
            return Some((w[0].1 + f * (w[1].1 - w[0].1)).exp());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_fit_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let (m, b, r2) = linear_fit(&x, &y).unwrap();
        assert!((m - 2.5).abs() < 1e-12);
        assert!((b + 1.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_fit_recovers_exact_polynomial() {
        let x: Vec<f64> = (0..7).map(|k| k as f64 * 0.5 - 1.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 7.5 - 0.9 * v + 0.02 * v * v).collect();
        let (c, r2) = quadratic_fit(&x, &y).unwrap();
        assert!((c[0] - 7.5).abs() < 1e-9);
        assert!((c[1] + 0.9).abs() < 1e-9);
        assert!((c[2] - 0.02).abs() < 1e-9);
        assert!((r2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spearman_detects_monotone_relations() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.0, 4.0, 9.0, 16.0, 80.0];
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let y_rev: Vec<f64> = y.iter().rev().cloned().collect();
        assert!((spearman(&x, &y_rev).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn kurtosis_of_gaussian_sample_is_small() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let sample: Vec<f64> = (0..20000)
            .map(|_| {
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        assert!(excess_kurtosis(&sample).unwrap().abs() < 0.15);
    }

    #[test]
    fn stretched_fit_recovers_planted_parameters() {
        let times: Vec<f64> = (1..200).map(|k| k as f64).collect();
        let q: Vec<f64> = times
            .iter()
            .map(|t| (-(t / 60.0).powf(0.7)).exp())
            .collect();
        let (tau, beta, r2) = stretched_exponential_fit(&times, &q, (0.05, 0.8)).unwrap();
        assert!((tau - 60.0).abs() < 1e-6, "tau {tau}");
        assert!((beta - 0.7).abs() < 1e-9, "beta {beta}");
        assert!(r2 > 0.999999);
    }

    #[test]
    fn one_over_e_crossing_interpolates() {
        let times = [0.0, 1.0, 2.0, 3.0];
        let q = [1.0, 0.8, 0.2, 0.1];
        let t = one_over_e_crossing(&times, &q).unwrap();
        let target = (-1.0f64).exp();
        assert!((t - (1.0 + (0.8 - target) / 0.6)).abs() < 1e-12);
        assert!(one_over_e_crossing(&times, &[1.0, 0.9, 0.8, 0.7]).is_none());
    }

    #[test]
    fn log_interpolation_is_exact_on_exponentials() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [1.0, (2.0f64).exp(), (4.0f64).exp()];
        let v = interp_log_linear(&xs, &ys, 0.5).unwrap();
        assert!((v - 1.0f64.exp()).abs() < 1e-9);
        // clamped outside
        assert_eq!(interp_log_linear(&xs, &ys, -5.0).unwrap(), 1.0);
    }
}
