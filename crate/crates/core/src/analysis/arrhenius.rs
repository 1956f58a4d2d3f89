//! Arrhenius decomposition of the rearrangement probability into
//! softness-dependent energy and entropy scales.

use super::fit::{linear_fit, quadratic_fit};
use super::{AnalysisError, RearrangementCurve, SBinning};

/// Minimum per-bin fit quality for inclusion in the polynomial fits.
pub const MIN_BIN_R2: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrheniusFit {
    /// Centers of the S bins populated at every temperature.
    pub s: Vec<f64>,
    /// Per-bin activation energy E(S).
    pub energy: Vec<f64>,
    /// Per-bin entropy scale Sigma(S) = log Z(S).
    pub entropy: Vec<f64>,
    /// Per-bin R^2 of ln P_R against 1/T.
    pub r2: Vec<f64>,
    /// Whether the bin entered the polynomial fits.
    pub used: Vec<bool>,
    /// `E(S) = E0 - E1 S + E2 S^2`.
    pub e_coeffs: [f64; 3],
    /// `Sigma(S) = S0 - S1 S + S2 S^2`.
    pub sigma_coeffs: [f64; 3],
    pub e_fit_r2: f64,
    pub sigma_fit_r2: f64,
    pub temperatures: Vec<f64>,
}

impl ArrheniusFit {
    pub fn energy_at(&self, s: f64) -> f64 {
        self.e_coeffs[0] - self.e_coeffs[1] * s + self.e_coeffs[2] * s * s
    }

    pub fn entropy_at(&self, s: f64) -> f64 {
        self.sigma_coeffs[0] - self.sigma_coeffs[1] * s + self.sigma_coeffs[2] * s * s
    }

    /// Linearized rate `exp[(1/T0 - 1/T)(E0 - E1 S)]`.
    pub fn linearized_rate(&self, s: f64, temperature: f64) -> f64 {
        let t0 = self.e_coeffs[0] / self.sigma_coeffs[0];
        ((1.0 / t0 - 1.0 / temperature) * (self.e_coeffs[0] - self.e_coeffs[1] * s)).exp()
    }
}

/// Per-bin fits of `ln P_R` against `1/T`, then quadratic fits of the
/// resulting energy and entropy scales in S.
///
/// Only bins populated (unmasked, nonzero) at every temperature are fitted;
/// bins with per-bin `R^2 < 0.5` are excluded from the polynomials.
pub fn arrhenius_fit(curves: &[RearrangementCurve]) -> Result<ArrheniusFit, AnalysisError> {
    if curves.len() < 3 {
        return Err(AnalysisError::TooFewTemperatures {
            needed: 3,
            found: curves.len(),
        });
    }
    let first = &curves[0];
    let binning = SBinning {
        edges: first.edges.clone(),
    };
    for c in curves {
        if !(SBinning {
            edges: c.edges.clone(),
        })
        .approx_eq(&binning)
        {
            return Err(AnalysisError::BinningMismatch);
        }
    }
    let n_bins = binning.n_bins();
    let inv_t: Vec<f64> = curves.iter().map(|c| 1.0 / c.temperature).collect();
    let mut s = Vec::new();
    let mut energy = Vec::new();
    let mut entropy = Vec::new();
    let mut r2s = Vec::new();
    let mut used = Vec::new();
    for b in 0..n_bins {
        let ok = curves
            .iter()
            .all(|c| c.p_r[b].is_finite() && c.p_r[b] > 0.0);
        if !ok {
            continue;
        }
        let ln_p: Vec<f64> = curves.iter().map(|c| c.p_r[b].ln()).collect();
        let Some((slope, intercept, r2)) = linear_fit(&inv_t, &ln_p) else {
            continue;
        };
        s.push(binning.center(b));
        energy.push(-slope);
        entropy.push(intercept);
        r2s.push(r2);
        used.push(r2 >= MIN_BIN_R2);
    }
    let fit_s: Vec<f64> = s
        .iter()
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|(&v, _)| v)
        .collect();
    if fit_s.len() < 3 {
        return Err(AnalysisError::EmptyInput(format!(
            "only {} S bins usable for the polynomial fits",
            fit_s.len()
        )));
    }
    let fit_e: Vec<f64> = energy
        .iter()
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|(&v, _)| v)
        .collect();
    let fit_sigma: Vec<f64> = entropy
        .iter()
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|(&v, _)| v)
        .collect();
    let (e_poly, e_fit_r2) = quadratic_fit(&fit_s, &fit_e)
        .ok_or_else(|| AnalysisError::Degenerate("energy polynomial fit".into()))?;
    let (sigma_poly, sigma_fit_r2) = quadratic_fit(&fit_s, &fit_sigma)
        .ok_or_else(|| AnalysisError::Degenerate("entropy polynomial fit".into()))?;
    Ok(ArrheniusFit {
        s,
        energy,
        entropy,
        r2: r2s,
        used,
        // polynomial is a0 + a1 S + a2 S^2; the convention stores E1 = -a1
        e_coeffs: [e_poly[0], -e_poly[1], e_poly[2]],
        sigma_coeffs: [sigma_poly[0], -sigma_poly[1], sigma_poly[2]],
        e_fit_r2,
        sigma_fit_r2,
        temperatures: curves.iter().map(|c| c.temperature).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnsetResult {
    /// E0 / Sigma0: temperature where the structure-independent part of the
    /// rate reaches one.
    pub t0: f64,
    /// E1 / Sigma1 from the linear terms.
    pub t1: f64,
    pub relative_gap: f64,
}

/// Onset of the structure-dynamics correlation from the fitted scales.
pub fn onset_temperature(fit: &ArrheniusFit) -> Result<OnsetResult, AnalysisError> {
    let [e0, e1, _] = fit.e_coeffs;
    let [s0, s1, _] = fit.sigma_coeffs;
    if s0.abs() < 1e-9 || s1.abs() < 1e-9 {
        return Err(AnalysisError::UndefinedOnset(
            "entropy coefficients vanish".into(),
        ));
    }
    let t0 = e0 / s0;
    let t1 = e1 / s1;
    Ok(OnsetResult {
        t0,
        t1,
        relative_gap: (t0 - t1).abs() / t0.abs().max(1e-300),
    })
}

/// Synthetic rearrangement curves generated exactly from polynomial energy
/// and entropy scales (used by recovery tests and the synthetic pipeline).
pub fn synthetic_curves(
    e_coeffs: [f64; 3],
    sigma_coeffs: [f64; 3],
    temperatures: &[f64],
    binning: &SBinning,
) -> Vec<RearrangementCurve> {
    temperatures
        .iter()
        .map(|&t| {
            let p_r: Vec<f64> = binning
                .centers()
                .iter()
                .map(|&s| {
                    let e = e_coeffs[0] - e_coeffs[1] * s + e_coeffs[2] * s * s;
                    let sigma = sigma_coeffs[0] - sigma_coeffs[1] * s + sigma_coeffs[2] * s * s;
                    (sigma - e / t).exp()
                })
                .collect();
            let n = binning.n_bins();
            RearrangementCurve {
                temperature: t,
                edges: binning.edges.clone(),
                s_centers: binning.centers(),
                p_r,
                rearranging: vec![1; n],
                total: vec![u64::MAX; n],
                threshold: 0.2,
                min_count: 0,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_REF: [f64; 3] = [7.50, 0.90, 0.02];
    const SIGMA_REF: [f64; 3] = [8.70, 1.1, 0.029];

    #[test]
    fn recovers_generating_coefficients_exactly() {
        let binning = SBinning::new(-3.0, 3.0, 25);
        let curves = synthetic_curves(E_REF, SIGMA_REF, &[0.47, 0.53, 0.58, 0.7], &binning);
        let fit = arrhenius_fit(&curves).unwrap();
        for k in 0..3 {
            assert!(
                (fit.e_coeffs[k] - E_REF[k]).abs() / E_REF[k] < 0.01,
                "E{k}: {} vs {}",
                fit.e_coeffs[k],
                E_REF[k]
            );
            assert!(
                (fit.sigma_coeffs[k] - SIGMA_REF[k]).abs() / SIGMA_REF[k] < 0.01,
                "Sigma{k}: {} vs {}",
                fit.sigma_coeffs[k],
                SIGMA_REF[k]
            );
        }
        assert!(fit.r2.iter().all(|&r| r > 0.999999));
    }

    #[test]
    fn onset_near_ratio_of_reference_scales() {
        let binning = SBinning::new(-3.0, 3.0, 25);
        let curves = synthetic_curves(E_REF, SIGMA_REF, &[0.47, 0.53, 0.58, 0.7], &binning);
        let fit = arrhenius_fit(&curves).unwrap();
        let onset = onset_temperature(&fit).unwrap();
        assert!((onset.t0 - 7.50 / 8.70).abs() < 0.01, "T0 = {}", onset.t0);
        assert!((onset.t1 - 0.90 / 1.1).abs() < 0.01, "T1 = {}", onset.t1);
        assert!(onset.relative_gap < 0.10);
    }

    #[test]
    fn doubling_scales_leaves_onset_unchanged() {
        let binning = SBinning::new(-3.0, 3.0, 25);
        let curves = synthetic_curves(E_REF, SIGMA_REF, &[0.47, 0.53, 0.58, 0.7], &binning);
        let mut fit = arrhenius_fit(&curves).unwrap();
        let t0_ref = onset_temperature(&fit).unwrap().t0;
        for k in 0..3 {
            fit.e_coeffs[k] *= 2.0;
            fit.sigma_coeffs[k] *= 2.0;
        }
        let t0_scaled = onset_temperature(&fit).unwrap().t0;
        assert!((t0_ref - t0_scaled).abs() < 1e-12);
    }

    #[test]
    fn temperature_independent_rates_give_zero_energy() {
        let binning = SBinning::new(-2.0, 2.0, 10);
        let curves = synthetic_curves([0.0; 3], [-1.5, 0.3, 0.0], &[0.4, 0.5, 0.6, 0.8], &binning);
        let fit = arrhenius_fit(&curves).unwrap();
        for e in &fit.energy {
            assert!(e.abs() < 1e-9, "E = {e}");
        }
    }

    #[test]
    fn fewer_than_three_temperatures_is_an_error() {
        let binning = SBinning::new(-2.0, 2.0, 10);
        let curves = synthetic_curves(E_REF, SIGMA_REF, &[0.47, 0.53], &binning);
        assert!(matches!(
            arrhenius_fit(&curves),
            Err(AnalysisError::TooFewTemperatures { .. })
        ));
    }

    #[test]
    fn mismatched_binning_is_rejected() {
        let a = SBinning::new(-2.0, 2.0, 10);
        let b = SBinning::new(-3.0, 3.0, 10);
        let mut curves = synthetic_curves(E_REF, SIGMA_REF, &[0.47, 0.53, 0.58], &a);
        curves.extend(synthetic_curves(E_REF, SIGMA_REF, &[0.7], &b));
        assert!(matches!(
            arrhenius_fit(&curves),
            Err(AnalysisError::BinningMismatch)
        ));
    }
}
