//! Aging: how the relaxation time tracks the mean softness after a
//! temperature quench.

use super::fit::linear_fit;
use super::overlap::{overlap, OverlapConfig};
use super::{AnalysisError, ArrheniusFit};
use crate::classifier::{SoftnessField, SoftnessModel};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct AgingRow {
    pub t_age: f64,
    pub mean_softness: f64,
    pub tau_alpha: f64,
    pub beta: Option<f64>,
    pub extrapolated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgingAnalysis {
    pub rows: Vec<AgingRow>,
    /// Slope of `ln tau_alpha = intercept - c <S>`; positive c means softer
    /// systems relax faster.
    pub c: f64,
    pub intercept: f64,
    pub r2: f64,
    /// `E1 (1/T_F - 1/T0)` from an Arrhenius fit, when available.
    pub c_theory: Option<f64>,
    /// The mean softness barely varied; the fit is unusable.
    pub degenerate: bool,
}

/// Spread of mean softness below which the exponential fit is flagged
/// degenerate (an equilibrium run).
const DEGENERATE_S_SPREAD: f64 = 1e-3;

/// Measures per-segment mean softness and relaxation time. Segments whose
/// overlap never decays are kept with the extrapolated fit and flagged.
pub fn aging_rows(
    segments: &[(f64, Trajectory)],
    model: &SoftnessModel,
    overlap_cfg: &OverlapConfig,
) -> Result<Vec<AgingRow>, AnalysisError> {
    let mut rows = Vec::with_capacity(segments.len());
    for (t_age, traj) in segments {
        let field = SoftnessField::compute(traj, model)?;
        let out = overlap(traj, None, None, overlap_cfg)?;
        let tau = out.tau_alpha_crossing.or(out.tau_alpha);
        let Some(tau) = tau else {
            log::warn!("segment t_age={t_age}: overlap did not decay, segment excluded");
            continue;
        };
        rows.push(AgingRow {
            t_age: *t_age,
            mean_softness: field.mean(),
            tau_alpha: tau,
            beta: out.beta,
            extrapolated: out.extrapolated,
        });
    }
    Ok(rows)
}

/// Fits `ln tau_alpha` against the mean softness across waiting times and
/// compares the slope with the Arrhenius prediction at `t_final`.
pub fn aging_analysis(
    rows: Vec<AgingRow>,
    t_final: f64,
    arrhenius: Option<&ArrheniusFit>,
) -> Result<AgingAnalysis, AnalysisError> {
    if rows.len() < 3 {
        return Err(AnalysisError::EmptyInput(format!(
            "aging fit needs >= 3 usable waiting times, got {}",
            rows.len()
        )));
    }
    let s: Vec<f64> = rows.iter().map(|r| r.mean_softness).collect();
    let ln_tau: Vec<f64> = rows.iter().map(|r| r.tau_alpha.ln()).collect();
    let spread = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - s.iter().cloned().fold(f64::INFINITY, f64::min);
    let c_theory = arrhenius.map(|fit| {
        let t0 = fit.e_coeffs[0] / fit.sigma_coeffs[0];
        fit.e_coeffs[1] * (1.0 / t_final - 1.0 / t0)
    });
    if spread < DEGENERATE_S_SPREAD {
        return Ok(AgingAnalysis {
            rows,
            c: f64::NAN,
            intercept: f64::NAN,
            r2: f64::NAN,
            c_theory,
            degenerate: true,
        });
    }
    let (slope, intercept, r2) = linear_fit(&s, &ln_tau)
        .ok_or_else(|| AnalysisError::Degenerate("aging fit".into()))?;
    Ok(AgingAnalysis {
        rows,
        c: -slope,
        intercept,
        r2,
        c_theory,
        degenerate: false,
    })
}
