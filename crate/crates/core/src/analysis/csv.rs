//! CSV export of the analysis results, one schema line per file.

use super::{
    AgingAnalysis, ArrheniusFit, MeanFieldOverlap, ModelOverlap, OnsetResult, Propagator,
    RearrangementCurve, SoftnessHistogram,
};
use super::overlap::OverlapResult;
use std::io::{Result, Write};

pub fn write_histogram<W: Write>(h: &SoftnessHistogram, mut w: W) -> Result<()> {
    writeln!(w, "s_lo,s_hi,p_of_s,count,p_of_s_given_r,count_given_r")?;
    for b in 0..h.counts.len() {
        let pr = h
            .p_of_s_given_r
            .as_ref()
            .map_or(f64::NAN, |v| v[b]);
        writeln!(
            w,
            "{},{},{},{},{},{}",
            h.edges[b], h.edges[b + 1], h.p_of_s[b], h.counts[b], pr, h.counts_given_r[b]
        )?;
    }
    Ok(())
}

pub fn write_rearrangement_curve<W: Write>(c: &RearrangementCurve, mut w: W) -> Result<()> {
    writeln!(w, "S,P_R,count,T")?;
    for b in 0..c.s_centers.len() {
        writeln!(
            w,
            "{},{},{},{}",
            c.s_centers[b], c.p_r[b], c.total[b], c.temperature
        )?;
    }
    Ok(())
}

pub fn write_arrhenius<W: Write>(fit: &ArrheniusFit, mut w: W) -> Result<()> {
    writeln!(w, "S,E,Sigma,r2,used")?;
    for k in 0..fit.s.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            fit.s[k], fit.energy[k], fit.entropy[k], fit.r2[k], fit.used[k]
        )?;
    }
    Ok(())
}

pub fn write_onset<W: Write>(
    fit: &ArrheniusFit,
    onset: &OnsetResult,
    mut w: W,
) -> Result<()> {
    writeln!(w, "name,value")?;
    for (name, value) in [
        ("E0", fit.e_coeffs[0]),
        ("E1", fit.e_coeffs[1]),
        ("E2", fit.e_coeffs[2]),
        ("Sigma0", fit.sigma_coeffs[0]),
        ("Sigma1", fit.sigma_coeffs[1]),
        ("Sigma2", fit.sigma_coeffs[2]),
        ("E_fit_r2", fit.e_fit_r2),
        ("Sigma_fit_r2", fit.sigma_fit_r2),
        ("T0", onset.t0),
        ("T1", onset.t1),
        ("T0_T1_relative_gap", onset.relative_gap),
    ] {
        writeln!(w, "{name},{value}")?;
    }
    Ok(())
}

pub fn write_overlap<W: Write>(o: &OverlapResult, mut w: W) -> Result<()> {
    writeln!(w, "t,q,q_central")?;
    for (k, &t) in o.times.iter().enumerate() {
        let qc = o.q_central.as_ref().map_or(f64::NAN, |v| v[k]);
        writeln!(w, "{},{},{}", t, o.q[k], qc)?;
    }
    Ok(())
}

pub fn write_overlap_by_softness<W: Write>(o: &OverlapResult, mut w: W) -> Result<()> {
    writeln!(w, "S_lo,S_hi,t,q,count")?;
    if let Some(by_s) = &o.by_softness {
        for b in 0..by_s.n_bins {
            for (k, &t) in o.times.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    by_s.edges[b],
                    by_s.edges[b + 1],
                    t,
                    by_s.value(b, k),
                    by_s.count(b, k)
                )?;
            }
        }
    }
    Ok(())
}

pub fn write_propagator<W: Write>(p: &Propagator, mut w: W) -> Result<()> {
    writeln!(w, "t,S0,S,mass,row_count")?;
    for (li, &t) in p.lag_times.iter().enumerate() {
        for s0 in 0..p.n_bins {
            for s in 0..p.n_bins {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    t,
                    0.5 * (p.edges[s0] + p.edges[s0 + 1]),
                    0.5 * (p.edges[s] + p.edges[s + 1]),
                    p.mass_at(li, s0, s),
                    p.row_count(li, s0)
                )?;
            }
        }
    }
    writeln!(w, "# tau_R,{}", p.tau_r)?;
    Ok(())
}

pub fn write_model_overlap<W: Write>(m: &ModelOverlap, mut w: W) -> Result<()> {
    writeln!(w, "t,q_model")?;
    for (k, &t) in m.times.iter().enumerate() {
        writeln!(w, "{},{}", t, m.q[k])?;
    }
    Ok(())
}

pub fn write_mean_field<W: Write>(m: &MeanFieldOverlap, mut w: W) -> Result<()> {
    writeln!(w, "t,q_mf")?;
    for (k, &t) in m.times.iter().enumerate() {
        writeln!(w, "{},{}", t, m.q[k])?;
    }
    writeln!(w, "# p_at_mean,{}", m.p_at_mean)?;
    writeln!(w, "# tau_alpha_mf,{}", m.tau_alpha)?;
    Ok(())
}

pub fn write_aging<W: Write>(a: &AgingAnalysis, mut w: W) -> Result<()> {
    writeln!(w, "t_age,mean_S,tau_alpha,beta,extrapolated")?;
    for r in &a.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.t_age,
            r.mean_softness,
            r.tau_alpha,
            r.beta.unwrap_or(f64::NAN),
            r.extrapolated
        )?;
    }
    writeln!(w, "# c,{}", a.c)?;
    writeln!(w, "# intercept,{}", a.intercept)?;
    writeln!(w, "# r2,{}", a.r2)?;
    writeln!(w, "# c_theory,{}", a.c_theory.unwrap_or(f64::NAN))?;
    writeln!(w, "# degenerate,{}", a.degenerate)?;
    Ok(())
}

/// Histogram of raw hop-indicator values (log-ready long format).
pub fn write_phop_histogram<W: Write>(
    edges: &[f64],
    counts: &[u64],
    mut w: W,
) -> Result<()> {
    writeln!(w, "p_hop_lo,p_hop_hi,count,density")?;
    let total: u64 = counts.iter().sum();
    for b in 0..counts.len() {
        let width = edges[b + 1] - edges[b];
        writeln!(
            w,
            "{},{},{},{}",
            edges[b],
            edges[b + 1],
            counts[b],
            counts[b] as f64 / (total.max(1) as f64 * width)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::SBinning;

    #[test]
    fn curve_csv_has_spec_header() {
        let binning = SBinning::new(-1.0, 1.0, 2);
        let c = RearrangementCurve {
            temperature: 0.47,
            edges: binning.edges.clone(),
            s_centers: binning.centers(),
            p_r: vec![0.1, 0.2],
            rearranging: vec![1, 2],
            total: vec![10, 10],
            threshold: 0.2,
            min_count: 1,
        };
        let mut buf = Vec::new();
        write_rearrangement_curve(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("S,P_R,count,T\n"));
        assert!(text.contains("-0.5,0.1,10,0.47"));
    }
}
