use crate::combine::{selection_count_pmf, Method};
use crate::error::{Error, Result};
use crate::genmodel::{var_pooled, var_single_study, EffectModel, StudyDesign};
use crate::statdist::{chisq_isf, ChiSquareNoncentral};

fn selection_fraction(t: f64, n: usize) -> Result<f64> {
    let n = n as f64;
    if !(t > 0.0 && t <= n) {
        return Err(Error::domain(format!("selection size {t} must lie in (0, N = {n}]")));
    }
    Ok(t / n)
}

/// P(χ²_df(δ) > χ²_{df, 1−T/N}): the chance a SNP with noncentrality `delta`
/// beats the null threshold that selects T of N SNPs on average.
pub fn dp_analytic_df(df: u32, delta: f64, t: f64, n: usize) -> Result<f64> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::domain(format!("noncentrality must be finite and >= 0, got {delta}")));
    }
    let frac = selection_fraction(t, n)?;
    if frac >= 1.0 {
        return Ok(1.0);
    }
    let cut = chisq_isf(frac, df)?;
    ChiSquareNoncentral::new(df, delta)?.sf(cut)
}

pub fn dp_analytic_one_df(delta: f64, t: usize, n: usize) -> Result<f64> {
    dp_analytic_df(1, delta, t as f64, n)
}

fn fixed_beta(effect: &EffectModel<f64>) -> Result<f64> {
    match *effect {
        EffectModel::FixedEffect { beta } => Ok(beta),
        EffectModel::RandomEffect { .. } => Err(Error::Unsupported(
            "the analytic approximation needs a fixed effect; use simulation for random effects".into(),
        )),
    }
}

/// 1 − Πₛ(1 − DPₛ) with each study selecting its top T/S of N.
pub fn dp_analytic_combined_list(
    designs: &[StudyDesign],
    eta: f64,
    effect: &EffectModel<f64>,
    t: usize,
    n: usize,
) -> Result<f64> {
    let beta = fixed_beta(effect)?;
    if designs.is_empty() {
        return Err(Error::Empty("combined list needs at least one study"));
    }
    let per_study = t as f64 / designs.len() as f64;
    let mut miss = 1.0;
    for d in designs {
        let delta = beta * beta / var_single_study(d, eta, beta)?;
        miss *= 1.0 - dp_analytic_df(1, delta, per_study, n)?;
    }
    Ok(1.0 - miss)
}

/// Analytic DP for one SNP with a fixed effect at allele frequency `eta`.
///
/// Meta-analysis uses δ = β²/σ²_S on one degree of freedom; the sum of Wald
/// statistics uses δ = Σβ²/σ²ₛ on S degrees of freedom.
pub fn dp_analytic(
    method: Method,
    designs: &[StudyDesign],
    eta: f64,
    effect: &EffectModel<f64>,
    t: usize,
    n: usize,
) -> Result<f64> {
    let beta = fixed_beta(effect)?;
    if designs.is_empty() {
        return Err(Error::Empty("need at least one study"));
    }
    match method {
        Method::CombinedList => dp_analytic_combined_list(designs, eta, effect, t, n),
        Method::MetaFixed => {
            let etas = vec![eta; designs.len()];
            let delta = beta * beta / var_pooled(designs, &etas, beta)?;
            dp_analytic_df(1, delta, t as f64, n)
        }
        Method::SumWald => {
            let mut delta = 0.0;
            for d in designs {
                delta += beta * beta / var_single_study(d, eta, beta)?;
            }
            dp_analytic_df(designs.len() as u32, delta, t as f64, n)
        }
        other => Err(Error::Unsupported(format!("no analytic DP for {other}; use simulation"))),
    }
}

/// Σₛ DPₛ, the expected number of studies whose list holds the SNP.
pub fn expected_studies_selecting(dps: &[f64]) -> Result<f64> {
    // validates the probabilities
    selection_count_pmf(dps)?;
    Ok(dps.iter().sum())
}
