//! Rules for combining per-study SNP summaries into one statistic.
//!
//! Each rule maps the per-study estimates `(β̂ₛ, σ²ₛ)` for one SNP to a
//! combined statistic and its reference law under the strong null. The
//! combined-list rule also has a genome-wide form, [`list_select`], which
//! takes the top `T/S` SNPs of each study and reports the size of the union.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::statdist::{central_ln_sf, central_sf, normal::quantile_unchecked, normal_sf};

/// Per-study estimate for one SNP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyStat<R> {
    pub beta_hat: R,
    pub sigma_sq: R,
    /// β̂² / σ².
    pub wald: R,
    /// Two-sided p-value, P(χ²₁ > wald).
    pub p_value: R,
    /// ln of `p_value`, finite even where `p_value` underflows.
    pub ln_p: R,
}

impl<R: Real> StudyStat<R> {
    pub fn new(beta_hat: R, sigma_sq: R) -> Result<Self> {
        if !(sigma_sq > R::zero()) || !sigma_sq.is_finite() {
            return Err(Error::domain(format!("study variance must be positive and finite, got {sigma_sq}")));
        }
        if !beta_hat.is_finite() {
            return Err(Error::domain("study estimate must be finite"));
        }
        let wald = beta_hat * beta_hat / sigma_sq;
        Ok(Self { beta_hat, sigma_sq, wald, p_value: central_sf(wald, 1), ln_p: central_ln_sf(wald, 1) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CombinedList,
    MetaFixed,
    MetaRandom,
    SumWald,
    Fisher,
    LiptakStouffer,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::CombinedList,
        Method::MetaFixed,
        Method::MetaRandom,
        Method::SumWald,
        Method::Fisher,
        Method::LiptakStouffer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::CombinedList => "combined_list",
            Method::MetaFixed => "meta_fixed",
            Method::MetaRandom => "meta_random",
            Method::SumWald => "sum_wald",
            Method::Fisher => "fisher",
            Method::LiptakStouffer => "liptak_stouffer",
        }
    }

    pub fn parse(name: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == name)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Reference law of a combined statistic under the strong null.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NullDist {
    /// Central χ²_df, upper tail.
    ChiSquare { df: u32 },
    /// Standard normal, upper tail.
    StandardNormalUpper,
    /// Maximum of `studies` independent χ²₁ variables.
    MaxChiSquare1 { studies: u32 },
}

impl NullDist {
    pub fn sf<R: Real>(&self, x: R) -> R {
        match *self {
            NullDist::ChiSquare { df } => central_sf(x, df),
            NullDist::StandardNormalUpper => normal_sf(x),
            NullDist::MaxChiSquare1 { studies } => {
                // 1 − (1 − p)^S without cancellation.
                let p = central_sf(x, 1);
                -(R::c(studies as f64) * (-p).ln_1p()).exp_m1()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedStat<R> {
    pub method: Method,
    pub statistic: R,
    pub null_dist: NullDist,
    pub p_value: R,
    /// Set when an input p-value of exactly 0 or 1 had to be clamped.
    pub clamped: bool,
}

impl<R: Real> CombinedStat<R> {
    fn new(method: Method, statistic: R, null_dist: NullDist) -> Self {
        Self { method, statistic, null_dist, p_value: null_dist.sf(statistic), clamped: false }
    }
}

fn non_empty<R>(stats: &[StudyStat<R>]) -> Result<()> {
    if stats.is_empty() {
        Err(Error::Empty("combining needs at least one study"))
    } else {
        Ok(())
    }
}

/// Inverse-variance fixed-effects estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaFixed<R> {
    pub beta: R,
    pub var: R,
    pub wald: R,
}

pub fn meta_fixed<R: Real>(stats: &[StudyStat<R>]) -> Result<MetaFixed<R>> {
    non_empty(stats)?;
    Ok(fixed_kernel(pairs(stats)))
}

fn pairs<R: Real>(stats: &[StudyStat<R>]) -> impl Iterator<Item = (R, R)> + Clone + '_ {
    stats.iter().map(|s| (s.beta_hat, s.sigma_sq))
}

fn fixed_kernel<R: Real>(parts: impl Iterator<Item = (R, R)>) -> MetaFixed<R> {
    let (mut sum_u, mut sum_ub) = (R::zero(), R::zero());
    for (b, v) in parts {
        let u = R::one() / v;
        sum_u = sum_u + u;
        sum_ub = sum_ub + u * b;
    }
    let beta = sum_ub / sum_u;
    let var = R::one() / sum_u;
    MetaFixed { beta, var, wald: beta * beta / var }
}

/// Normalized inverse-variance weights ŵₛ.
pub fn fixed_weights<R: Real>(sigma_sq: &[R]) -> Vec<R> {
    let total = sigma_sq.iter().fold(R::zero(), |acc, &v| acc + R::one() / v);
    sigma_sq.iter().map(|&v| R::one() / v / total).collect()
}

/// DerSimonian–Laird random-effects estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DLResult<R> {
    pub beta_r: R,
    pub var_r: R,
    pub tau_sq_hat: R,
    pub wald_r: R,
}

pub fn dersimonian_laird<R: Real>(stats: &[StudyStat<R>]) -> Result<DLResult<R>> {
    non_empty(stats)?;
    Ok(dl_kernel(pairs(stats)))
}

fn dl_kernel<R: Real>(parts: impl Iterator<Item = (R, R)> + Clone) -> DLResult<R> {
    let fixed = fixed_kernel(parts.clone());
    let (mut q, mut sum_u, mut sum_u2, mut count) = (R::zero(), R::zero(), R::zero(), 0usize);
    for (b, v) in parts.clone() {
        let u = R::one() / v;
        let d = b - fixed.beta;
        q = q + u * d * d;
        sum_u = sum_u + u;
        sum_u2 = sum_u2 + u * u;
        count += 1;
    }
    let tau_sq_hat = if count < 2 {
        R::zero()
    } else {
        let denom = sum_u - sum_u2 / sum_u;
        if denom > R::zero() {
            ((q - R::from_usize_lossy(count - 1)) / denom).max(R::zero())
        } else {
            R::zero()
        }
    };
    if tau_sq_hat == R::zero() {
        return DLResult { beta_r: fixed.beta, var_r: fixed.var, tau_sq_hat, wald_r: fixed.wald };
    }
    let (mut sum_v, mut sum_vb) = (R::zero(), R::zero());
    for (b, v) in parts {
        let w = R::one() / (tau_sq_hat + v);
        sum_v = sum_v + w;
        sum_vb = sum_vb + w * b;
    }
    let beta_r = sum_vb / sum_v;
    let var_r = R::one() / sum_v;
    DLResult { beta_r, var_r, tau_sq_hat, wald_r: beta_r * beta_r / var_r }
}

pub fn meta_fixed_stat<R: Real>(stats: &[StudyStat<R>]) -> Result<CombinedStat<R>> {
    let m = meta_fixed(stats)?;
    Ok(CombinedStat::new(Method::MetaFixed, m.wald, NullDist::ChiSquare { df: 1 }))
}

/// W^R referred to χ²₁ (the strong-null cutoff).
pub fn meta_random_stat<R: Real>(stats: &[StudyStat<R>]) -> Result<CombinedStat<R>> {
    let dl = dersimonian_laird(stats)?;
    Ok(CombinedStat::new(Method::MetaRandom, dl.wald_r, NullDist::ChiSquare { df: 1 }))
}

/// Σₛ Wₛ against χ²_S.
pub fn sum_wald<R: Real>(stats: &[StudyStat<R>]) -> Result<CombinedStat<R>> {
    non_empty(stats)?;
    let total = stats.iter().fold(R::zero(), |acc, s| acc + s.wald);
    Ok(CombinedStat::new(Method::SumWald, total, NullDist::ChiSquare { df: stats.len() as u32 }))
}

/// −2 Σ ln pₛ against χ²_{2S}, from the log-survival of each Wald statistic.
pub fn fisher_combine<R: Real>(stats: &[StudyStat<R>]) -> Result<CombinedStat<R>> {
    non_empty(stats)?;
    let mut total = R::zero();
    for s in stats {
        if !s.ln_p.is_finite() {
            return Err(Error::Underflow(format!("log p-value not finite for Wald statistic {}", s.wald)));
        }
        total = total - R::c(2.0) * s.ln_p;
    }
    Ok(CombinedStat::new(Method::Fisher, total, NullDist::ChiSquare { df: 2 * stats.len() as u32 }))
}

pub(crate) const LS_CLAMP: f64 = 1e-15;

/// Φ⁻¹(1 − p), clamping p of exactly 0 or 1. Returns the score and whether
/// clamping happened.
#[inline]
pub(crate) fn stouffer_score<R: Real>(p: R) -> (R, bool) {
    let lo = R::c(LS_CLAMP);
    if p <= R::zero() {
        (-quantile_unchecked(lo), true)
    } else if p >= R::one() {
        (quantile_unchecked(lo), true)
    } else {
        (-quantile_unchecked(p), false)
    }
}

/// Σ Φ⁻¹(1 − pₛ)/√S against the standard normal upper tail.
pub fn liptak_stouffer<R: Real>(stats: &[StudyStat<R>]) -> Result<CombinedStat<R>> {
    non_empty(stats)?;
    let mut total = R::zero();
    let mut clamped = false;
    for s in stats {
        let (z, c) = stouffer_score(s.p_value);
        total = total + z;
        clamped |= c;
    }
    let statistic = total / R::from_usize_lossy(stats.len()).sqrt();
    let mut out = CombinedStat::new(Method::LiptakStouffer, statistic, NullDist::StandardNormalUpper);
    out.clamped = clamped;
    Ok(out)
}

/// The combined-list rule as a single-SNP test: maxₛ Wₛ against the law of
/// the maximum of S independent χ²₁.
pub fn max_wald<R: Real>(stats: &[StudyStat<R>]) -> Result<CombinedStat<R>> {
    non_empty(stats)?;
    let m = stats.iter().fold(R::zero(), |acc, s| acc.max(s.wald));
    Ok(CombinedStat::new(Method::CombinedList, m, NullDist::MaxChiSquare1 { studies: stats.len() as u32 }))
}

pub fn combine<R: Real>(method: Method, stats: &[StudyStat<R>]) -> Result<CombinedStat<R>> {
    match method {
        Method::CombinedList => max_wald(stats),
        Method::MetaFixed => meta_fixed_stat(stats),
        Method::MetaRandom => meta_random_stat(stats),
        Method::SumWald => sum_wald(stats),
        Method::Fisher => fisher_combine(stats),
        Method::LiptakStouffer => liptak_stouffer(stats),
    }
}

/// The statistic each rule ranks SNPs by, straight from per-study
/// estimates and variances, without validation or allocation.
///
/// Agrees exactly with the `statistic` field of [`combine`].
pub fn ranking_statistic<R: Real>(method: Method, beta_hat: &[R], sigma_sq: &[R]) -> R {
    let parts = beta_hat.iter().copied().zip(sigma_sq.iter().copied());
    let walds = parts.clone().map(|(b, v)| b * b / v);
    match method {
        Method::CombinedList => walds.fold(R::zero(), |acc, w| acc.max(w)),
        Method::MetaFixed => fixed_kernel(parts).wald,
        Method::MetaRandom => dl_kernel(parts).wald_r,
        Method::SumWald => walds.fold(R::zero(), |acc, w| acc + w),
        Method::Fisher => walds.fold(R::zero(), |acc, w| acc - R::c(2.0) * central_ln_sf(w, 1)),
        Method::LiptakStouffer => {
            let total = walds.fold(R::zero(), |acc, w| acc + stouffer_score(central_sf(w, 1)).0);
            total / R::from_usize_lossy(beta_hat.len()).sqrt()
        }
    }
}

/// Per-study quotas for a total selection size `t`: ⌊t/S⌋ each, with the
/// remainder going one apiece to the first `t mod S` studies.
pub fn study_quotas(t: usize, n_studies: usize) -> Result<Vec<usize>> {
    if n_studies == 0 {
        return Err(Error::Empty("quota split needs at least one study"));
    }
    if t < n_studies {
        return Err(Error::domain(format!(
            "selection size T = {t} is smaller than the number of studies S = {n_studies}; each study needs a quota of at least 1"
        )));
    }
    let base = t / n_studies;
    let extra = t % n_studies;
    Ok((0..n_studies).map(|s| base + usize::from(s < extra)).collect())
}

/// Ranking order: larger value first, lower index on ties.
#[inline]
pub(crate) fn rank_order<R: Real>(values: &[R], a: u32, b: u32) -> Ordering {
    let (va, vb) = (values[a as usize], values[b as usize]);
    vb.partial_cmp(&va).unwrap_or(Ordering::Equal).then(a.cmp(&b))
}

/// Indices of the `q` highest values, in rank order. `scratch` is reused.
pub fn top_indices_into<R: Real>(values: &[R], q: usize, scratch: &mut Vec<u32>, out: &mut Vec<u32>) {
    out.clear();
    let n = values.len();
    let q = q.min(n);
    if q == 0 {
        return;
    }
    scratch.clear();
    scratch.extend(0..n as u32);
    if q < n {
        scratch.select_nth_unstable_by(q - 1, |&a, &b| rank_order(values, a, b));
    }
    out.extend_from_slice(&scratch[..q]);
    out.sort_unstable_by(|&a, &b| rank_order(values, a, b));
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListSelection {
    /// Per study, the selected SNP indices in rank order.
    pub selected: Vec<Vec<u32>>,
    /// T^c: distinct SNPs selected by at least one study.
    pub union_size: usize,
}

/// Top-quota selection within each study and the size of the union.
pub fn list_select<R: Real>(per_study_walds: &[&[R]], quotas: &[usize]) -> Result<ListSelection> {
    if per_study_walds.is_empty() {
        return Err(Error::Empty("list selection needs at least one study"));
    }
    if quotas.len() != per_study_walds.len() {
        return Err(Error::domain("one quota per study is required"));
    }
    let n = per_study_walds[0].len();
    if per_study_walds.iter().any(|w| w.len() != n) {
        return Err(Error::domain("every study must report the same SNPs"));
    }
    for &q in quotas {
        if q == 0 || q > n {
            return Err(Error::domain(format!("quota {q} must lie in 1..={n}")));
        }
    }
    let mut scratch = Vec::new();
    let mut selected = Vec::with_capacity(quotas.len());
    let mut seen = vec![false; n];
    let mut union_size = 0;
    for (walds, &q) in per_study_walds.iter().zip(quotas) {
        let mut top = Vec::with_capacity(q);
        top_indices_into(walds, q, &mut scratch, &mut top);
        for &i in &top {
            if !std::mem::replace(&mut seen[i as usize], true) {
                union_size += 1;
            }
        }
        selected.push(top);
    }
    Ok(ListSelection { selected, union_size })
}

/// Distribution of the number of studies selecting a SNP, given each
/// study's detection probability (Poisson-binomial, by dynamic programming).
pub fn selection_count_pmf<R: Real>(dps: &[R]) -> Result<Vec<R>> {
    if let Some(bad) = dps.iter().find(|d| !(**d >= R::zero() && **d <= R::one())) {
        return Err(Error::domain(format!("detection probability {bad} outside [0, 1]")));
    }
    let mut pmf = vec![R::zero(); dps.len() + 1];
    pmf[0] = R::one();
    for (i, &d) in dps.iter().enumerate() {
        for k in (0..=i + 1).rev() {
            let stay = pmf[k] * (R::one() - d);
            let come = if k > 0 { pmf[k - 1] * d } else { R::zero() };
            pmf[k] = stay + come;
        }
    }
    Ok(pmf)
}

/// P(SNP selected in exactly `k` of the S studies).
pub fn k_of_s_selection_prob<R: Real>(dps: &[R], k: usize) -> Result<R> {
    if k > dps.len() {
        return Err(Error::domain(format!("k = {k} exceeds the number of studies {}", dps.len())));
    }
    Ok(selection_count_pmf(dps)?[k])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(b: f64, v: f64) -> StudyStat<f64> {
        StudyStat::new(b, v).unwrap()
    }

    #[test]
    fn study_stat_rejects_bad_variance() {
        assert!(StudyStat::new(0.1, 0.0).is_err());
        assert!(StudyStat::new(0.1, -1.0).is_err());
        assert!(StudyStat::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn meta_fixed_examples() {
        let m = meta_fixed(&[st(0.2, 0.01), st(0.4, 0.04)]).unwrap();
        assert!((m.beta - 0.24).abs() < 1e-14);
        assert!((m.var - 0.008).abs() < 1e-15);
        let copies = vec![st(0.3, 0.05); 4];
        let m = meta_fixed(&copies).unwrap();
        assert!((m.beta - 0.3).abs() < 1e-15 && (m.var - 0.0125).abs() < 1e-15);
        let one = st(-0.7, 0.2);
        let m = meta_fixed(&[one]).unwrap();
        assert_eq!((m.beta, m.var), (-0.7, 0.2));
        assert!((m.wald - one.wald).abs() < 1e-15);
        assert!(meta_fixed::<f64>(&[]).is_err());
    }

    #[test]
    fn weights_sum_to_one() {
        let w = fixed_weights(&[0.01, 0.04, 0.5]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dl_examples() {
        let same = [st(0.3, 0.02), st(0.3, 0.05), st(0.3, 0.1)];
        let dl = dersimonian_laird(&same).unwrap();
        let f = meta_fixed(&same).unwrap();
        assert_eq!(dl.tau_sq_hat, 0.0);
        assert_eq!((dl.beta_r, dl.var_r), (f.beta, f.var));

        let dl = dersimonian_laird(&[st(0.0, 1.0), st(1.0, 1.0)]).unwrap();
        assert_eq!(dl.tau_sq_hat, 0.0);
        assert!((dl.beta_r - 0.5).abs() < 1e-15);

        let dl = dersimonian_laird(&[st(-1.0, 1.0), st(3.0, 1.0)]).unwrap();
        assert!((dl.tau_sq_hat - 7.0).abs() < 1e-14);
        assert!((dl.beta_r - 1.0).abs() < 1e-14);
        assert!((dl.var_r - 4.0).abs() < 1e-14);

        let single = dersimonian_laird(&[st(0.5, 0.1)]).unwrap();
        assert_eq!(single.tau_sq_hat, 0.0);
    }

    #[test]
    fn sum_wald_examples() {
        let zero = sum_wald(&[st(0.0, 1.0); 3]).unwrap();
        assert_eq!(zero.statistic, 0.0);
        assert_eq!(zero.p_value, 1.0);
        let w = 3.841459_f64;
        let five = vec![st(w.sqrt(), 1.0); 5];
        let c = sum_wald(&five).unwrap();
        assert!((c.statistic - 19.207295).abs() < 1e-5);
        assert!((c.p_value - 0.0017584993852509).abs() < 1e-12, "{}", c.p_value);
        assert_eq!(c.null_dist, NullDist::ChiSquare { df: 5 });
    }

    #[test]
    fn fisher_examples() {
        let ones = fisher_combine(&[st(0.0, 1.0), st(0.0, 2.0)]).unwrap();
        assert_eq!(ones.statistic, 0.0);
        // Wald value with two-sided p = 0.05 is the χ²₁ 95th percentile.
        let w: f64 = crate::statdist::chisq_isf(0.05, 1).unwrap();
        let c = fisher_combine(&[st(w.sqrt(), 1.0), st(-w.sqrt(), 1.0)]).unwrap();
        assert!((c.statistic - 11.982929).abs() < 1e-5);
        assert!((c.p_value - 0.01747).abs() < 1e-5, "{}", c.p_value);
    }

    #[test]
    fn fisher_survives_underflowing_p() {
        let c = fisher_combine(&[st(60.0, 1.0), st(0.1, 1.0)]).unwrap();
        assert!(c.statistic.is_finite() && c.statistic > 3000.0);
    }

    #[test]
    fn stouffer_examples() {
        let half: f64 = crate::statdist::chisq_isf(0.5, 1).unwrap();
        let c = liptak_stouffer(&[st(half.sqrt(), 1.0); 3]).unwrap();
        assert!(c.statistic.abs() < 1e-12);
        assert!((c.p_value - 0.5).abs() < 1e-12);
        let w: f64 = crate::statdist::chisq_isf(0.0228, 1).unwrap();
        let c = liptak_stouffer(&[st(w.sqrt(), 1.0); 4]).unwrap();
        assert!((c.statistic - 4.0).abs() < 2e-3);
        assert!((c.p_value - 3.191914868301574e-5).abs() < 1e-9);
        assert!((c.p_value - 3.17e-5).abs() < 0.01 * 3.17e-5);
        assert!(!c.clamped);
        let c = liptak_stouffer(&[st(0.0, 1.0), st(1.0, 1.0)]).unwrap();
        assert!(c.clamped);
    }

    #[test]
    fn quotas_split_remainder_to_first_studies() {
        assert_eq!(study_quotas(20, 5).unwrap(), vec![4; 5]);
        assert_eq!(study_quotas(12, 5).unwrap(), vec![3, 3, 2, 2, 2]);
        assert!(study_quotas(3, 5).is_err());
    }

    #[test]
    fn list_select_examples() {
        let w = [5.0, 1.0, 4.0, 3.0, 0.5, 2.0];
        let sel = list_select(&[&w[..]], &[3]).unwrap();
        assert_eq!(sel.selected[0], vec![0, 2, 3]);
        assert_eq!(sel.union_size, 3);

        let a = [9.0, 8.0, 0.0, 0.0];
        let b = [0.0, 0.0, 9.0, 8.0];
        assert_eq!(list_select(&[&a[..], &b[..]], &[2, 2]).unwrap().union_size, 4);

        // N = 10, quota 3, one SNP (index 4) in both top sets.
        let s1 = [9.0, 8.0, 0.1, 0.2, 7.0, 0.3, 0.4, 0.5, 0.6, 0.7];
        let s2 = [0.1, 0.2, 6.0, 0.3, 9.5, 0.4, 0.5, 5.0, 0.6, 0.7];
        let sel = list_select(&[&s1[..], &s2[..]], &[3, 3]).unwrap();
        assert_eq!(sel.union_size, 5);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let w = [1.0, 2.0, 2.0, 2.0, 0.0];
        let sel = list_select(&[&w[..]], &[2]).unwrap();
        assert_eq!(sel.selected[0], vec![1, 2]);
    }

    #[test]
    fn k_of_s_examples() {
        let p: f64 = k_of_s_selection_prob(&[0.1, 0.2, 0.3], 1).unwrap();
        assert!((p - 0.398).abs() < 1e-12);
        let d: f64 = 0.37;
        let pmf = selection_count_pmf(&[d; 6]).unwrap();
        for (k, &v) in pmf.iter().enumerate() {
            let c = (0..k).fold(1.0, |acc, i| acc * (6 - i) as f64 / (i + 1) as f64);
            assert!((v - c * d.powi(k as i32) * (1.0 - d).powi(6 - k as i32)).abs() < 1e-14);
        }
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(k_of_s_selection_prob(&[0.5], 2).is_err());
    }
}
