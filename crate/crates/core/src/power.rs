//! Experiment-wise power of each combining rule at a fixed allele frequency,
//! analytically where closed forms exist and by simulation for every rule.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combine::{ranking_statistic, Method};
use crate::error::{Error, Result};
use crate::genmodel::{var_pooled, var_single_study, EffectModel, StudyDesign};
use crate::statdist::{
    chisq_isf, f_isf, normal_cdf, normal_isf, normal_sf, stream_id, ChiSquareNoncentral, FNoncentral, GaussHermiteRule,
    RngStream,
};

/// Critical region for the random-effects statistic W^R.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RandomMetaCutoff {
    /// χ²_{1,1−α}, valid under the strong null.
    #[default]
    #[serde(rename = "chi_square_1")]
    ChiSquare1,
    /// F_{1,S−1,1−α}, the t_{S−1} reference.
    #[serde(rename = "f_1_s_minus_1")]
    F1SMinus1,
}

/// Per-study level for the combined list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ListCorrection {
    /// α/S.
    #[default]
    Bonferroni,
    /// 1 − (1 − α)^{1/S}.
    Exact,
}

/// Rejection region for the Stouffer Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoufferTail {
    /// |Z| > Φ⁻¹(1 − α/2).
    #[default]
    TwoSided,
    /// Z > Φ⁻¹(1 − α).
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMethod {
    CombinedList,
    MetaFixed,
    #[serde(rename = "meta_random_chisq")]
    MetaRandomChiSquare,
    MetaRandomF,
    SumWald,
    Fisher,
    LiptakStouffer,
}

impl PowerMethod {
    pub const ALL: [PowerMethod; 7] = [
        PowerMethod::CombinedList,
        PowerMethod::MetaFixed,
        PowerMethod::MetaRandomChiSquare,
        PowerMethod::MetaRandomF,
        PowerMethod::SumWald,
        PowerMethod::Fisher,
        PowerMethod::LiptakStouffer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PowerMethod::CombinedList => "combined_list",
            PowerMethod::MetaFixed => "meta_fixed",
            PowerMethod::MetaRandomChiSquare => "meta_random_chisq",
            PowerMethod::MetaRandomF => "meta_random_f",
            PowerMethod::SumWald => "sum_wald",
            PowerMethod::Fisher => "fisher",
            PowerMethod::LiptakStouffer => "liptak_stouffer",
        }
    }

    /// Parses a method name; plain `meta_random` takes the given cutoff.
    pub fn parse(name: &str, meta_random: RandomMetaCutoff) -> Option<PowerMethod> {
        if name == "meta_random" {
            return Some(match meta_random {
                RandomMetaCutoff::ChiSquare1 => PowerMethod::MetaRandomChiSquare,
                RandomMetaCutoff::F1SMinus1 => PowerMethod::MetaRandomF,
            });
        }
        PowerMethod::ALL.into_iter().find(|m| m.name() == name)
    }

    pub fn base(self) -> Method {
        match self {
            PowerMethod::CombinedList => Method::CombinedList,
            PowerMethod::MetaFixed => Method::MetaFixed,
            PowerMethod::MetaRandomChiSquare | PowerMethod::MetaRandomF => Method::MetaRandom,
            PowerMethod::SumWald => Method::SumWald,
            PowerMethod::Fisher => Method::Fisher,
            PowerMethod::LiptakStouffer => Method::LiptakStouffer,
        }
    }

    pub fn has_analytic(self) -> bool {
        !matches!(self, PowerMethod::Fisher | PowerMethod::LiptakStouffer)
    }
}

impl fmt::Display for PowerMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_SUM_WALD_DRAWS: usize = 1_000_000;
pub const DEFAULT_QUADRATURE_NODES: usize = 96;

/// The 1.0, 1.05, ..., 2.0 odds-ratio grid.
pub fn default_or_grid() -> Vec<f64> {
    (0..=20).map(|i| 1.0 + 0.05 * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerScenario {
    pub designs: Vec<StudyDesign>,
    /// Effect family; its β is replaced by ln(OR) at each grid point.
    pub effect: EffectModel<f64>,
    pub eta: f64,
    pub alpha: f64,
    pub or_grid: Vec<f64>,
    pub nsim: u64,
    pub seed: u64,
    pub methods: Vec<PowerMethod>,
    pub list_correction: ListCorrection,
    pub stouffer_tail: StoufferTail,
    /// Draws for the random-effects sum-of-Wald integral.
    pub sum_wald_draws: usize,
    pub quadrature_nodes: usize,
    /// Skip simulation and report analytic rows only.
    pub analytic_only: bool,
}

impl PowerScenario {
    pub fn validate(&self) -> Result<()> {
        if self.designs.is_empty() {
            return Err(Error::invalid("studies", "at least one study is required"));
        }
        for d in &self.designs {
            d.validate()?;
        }
        self.effect.validate()?;
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::invalid("eta", format!("must lie in (0, 1), got {}", self.eta)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if self.or_grid.is_empty() {
            return Err(Error::invalid("or_grid", "at least one odds ratio is required"));
        }
        if let Some((i, v)) = self.or_grid.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("or_grid[{i}]"), format!("odds ratios must be positive, got {v}")));
        }
        if self.or_grid.len() > u16::MAX as usize {
            return Err(Error::invalid("or_grid", "too many grid points"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("methods", "at least one method is required"));
        }
        if self.designs.len() < 2 && self.methods.contains(&PowerMethod::MetaRandomF) {
            return Err(Error::invalid("methods", "the F cutoff needs at least two studies (S - 1 >= 1)"));
        }
        if !self.analytic_only && self.nsim < 1 {
            return Err(Error::invalid("nsim", "need at least one replicate"));
        }
        if self.sum_wald_draws < 1 {
            return Err(Error::invalid("sum_wald_draws", "need at least one draw"));
        }
        if self.quadrature_nodes < 2 {
            return Err(Error::invalid("quadrature_nodes", "need at least two nodes"));
        }
        Ok(())
    }

    fn n_studies(&self) -> usize {
        self.designs.len()
    }

    fn at(&self, beta: f64) -> EffectModel<f64> {
        self.effect.with_beta(beta)
    }
}

/// Cutoffs of every rule at level α for S studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoffs {
    pub list: f64,
    pub meta_chisq: f64,
    pub meta_f: Option<f64>,
    pub sum: f64,
    pub fisher: f64,
    pub stouffer: f64,
    pub stouffer_tail: StoufferTail,
}

impl Cutoffs {
    pub fn new(alpha: f64, n_studies: usize, correction: ListCorrection, tail: StoufferTail) -> Result<Self> {
        let s = n_studies as u32;
        let per_study = match correction {
            ListCorrection::Bonferroni => alpha / n_studies as f64,
            ListCorrection::Exact => -((-alpha).ln_1p() / n_studies as f64).exp_m1(),
        };
        Ok(Self {
            list: chisq_isf(per_study, 1)?,
            meta_chisq: chisq_isf(alpha, 1)?,
            meta_f: if s >= 2 { Some(f_isf(alpha, 1, s - 1)?) } else { None },
            sum: chisq_isf(alpha, s)?,
            fisher: chisq_isf(alpha, 2 * s)?,
            stouffer: match tail {
                StoufferTail::TwoSided => normal_isf(alpha / 2.0)?,
                StoufferTail::Upper => normal_isf(alpha)?,
            },
            stouffer_tail: tail,
        })
    }

    /// Whether `method` rejects given per-study estimates and variances.
    pub fn rejects(&self, method: PowerMethod, beta_hat: &[f64], sigma_sq: &[f64]) -> bool {
        let stat = ranking_statistic(method.base(), beta_hat, sigma_sq);
        match method {
            PowerMethod::CombinedList => stat > self.list,
            PowerMethod::MetaFixed | PowerMethod::MetaRandomChiSquare => stat > self.meta_chisq,
            PowerMethod::MetaRandomF => self.meta_f.is_some_and(|c| stat > c),
            PowerMethod::SumWald => stat > self.sum,
            PowerMethod::Fisher => stat > self.fisher,
            PowerMethod::LiptakStouffer => match self.stouffer_tail {
                StoufferTail::TwoSided => stat.abs() > self.stouffer,
                StoufferTail::Upper => stat > self.stouffer,
            },
        }
    }
}

fn study_variances(sc: &PowerScenario, beta: f64) -> Result<Vec<f64>> {
    sc.designs.iter().map(|d| var_single_study(d, sc.eta, beta)).collect()
}

fn gh_rule(sc: &PowerScenario) -> Result<GaussHermiteRule<f64>> {
    GaussHermiteRule::new(sc.quadrature_nodes)
}

/// P(χ²₁(b²/σ²) ≤ c).
#[inline]
fn ncx1_cdf(b: f64, var: f64, c: f64) -> f64 {
    ChiSquareNoncentral::new(1, b * b / var).map(|d| d.cdf_unchecked(c)).unwrap_or(1.0)
}

/// 1 − Πₛ P(χ²₁(δₛ) ≤ χ²_{1,1−α'}); under random effects each factor is
/// integrated over βˢ ~ N(β, τ²) with σ²ₛ evaluated at βˢ.
pub fn power_list_analytic(sc: &PowerScenario, beta: f64) -> Result<f64> {
    let cut = Cutoffs::new(sc.alpha, sc.n_studies(), sc.list_correction, sc.stouffer_tail)?.list;
    let effect = sc.at(beta);
    let rule = gh_rule(sc)?;
    let mut miss = 1.0;
    for d in &sc.designs {
        let mut err = None;
        let factor = rule.expect_normal(beta, effect.tau(), |b| match var_single_study(d, sc.eta, b) {
            Ok(v) => ncx1_cdf(b, v, cut),
            Err(e) => {
                err = Some(e);
                0.0
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        miss *= factor;
    }
    Ok(1.0 - miss)
}

/// Fixed-effects weights and pooled variance at β. Under random effects the
/// weights are evaluated at the mean β, so β^F ~ N(β, τ² Σ wₛ²).
fn meta_spread(sc: &PowerScenario, beta: f64) -> Result<(f64, f64)> {
    let vars = study_variances(sc, beta)?;
    let etas = vec![sc.eta; sc.n_studies()];
    let pooled = var_pooled(&sc.designs, &etas, beta)?;
    let total: f64 = vars.iter().map(|v| 1.0 / v).sum();
    let sum_w2: f64 = vars.iter().map(|v| (1.0 / v / total).powi(2)).sum();
    Ok((pooled, sc.effect.tau() * sum_w2.sqrt()))
}

/// P(χ²₁(δ) > χ²_{1,1−α}), δ = (β^F)²/σ²_S, averaged over β^F. The average
/// is P(|N(β, spread² + σ²_S)| > σ_S √c) in closed form.
pub fn power_meta_fixed_analytic(sc: &PowerScenario, beta: f64) -> Result<f64> {
    let c = chisq_isf(sc.alpha, 1)?;
    let (pooled, spread) = meta_spread(sc, beta)?;
    let sd = (spread * spread + pooled).sqrt();
    let edge = (pooled * c).sqrt();
    Ok(normal_sf((edge - beta) / sd) + normal_cdf((-edge - beta) / sd))
}

/// Power of W^R with δ = β²/σ²_R against either cutoff, where
/// σ²_R = 1/Σ 1/(σ²ₛ + τ²) is the variance of the random-effects estimate
/// (σ²_S under fixed effects).
pub fn power_meta_random_analytic(sc: &PowerScenario, beta: f64, cutoff: RandomMetaCutoff) -> Result<f64> {
    let s = sc.n_studies() as u32;
    let tau_sq = sc.effect.tau().powi(2);
    let var_r = if tau_sq == 0.0 {
        var_pooled(&sc.designs, &vec![sc.eta; sc.n_studies()], beta)?
    } else {
        1.0 / study_variances(sc, beta)?.iter().map(|v| 1.0 / (v + tau_sq)).sum::<f64>()
    };
    let delta = beta * beta / var_r;
    match cutoff {
        RandomMetaCutoff::ChiSquare1 => ChiSquareNoncentral::new(1, delta)?.sf(chisq_isf(sc.alpha, 1)?),
        RandomMetaCutoff::F1SMinus1 => {
            if s < 2 {
                return Err(Error::domain("the F cutoff needs S >= 2 (df2 = S - 1)"));
            }
            FNoncentral::new(1, s - 1, delta)?.sf(f_isf(sc.alpha, 1, s - 1)?)
        }
    }
}

/// Power with its integration standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Fixed seed of the random-effects sum-of-Wald integral.
const SUM_WALD_SEED: u64 = 0x5eed_5a1d;
const SUM_WALD_CHUNK: usize = 1 << 14;

/// P(χ²_S(δ) > χ²_{S,1−α}), δ = Σ(βˢ)²/σ²ₛ; under random effects the
/// conditional power is averaged over Monte Carlo draws of (β¹..β^S).
pub fn power_sum_wald_analytic(sc: &PowerScenario, beta: f64) -> Result<Estimate> {
    let s = sc.n_studies() as u32;
    let c = chisq_isf(sc.alpha, s)?;
    let effect = sc.at(beta);
    if effect.tau() == 0.0 {
        let delta: f64 = study_variances(sc, beta)?.iter().map(|v| beta * beta / v).sum();
        return Ok(Estimate { value: ChiSquareNoncentral::new(s, delta)?.sf(c)?, se: 0.0 });
    }
    let draws = sc.sum_wald_draws;
    let n_chunks = draws.div_ceil(SUM_WALD_CHUNK);
    let deltas: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>> {
            let len = SUM_WALD_CHUNK.min(draws - k * SUM_WALD_CHUNK);
            let mut rng = RngStream::new(SUM_WALD_SEED, stream_id(k as u64, 0));
            (0..len)
                .map(|_| {
                    let mut delta = 0.0;
                    for d in &sc.designs {
                        let b = effect.draw_study_beta(&mut rng);
                        delta += b * b / var_single_study(d, sc.eta, b)?;
                    }
                    Ok(delta)
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    let table =
        SmoothTable::new(&deltas, |delta| ChiSquareNoncentral::new(s, delta).map(|d| d.sf_unchecked(c)).unwrap_or(0.0));
    let (mut sum, mut sum2) = (0.0, 0.0);
    for &d in &deltas {
        let p = table.eval(d);
        sum += p;
        sum2 += p * p;
    }
    let n = deltas.len() as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0);
    Ok(Estimate { value: mean, se: (var / n).sqrt() })
}

/// Cubic interpolation of a smooth function of δ on a uniform grid in √δ,
/// spanning the values it will be asked for.
struct SmoothTable {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

const TABLE_POINTS: usize = 4097;

impl SmoothTable {
    fn new(at: &[f64], f: impl Fn(f64) -> f64 + Sync) -> Self {
        let (lo, hi) = at.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &d| (a.min(d.sqrt()), b.max(d.sqrt())));
        let step = ((hi - lo) / (TABLE_POINTS - 4) as f64).max(1e-12);
        let lo = lo - step;
        let values = (0..TABLE_POINTS)
            .into_par_iter()
            .map(|i| {
                let u = (lo + step * i as f64).max(0.0);
                f(u * u)
            })
            .collect();
        Self { lo, step, values }
    }

    fn eval(&self, delta: f64) -> f64 {
        let x = (delta.sqrt() - self.lo) / self.step;
        let i = (x.floor() as usize).clamp(1, self.values.len() - 3);
        let t = x - i as f64;
        let (p0, p1, p2, p3) = (self.values[i - 1], self.values[i], self.values[i + 1], self.values[i + 2]);
        // Lagrange cubic through nodes −1, 0, 1, 2.
        let a = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let b = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let c = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let d = (t + 1.0) * t * (t - 1.0) / 6.0;
        a * p0 + b * p1 + c * p2 + d * p3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerSource {
    Analytic,
    Simulated,
}

impl fmt::Display for PowerSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PowerSource::Analytic => "analytic",
            PowerSource::Simulated => "simulated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub method: PowerMethod,
    pub odds_ratio: f64,
    pub power: f64,
    pub source: PowerSource,
    /// Monte Carlo standard error; `None` for exact analytic values.
    pub mc_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub rows: Vec<PowerRow>,
}

impl PowerReport {
    pub fn get(&self, method: PowerMethod, odds_ratio: f64, source: PowerSource) -> Option<&PowerRow> {
        self.rows.iter().find(|r| r.method == method && r.source == source && (r.odds_ratio - odds_ratio).abs() < 1e-9)
    }
}

/// Analytic power of one method at log-odds ratio `beta`.
pub fn power_analytic(sc: &PowerScenario, method: PowerMethod, beta: f64) -> Result<Option<Estimate>> {
    let exact = |value: f64| Some(Estimate { value, se: 0.0 });
    Ok(match method {
        PowerMethod::CombinedList => exact(power_list_analytic(sc, beta)?),
        PowerMethod::MetaFixed => exact(power_meta_fixed_analytic(sc, beta)?),
        PowerMethod::MetaRandomChiSquare => exact(power_meta_random_analytic(sc, beta, RandomMetaCutoff::ChiSquare1)?),
        PowerMethod::MetaRandomF => exact(power_meta_random_analytic(sc, beta, RandomMetaCutoff::F1SMinus1)?),
        PowerMethod::SumWald => Some(power_sum_wald_analytic(sc, beta)?),
        PowerMethod::Fisher | PowerMethod::LiptakStouffer => None,
    })
}

const SIM_CHUNK: u64 = 4096;

/// Rejection counts per method over `nsim` replicates at one β. The same
/// random numbers are used at every grid point.
fn simulate_counts(sc: &PowerScenario, beta: f64, cutoffs: &Cutoffs) -> Result<Vec<u64>> {
    let effect = sc.at(beta);
    let s = sc.n_studies();
    let fixed_vars = if effect.tau() == 0.0 { Some(study_variances(sc, beta)?) } else { None };
    let n_chunks = sc.nsim.div_ceil(SIM_CHUNK);
    let per_chunk: Vec<Vec<u64>> = (0..n_chunks)
        .into_par_iter()
        .map(|k| -> Result<Vec<u64>> {
            let len = SIM_CHUNK.min(sc.nsim - k * SIM_CHUNK);
            let mut rng = RngStream::new(sc.seed, stream_id(k, 0));
            let mut counts = vec![0u64; sc.methods.len()];
            let mut b = vec![0.0; s];
            let mut v = fixed_vars.clone().unwrap_or_else(|| vec![0.0; s]);
            for _ in 0..len {
                for st in 0..s {
                    let beta_s = effect.draw_study_beta(&mut rng);
                    if fixed_vars.is_none() {
                        v[st] = var_single_study(&sc.designs[st], sc.eta, beta_s)?;
                    }
                    b[st] = beta_s + v[st].sqrt() * rng.normal();
                }
                for (count, &m) in counts.iter_mut().zip(&sc.methods) {
                    *count += u64::from(cutoffs.rejects(m, &b, &v));
                }
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0u64; sc.methods.len()];
    for c in per_chunk {
        for (t, x) in total.iter_mut().zip(c) {
            *t += x;
        }
    }
    Ok(total)
}

/// Simulated power of every scenario method across the odds-ratio grid.
pub fn power_simulate(sc: &PowerScenario) -> Result<Vec<PowerRow>> {
    sc.validate()?;
    let cutoffs = Cutoffs::new(sc.alpha, sc.n_studies(), sc.list_correction, sc.stouffer_tail)?;
    let n = sc.nsim as f64;
    let mut rows = Vec::new();
    for &or in &sc.or_grid {
        let counts = simulate_counts(sc, or.ln(), &cutoffs)?;
        for (&method, &c) in sc.methods.iter().zip(&counts) {
            let p = c as f64 / n;
            rows.push(PowerRow {
                method,
                odds_ratio: or,
                power: p,
                source: PowerSource::Simulated,
                mc_se: Some((p * (1.0 - p) / n).sqrt()),
            });
        }
    }
    Ok(rows)
}

/// Analytic rows, then simulated rows unless `analytic_only`.
pub fn run_power(sc: &PowerScenario) -> Result<PowerReport> {
    sc.validate()?;
    let mut rows = Vec::new();
    for &method in &sc.methods {
        for &or in &sc.or_grid {
            if let Some(est) = power_analytic(sc, method, or.ln())? {
                rows.push(PowerRow {
                    method,
                    odds_ratio: or,
                    power: est.value,
                    source: PowerSource::Analytic,
                    mc_se: (est.se > 0.0).then_some(est.se),
                });
            }
        }
    }
    if !sc.analytic_only {
        let mut sim = power_simulate(sc)?;
        sim.sort_by_key(|r| sc.methods.iter().position(|&m| m == r.method));
        rows.extend(sim);
    }
    Ok(PowerReport { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeRow {
    pub method: PowerMethod,
    pub alpha: f64,
    pub size: f64,
    pub mc_se: f64,
    /// |size − α| ≤ 4 binomial SE (F cutoff: size ≤ α + 4 SE).
    pub within_4se: bool,
}

/// Empirical size of every method under the strong null (β = 0, τ = 0).
/// Null Wald statistics do not depend on allele frequency or study size
/// scale, so replicates draw standard normal estimates with unit variances
/// scaled by 1/nₛ.
pub fn null_size_check(
    designs: &[StudyDesign],
    methods: &[PowerMethod],
    alpha_levels: &[f64],
    nsim: u64,
    seed: u64,
    correction: ListCorrection,
    tail: StoufferTail,
) -> Result<Vec<SizeRow>> {
    if designs.is_empty() {
        return Err(Error::invalid("studies", "at least one study is required"));
    }
    if nsim < 1 {
        return Err(Error::invalid("nsim", "need at least one replicate"));
    }
    if let Some(a) = alpha_levels.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::invalid("alpha_levels", format!("levels must lie in (0, 1), got {a}")));
    }
    let s = designs.len();
    let cutoffs: Vec<Cutoffs> =
        alpha_levels.iter().map(|&a| Cutoffs::new(a, s, correction, tail)).collect::<Result<_>>()?;
    let var: Vec<f64> = designs.iter().map(|d| 1.0 / d.n_cases as f64).collect();
    let n_chunks = nsim.div_ceil(SIM_CHUNK);
    let per_chunk: Vec<Vec<u64>> = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let len = SIM_CHUNK.min(nsim - k * SIM_CHUNK);
            let mut rng = RngStream::new(seed, stream_id(k, 1));
            let mut counts = vec![0u64; methods.len() * cutoffs.len()];
            let mut b = vec![0.0; s];
            for _ in 0..len {
                for (bs, v) in b.iter_mut().zip(&var) {
                    *bs = v.sqrt() * rng.normal();
                }
                for (mi, &m) in methods.iter().enumerate() {
                    for (ai, c) in cutoffs.iter().enumerate() {
                        counts[mi * cutoffs.len() + ai] += u64::from(c.rejects(m, &b, &var));
                    }
                }
            }
            counts
        })
        .collect();
    let n = nsim as f64;
    let mut rows = Vec::new();
    for (mi, &method) in methods.iter().enumerate() {
        for (ai, &alpha) in alpha_levels.iter().enumerate() {
            let hits: u64 = per_chunk.iter().map(|c| c[mi * cutoffs.len() + ai]).sum();
            let size = hits as f64 / n;
            let se = (alpha * (1.0 - alpha) / n).sqrt();
            let within_4se = if method == PowerMethod::MetaRandomF {
                size <= alpha + 4.0 * se
            } else {
                (size - alpha).abs() <= 4.0 * se
            };
            rows.push(SizeRow { method, alpha, size, mc_se: se, within_4se });
        }
    }
    Ok(rows)
}
