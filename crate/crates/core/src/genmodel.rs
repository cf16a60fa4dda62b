//! Genetic model: allele frequencies, Hardy–Weinberg genotype laws, case and
//! control genotype distributions under the per-allele logistic model, and
//! the variance of the log-odds-ratio estimate from the expected Fisher
//! information of the prospective likelihood.
//!
//! With equal numbers of cases and controls and the rare-disease exponential
//! tilt `f_x ∝ g_x e^{βx}`, the intercept that balances the expected case
//! fraction at one half is `μ* = −ln Σ_x g_x e^{βx}`, and then
//! `p_x = expit(μ* + βx) = f_x / (f_x + g_x)` exactly.

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::statdist::RngStream;

/// Minor-allele frequency η drawn for each SNP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AlleleFrequencySource {
    Fixed { eta: f64 },
    Uniform { lo: f64, hi: f64 },
    Empirical { frequencies: Vec<f64> },
}

impl Default for AlleleFrequencySource {
    fn default() -> Self {
        AlleleFrequencySource::Uniform { lo: 0.05, hi: 0.5 }
    }
}

fn in_open_unit(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

impl AlleleFrequencySource {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Fixed { eta } if !in_open_unit(*eta) => {
                Err(Error::invalid("frequencies.eta", format!("must lie in (0, 1), got {eta}")))
            }
            Self::Uniform { lo, hi } if !(in_open_unit(*lo) && in_open_unit(*hi) && lo < hi) => {
                Err(Error::invalid("frequencies", format!("uniform bounds need 0 < lo < hi < 1, got ({lo}, {hi})")))
            }
            Self::Empirical { frequencies } if frequencies.is_empty() => {
                Err(Error::invalid("frequencies", "empirical frequency list is empty"))
            }
            Self::Empirical { frequencies } => match frequencies.iter().find(|f| !in_open_unit(**f)) {
                Some(bad) => Err(Error::invalid("frequencies", format!("frequency {bad} outside (0, 1)"))),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            Self::Fixed { eta } => *eta,
            Self::Uniform { lo, hi } => lo + (hi - lo) * rng.uniform(),
            Self::Empirical { frequencies } => {
                let i = ((rng.uniform() * frequencies.len() as f64) as usize).min(frequencies.len() - 1);
                frequencies[i]
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Fixed { eta } => *eta,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::Empirical { frequencies } => frequencies.iter().sum::<f64>() / frequencies.len() as f64,
        }
    }
}

/// Accepted range for frequencies read from an empirical file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for FrequencyBounds {
    fn default() -> Self {
        Self { min: 0.01, max: 0.99 }
    }
}

/// Reads one frequency per line; `#` starts a comment, blank lines are skipped.
pub fn read_frequencies(reader: impl BufRead, bounds: FrequencyBounds) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::invalid("frequencies.path", e.to_string()))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let field = format!("frequencies line {}", lineno + 1);
        let v: f64 = body.parse().map_err(|_| Error::invalid(&field, format!("not a number: {body:?}")))?;
        if !(v >= bounds.min && v <= bounds.max && in_open_unit(v)) {
            return Err(Error::invalid(
                field,
                format!("frequency {v} outside accepted range [{}, {}]", bounds.min, bounds.max),
            ));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::invalid("frequencies.path", "file contains no frequencies"));
    }
    Ok(out)
}

pub fn load_frequencies(path: &Path, bounds: FrequencyBounds) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::invalid("frequencies.path", format!("{}: {e}", path.display())))?;
    read_frequencies(std::io::BufReader::new(file), bounds)
}

/// One study with `n_cases` cases and as many controls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyDesign {
    pub n_cases: u32,
    pub label: String,
}

impl StudyDesign {
    pub fn new(n_cases: u32, label: impl Into<String>) -> Result<Self> {
        let design = Self { n_cases, label: label.into() };
        design.validate()?;
        Ok(design)
    }

    /// `count` studies of equal size labelled `s1..s{count}`.
    pub fn equal(count: usize, n_cases: u32) -> Result<Vec<Self>> {
        (1..=count).map(|i| Self::new(n_cases, format!("s{i}"))).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cases < 2 {
            return Err(Error::invalid(
                format!("studies[{}].n_cases", self.label),
                format!("need at least 2 cases, got {}", self.n_cases),
            ));
        }
        Ok(())
    }
}

/// Log-odds ratio of a disease SNP across studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EffectModel<R> {
    FixedEffect {
        beta: R,
    },
    /// βˢ ~ N(beta, tau²) independently per study.
    RandomEffect {
        beta: R,
        tau: R,
    },
}

impl<R: Real> EffectModel<R> {
    pub fn beta(&self) -> R {
        match *self {
            Self::FixedEffect { beta } | Self::RandomEffect { beta, .. } => beta,
        }
    }

    pub fn tau(&self) -> R {
        match *self {
            Self::FixedEffect { .. } => R::zero(),
            Self::RandomEffect { tau, .. } => tau,
        }
    }

    pub fn with_beta(self, beta: R) -> Self {
        match self {
            Self::FixedEffect { .. } => Self::FixedEffect { beta },
            Self::RandomEffect { tau, .. } => Self::RandomEffect { beta, tau },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta().is_finite() {
            return Err(Error::invalid("effect.beta", "must be finite"));
        }
        let tau = self.tau();
        if !(tau >= R::zero()) || !tau.is_finite() {
            return Err(Error::invalid("effect.tau", format!("must be finite and >= 0, got {tau}")));
        }
        Ok(())
    }
}

impl EffectModel<f64> {
    /// Draws the study-level log-odds ratio βˢ.
    #[inline]
    pub fn draw_study_beta(&self, rng: &mut RngStream) -> f64 {
        match *self {
            Self::FixedEffect { beta } => beta,
            Self::RandomEffect { beta, tau } => beta + tau * rng.normal(),
        }
    }
}

/// Probabilities of 0, 1 and 2 minor alleles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenotypeDist<R> {
    pub probs: [R; 3],
}

impl<R: Real> GenotypeDist<R> {
    pub fn new(probs: [R; 3]) -> Result<Self> {
        let sum = probs[0] + probs[1] + probs[2];
        if probs.iter().any(|p| !(*p >= R::zero() && *p <= R::one()))
            || (sum - R::one()).abs() > R::c(1e-12).max(R::epsilon() * R::c(8.0))
        {
            return Err(Error::domain(format!("genotype probabilities must be in [0,1] and sum to 1, got {probs:?}")));
        }
        Ok(Self { probs })
    }

    /// Expected minor-allele count, E[X].
    pub fn mean_count(&self) -> R {
        self.probs[1] + R::c(2.0) * self.probs[2]
    }
}

fn check_eta<R: Real>(eta: R) -> Result<()> {
    if eta > R::zero() && eta < R::one() {
        Ok(())
    } else {
        Err(Error::domain(format!("allele frequency must lie in (0, 1), got {eta}")))
    }
}

/// Hardy–Weinberg genotype distribution ((1−η)², 2η(1−η), η²).
pub fn hwe_genotype_dist<R: Real>(eta: R) -> Result<GenotypeDist<R>> {
    check_eta(eta)?;
    let q = R::one() - eta;
    Ok(GenotypeDist { probs: [q * q, R::c(2.0) * eta * q, eta * eta] })
}

/// Case and control genotype laws: controls follow HWE(η), cases the
/// rare-disease tilt `f_x ∝ g_x e^{βx}`.
pub fn case_control_dists<R: Real>(eta: R, beta: R) -> Result<(GenotypeDist<R>, GenotypeDist<R>)> {
    if !beta.is_finite() {
        return Err(Error::domain("log-odds ratio must be finite"));
    }
    let controls = hwe_genotype_dist(eta)?;
    let odds = [R::one(), beta.exp(), (R::c(2.0) * beta).exp()];
    let tilt = [controls.probs[0] * odds[0], controls.probs[1] * odds[1], controls.probs[2] * odds[2]];
    let total = tilt[0] + tilt[1] + tilt[2];
    let cases = GenotypeDist { probs: [tilt[0] / total, tilt[1] / total, tilt[2] / total] };
    Ok((cases, controls))
}

/// Per-study blocks of the expected information: `(I22, I21, I11)` for
/// (β, β), (β, μ*) and (μ*, μ*).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoEntries<R> {
    pub i22: R,
    pub i21: R,
    pub i11: R,
}

impl<R: Real> InfoEntries<R> {
    /// `I22 − I21² / I11`: the information for β after profiling out μ*.
    pub fn efficient_info(&self) -> R {
        self.i22 - self.i21 * self.i21 / self.i11
    }
}

#[inline]
fn expit<R: Real>(t: R) -> R {
    R::one() / (R::one() + (-t).exp())
}

pub fn info_matrix_study<R: Real>(
    design: &StudyDesign,
    cases: &GenotypeDist<R>,
    controls: &GenotypeDist<R>,
    mu_star: R,
    beta: R,
) -> InfoEntries<R> {
    let n = R::c(design.n_cases as f64);
    let mut out = InfoEntries { i22: R::zero(), i21: R::zero(), i11: R::zero() };
    for x in 0..3 {
        let xr = R::c(x as f64);
        let p = expit(mu_star + beta * xr);
        let w = n * (cases.probs[x] + controls.probs[x]) * p * (R::one() - p);
        out.i22 = out.i22 + w * xr * xr;
        out.i21 = out.i21 + w * xr;
        out.i11 = out.i11 + w;
    }
    out
}

/// μ* with expected case fraction ½ under the 1:1 design.
pub fn intercept_for_balance<R: Real>(eta: R, beta: R) -> Result<R> {
    let controls = hwe_genotype_dist(eta)?;
    let tilt = controls.probs[0] + controls.probs[1] * beta.exp() + controls.probs[2] * (R::c(2.0) * beta).exp();
    Ok(-tilt.ln())
}

fn study_info<R: Real>(design: &StudyDesign, eta: R, beta: R) -> Result<InfoEntries<R>> {
    if eta > R::zero() && eta < R::one() && eta * (R::one() - eta) < R::epsilon() {
        return Err(Error::Singular(format!("allele frequency {eta} is numerically monomorphic")));
    }
    let (cases, controls) = case_control_dists(eta, beta)?;
    let mu_star = intercept_for_balance(eta, beta)?;
    Ok(info_matrix_study(design, &cases, &controls, mu_star, beta))
}

fn invert_info<R: Real>(info: R) -> Result<R> {
    if info > R::zero() && info.is_finite() {
        let v = R::one() / info;
        if v.is_finite() {
            return Ok(v);
        }
    }
    Err(Error::Singular(format!("profiled information {info} is not positive")))
}

/// Asymptotic variance σ² of the per-allele log-odds-ratio estimate in one study.
pub fn var_single_study<R: Real>(design: &StudyDesign, eta: R, beta: R) -> Result<R> {
    let info = study_info(design, eta, beta)?;
    // Relative cancellation in I22 − I21²/I11 signals a (near-)monomorphic SNP.
    let eff = info.efficient_info();
    if eff <= info.i22 * R::epsilon() * R::c(64.0) {
        return Err(Error::Singular(format!("allele frequency {eta} leaves no information for beta")));
    }
    invert_info(eff)
}

/// Variance σ²_S of the common log-odds ratio fitted jointly to all studies
/// with study-specific intercepts. `etas` holds each study's frequency.
pub fn var_pooled<R: Real>(designs: &[StudyDesign], etas: &[R], beta: R) -> Result<R> {
    if designs.is_empty() {
        return Err(Error::Empty("var_pooled needs at least one study"));
    }
    if designs.len() != etas.len() {
        return Err(Error::domain(format!("{} studies but {} allele frequencies", designs.len(), etas.len())));
    }
    let mut total = R::zero();
    for (design, &eta) in designs.iter().zip(etas) {
        let info = study_info(design, eta, beta)?;
        total = total + info.efficient_info();
    }
    invert_info(total)
}
