//! Detection probability (DP) and proportion positive (PP) of a top-T
//! follow-up rule, by genome-scale Monte Carlo and by analytic approximation.

mod analytic;
mod calibration;
mod engine;

use serde::{Deserialize, Serialize};

use crate::combine::Method;
use crate::error::{Error, Result};
use crate::genmodel::{AlleleFrequencySource, EffectModel, StudyDesign};

pub use analytic::{
    dp_analytic, dp_analytic_combined_list, dp_analytic_df, dp_analytic_one_df, expected_studies_selecting,
};
pub use calibration::NullCalibration;
pub use engine::{run_dp, simulate_replicate, DpEngine, ReplicateOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// Every null Wald statistic is drawn and ranked.
    #[default]
    Full,
    /// Only disease SNPs are drawn; null exceedances come from binomial counts.
    Fast,
}

pub const DEFAULT_CALIBRATION_DRAWS: usize = 10_000_000;

/// Largest study count the stream layout supports.
pub const MAX_STUDIES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpScenario {
    pub designs: Vec<StudyDesign>,
    pub effect: EffectModel<f64>,
    pub freq_source: AlleleFrequencySource,
    /// N, total SNPs.
    pub n_snps: usize,
    /// M, disease SNPs.
    pub n_disease: usize,
    pub t_list: Vec<usize>,
    pub nsim: u64,
    pub seed: u64,
    pub sim_mode: SimMode,
    pub methods: Vec<Method>,
    /// Null draws used to calibrate the random-effects statistic in fast mode.
    pub null_calibration_draws: usize,
}

impl DpScenario {
    pub fn validate(&self) -> Result<()> {
        let s = self.designs.len();
        if s == 0 {
            return Err(Error::invalid("studies", "at least one study is required"));
        }
        if s > MAX_STUDIES {
            return Err(Error::invalid("studies", format!("at most {MAX_STUDIES} studies are supported")));
        }
        for d in &self.designs {
            d.validate()?;
        }
        self.effect.validate()?;
        self.freq_source.validate()?;
        if self.n_snps > u32::MAX as usize {
            return Err(Error::invalid("n_snps", format!("at most {} SNPs are supported", u32::MAX)));
        }
        if self.n_disease < 1 || self.n_disease >= self.n_snps {
            return Err(Error::invalid(
                "n_disease",
                format!("need 1 <= M < N, got M = {} and N = {}", self.n_disease, self.n_snps),
            ));
        }
        if self.t_list.is_empty() {
            return Err(Error::invalid("t_list", "at least one selection size is required"));
        }
        for (i, &t) in self.t_list.iter().enumerate() {
            if t < s {
                return Err(Error::invalid(
                    format!("t_list[{i}]"),
                    format!("T = {t} is below the study count S = {s}; the combined list needs T >= S so every study keeps at least one SNP"),
                ));
            }
            if t > self.n_snps {
                return Err(Error::invalid(format!("t_list[{i}]"), format!("T = {t} exceeds N = {}", self.n_snps)));
            }
        }
        if self.nsim < 1 {
            return Err(Error::invalid("nsim", "need at least one replicate"));
        }
        if self.nsim >= 1 << 48 {
            return Err(Error::invalid("nsim", "too many replicates"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("methods", "at least one method is required"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::invalid("methods", format!("{m} listed twice")));
            }
        }
        if self.sim_mode == SimMode::Fast
            && self.methods.contains(&Method::MetaRandom)
            && self.null_calibration_draws < calibration::MIN_DRAWS
        {
            return Err(Error::invalid(
                "null_calibration_draws",
                format!("need at least {} draws", calibration::MIN_DRAWS),
            ));
        }
        Ok(())
    }

    pub fn n_studies(&self) -> usize {
        self.designs.len()
    }
}

/// Methods in the order the DP tables list them.
pub fn default_dp_methods() -> Vec<Method> {
    vec![Method::CombinedList, Method::MetaFixed, Method::MetaRandom, Method::SumWald, Method::Fisher]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpRow {
    pub method: Method,
    pub t: usize,
    /// Detection probability as a fraction.
    pub dp: f64,
    /// Proportion positive as a fraction.
    pub pp: f64,
    /// Mean size of the union of per-study lists (combined list only).
    pub avg_tc: Option<f64>,
    /// Binomial standard error of `dp`.
    pub mc_se: f64,
    /// Disease-SNP selections summed over replicates.
    pub hits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpReport {
    pub nsim: u64,
    pub n_disease: usize,
    pub n_snps: usize,
    pub rows: Vec<DpRow>,
}

impl DpReport {
    pub fn row(&self, method: Method, t: usize) -> Option<&DpRow> {
        self.rows.iter().find(|r| r.method == method && r.t == t)
    }
}
