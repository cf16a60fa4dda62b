//! Scenario files: strict JSON parsing, defaults, and conversion into the
//! engine scenario types.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use gwascombine_core::dp::{default_dp_methods, DpScenario, SimMode, DEFAULT_CALIBRATION_DRAWS};
use gwascombine_core::genmodel::{load_frequencies, AlleleFrequencySource, EffectModel, FrequencyBounds, StudyDesign};
use gwascombine_core::power::{
    default_or_grid, ListCorrection, PowerMethod, PowerScenario, RandomMetaCutoff, StoufferTail,
    DEFAULT_QUADRATURE_NODES, DEFAULT_SUM_WALD_DRAWS,
};
use gwascombine_core::{Error as CoreError, Method};

use crate::error::{CliError, Diagnostic};

/// Marker identifying a run manifest, which can be fed back as a scenario.
pub const MANIFEST_FORMAT: &str = "gwascombine-manifest";

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_ALPHA: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Dp,
    Power,
    NullSize,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Dp => "dp",
            Kind::Power => "power",
            Kind::NullSize => "null_size",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CasesSpec {
    Each(u32),
    List(Vec<u32>),
}

/// `{"count": 5, "n_cases": 400}` or `{"n_cases": [400, 300]}`; every study
/// has as many controls as cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudiesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    pub n_cases: CasesSpec,
}

impl StudiesSpec {
    fn designs(&self, field: &str) -> Result<Vec<StudyDesign>, (String, String)> {
        let sizes = match (&self.n_cases, self.count) {
            (CasesSpec::Each(n), Some(count)) => vec![*n; count],
            (CasesSpec::Each(_), None) => {
                return Err((format!("{field}.count"), "a single n_cases needs a study count".into()))
            }
            (CasesSpec::List(list), Some(count)) if count != list.len() => {
                return Err((
                    format!("{field}.count"),
                    format!("count {count} disagrees with {} listed study sizes", list.len()),
                ))
            }
            (CasesSpec::List(list), _) => list.clone(),
        };
        if sizes.is_empty() {
            return Err((field.to_string(), "at least one study is required".into()));
        }
        sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                StudyDesign::new(n, format!("s{}", i + 1)).map_err(|e| (format!("{field}.n_cases"), core_message(&e)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Fixed,
    Random,
}

/// Effect of a disease SNP. DP scenarios give exactly one of `beta` or
/// `odds_ratio`; power scenarios take the effect from the odds-ratio grid and
/// give neither.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectSpec {
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub odds_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

impl EffectSpec {
    fn model(&self, needs_beta: bool) -> Result<EffectModel<f64>, (String, String)> {
        let beta = match (self.beta, self.odds_ratio, needs_beta) {
            (Some(_), Some(_), _) => return Err(("effect".into(), "give either beta or odds_ratio, not both".into())),
            (Some(b), None, true) => b,
            (None, Some(or), true) if or > 0.0 => or.ln(),
            (None, Some(or), true) => return Err(("effect.odds_ratio".into(), format!("must be positive, got {or}"))),
            (None, None, true) => return Err(("effect".into(), "beta or odds_ratio is required".into())),
            (None, None, false) => 0.0,
            (_, _, false) => {
                return Err(("effect".into(), "the odds ratio comes from or_grid; remove beta/odds_ratio".into()))
            }
        };
        match (self.variant, self.tau) {
            (Variant::Fixed, Some(_)) => {
                Err(("effect.tau".into(), "tau is only allowed with variant \"random\"".into()))
            }
            (Variant::Fixed, None) => Ok(EffectModel::FixedEffect { beta }),
            (Variant::Random, Some(tau)) => Ok(EffectModel::RandomEffect { beta, tau }),
            (Variant::Random, None) => Err(("effect.tau".into(), "variant \"random\" needs tau".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyKind {
    Fixed,
    Uniform,
    Empirical,
}

/// Minor-allele frequency law: `fixed` (eta), `uniform` (lo, hi), or
/// `empirical` (inline `values`, or a `path` with optional `min`/`max`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySpec {
    pub kind: FrequencyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Default for FrequencySpec {
    fn default() -> Self {
        Self {
            kind: FrequencyKind::Uniform,
            eta: None,
            lo: Some(0.05),
            hi: Some(0.5),
            values: None,
            path: None,
            min: None,
            max: None,
        }
    }
}

impl FrequencySpec {
    fn check_fields(&self, allowed: &[&str]) -> Result<(), (String, String)> {
        let present = [
            ("eta", self.eta.is_some()),
            ("lo", self.lo.is_some()),
            ("hi", self.hi.is_some()),
            ("values", self.values.is_some()),
            ("path", self.path.is_some()),
            ("min", self.min.is_some()),
            ("max", self.max.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                return Err((format!("frequencies.{name}"), format!("not used by kind {:?}", self.kind)));
            }
        }
        Ok(())
    }

    fn source(&self, base: &Path) -> Result<AlleleFrequencySource, (String, String)> {
        let need = |v: Option<f64>, name: &str| v.ok_or((format!("frequencies.{name}"), "required".to_string()));
        match self.kind {
            FrequencyKind::Fixed => {
                self.check_fields(&["eta"])?;
                Ok(AlleleFrequencySource::Fixed { eta: need(self.eta, "eta")? })
            }
            FrequencyKind::Uniform => {
                self.check_fields(&["lo", "hi"])?;
                Ok(AlleleFrequencySource::Uniform { lo: need(self.lo, "lo")?, hi: need(self.hi, "hi")? })
            }
            FrequencyKind::Empirical => {
                self.check_fields(&["values", "path", "min", "max"])?;
                let frequencies = match (&self.values, &self.path) {
                    (Some(v), None) => v.clone(),
                    (None, Some(p)) => {
                        let defaults = FrequencyBounds::default();
                        let bounds = FrequencyBounds {
                            min: self.min.unwrap_or(defaults.min),
                            max: self.max.unwrap_or(defaults.max),
                        };
                        load_frequencies(&base.join(p), bounds).map_err(|e| invalid_parts(&e))?
                    }
                    _ => return Err(("frequencies".into(), "give exactly one of values or path".into())),
                };
                Ok(AlleleFrequencySource::Empirical { frequencies })
            }
        }
    }

    /// Same law with relative paths made absolute against `base`.
    fn anchored(&self, base: &Path) -> Self {
        let mut out = self.clone();
        if let Some(p) = &self.path {
            let joined = base.join(p);
            out.path = Some(std::fs::canonicalize(&joined).unwrap_or(joined));
        }
        out
    }
}

/// A list of odds ratios or an inclusive `{from, to, step}` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range(RangeSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl GridSpec {
    fn values(&self) -> Result<Vec<f64>, (String, String)> {
        match self {
            GridSpec::List(v) => Ok(v.clone()),
            GridSpec::Range(RangeSpec { from, to, step }) => {
                if !(*step > 0.0) || !(to >= from) || !from.is_finite() || !to.is_finite() {
                    return Err(("or_grid".into(), "range needs from <= to and step > 0".into()));
                }
                let n = ((to - from) / step + 1e-9).floor() as usize;
                if n > u16::MAX as usize {
                    return Err(("or_grid".into(), "range has too many points".into()));
                }
                // Rounded to 12 digits so 1.0 + 0.05 k prints as written.
                Ok((0..=n).map(|k| ((from + step * k as f64) * 1e12).round() / 1e12).collect())
            }
        }
    }
}

/// One study configuration in a power or size scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub name: String,
    pub studies: StudiesSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpSpec {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub studies: StudiesSpec,
    pub effect: EffectSpec,
    #[serde(default)]
    pub frequencies: Option<FrequencySpec>,
    pub n_snps: usize,
    pub n_disease: usize,
    pub t_list: Vec<usize>,
    pub nsim: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub mode: Option<SimMode>,
    #[serde(default)]
    pub methods: Option<Vec<String>>,
    #[serde(default)]
    pub null_calibration_draws: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSpec {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub designs: Vec<DesignSpec>,
    pub effect: EffectSpec,
    pub eta: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub or_grid: Option<GridSpec>,
    pub nsim: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub methods: Option<Vec<String>>,
    #[serde(default)]
    pub random_meta_cutoff: Option<RandomMetaCutoff>,
    #[serde(default)]
    pub list_correction: Option<ListCorrection>,
    #[serde(default)]
    pub stouffer_tail: Option<StoufferTail>,
    #[serde(default)]
    pub sum_wald_draws: Option<usize>,
    #[serde(default)]
    pub quadrature_nodes: Option<usize>,
    #[serde(default)]
    pub analytic_only: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullSizeSpec {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub designs: Vec<DesignSpec>,
    #[serde(default)]
    pub alpha_levels: Option<Vec<f64>>,
    pub nsim: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub methods: Option<Vec<String>>,
    #[serde(default)]
    pub random_meta_cutoff: Option<RandomMetaCutoff>,
    #[serde(default)]
    pub list_correction: Option<ListCorrection>,
    #[serde(default)]
    pub stouffer_tail: Option<StoufferTail>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSpec {
    Dp(DpSpec),
    Power(PowerSpec),
    NullSize(NullSizeSpec),
}

/// Engine inputs for a null-size run: one entry per design.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSizeScenario {
    pub designs: Vec<(String, Vec<StudyDesign>)>,
    pub methods: Vec<PowerMethod>,
    pub alpha_levels: Vec<f64>,
    pub nsim: u64,
    pub seed: u64,
    pub list_correction: ListCorrection,
    pub stouffer_tail: StoufferTail,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Resolved {
    Dp(DpScenario),
    /// One engine scenario per named design.
    Power(Vec<(String, PowerScenario)>),
    NullSize(NullSizeScenario),
}

/// A parsed scenario, still tied to its file for diagnostics.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub path: PathBuf,
    text: Option<String>,
    pub spec: ScenarioSpec,
}

fn core_message(e: &CoreError) -> String {
    match e {
        CoreError::Invalid { message, .. } => message.clone(),
        other => other.to_string(),
    }
}

fn invalid_parts(e: &CoreError) -> (String, String) {
    match e {
        CoreError::Invalid { field, message } => (field.clone(), message.clone()),
        other => ("scenario".into(), other.to_string()),
    }
}

/// Line of the first `"key"` occurrence for the leading key of `field`.
fn line_of_field(text: &str, field: &str) -> Option<usize> {
    let key = field.split(['.', '[']).next().filter(|k| !k.is_empty())?;
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

impl LoadedScenario {
    pub fn kind(&self) -> Kind {
        match &self.spec {
            ScenarioSpec::Dp(_) => Kind::Dp,
            ScenarioSpec::Power(_) => Kind::Power,
            ScenarioSpec::NullSize(_) => Kind::NullSize,
        }
    }

    pub fn base_dir(&self) -> PathBuf {
        self.path.parent().map(Path::to_path_buf).unwrap_or_default()
    }

    fn diag(&self, field: impl Into<String>, message: impl Into<String>) -> CliError {
        let field = field.into();
        CliError::Scenario(Diagnostic {
            file: self.path.clone(),
            line: self.text.as_deref().and_then(|t| line_of_field(t, &field)),
            column: None,
            field: Some(field),
            message: message.into(),
        })
    }

    fn diag_parts(&self, (field, message): (String, String)) -> CliError {
        self.diag(field, message)
    }

    pub fn set_seed(&mut self, seed: u64) {
        match &mut self.spec {
            ScenarioSpec::Dp(s) => s.seed = Some(seed),
            ScenarioSpec::Power(s) => s.seed = Some(seed),
            ScenarioSpec::NullSize(s) => s.seed = Some(seed),
        }
    }

    /// Only DP scenarios have a simulation mode; returns false otherwise.
    pub fn set_mode(&mut self, mode: SimMode) -> bool {
        match &mut self.spec {
            ScenarioSpec::Dp(s) => {
                s.mode = Some(mode);
                true
            }
            _ => false,
        }
    }

    /// The scenario with every default written out.
    pub fn resolved_spec(&self) -> ScenarioSpec {
        let base = self.base_dir();
        match &self.spec {
            ScenarioSpec::Dp(s) => {
                let mut s = s.clone();
                s.seed = Some(s.seed.unwrap_or(DEFAULT_SEED));
                s.mode = Some(s.mode.unwrap_or_default());
                s.frequencies = Some(s.frequencies.clone().unwrap_or_default().anchored(&base));
                s.methods =
                    Some(s.methods.clone().unwrap_or_else(|| names(default_dp_methods().iter().map(|m| m.name()))));
                s.null_calibration_draws = Some(s.null_calibration_draws.unwrap_or(DEFAULT_CALIBRATION_DRAWS));
                ScenarioSpec::Dp(s)
            }
            ScenarioSpec::Power(s) => {
                let mut s = s.clone();
                s.alpha = Some(s.alpha.unwrap_or(DEFAULT_ALPHA));
                s.or_grid = Some(match &s.or_grid {
                    Some(g) => GridSpec::List(g.values().unwrap_or_default()),
                    None => GridSpec::List(default_or_grid()),
                });
                s.seed = Some(s.seed.unwrap_or(DEFAULT_SEED));
                s.methods = Some(s.methods.clone().unwrap_or_else(default_power_method_names));
                s.random_meta_cutoff = Some(s.random_meta_cutoff.unwrap_or_default());
                s.list_correction = Some(s.list_correction.unwrap_or_default());
                s.stouffer_tail = Some(s.stouffer_tail.unwrap_or_default());
                s.sum_wald_draws = Some(s.sum_wald_draws.unwrap_or(DEFAULT_SUM_WALD_DRAWS));
                s.quadrature_nodes = Some(s.quadrature_nodes.unwrap_or(DEFAULT_QUADRATURE_NODES));
                s.analytic_only = Some(s.analytic_only.unwrap_or(false));
                ScenarioSpec::Power(s)
            }
            ScenarioSpec::NullSize(s) => {
                let mut s = s.clone();
                s.alpha_levels = Some(s.alpha_levels.clone().unwrap_or_else(|| vec![0.1, 0.01]));
                s.seed = Some(s.seed.unwrap_or(DEFAULT_SEED));
                s.methods = Some(s.methods.clone().unwrap_or_else(default_power_method_names));
                s.random_meta_cutoff = Some(s.random_meta_cutoff.unwrap_or_default());
                s.list_correction = Some(s.list_correction.unwrap_or_default());
                s.stouffer_tail = Some(s.stouffer_tail.unwrap_or_default());
                ScenarioSpec::NullSize(s)
            }
        }
    }

    /// Builds and validates the engine scenario.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let base = self.base_dir();
        match &self.spec {
            ScenarioSpec::Dp(s) => self.resolve_dp(s, &base).map(Resolved::Dp),
            ScenarioSpec::Power(s) => self.resolve_power(s).map(Resolved::Power),
            ScenarioSpec::NullSize(s) => self.resolve_null_size(s).map(Resolved::NullSize),
        }
    }

    fn resolve_dp(&self, s: &DpSpec, base: &Path) -> Result<DpScenario, CliError> {
        let designs = s.studies.designs("studies").map_err(|p| self.diag_parts(p))?;
        let effect = s.effect.model(true).map_err(|p| self.diag_parts(p))?;
        let freq_source = s.frequencies.clone().unwrap_or_default().source(base).map_err(|p| self.diag_parts(p))?;
        let methods = match &s.methods {
            None => default_dp_methods(),
            Some(list) => list
                .iter()
                .enumerate()
                .map(|(i, name)| {
                    Method::parse(name).ok_or_else(|| {
                        self.diag(
                            format!("methods[{i}]"),
                            format!(
                                "unknown method {name:?}; expected one of {}",
                                names(Method::ALL.iter().map(|m| m.name())).join(", ")
                            ),
                        )
                    })
                })
                .collect::<Result<_, _>>()?,
        };
        let scenario = DpScenario {
            designs,
            effect,
            freq_source,
            n_snps: s.n_snps,
            n_disease: s.n_disease,
            t_list: s.t_list.clone(),
            nsim: s.nsim,
            seed: s.seed.unwrap_or(DEFAULT_SEED),
            sim_mode: s.mode.unwrap_or_default(),
            methods,
            null_calibration_draws: s.null_calibration_draws.unwrap_or(DEFAULT_CALIBRATION_DRAWS),
        };
        scenario.validate().map_err(|e| self.diag_parts(invalid_parts(&e)))?;
        Ok(scenario)
    }

    fn power_methods(
        &self,
        list: &Option<Vec<String>>,
        cutoff: RandomMetaCutoff,
    ) -> Result<Vec<PowerMethod>, CliError> {
        let list = list.clone().unwrap_or_else(default_power_method_names);
        let mut out: Vec<PowerMethod> = Vec::new();
        for (i, name) in list.iter().enumerate() {
            let m = PowerMethod::parse(name, cutoff).ok_or_else(|| {
                self.diag(
                    format!("methods[{i}]"),
                    format!(
                        "unknown method {name:?}; expected meta_random or one of {}",
                        names(PowerMethod::ALL.iter().map(|m| m.name())).join(", ")
                    ),
                )
            })?;
            if out.contains(&m) {
                return Err(self.diag(format!("methods[{i}]"), format!("{m} listed twice")));
            }
            out.push(m);
        }
        if out.is_empty() {
            return Err(self.diag("methods", "at least one method is required"));
        }
        Ok(out)
    }

    fn designs(&self, list: &[DesignSpec]) -> Result<Vec<(String, Vec<StudyDesign>)>, CliError> {
        if list.is_empty() {
            return Err(self.diag("designs", "at least one design is required"));
        }
        let mut out: Vec<(String, Vec<StudyDesign>)> = Vec::new();
        for (i, d) in list.iter().enumerate() {
            if out.iter().any(|(n, _)| *n == d.name) {
                return Err(self.diag(format!("designs[{i}].name"), format!("duplicate design name {:?}", d.name)));
            }
            let designs = d.studies.designs(&format!("designs[{i}].studies")).map_err(|p| self.diag_parts(p))?;
            out.push((d.name.clone(), designs));
        }
        Ok(out)
    }

    fn resolve_power(&self, s: &PowerSpec) -> Result<Vec<(String, PowerScenario)>, CliError> {
        let effect = s.effect.model(false).map_err(|p| self.diag_parts(p))?;
        let cutoff = s.random_meta_cutoff.unwrap_or_default();
        let methods = self.power_methods(&s.methods, cutoff)?;
        let or_grid = match &s.or_grid {
            Some(g) => g.values().map_err(|p| self.diag_parts(p))?,
            None => default_or_grid(),
        };
        self.designs(&s.designs)?
            .into_iter()
            .enumerate()
            .map(|(i, (name, designs))| {
                let sc = PowerScenario {
                    designs,
                    effect,
                    eta: s.eta,
                    alpha: s.alpha.unwrap_or(DEFAULT_ALPHA),
                    or_grid: or_grid.clone(),
                    nsim: s.nsim,
                    seed: s.seed.unwrap_or(DEFAULT_SEED),
                    methods: methods.clone(),
                    list_correction: s.list_correction.unwrap_or_default(),
                    stouffer_tail: s.stouffer_tail.unwrap_or_default(),
                    sum_wald_draws: s.sum_wald_draws.unwrap_or(DEFAULT_SUM_WALD_DRAWS),
                    quadrature_nodes: s.quadrature_nodes.unwrap_or(DEFAULT_QUADRATURE_NODES),
                    analytic_only: s.analytic_only.unwrap_or(false),
                };
                sc.validate().map_err(|e| {
                    let (field, message) = invalid_parts(&e);
                    let field = if field == "methods" { format!("designs[{i}] methods") } else { field };
                    self.diag(field, message)
                })?;
                Ok((name, sc))
            })
            .collect()
    }

    fn resolve_null_size(&self, s: &NullSizeSpec) -> Result<NullSizeScenario, CliError> {
        let methods = self.power_methods(&s.methods, s.random_meta_cutoff.unwrap_or_default())?;
        let designs = self.designs(&s.designs)?;
        let alpha_levels = s.alpha_levels.clone().unwrap_or_else(|| vec![0.1, 0.01]);
        if alpha_levels.is_empty() {
            return Err(self.diag("alpha_levels", "at least one level is required"));
        }
        if let Some((i, a)) = alpha_levels.iter().enumerate().find(|(_, a)| !(**a > 0.0 && **a < 1.0)) {
            return Err(self.diag(format!("alpha_levels[{i}]"), format!("must lie in (0, 1), got {a}")));
        }
        if s.nsim < 1 {
            return Err(self.diag("nsim", "need at least one replicate"));
        }
        if methods.contains(&PowerMethod::MetaRandomF) {
            if let Some((name, _)) = designs.iter().find(|(_, d)| d.len() < 2) {
                return Err(
                    self.diag("methods", format!("the F cutoff needs at least two studies; design {name:?} has one"))
                );
            }
        }
        Ok(NullSizeScenario {
            designs,
            methods,
            alpha_levels,
            nsim: s.nsim,
            seed: s.seed.unwrap_or(DEFAULT_SEED),
            list_correction: s.list_correction.unwrap_or_default(),
            stouffer_tail: s.stouffer_tail.unwrap_or_default(),
        })
    }
}

fn names<'a>(it: impl Iterator<Item = &'a str>) -> Vec<String> {
    it.map(str::to_string).collect()
}

fn default_power_method_names() -> Vec<String> {
    names(PowerMethod::ALL.iter().map(|m| m.name()))
}

impl ScenarioSpec {
    pub fn to_value(&self) -> Value {
        let v = match self {
            ScenarioSpec::Dp(s) => serde_json::to_value(s),
            ScenarioSpec::Power(s) => serde_json::to_value(s),
            ScenarioSpec::NullSize(s) => serde_json::to_value(s),
        };
        v.expect("scenario types serialize")
    }
}

fn json_diag(path: &Path, e: &serde_json::Error) -> CliError {
    let line = e.line();
    CliError::Scenario(Diagnostic {
        file: path.to_path_buf(),
        line: (line > 0).then_some(line),
        column: (line > 0).then_some(e.column()),
        field: None,
        message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
    })
}

fn plain_diag(path: &Path, field: Option<&str>, message: impl Into<String>) -> CliError {
    CliError::Scenario(Diagnostic {
        file: path.to_path_buf(),
        line: None,
        column: None,
        field: field.map(str::to_string),
        message: message.into(),
    })
}

fn kind_of(path: &Path, v: &Value) -> Result<Kind, CliError> {
    let kind =
        v.get("kind").ok_or_else(|| plain_diag(path, Some("kind"), "missing; expected dp, power or null_size"))?;
    serde_json::from_value(kind.clone())
        .map_err(|_| plain_diag(path, Some("kind"), format!("unknown kind {kind}; expected dp, power or null_size")))
}

fn spec_from_str(path: &Path, kind: Kind, text: &str) -> Result<ScenarioSpec, CliError> {
    let r = match kind {
        Kind::Dp => serde_json::from_str(text).map(ScenarioSpec::Dp),
        Kind::Power => serde_json::from_str(text).map(ScenarioSpec::Power),
        Kind::NullSize => serde_json::from_str(text).map(ScenarioSpec::NullSize),
    };
    r.map_err(|e| json_diag(path, &e))
}

/// Parses scenario text. A run manifest is accepted in place of a scenario
/// and yields the scenario it recorded.
pub fn parse_scenario(path: &Path, text: &str) -> Result<LoadedScenario, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| json_diag(path, &e))?;
    if !value.is_object() {
        return Err(plain_diag(path, None, "expected a JSON object at the top level"));
    }
    if value.get("format").and_then(Value::as_str) == Some(MANIFEST_FORMAT) {
        let inner =
            value.get("scenario").ok_or_else(|| plain_diag(path, Some("scenario"), "manifest has no scenario"))?;
        let kind = kind_of(path, inner)?;
        let inner_text = serde_json::to_string_pretty(inner).expect("value serializes");
        let spec = spec_from_str(path, kind, &inner_text)?;
        return Ok(LoadedScenario { path: path.to_path_buf(), text: None, spec });
    }
    let kind = kind_of(path, &value)?;
    let spec = spec_from_str(path, kind, text)?;
    Ok(LoadedScenario { path: path.to_path_buf(), text: Some(text.to_string()), spec })
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scenario(path, &text)
}
