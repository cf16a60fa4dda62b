use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use gwascombine_core::dp::{run_dp, SimMode};
use gwascombine_core::power::{null_size_check, run_power};

use crate::error::CliError;
use crate::report;
use crate::scenario::{load_scenario, Kind, LoadedScenario, Resolved, MANIFEST_FORMAT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Dp,
    Power,
    Validate,
    NullSize,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dp => "dp",
            Command::Power => "power",
            Command::Validate => "validate",
            Command::NullSize => "null-size",
        }
    }

    fn expects(self) -> Option<Kind> {
        match self {
            Command::Dp => Some(Kind::Dp),
            Command::Power => Some(Kind::Power),
            Command::NullSize => Some(Kind::NullSize),
            Command::Validate => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub scenario_path: PathBuf,
    pub out_dir: PathBuf,
    /// `None` lets the thread pool pick one worker per core.
    pub threads: Option<usize>,
    pub seed_override: Option<u64>,
    pub mode_override: Option<SimMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub command: String,
    pub code_version: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    pub scenario: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
    pub message: String,
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::io(path, e))
}

fn seed_of(loaded: &LoadedScenario) -> u64 {
    loaded.resolved_spec().to_value().get("seed").and_then(Value::as_u64).unwrap_or_default()
}

/// Runs one command: parse and validate the scenario, compute, then write
/// reports and `manifest.json` into the output directory.
pub fn run(config: &RunConfig) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    let mut loaded = load_scenario(&config.scenario_path)?;
    if let Some(expected) = config.command.expects() {
        if loaded.kind() != expected {
            return Err(CliError::WrongKind {
                command: config.command.name(),
                expected: expected.name(),
                found: loaded.kind().name().to_string(),
            });
        }
    }
    if let Some(seed) = config.seed_override {
        loaded.set_seed(seed);
    }
    if let Some(mode) = config.mode_override {
        // Power and size runs have no simulation mode; the flag is ignored.
        loaded.set_mode(mode);
    }
    let resolved = loaded.resolve()?;
    if config.command == Command::Validate {
        return Ok(RunSummary {
            outputs: Vec::new(),
            message: format!("{}: valid {} scenario", config.scenario_path.display(), loaded.kind().name()),
        });
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = config.threads {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| CliError::Threads(e.to_string()))?;
    let threads = pool.current_num_threads();

    let (name, bytes) = pool.install(|| -> Result<(&str, Vec<u8>), CliError> {
        Ok(match &resolved {
            Resolved::Dp(sc) => ("dp_report.csv", report::dp_csv(&run_dp(sc)?)),
            Resolved::Power(list) => {
                let reports = list
                    .iter()
                    .map(|(name, sc)| Ok((name.clone(), run_power(sc)?)))
                    .collect::<Result<Vec<_>, CliError>>()?;
                ("power_report.csv", report::power_csv(&reports))
            }
            Resolved::NullSize(sc) => {
                let rows = sc
                    .designs
                    .iter()
                    .map(|(name, designs)| {
                        let rows = null_size_check(
                            designs,
                            &sc.methods,
                            &sc.alpha_levels,
                            sc.nsim,
                            sc.seed,
                            sc.list_correction,
                            sc.stouffer_tail,
                        )?;
                        Ok((name.clone(), rows))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                ("null_size_report.csv", report::null_size_csv(&rows))
            }
        })
    })?;

    fs::create_dir_all(&config.out_dir).map_err(|e| CliError::io(&config.out_dir, e))?;
    write_file(&config.out_dir, name, &bytes)?;
    let manifest = Manifest {
        format: MANIFEST_FORMAT.to_string(),
        command: config.command.name().to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: seed_of(&loaded),
        threads,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        outputs: vec![name.to_string()],
        scenario: loaded.resolved_spec().to_value(),
    };
    let mut json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    json.push(b'\n');
    write_file(&config.out_dir, "manifest.json", &json)?;
    Ok(RunSummary {
        outputs: vec![name.to_string(), "manifest.json".to_string()],
        message: format!("wrote {} and manifest.json to {}", name, config.out_dir.display()),
    })
}
