//! TOML configuration for single runs and experiment manifests.
//!
//! A run configuration looks like
//!
//! ```toml
//! domain = "retina"
//! algorithm = "map-elites"
//! seed = 7
//! "initial batch" = 2000
//! "batch size" = 200
//! iterations = 490
//! "starting resolution" = [16, 16]
//! "resolution change program" = [
//!     { iteration = 0, resolution = [32, 32] },
//!     { iteration = 100, resolution = [64, 64] },
//! ]
//!
//! [retina]
//! toggle_rate = 0.02
//! ```
//!
//! Only `domain` is required. Everything else falls back to per-domain
//! defaults; [`RunConfig::effective_toml`] prints the fully resolved file.
//!
//! A manifest holds the same keys at top level, shared by all treatments,
//! plus `name`, `"base seed"`, `replicates`, `"concurrent runs"` and one or
//! more `[[treatment]]` tables. Each treatment has a `name` and may override
//! any run key and its own `replicates`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::archive::{FeatureSpace, ScheduleStep};
use crate::controls::ControlParams;
use crate::domains::{ArmConfig, ArmDomain, Domain, RetinaConfig, RetinaDomain, SyntheticConfig, SyntheticDomain};
use crate::engine::{EngineParams, Execution};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainName {
    Retina,
    Arm,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    MapElites,
    Random,
    TraditionalEa,
    EaDiversity,
    NsLc,
    GridSearch,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::MapElites => "map-elites",
            Algorithm::Random => "random",
            Algorithm::TraditionalEa => "traditional-ea",
            Algorithm::EaDiversity => "ea-diversity",
            Algorithm::NsLc => "ns-lc",
            Algorithm::GridSearch => "grid-search",
        }
    }
}

/// Domain selection with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainConfig {
    Retina(RetinaConfig),
    Arm(ArmConfig),
    Synthetic(SyntheticConfig),
}

impl DomainConfig {
    pub fn name(&self) -> DomainName {
        match self {
            DomainConfig::Retina(_) => DomainName::Retina,
            DomainConfig::Arm(_) => DomainName::Arm,
            DomainConfig::Synthetic(_) => DomainName::Synthetic,
        }
    }

    fn bounds_and_labels(&self) -> Result<(Vec<(f64, f64)>, Vec<String>)> {
        Ok(match self {
            DomainConfig::Retina(c) => {
                let d = RetinaDomain::new(c.clone())?;
                (d.descriptor_bounds(), d.descriptor_labels())
            }
            DomainConfig::Arm(c) => {
                let d = ArmDomain::new(c.clone())?;
                (d.descriptor_bounds(), d.descriptor_labels())
            }
            DomainConfig::Synthetic(c) => {
                let d = SyntheticDomain::new(c.clone())?;
                (d.descriptor_bounds(), d.descriptor_labels())
            }
        })
    }
}

/// Keys of a run configuration as written in the file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    domain: Option<DomainName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    algorithm: Option<Algorithm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<u64>,
    #[serde(rename = "initial batch", skip_serializing_if = "Option::is_none")]
    initial_batch: Option<usize>,
    #[serde(rename = "batch size", skip_serializing_if = "Option::is_none")]
    batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<u64>,
    #[serde(rename = "starting resolution", skip_serializing_if = "Option::is_none")]
    starting_resolution: Option<Vec<usize>>,
    #[serde(rename = "resolution change program", skip_serializing_if = "Option::is_none")]
    schedule: Option<Vec<ScheduleStep>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
    #[serde(rename = "grid steps", skip_serializing_if = "Option::is_none")]
    grid_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    controls: Option<ControlParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    retina: Option<RetinaConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    arm: Option<ArmConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    synthetic: Option<SyntheticConfig>,
}

/// A validated single-run configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Evaluations the run performs.
    pub budget: u64,
    pub init_batch: usize,
    pub batch_size: usize,
    pub iterations: u64,
    pub starting_resolution: Vec<usize>,
    pub schedule: Vec<ScheduleStep>,
    /// Evaluation threads; 1 evaluates serially.
    pub threads: usize,
    pub grid_steps: usize,
    pub output: Option<PathBuf>,
    pub controls: ControlParams,
    pub domain: DomainConfig,
}

struct Defaults {
    init_batch: usize,
    batch_size: usize,
    iterations: u64,
    starting_resolution: Vec<usize>,
}

fn defaults(domain: &DomainConfig) -> Defaults {
    match domain {
        DomainConfig::Retina(_) => Defaults {
            init_batch: 20_000,
            batch_size: 2_000,
            iterations: 10_000,
            starting_resolution: vec![16, 16],
        },
        DomainConfig::Arm(c) => Defaults {
            init_batch: 120,
            batch_size: 10,
            iterations: 30,
            starting_resolution: vec![c.bins],
        },
        DomainConfig::Synthetic(_) => Defaults {
            init_batch: 100,
            batch_size: 10,
            iterations: 100,
            starting_resolution: vec![20, 20],
        },
    }
}

/// Default retina program: 64, 128, 256 and 512 cells per side, switched at
/// 0, 1/8, 1/4 and 1/2 of the run (iterations 0, 1250, 2500 and 5000 of 10000).
pub fn default_retina_schedule(iterations: u64) -> Vec<ScheduleStep> {
    if iterations == 0 {
        return Vec::new();
    }
    let sides = [64usize, 128, 256, 512];
    let at = [0, iterations / 8, iterations / 4, iterations / 2];
    let mut steps: Vec<ScheduleStep> = Vec::new();
    for (side, t) in sides.into_iter().zip(at) {
        if t >= iterations {
            break;
        }
        match steps.last_mut() {
            Some(last) if last.iteration == t => last.resolution = vec![side, side],
            _ => steps.push(ScheduleStep {
                iteration: t,
                resolution: vec![side, side],
            }),
        }
    }
    steps
}

fn parse_toml<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::config(e.message().to_string() + &span_hint(text, e.span())))
}

fn span_hint(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let line = text[..r.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::resolve(parse_toml(text)?)
    }

    fn resolve(raw: RawRun) -> Result<Self> {
        let domain_name = raw.domain.ok_or_else(|| Error::key("domain", "missing required key"))?;
        let domain = match domain_name {
            DomainName::Retina => DomainConfig::Retina(raw.retina.clone().unwrap_or_default()),
            DomainName::Arm => DomainConfig::Arm(raw.arm.clone().unwrap_or_default()),
            DomainName::Synthetic => DomainConfig::Synthetic(raw.synthetic.clone().unwrap_or_default()),
        };
        for (present, name) in [
            (raw.retina.is_some(), DomainName::Retina),
            (raw.arm.is_some(), DomainName::Arm),
            (raw.synthetic.is_some(), DomainName::Synthetic),
        ] {
            if present && name != domain_name {
                return Err(Error::key(
                    format!("{name:?}").to_lowercase(),
                    "parameters given for a domain that is not selected",
                ));
            }
        }
        let (bounds, _) = domain.bounds_and_labels()?;
        let d = defaults(&domain);
        let algorithm = raw.algorithm.unwrap_or(Algorithm::MapElites);
        let init_batch = raw.initial_batch.unwrap_or(d.init_batch);
        let batch_size = raw.batch_size.unwrap_or(d.batch_size);
        if init_batch == 0 {
            return Err(Error::key("initial batch", "must be >= 1"));
        }
        if batch_size == 0 {
            return Err(Error::key("batch size", "must be >= 1"));
        }
        let grid_steps = raw.grid_steps.unwrap_or(8);

        let (budget, iterations) = match (algorithm, raw.budget, raw.iterations) {
            (Algorithm::GridSearch, budget, _) => {
                if domain_name != DomainName::Arm {
                    return Err(Error::key("algorithm", "grid-search is only defined for the arm domain"));
                }
                let total = (grid_steps as u64).pow(3);
                if let Some(b) = budget {
                    if b != total {
                        return Err(Error::key(
                            "budget",
                            format!("grid search with {grid_steps} steps performs {total} evaluations, not {b}"),
                        ));
                    }
                }
                (total, raw.iterations.unwrap_or(0))
            }
            (_, Some(b), Some(it)) => {
                let implied = init_batch as u64 + it * batch_size as u64;
                if algorithm == Algorithm::MapElites && implied != b {
                    return Err(Error::key(
                        "budget",
                        format!("{b} differs from initial batch + iterations x batch size = {implied}"),
                    ));
                }
                (b, it)
            }
            (_, Some(b), None) => {
                if algorithm == Algorithm::MapElites {
                    let rest = b.checked_sub(init_batch as u64).ok_or_else(|| {
                        Error::key("budget", format!("{b} is smaller than the initial batch ({init_batch})"))
                    })?;
                    if rest % batch_size as u64 != 0 {
                        return Err(Error::key(
                            "budget",
                            format!("{b} - initial batch ({init_batch}) is not a multiple of the batch size ({batch_size})"),
                        ));
                    }
                    (b, rest / batch_size as u64)
                } else {
                    (b, d.iterations)
                }
            }
            (_, None, it) => {
                let it = it.unwrap_or(d.iterations);
                (init_batch as u64 + it * batch_size as u64, it)
            }
        };
        if budget == 0 {
            return Err(Error::key("budget", "must be >= 1"));
        }

        let starting_resolution = raw.starting_resolution.clone().unwrap_or(d.starting_resolution);
        let schedule = match (&raw.schedule, domain_name) {
            (Some(s), _) => s.clone(),
            (None, DomainName::Retina) if raw.starting_resolution.is_none() => default_retina_schedule(iterations),
            (None, _) => Vec::new(),
        };
        if starting_resolution.len() != bounds.len() {
            return Err(Error::key(
                "starting resolution",
                format!("domain has {} feature dimensions, got {}", bounds.len(), starting_resolution.len()),
            ));
        }
        FeatureSpace::new(bounds, starting_resolution.clone())
            .map_err(|e| Error::key("starting resolution", e.to_string()))?
            .with_schedule(schedule.clone())?;
        if algorithm == Algorithm::MapElites {
            for (i, step) in schedule.iter().enumerate() {
                if step.iteration >= iterations {
                    return Err(Error::key(
                        "resolution change program",
                        format!(
                            "entry {i} switches at iteration {} but the run has {iterations} iterations",
                            step.iteration
                        ),
                    ));
                }
            }
        }

        let controls = raw.controls.clone().unwrap_or_default();
        if matches!(
            algorithm,
            Algorithm::TraditionalEa | Algorithm::EaDiversity | Algorithm::NsLc
        ) {
            controls.validate(budget)?;
        }
        let threads = raw.threads.unwrap_or(1);
        if threads == 0 {
            return Err(Error::key("threads", "must be >= 1"));
        }
        Ok(Self {
            algorithm,
            seed: raw.seed.unwrap_or(0),
            budget,
            init_batch,
            batch_size,
            iterations,
            starting_resolution,
            schedule,
            threads,
            grid_steps,
            output: raw.output,
            controls,
            domain,
        })
    }

    fn to_raw(&self) -> RawRun {
        let mut raw = RawRun {
            domain: Some(self.domain.name()),
            algorithm: Some(self.algorithm),
            seed: Some(self.seed),
            budget: Some(self.budget),
            initial_batch: Some(self.init_batch),
            batch_size: Some(self.batch_size),
            iterations: Some(self.iterations),
            starting_resolution: Some(self.starting_resolution.clone()),
            schedule: Some(self.schedule.clone()),
            threads: Some(self.threads),
            grid_steps: Some(self.grid_steps),
            output: self.output.clone(),
            controls: Some(self.controls.clone()),
            ..RawRun::default()
        };
        match &self.domain {
            DomainConfig::Retina(c) => raw.retina = Some(c.clone()),
            DomainConfig::Arm(c) => raw.arm = Some(c.clone()),
            DomainConfig::Synthetic(c) => raw.synthetic = Some(c.clone()),
        }
        raw
    }

    /// Fully resolved configuration in the input format. Loading it back
    /// yields an identical configuration.
    pub fn effective_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("run configuration serializes")
    }

    pub fn engine_params(&self) -> EngineParams {
        EngineParams {
            init_batch: self.init_batch,
            batch_size: self.batch_size,
            iterations: self.iterations,
            seed: self.seed,
        }
    }

    pub fn execution(&self) -> Execution {
        if self.threads > 1 {
            Execution::Parallel(self.threads)
        } else {
            Execution::Serial
        }
    }

    /// Resolution of every map this configuration produces.
    pub fn final_resolution(&self) -> Vec<usize> {
        self.schedule
            .last()
            .map_or_else(|| self.starting_resolution.clone(), |s| s.resolution.clone())
    }

    /// Feature space a MAP-Elites run starts in, schedule attached.
    pub fn feature_space(&self) -> Result<FeatureSpace> {
        let (bounds, labels) = self.domain.bounds_and_labels()?;
        FeatureSpace::new(bounds, self.starting_resolution.clone())?
            .with_schedule(self.schedule.clone())?
            .with_labels(labels)
    }

    /// Feature space at the final resolution, used by the controls.
    pub fn final_feature_space(&self) -> Result<FeatureSpace> {
        let (bounds, labels) = self.domain.bounds_and_labels()?;
        FeatureSpace::new(bounds, self.final_resolution())?.with_labels(labels)
    }
}

/// One arm of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Treatment {
    pub name: String,
    pub replicates: usize,
    /// Configuration for replicate 0; replicate `i` uses seed `base seed + i`.
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentManifest {
    pub name: String,
    pub base_seed: u64,
    /// Runs executed at the same time.
    pub concurrent_runs: usize,
    pub output: Option<PathBuf>,
    pub treatments: Vec<Treatment>,
}

const MANIFEST_ONLY: [&str; 5] = ["name", "base seed", "replicates", "concurrent runs", "treatment"];

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn positive_int(table: &toml::Table, key: &str, default: u64) -> Result<u64> {
    match table.get(key) {
        None => Ok(default),
        Some(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
        Some(_) => Err(Error::key(key, "must be a non-negative integer")),
    }
}

impl ExperimentManifest {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = parse_toml(text)?;
        Self::from_table(table)
    }

    fn from_table(mut table: toml::Table) -> Result<Self> {
        let name = match table.get("name") {
            None => "experiment".to_string(),
            Some(toml::Value::String(s)) => s.clone(),
            Some(_) => return Err(Error::key("name", "must be a string")),
        };
        let base_seed = positive_int(&table, "base seed", 0)?;
        let replicates = positive_int(&table, "replicates", 10)? as usize;
        let concurrent_runs = positive_int(&table, "concurrent runs", 1)?.max(1) as usize;
        if table.contains_key("seed") {
            return Err(Error::key("seed", "use `base seed` in a manifest"));
        }
        let treatments = match table.remove("treatment") {
            Some(toml::Value::Array(a)) if !a.is_empty() => a,
            _ => return Err(Error::key("treatment", "a manifest needs at least one [[treatment]] table")),
        };
        for k in MANIFEST_ONLY {
            table.remove(k);
        }
        let output = table.get("output").and_then(|v| v.as_str()).map(PathBuf::from);

        let mut names = BTreeSet::new();
        let mut out = Vec::new();
        for (i, t) in treatments.into_iter().enumerate() {
            let toml::Value::Table(mut t) = t else {
                return Err(Error::key(format!("treatment[{i}]"), "must be a table"));
            };
            let tname = match t.remove("name") {
                Some(toml::Value::String(s)) if !s.is_empty() => s,
                _ => return Err(Error::key(format!("treatment[{i}].name"), "missing required key")),
            };
            if tname.contains(['/', '\\']) {
                return Err(Error::key(format!("treatment[{i}].name"), "must not contain path separators"));
            }
            if !names.insert(tname.clone()) {
                return Err(Error::key(format!("treatment[{i}].name"), format!("duplicate treatment `{tname}`")));
            }
            let reps = positive_int(&t, "replicates", replicates as u64)? as usize;
            t.remove("replicates");
            if reps == 0 {
                return Err(Error::key(format!("treatment `{tname}`.replicates"), "must be >= 1"));
            }
            if t.contains_key("seed") {
                return Err(Error::key(format!("treatment `{tname}`.seed"), "use `base seed` in a manifest"));
            }
            let mut merged = table.clone();
            merge(&mut merged, t);
            merged.insert("seed".into(), toml::Value::Integer(base_seed as i64));
            let raw: RawRun = toml::Value::Table(merged)
                .try_into()
                .map_err(|e: toml::de::Error| Error::config(format!("treatment `{tname}`: {}", e.message())))?;
            let config = RunConfig::resolve(raw).map_err(|e| match e {
                Error::ConfigKey { key, message } => Error::key(format!("treatment `{tname}`.{key}"), message),
                other => other,
            })?;
            out.push(Treatment {
                name: tname,
                replicates: reps,
                config,
            });
        }
        let first = &out[0].config;
        for t in &out[1..] {
            if t.config.domain.name() != first.domain.name() {
                return Err(Error::key(format!("treatment `{}`.domain", t.name), "all treatments must share a domain"));
            }
            if t.config.final_resolution() != first.final_resolution() {
                return Err(Error::key(
                    format!("treatment `{}`", t.name),
                    format!(
                        "final resolution {:?} differs from {:?}; maps must be comparable",
                        t.config.final_resolution(),
                        first.final_resolution()
                    ),
                ));
            }
        }
        Ok(Self {
            name,
            base_seed,
            concurrent_runs,
            output,
            treatments: out,
        })
    }

    /// Total number of runs.
    pub fn run_count(&self) -> usize {
        self.treatments.iter().map(|t| t.replicates).sum()
    }
}

/// Either kind of configuration file.
#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Run(Box<RunConfig>),
    Experiment(ExperimentManifest),
}

/// Parses text as a manifest when it has `[[treatment]]` tables, else as a run.
pub fn parse_config(text: &str) -> Result<Loaded> {
    let table: toml::Table = parse_toml(text)?;
    if table.contains_key("treatment") {
        ExperimentManifest::from_table(table).map(Loaded::Experiment)
    } else {
        let raw: RawRun = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(e.message().to_string()))?;
        RunConfig::resolve(raw).map(|c| Loaded::Run(Box::new(c)))
    }
}

pub fn load_config(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> Result<RunConfig> {
        RunConfig::from_toml_str(text)
    }

    fn key_of(e: Error) -> String {
        match e {
            Error::ConfigKey { key, .. } => key,
            other => panic!("expected a key error, got {other}"),
        }
    }

    #[test]
    fn minimal_config_applies_defaults() {
        let c = run("domain = \"arm\"\nbudget = 420\n").unwrap();
        assert_eq!(c.algorithm, Algorithm::MapElites);
        assert_eq!((c.init_batch, c.batch_size, c.iterations), (120, 10, 30));
        assert_eq!(c.starting_resolution, vec![64]);
        assert_eq!(c.seed, 0);
        assert_eq!(c.threads, 1);
        assert_eq!(c.controls, ControlParams::default());
        assert_eq!(c.domain, DomainConfig::Arm(ArmConfig::default()));

        let c = run("domain = \"retina\"\nbudget = 100000\n").unwrap();
        assert_eq!(c.iterations, 40);
        assert_eq!(c.final_resolution(), vec![512, 512]);
        assert_eq!(c.schedule.iter().map(|s| s.iteration).collect::<Vec<_>>(), vec![0, 5, 10, 20]);
    }

    #[test]
    fn default_retina_program_matches_full_scale_thresholds() {
        let s = default_retina_schedule(10_000);
        let got: Vec<(u64, usize)> = s.iter().map(|s| (s.iteration, s.resolution[0])).collect();
        assert_eq!(got, vec![(0, 64), (1250, 128), (2500, 256), (5000, 512)]);
        assert_eq!(default_retina_schedule(1).len(), 1);
        assert_eq!(default_retina_schedule(1)[0].resolution, vec![512, 512]);
        assert!(default_retina_schedule(0).is_empty());
    }

    #[test]
    fn missing_domain_is_named() {
        assert_eq!(key_of(run("budget = 10").unwrap_err()), "domain");
    }

    #[test]
    fn unknown_keys_and_domains_are_rejected() {
        let e = run("domain = \"arm\"\nbatchsize = 3\n").unwrap_err();
        assert!(e.to_string().contains("batchsize"), "{e}");
        let e = run("domain = \"moon\"\n").unwrap_err();
        assert!(e.to_string().contains("moon"), "{e}");
        assert!(run("domain = \"arm\"\n[retina]\nlayers = [8, 1]\n").is_err());
    }

    #[test]
    fn budget_must_divide() {
        let e = run("domain = \"arm\"\nbudget = 425\n").unwrap_err();
        assert_eq!(key_of(e), "budget");
        let e = run("domain = \"arm\"\nbudget = 420\niterations = 31\n").unwrap_err();
        assert_eq!(key_of(e), "budget");
        let e = run("domain = \"arm\"\nbudget = 100\n").unwrap_err();
        assert_eq!(key_of(e), "budget");
    }

    #[test]
    fn non_multiple_schedule_names_the_entry() {
        let text = r#"
domain = "synthetic"
iterations = 50
"starting resolution" = [4, 4]
"resolution change program" = [
    { iteration = 0, resolution = [8, 8] },
    { iteration = 10, resolution = [12, 12] },
]
"#;
        let e = run(text).unwrap_err();
        assert!(e.to_string().contains("entry 1"), "{e}");
    }

    #[test]
    fn unreachable_schedule_entry_is_rejected() {
        let text = r#"
domain = "synthetic"
iterations = 5
"starting resolution" = [4, 4]
"resolution change program" = [{ iteration = 5, resolution = [8, 8] }]
"#;
        assert_eq!(key_of(run(text).unwrap_err()), "resolution change program");
    }

    #[test]
    fn wrong_dimensionality() {
        let e = run("domain = \"arm\"\n\"starting resolution\" = [8, 8]\n").unwrap_err();
        assert_eq!(key_of(e), "starting resolution");
    }

    #[test]
    fn grid_search_budget() {
        let c = run("domain = \"arm\"\nalgorithm = \"grid-search\"\n").unwrap();
        assert_eq!(c.budget, 512);
        assert!(run("domain = \"arm\"\nalgorithm = \"grid-search\"\nbudget = 729\n").is_err());
        let c = run("domain = \"arm\"\nalgorithm = \"grid-search\"\n\"grid steps\" = 9\n").unwrap();
        assert_eq!(c.budget, 729);
        assert!(run("domain = \"retina\"\nalgorithm = \"grid-search\"\n").is_err());
    }

    #[test]
    fn control_budget_is_checked_against_population() {
        let e = run("domain = \"arm\"\nalgorithm = \"ns-lc\"\nbudget = 100\n").unwrap_err();
        assert_eq!(key_of(e), "budget");
        let c = run("domain = \"arm\"\nalgorithm = \"ns-lc\"\nbudget = 100\n[controls]\n\"population size\" = 20\n")
            .unwrap();
        assert_eq!(c.controls.pop_size, 20);
    }

    #[test]
    fn effective_config_round_trips() {
        for text in [
            "domain = \"retina\"\nbudget = 100000\nthreads = 4\n",
            "domain = \"arm\"\nalgorithm = \"random\"\nseed = 9\n",
            "domain = \"synthetic\"\n[synthetic]\nmode = \"constant\"\n",
        ] {
            let c = run(text).unwrap();
            let dumped = c.effective_toml();
            assert_eq!(run(&dumped).unwrap(), c, "{dumped}");
        }
    }

    #[test]
    fn manifest_merges_treatments() {
        let text = r#"
name = "demo"
domain = "synthetic"
"base seed" = 100
replicates = 3
budget = 300

[controls]
"population size" = 50

[[treatment]]
name = "me"
algorithm = "map-elites"
"initial batch" = 100
"batch size" = 20

[[treatment]]
name = "rand"
algorithm = "random"
replicates = 2
"#;
        let Loaded::Experiment(m) = parse_config(text).unwrap() else {
            panic!("expected a manifest");
        };
        assert_eq!(m.name, "demo");
        assert_eq!(m.run_count(), 5);
        assert_eq!(m.treatments[0].config.iterations, 10);
        assert_eq!(m.treatments[0].config.seed, 100);
        assert_eq!(m.treatments[1].config.budget, 300);
        assert_eq!(m.treatments[1].config.controls.pop_size, 50);
    }

    #[test]
    fn manifest_errors() {
        let dup = "domain = \"arm\"\n[[treatment]]\nname = \"a\"\n[[treatment]]\nname = \"a\"\n";
        assert!(parse_config(dup).unwrap_err().to_string().contains("duplicate"));
        let seed = "domain = \"arm\"\nseed = 3\n[[treatment]]\nname = \"a\"\n";
        assert_eq!(key_of(parse_config(seed).unwrap_err()), "seed");
        let bad = "domain = \"arm\"\n[[treatment]]\nname = \"a\"\nbudget = 7\n";
        assert_eq!(key_of(parse_config(bad).unwrap_err()), "treatment `a`.budget");
        let res = r#"
domain = "synthetic"
[[treatment]]
name = "a"
[[treatment]]
name = "b"
"starting resolution" = [5, 5]
"#;
        assert!(parse_config(res).is_err());
    }
}
