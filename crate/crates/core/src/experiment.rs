//! Running configurations and experiments, and the files they leave behind.
//!
//! A run directory holds:
//!
//! | file | contents |
//! |------|----------|
//! | `archive.csv` | final map, one row per filled cell |
//! | `space.json` | feature space of `archive.csv` |
//! | `runlog.csv` | one row per batch or generation |
//! | `resolution_changes.csv` | scheduled resolution changes |
//! | `lineage.csv` | birth record of every archive entrant |
//! | `lineage_arrows.csv` | parent-to-elite arrows for the final elites |
//! | `config.toml` | effective configuration |
//! | `summary.json` | evaluation counts and final map size |
//! | `metadata.json` | wall-clock timestamps |
//!
//! Everything except `metadata.json` is a function of the configuration.
//! An experiment directory holds one run directory per
//! `<treatment>/rep_<i>` plus `runs.csv`, `metrics.csv`, `reference.json`,
//! `significance.csv` (two or more treatments) and `report.txt`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::archive::{fmt_f64, Archive, DenseMap, FeatureSpace};
use crate::config::{Algorithm, DomainConfig, ExperimentManifest, RunConfig};
use crate::controls::{run_ea_diversity, run_ns_lc, run_random_sampling, run_traditional_ea};
use crate::domains::arm::grid_search_in;
use crate::domains::{ArmDomain, Domain, RetinaDomain, SyntheticDomain};
use crate::engine::{map_ordered, run_map_elites, BatchRecord, Execution, RunLog};
use crate::error::{Error, Result};
use crate::lineage::{export_lineage_arrows, read_lineage_csv, write_arrows_csv, write_lineage_csv, Arrows};
use crate::metrics::{MetricsReport, ReferenceMap, METRIC_NAMES};
use crate::stats::{mann_whitney_u, median};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "MAPELITES_OUTPUT_ROOT";

/// Output root from [`OUTPUT_ROOT_ENV`], or `runs` in the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Deterministic outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub evaluations: u64,
    pub filled: usize,
    pub best_fitness: Option<f64>,
    pub invalid: u64,
    pub clamped: u64,
    pub resolution: Vec<usize>,
}

/// Archive (with genomes in their text form) and log of a finished run.
pub struct RunResult {
    pub summary: RunSummary,
    pub archive: Archive<String>,
    pub log: RunLog,
}

impl RunResult {
    pub fn dense_map(&self) -> DenseMap {
        self.archive.to_dense_map()
    }
}

fn run_with<D: Domain>(domain: &D, config: &RunConfig) -> Result<(Archive<D::Genome>, RunLog)> {
    let exec = config.execution();
    match config.algorithm {
        Algorithm::MapElites => run_map_elites(domain, config.feature_space()?, &config.engine_params(), exec),
        Algorithm::Random => run_random_sampling(domain, config.final_feature_space()?, config.budget, config.seed, exec),
        Algorithm::TraditionalEa => run_traditional_ea(
            domain,
            config.final_feature_space()?,
            config.budget,
            config.seed,
            &config.controls,
            exec,
        ),
        Algorithm::EaDiversity => run_ea_diversity(
            domain,
            config.final_feature_space()?,
            config.budget,
            config.seed,
            &config.controls,
            exec,
        ),
        Algorithm::NsLc => run_ns_lc(
            domain,
            config.final_feature_space()?,
            config.budget,
            config.seed,
            &config.controls,
            exec,
        ),
        Algorithm::GridSearch => Err(Error::key("algorithm", "grid-search is only defined for the arm domain")),
    }
}

fn grid_run(domain: &ArmDomain, config: &RunConfig) -> Result<(Archive<crate::domains::ArmGenome>, RunLog)> {
    let space = config.final_feature_space()?;
    let (archive, n) = grid_search_in(domain, config.grid_steps, space)?;
    let mut log = RunLog {
        evaluations: n as u64,
        ..RunLog::default()
    };
    log.batches.push(BatchRecord {
        iteration: 0,
        evaluations: n as u64,
        filled: archive.filled_count(),
        best_fitness: archive.best().map(|e| e.fitness),
        clamped: 0,
        invalid: 0,
        resolution: archive.resolution().to_vec(),
    });
    Ok((archive, log))
}

fn finish<D: Domain>(domain: &D, config: &RunConfig, archive: Archive<D::Genome>, log: RunLog) -> RunResult {
    let summary = RunSummary {
        algorithm: config.algorithm,
        seed: config.seed,
        evaluations: log.evaluations,
        filled: archive.filled_count(),
        best_fitness: archive.best().map(|e| e.fitness),
        invalid: log.invalid,
        clamped: log.clamped,
        resolution: archive.resolution().to_vec(),
    };
    let mut text = Archive::new(archive.space().clone());
    for (cell, e) in archive.iter() {
        // the CSV form keeps neither parent field
        let mut elite = e.with_genome(domain.encode(&e.genome));
        elite.parent_cell = None;
        elite.parent_descriptor = None;
        text.place(&cell, elite);
    }
    RunResult {
        summary,
        archive: text,
        log,
    }
}

/// Runs a configuration in memory.
pub fn execute(config: &RunConfig) -> Result<RunResult> {
    match &config.domain {
        DomainConfig::Retina(c) => {
            let d = RetinaDomain::new(c.clone())?;
            let (a, l) = run_with(&d, config)?;
            Ok(finish(&d, config, a, l))
        }
        DomainConfig::Arm(c) => {
            let d = ArmDomain::new(c.clone())?;
            let (a, l) = if config.algorithm == Algorithm::GridSearch {
                grid_run(&d, config)?
            } else {
                run_with(&d, config)?
            };
            Ok(finish(&d, config, a, l))
        }
        DomainConfig::Synthetic(c) => {
            let d = SyntheticDomain::new(c.clone())?;
            let (a, l) = run_with(&d, config)?;
            Ok(finish(&d, config, a, l))
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::parse("json", e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| Error::NotFound(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::parse("json", format!("{}: {e}", path.display())))
}

fn write_runlog(path: &Path, log: &RunLog) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["iteration", "evaluations", "filled", "best_fitness", "clamped", "invalid", "resolution"])?;
    for b in &log.batches {
        w.write_record([
            b.iteration.to_string(),
            b.evaluations.to_string(),
            b.filled.to_string(),
            b.best_fitness.map(fmt_f64).unwrap_or_default(),
            b.clamped.to_string(),
            b.invalid.to_string(),
            join_resolution(&b.resolution),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(&path.with_file_name("resolution_changes.csv"))?);
    w.write_record(["iteration", "from", "to", "filled_before", "filled_after"])?;
    for c in &log.resolution_changes {
        w.write_record([
            c.iteration.to_string(),
            join_resolution(&c.from),
            join_resolution(&c.to),
            c.filled_before.to_string(),
            c.filled_after.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn join_resolution(r: &[usize]) -> String {
    r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("x")
}

fn unix_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

#[derive(Serialize)]
struct Metadata {
    started_unix: f64,
    finished_unix: f64,
    wall_seconds: f64,
}

/// Writes every per-run file for `result` into `dir`.
pub fn write_run(dir: &Path, config: &RunConfig, result: &RunResult, started: SystemTime, wall: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let dims = result.archive.space().dims();
    let mut w = create(&dir.join("archive.csv"))?;
    result.archive.write_csv(&mut w, |g| g.clone())?;
    w.flush()?;
    write_json(&dir.join("space.json"), result.archive.space())?;
    write_runlog(&dir.join("runlog.csv"), &result.log)?;
    let mut w = create(&dir.join("lineage.csv"))?;
    write_lineage_csv(&mut w, &result.log.lineage, dims)?;
    w.flush()?;
    let arrows = if result.log.lineage.is_empty() {
        Arrows::default()
    } else {
        export_lineage_arrows(&result.log, &result.archive, None, config.seed)?
    };
    let mut w = create(&dir.join("lineage_arrows.csv"))?;
    write_arrows_csv(&mut w, &arrows.arrows, dims)?;
    w.flush()?;
    fs::write(dir.join("config.toml"), config.effective_toml())?;
    write_json(&dir.join("summary.json"), &result.summary)?;
    write_json(
        &dir.join("metadata.json"),
        &Metadata {
            started_unix: unix_seconds(started),
            finished_unix: unix_seconds(SystemTime::now()),
            wall_seconds: wall,
        },
    )?;
    Ok(())
}

/// Runs `config` and writes its files into `dir`.
pub fn run_single(config: &RunConfig, dir: &Path) -> Result<RunResult> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let result = execute(config)?;
    write_run(dir, config, &result, started, clock.elapsed().as_secs_f64())?;
    Ok(result)
}

/// Reads the archive of a run directory, genomes kept as text.
pub fn read_run_archive(dir: &Path) -> Result<Archive<String>> {
    let space: FeatureSpace = read_json(&dir.join("space.json"))?;
    read_archive_with_space(&dir.join("archive.csv"), space)
}

fn read_archive_with_space(path: &Path, space: FeatureSpace) -> Result<Archive<String>> {
    let f = File::open(path).map_err(|e| Error::NotFound(format!("{}: {e}", path.display())))?;
    Archive::read_csv(BufReader::new(f), space, |s| Ok(s.to_string()))
}

/// Reads an archive CSV, taking the feature space from `space.json` beside it.
pub fn read_archive_file(path: &Path) -> Result<Archive<String>> {
    let space_path = path.with_file_name("space.json");
    let space: FeatureSpace = read_json(&space_path)?;
    read_archive_with_space(path, space)
}

/// Lineage records of a run directory as a log.
pub fn read_run_lineage(dir: &Path) -> Result<RunLog> {
    let path = dir.join("lineage.csv");
    let f = File::open(&path).map_err(|e| Error::NotFound(format!("{}: {e}", path.display())))?;
    let (lineage, _) = read_lineage_csv(BufReader::new(f))?;
    Ok(RunLog {
        lineage,
        ..RunLog::default()
    })
}

pub fn read_run_summary(dir: &Path) -> Result<RunSummary> {
    read_json(&dir.join("summary.json"))
}

/// Status of one (treatment, replicate) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub treatment: String,
    pub replicate: usize,
    pub seed: u64,
    pub dir: PathBuf,
    pub outcome: std::result::Result<RunSummary, String>,
}

/// Metrics for a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub treatment: String,
    pub replicate: usize,
    pub seed: u64,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub runs: Vec<RunRecord>,
    pub metrics: Vec<MetricsRow>,
    pub report: Report,
}

fn run_dir(root: &Path, treatment: &str, replicate: usize) -> PathBuf {
    root.join(treatment).join(format!("rep_{replicate}"))
}

/// Runs every (treatment, replicate) pair, then scores every finished run
/// against the reference map built from all of them.
pub fn run_experiment(manifest: &ExperimentManifest, dir: &Path) -> Result<ExperimentOutcome> {
    let started = SystemTime::now();
    fs::create_dir_all(dir)?;
    let mut jobs = Vec::new();
    for t in &manifest.treatments {
        for r in 0..t.replicates {
            let mut config = t.config.clone();
            config.seed = manifest.base_seed + r as u64;
            jobs.push((t.name.clone(), r, config));
        }
    }
    let pool = Execution::Parallel(manifest.concurrent_runs).pool()?;
    let finished = map_ordered(pool.as_ref(), jobs, |(treatment, replicate, config)| {
        let rdir = run_dir(dir, &treatment, replicate);
        let outcome = run_single(&config, &rdir);
        (treatment, replicate, config.seed, rdir, outcome)
    });

    let mut runs = Vec::new();
    let mut maps = Vec::new();
    for (treatment, replicate, seed, rdir, outcome) in finished {
        let outcome = match outcome {
            Ok(result) => {
                maps.push((runs.len(), result.dense_map()));
                Ok(result.summary)
            }
            Err(e) => {
                log::warn!("run {treatment}/rep_{replicate} failed and is excluded: {e}");
                Err(e.to_string())
            }
        };
        runs.push(RunRecord {
            treatment,
            replicate,
            seed,
            dir: rdir,
            outcome,
        });
    }
    write_runs_csv(&dir.join("runs.csv"), &runs)?;
    if maps.is_empty() {
        return Err(Error::Undefined("every run failed; no metrics to compute".into()));
    }

    let reference = ReferenceMap::build(maps.iter().map(|(_, m)| m))?;
    let mut metrics = Vec::new();
    for (i, m) in &maps {
        let r = &runs[*i];
        metrics.push(MetricsRow {
            treatment: r.treatment.clone(),
            replicate: r.replicate,
            seed: r.seed,
            report: MetricsReport::compute(m, &reference)?,
        });
    }
    write_metrics_csv(&dir.join("metrics.csv"), &metrics)?;
    write_json(
        &dir.join("reference.json"),
        &ReferenceInfo {
            digest: reference.digest(),
            resolution: reference.resolution().to_vec(),
            contributors: reference.contributors(),
            filled: reference.filled_count(),
            positive: reference.positive_count(),
        },
    )?;
    let mut manifest_dump = String::new();
    for t in &manifest.treatments {
        let _ = writeln!(manifest_dump, "# treatment `{}`, {} replicates, seeds {}..{}", t.name, t.replicates,
            manifest.base_seed, manifest.base_seed + t.replicates as u64);
        let _ = writeln!(manifest_dump, "{}", t.config.effective_toml());
    }
    fs::write(dir.join("treatments.toml"), manifest_dump)?;

    let rep = report(dir)?;
    write_json(
        &dir.join("metadata.json"),
        &Metadata {
            started_unix: unix_seconds(started),
            finished_unix: unix_seconds(SystemTime::now()),
            wall_seconds: SystemTime::now().duration_since(started).map_or(0.0, |d| d.as_secs_f64()),
        },
    )?;
    Ok(ExperimentOutcome {
        dir: dir.to_path_buf(),
        runs,
        metrics,
        report: rep,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ReferenceInfo {
    digest: String,
    resolution: Vec<usize>,
    contributors: usize,
    filled: usize,
    positive: usize,
}

fn write_runs_csv(path: &Path, runs: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["treatment", "replicate", "seed", "status", "evaluations", "filled", "message"])?;
    for r in runs {
        let (status, evals, filled, msg) = match &r.outcome {
            Ok(s) => ("finished", s.evaluations.to_string(), s.filled.to_string(), String::new()),
            Err(m) => ("failed", String::new(), String::new(), m.clone()),
        };
        w.write_record([
            r.treatment.clone(),
            r.replicate.to_string(),
            r.seed.to_string(),
            status.to_string(),
            evals,
            filled,
            msg,
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["treatment".to_string(), "replicate".into(), "seed".into()];
    header.extend(METRIC_NAMES.iter().map(|s| s.to_string()));
    header.push("filled".into());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.treatment.clone(), r.replicate.to_string(), r.seed.to_string()];
        rec.extend(METRIC_NAMES.iter().map(|m| r.report.get(m).map(fmt_f64).unwrap_or_default()));
        rec.push(r.report.filled.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-run metric values read back from `metrics.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub treatment: String,
    pub replicate: usize,
    pub seed: u64,
    /// In [`METRIC_NAMES`] order; `None` when undefined.
    pub values: [Option<f64>; 4],
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricRecord>> {
    let f = File::open(path).map_err(|e| Error::NotFound(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::Reader::from_reader(BufReader::new(f));
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |m: String| Error::parse("metrics csv", format!("row {}: {m}", i + 1));
        if rec.len() < 7 {
            return Err(bad("too few columns".into()));
        }
        let mut values = [None; 4];
        for (k, v) in values.iter_mut().enumerate() {
            let s = rec[3 + k].trim();
            if !s.is_empty() {
                *v = Some(s.parse().map_err(|e| bad(format!("{e}")))?);
            }
        }
        out.push(MetricRecord {
            treatment: rec[0].to_string(),
            replicate: rec[1].parse().map_err(|e| bad(format!("{e}")))?,
            seed: rec[2].parse().map_err(|e| bad(format!("{e}")))?,
            values,
        });
    }
    Ok(out)
}

/// One pairwise test in the significance table.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub treatment_a: String,
    pub treatment_b: String,
    pub metric: &'static str,
    pub u: f64,
    pub p: f64,
    pub n_a: usize,
    pub n_b: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreatmentSummary {
    pub name: String,
    pub runs: usize,
    /// Median per metric over runs where it is defined.
    pub medians: [Option<f64>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub treatments: Vec<TreatmentSummary>,
    /// Empty with fewer than two treatments.
    pub comparisons: Vec<Comparison>,
    pub failed: Vec<String>,
    pub text: String,
}

impl Report {
    pub fn treatment(&self, name: &str) -> Option<&TreatmentSummary> {
        self.treatments.iter().find(|t| t.name == name)
    }

    pub fn comparison(&self, a: &str, b: &str, metric: &str) -> Option<&Comparison> {
        self.comparisons
            .iter()
            .find(|c| c.metric == metric && ((c.treatment_a == a && c.treatment_b == b) || (c.treatment_a == b && c.treatment_b == a)))
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"))
}

fn read_failed(dir: &Path) -> Result<Vec<String>> {
    let path = dir.join("runs.csv");
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut rdr = csv::Reader::from_path(&path)?;
    let mut failed = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.get(3) == Some("failed") {
            failed.push(format!(
                "{}/rep_{} (seed {}): {}",
                &rec[0],
                &rec[1],
                &rec[2],
                rec.get(6).unwrap_or("")
            ));
        }
    }
    Ok(failed)
}

/// Builds the summary of an experiment directory and writes `report.txt`
/// and, with two or more treatments, `significance.csv`.
pub fn report(dir: &Path) -> Result<Report> {
    let records = read_metrics_csv(&dir.join("metrics.csv"))?;
    let failed = read_failed(dir)?;
    let reference: Option<ReferenceInfo> = read_json(&dir.join("reference.json")).ok();

    let mut groups: BTreeMap<String, (usize, Vec<Vec<f64>>)> = BTreeMap::new();
    let mut order = Vec::new();
    for r in &records {
        let entry = groups.entry(r.treatment.clone()).or_insert_with(|| {
            order.push(r.treatment.clone());
            (0, vec![Vec::new(); 4])
        });
        entry.0 += 1;
        for (k, v) in r.values.iter().enumerate() {
            if let Some(v) = v {
                entry.1[k].push(*v);
            }
        }
    }
    let treatments: Vec<TreatmentSummary> = order
        .iter()
        .map(|name| {
            let (runs, vals) = &groups[name];
            TreatmentSummary {
                name: name.clone(),
                runs: *runs,
                medians: std::array::from_fn(|k| median(&vals[k])),
            }
        })
        .collect();

    let mut comparisons = Vec::new();
    if order.len() >= 2 {
        for i in 0..order.len() {
            for j in (i + 1)..order.len() {
                for (k, metric) in METRIC_NAMES.iter().enumerate() {
                    let a = &groups[&order[i]].1[k];
                    let b = &groups[&order[j]].1[k];
                    if a.is_empty() || b.is_empty() {
                        continue;
                    }
                    let t = mann_whitney_u(a, b);
                    comparisons.push(Comparison {
                        treatment_a: order[i].clone(),
                        treatment_b: order[j].clone(),
                        metric,
                        u: t.u,
                        p: t.p,
                        n_a: a.len(),
                        n_b: b.len(),
                    });
                }
            }
        }
        let mut w = csv::Writer::from_writer(create(&dir.join("significance.csv"))?);
        w.write_record(["treatment_a", "treatment_b", "metric", "u", "p", "n_a", "n_b"])?;
        for c in &comparisons {
            w.write_record([
                c.treatment_a.clone(),
                c.treatment_b.clone(),
                c.metric.to_string(),
                fmt_f64(c.u),
                fmt_f64(c.p),
                c.n_a.to_string(),
                c.n_b.to_string(),
            ])?;
        }
        w.flush()?;
    }

    let mut text = String::new();
    let _ = writeln!(text, "runs: {} finished, {} failed", records.len(), failed.len());
    if let Some(r) = &reference {
        let _ = writeln!(
            text,
            "reference map: {} cells at {}, {} filled by some run, {} usable as denominators",
            r.resolution.iter().product::<usize>(),
            join_resolution(&r.resolution),
            r.filled,
            r.positive
        );
        if r.filled > r.positive {
            let _ = writeln!(
                text,
                "  {} cells whose best fitness is <= 0 are left out of global reliability and precision",
                r.filled - r.positive
            );
        }
        let _ = writeln!(text, "reference digest: {}", r.digest);
    }
    let width = order.iter().map(|s| s.len()).max().unwrap_or(9).max(9);
    let _ = writeln!(text, "\nmedians");
    let _ = write!(text, "{:<width$}  {:>4}", "treatment", "runs");
    for m in METRIC_NAMES {
        let _ = write!(text, "  {m:>18}");
    }
    let _ = writeln!(text);
    for t in &treatments {
        let _ = write!(text, "{:<width$}  {:>4}", t.name, t.runs);
        for v in t.medians {
            let _ = write!(text, "  {:>18}", fmt_opt(v));
        }
        let _ = writeln!(text);
    }
    if order.len() < 2 {
        let _ = writeln!(text, "\nsingle treatment: no significance table");
    } else {
        let _ = writeln!(text, "\ntwo-tailed Mann-Whitney U");
        for c in &comparisons {
            let _ = writeln!(
                text,
                "{:<width$}  {:<width$}  {:<18}  U = {:>8.1}  p = {:.3e}",
                c.treatment_a, c.treatment_b, c.metric, c.u, c.p
            );
        }
    }
    if !failed.is_empty() {
        let _ = writeln!(text, "\nfailed runs (excluded from all statistics)");
        for f in &failed {
            let _ = writeln!(text, "  {f}");
        }
    }
    let _ = writeln!(text, "\nper-run values");
    for r in &records {
        let _ = write!(text, "{:<width$}  rep {:>3}  seed {:>6}", r.treatment, r.replicate, r.seed);
        for v in r.values {
            let _ = write!(text, "  {:>10}", fmt_opt(v));
        }
        let _ = writeln!(text);
    }
    fs::write(dir.join("report.txt"), &text)?;
    Ok(Report {
        treatments,
        comparisons,
        failed,
        text,
    })
}
