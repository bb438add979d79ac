//! Batched, hierarchical MAP-Elites.
//!
//! A run evaluates `init_batch` random genomes, then performs `iterations`
//! batches. Each batch draws `batch_size` parents uniformly from the archive
//! as it stood when the batch started, mutates them, evaluates the children
//! (possibly on several threads) and finally inserts them one by one in slot
//! order. Slot `s` of iteration `t` draws all of its randomness from its own
//! substream of the run seed, so the result does not depend on how the
//! evaluations were scheduled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::archive::{Archive, CellIndex, Elite, FeatureSpace};
use crate::domains::{Domain, Evaluation};
use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineParams {
    pub init_batch: usize,
    pub batch_size: usize,
    pub iterations: u64,
    pub seed: u64,
}

impl EngineParams {
    pub fn validate(&self) -> Result<()> {
        if self.init_batch == 0 {
            return Err(Error::key("initial batch", "must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::key("batch size", "must be >= 1"));
        }
        Ok(())
    }

    /// Evaluations performed by a completed run.
    pub fn budget(&self) -> u64 {
        self.init_batch as u64 + self.iterations * self.batch_size as u64
    }
}

/// How candidate evaluation is scheduled. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Serial,
    /// Evaluate on a dedicated pool with this many threads.
    Parallel(usize),
}

impl Execution {
    pub(crate) fn pool(self) -> Result<Option<rayon::ThreadPool>> {
        match self {
            Execution::Serial => Ok(None),
            Execution::Parallel(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map(Some)
                .map_err(|e| Error::config(format!("thread pool: {e}"))),
        }
    }
}

/// Evaluates `items` with `f`, keeping input order.
pub(crate) fn map_ordered<T, U, F>(pool: Option<&rayon::ThreadPool>, items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    match pool {
        None => items.into_iter().map(f).collect(),
        Some(p) => p.install(|| items.into_par_iter().map(f).collect()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    /// 0 for the initial batch, `t + 1` after iteration `t`.
    pub iteration: u64,
    pub evaluations: u64,
    pub filled: usize,
    pub best_fitness: Option<f64>,
    pub clamped: u64,
    pub invalid: u64,
    pub resolution: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionChange {
    pub iteration: u64,
    pub from: Vec<usize>,
    pub to: Vec<usize>,
    pub filled_before: usize,
    pub filled_after: usize,
}

/// Birth record of a candidate that entered the archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageRecord {
    pub id: u64,
    pub parent_id: Option<u64>,
    pub birth_iteration: u64,
    pub descriptor: Vec<f64>,
    pub fitness: f64,
    pub parent_descriptor: Option<Vec<f64>>,
    pub parent_fitness: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub batches: Vec<BatchRecord>,
    pub resolution_changes: Vec<ResolutionChange>,
    pub lineage: Vec<LineageRecord>,
    pub evaluations: u64,
    pub invalid: u64,
    pub clamped: u64,
}

impl RunLog {
    pub fn lineage_record(&self, id: u64) -> Option<&LineageRecord> {
        // ids are assigned in evaluation order and records are appended in that order
        self.lineage
            .binary_search_by_key(&id, |r| r.id)
            .ok()
            .map(|i| &self.lineage[i])
    }
}

#[derive(Debug, Clone)]
struct ParentInfo {
    id: u64,
    cell: CellIndex,
    descriptor: Vec<f64>,
    fitness: f64,
}

struct Evaluated<G> {
    genome: G,
    eval: Evaluation,
    parent: Option<ParentInfo>,
}

/// Stepwise MAP-Elites run over a borrowed domain.
pub struct MapElites<'d, D: Domain> {
    domain: &'d D,
    params: EngineParams,
    archive: Archive<D::Genome>,
    log: RunLog,
    pool: Option<rayon::ThreadPool>,
    next_iteration: u64,
    next_step: usize,
    best: Option<f64>,
    initialized: bool,
}

impl<'d, D: Domain> MapElites<'d, D> {
    pub fn new(
        domain: &'d D,
        space: FeatureSpace,
        params: EngineParams,
        execution: Execution,
    ) -> Result<Self> {
        params.validate()?;
        let dims = domain.descriptor_bounds().len();
        if space.dims() != dims {
            return Err(Error::config(format!(
                "feature space has {} dimensions, domain `{}` produces {dims}",
                space.dims(),
                domain.name()
            )));
        }
        Ok(Self {
            domain,
            params,
            archive: Archive::new(space),
            log: RunLog::default(),
            pool: execution.pool()?,
            next_iteration: 0,
            next_step: 0,
            best: None,
            initialized: false,
        })
    }

    pub fn archive(&self) -> &Archive<D::Genome> {
        &self.archive
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn params(&self) -> &EngineParams {
        &self.params
    }

    /// Next iteration to run.
    pub fn iteration(&self) -> u64 {
        self.next_iteration
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn is_finished(&self) -> bool {
        self.initialized && self.next_iteration >= self.params.iterations
    }

    /// Evaluates the random initial batch and inserts it.
    pub fn initialize(&mut self) -> Result<()> {
        if self.initialized {
            return Err(Error::config("run already initialised"));
        }
        let seed = self.params.seed;
        let domain = self.domain;
        let slots: Vec<u64> = (0..self.params.init_batch as u64).collect();
        let results = map_ordered(self.pool.as_ref(), slots, |slot| {
            let mut rng = substream(seed, Purpose::Init, 0, slot);
            let genome = domain.random_genome(&mut rng);
            let eval = domain.evaluate(&genome);
            Evaluated {
                genome,
                eval,
                parent: None,
            }
        });
        self.apply(0, 0, results);
        self.initialized = true;
        Ok(())
    }

    /// Applies every schedule step whose threshold equals the next iteration.
    pub fn apply_resolution_schedule(&mut self) -> Result<()> {
        let t = self.next_iteration;
        let schedule = self.archive.space().schedule().to_vec();
        while let Some(step) = schedule.get(self.next_step) {
            if step.iteration > t {
                break;
            }
            let from = self.archive.resolution().to_vec();
            let filled_before = self.archive.filled_count();
            self.archive.subdivide(&step.resolution)?;
            self.log.resolution_changes.push(ResolutionChange {
                iteration: t,
                from,
                to: step.resolution.clone(),
                filled_before,
                filled_after: self.archive.filled_count(),
            });
            self.next_step += 1;
        }
        Ok(())
    }

    /// Runs one generate/evaluate/apply cycle.
    pub fn step_batch(&mut self) -> Result<()> {
        if !self.initialized {
            return Err(Error::config("step_batch called before initialisation"));
        }
        if self.archive.is_empty() {
            return Err(Error::EmptyArchive);
        }
        let t = self.next_iteration;
        let seed = self.params.seed;
        let domain = self.domain;
        let archive = &self.archive;
        let slots: Vec<u64> = (0..self.params.batch_size as u64).collect();
        let results = map_ordered(self.pool.as_ref(), slots, |slot| {
            let mut rng = substream(seed, Purpose::Variation, t, slot);
            let parent = archive
                .random_elite(&mut rng)
                .expect("initialised archive is never empty");
            let genome = domain.mutate(&parent.genome, &mut rng);
            let eval = domain.evaluate(&genome);
            let cell = archive
                .space()
                .bin(&parent.descriptor)
                .map(|b| b.cell)
                .expect("stored descriptors are finite");
            Evaluated {
                genome,
                eval,
                parent: Some(ParentInfo {
                    id: parent.id,
                    cell,
                    descriptor: parent.descriptor.clone(),
                    fitness: parent.fitness,
                }),
            }
        });
        let first_id = self.params.init_batch as u64 + t * self.params.batch_size as u64;
        self.apply(t + 1, first_id, results);
        self.next_iteration += 1;
        Ok(())
    }

    fn apply(&mut self, birth: u64, first_id: u64, results: Vec<Evaluated<D::Genome>>) {
        let mut clamped = 0;
        let mut invalid = 0;
        for (offset, r) in results.into_iter().enumerate() {
            let id = first_id + offset as u64;
            self.log.evaluations += 1;
            if !r.eval.is_valid() {
                invalid += 1;
                continue;
            }
            let binned = match self.archive.space().bin(&r.eval.descriptor) {
                Ok(b) => b,
                Err(_) => {
                    invalid += 1;
                    continue;
                }
            };
            if binned.clamped {
                clamped += 1;
            }
            let record = LineageRecord {
                id,
                parent_id: r.parent.as_ref().map(|p| p.id),
                birth_iteration: birth,
                descriptor: r.eval.descriptor.clone(),
                fitness: r.eval.fitness,
                parent_descriptor: r.parent.as_ref().map(|p| p.descriptor.clone()),
                parent_fitness: r.parent.as_ref().map(|p| p.fitness),
            };
            let fitness = r.eval.fitness;
            let elite = Elite {
                genome: r.genome,
                fitness,
                descriptor: r.eval.descriptor,
                birth_iteration: birth,
                parent_cell: r.parent.as_ref().map(|p| p.cell.clone()),
                parent_descriptor: r.parent.map(|p| p.descriptor),
                id,
                parent_id: record.parent_id,
            };
            if self.archive.place(&binned.cell, elite).stored() {
                self.log.lineage.push(record);
                self.best = Some(self.best.map_or(fitness, |b| b.max(fitness)));
            }
        }
        self.log.clamped += clamped;
        self.log.invalid += invalid;
        self.log.batches.push(BatchRecord {
            iteration: birth,
            evaluations: self.log.evaluations,
            filled: self.archive.filled_count(),
            best_fitness: self.best,
            clamped,
            invalid,
            resolution: self.archive.resolution().to_vec(),
        });
    }

    /// Runs the remaining schedule to completion.
    pub fn run(&mut self) -> Result<()> {
        if !self.initialized {
            self.initialize()?;
        }
        while self.next_iteration < self.params.iterations {
            self.apply_resolution_schedule()?;
            self.step_batch()?;
        }
        Ok(())
    }

    pub fn into_parts(self) -> (Archive<D::Genome>, RunLog) {
        (self.archive, self.log)
    }
}

/// Runs MAP-Elites from scratch and returns the final map with its log.
pub fn run_map_elites<D: Domain>(
    domain: &D,
    space: FeatureSpace,
    params: &EngineParams,
    execution: Execution,
) -> Result<(Archive<D::Genome>, RunLog)> {
    let mut me = MapElites::new(domain, space, *params, execution)?;
    me.run()?;
    Ok(me.into_parts())
}
