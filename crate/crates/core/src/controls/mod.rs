//! Baseline algorithms compared against MAP-Elites.
//!
//! None of these keep a map while searching. Every evaluation they perform
//! is streamed through an [`EliteAccumulator`], which keeps the best entry
//! seen per cell, so each control yields a map built from its complete
//! evaluation history under exactly the same budget.

mod ea;
mod moo;
mod random;
pub mod sorting;

use serde::{Deserialize, Serialize};

use crate::archive::{Archive, Elite, FeatureSpace};
use crate::domains::Domain;
use crate::engine::{map_ordered, BatchRecord, Execution, RunLog};
use crate::error::{Error, Result};

pub use ea::run_traditional_ea;
pub use moo::{diversity_scores, ns_lc_scores, run_ea_diversity, run_ns_lc};
pub use random::run_random_sampling;
pub use sorting::nondominated_sort;

/// One evaluation performed by a control.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalLogEntry<G> {
    pub index: u64,
    pub genome: G,
    pub fitness: f64,
    pub descriptor: Vec<f64>,
}

/// Best entry per cell over a stream of evaluations; the first entry wins ties.
pub struct EliteAccumulator<G> {
    space: FeatureSpace,
    best: Vec<Option<(EvalLogEntry<G>, u64)>>,
    filled: usize,
    pub clamped: u64,
    pub invalid: u64,
}

impl<G> EliteAccumulator<G> {
    pub fn new(space: FeatureSpace) -> Self {
        let mut best = Vec::new();
        best.resize_with(space.cell_count(), || None);
        Self {
            space,
            best,
            filled: 0,
            clamped: 0,
            invalid: 0,
        }
    }

    pub fn filled(&self) -> usize {
        self.filled
    }

    /// Adds an entry produced during `generation`.
    pub fn push(&mut self, entry: EvalLogEntry<G>, generation: u64) {
        if !entry.fitness.is_finite() {
            self.invalid += 1;
            return;
        }
        let binned = match self.space.bin(&entry.descriptor) {
            Ok(b) => b,
            Err(_) => {
                self.invalid += 1;
                return;
            }
        };
        if binned.clamped {
            self.clamped += 1;
        }
        let slot = &mut self.best[self.space.flat(&binned.cell)];
        let better = match slot {
            None => {
                self.filled += 1;
                true
            }
            Some((cur, _)) => entry.fitness > cur.fitness,
        };
        if better {
            *slot = Some((entry, generation));
        }
    }

    pub fn into_archive(self) -> Archive<G> {
        let mut archive = Archive::new(self.space.clone());
        for (flat, slot) in self.best.into_iter().enumerate() {
            if let Some((e, generation)) = slot {
                let cell = self.space.unflat(flat);
                let elite = Elite {
                    genome: e.genome,
                    fitness: e.fitness,
                    descriptor: e.descriptor,
                    birth_iteration: generation,
                    parent_cell: None,
                    parent_descriptor: None,
                    id: e.index,
                    parent_id: None,
                };
                archive.place(&cell, elite);
            }
        }
        archive
    }
}

/// Map holding the best entry per cell of an evaluation log.
pub fn elites_from_log<G, I>(log: I, space: FeatureSpace) -> Archive<G>
where
    I: IntoIterator<Item = EvalLogEntry<G>>,
{
    let mut acc = EliteAccumulator::new(space);
    for e in log {
        acc.push(e, 0);
    }
    acc.into_archive()
}

/// Settings shared by the population-based controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlParams {
    #[serde(rename = "population size")]
    pub pop_size: usize,
    #[serde(rename = "tournament size")]
    pub tournament_size: usize,
    #[serde(rename = "neighbors")]
    pub k_neighbors: usize,
    #[serde(rename = "archive probability")]
    pub archive_probability: f64,
}

impl Default for ControlParams {
    fn default() -> Self {
        Self {
            pop_size: 256,
            tournament_size: 2,
            k_neighbors: 15,
            archive_probability: 0.02,
        }
    }
}

impl ControlParams {
    pub fn validate(&self, budget: u64) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::key("population size", "must be >= 2"));
        }
        if budget < self.pop_size as u64 {
            return Err(Error::key(
                "budget",
                format!("must be at least the population size ({})", self.pop_size),
            ));
        }
        if self.tournament_size == 0 {
            return Err(Error::key("tournament size", "must be >= 1"));
        }
        if self.k_neighbors == 0 {
            return Err(Error::key("neighbors", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.archive_probability) {
            return Err(Error::key("archive probability", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// An evaluated member of a control population.
#[derive(Debug, Clone)]
pub(crate) struct Individual<G> {
    pub genome: G,
    pub fitness: f64,
    pub descriptor: Vec<f64>,
}

/// Budgeted evaluator that streams every evaluation into the map.
pub(crate) struct Recorder<'d, D: Domain> {
    domain: &'d D,
    pool: Option<rayon::ThreadPool>,
    budget: u64,
    acc: EliteAccumulator<D::Genome>,
    log: RunLog,
    best: Option<f64>,
    lower_corner: Vec<f64>,
}

impl<'d, D: Domain> Recorder<'d, D> {
    pub fn new(domain: &'d D, space: FeatureSpace, budget: u64, execution: Execution) -> Result<Self> {
        if budget == 0 {
            return Err(Error::key("budget", "must be >= 1"));
        }
        if space.dims() != domain.descriptor_bounds().len() {
            return Err(Error::config("feature space does not match the domain"));
        }
        let lower_corner = space.bounds().iter().map(|b| b.0).collect();
        Ok(Self {
            domain,
            pool: execution.pool()?,
            budget,
            acc: EliteAccumulator::new(space),
            log: RunLog::default(),
            best: None,
            lower_corner,
        })
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.log.evaluations
    }

    /// Evaluates as many genomes as the budget allows, in order.
    pub fn evaluate(&mut self, mut genomes: Vec<D::Genome>, generation: u64) -> Vec<Individual<D::Genome>> {
        genomes.truncate(self.remaining() as usize);
        let domain = self.domain;
        let evals = map_ordered(self.pool.as_ref(), genomes, |g| {
            let e = domain.evaluate(&g);
            (g, e)
        });
        let mut out = Vec::with_capacity(evals.len());
        let invalid_before = self.acc.invalid;
        let clamped_before = self.acc.clamped;
        for (genome, e) in evals {
            let index = self.log.evaluations;
            self.log.evaluations += 1;
            let valid = e.is_valid();
            if valid {
                self.best = Some(self.best.map_or(e.fitness, |b| b.max(e.fitness)));
            }
            self.acc.push(
                EvalLogEntry {
                    index,
                    genome: genome.clone(),
                    fitness: e.fitness,
                    descriptor: e.descriptor.clone(),
                },
                generation,
            );
            // invalid individuals stay in the population but can never win
            let (fitness, descriptor) = if valid {
                (e.fitness, e.descriptor)
            } else {
                (f64::NEG_INFINITY, self.lower_corner.clone())
            };
            out.push(Individual {
                genome,
                fitness,
                descriptor,
            });
        }
        let invalid = self.acc.invalid - invalid_before;
        self.log.invalid += invalid;
        self.log.clamped += self.acc.clamped - clamped_before;
        self.log.batches.push(BatchRecord {
            iteration: generation,
            evaluations: self.log.evaluations,
            filled: self.acc.filled(),
            best_fitness: self.best,
            clamped: self.acc.clamped - clamped_before,
            invalid,
            resolution: self.acc.space.resolution().to_vec(),
        });
        out
    }

    pub fn finish(self) -> (Archive<D::Genome>, RunLog) {
        (self.acc.into_archive(), self.log)
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
