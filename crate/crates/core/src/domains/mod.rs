//! Benchmark domains: genome encodings, variation operators and evaluation.

pub mod arm;
pub mod modularity;
pub mod retina;
pub mod synthetic;

use std::fmt::Debug;

use rand::Rng;

use crate::error::Result;

pub use arm::{ArmConfig, ArmDomain, ArmGenome};
pub use retina::{RetinaConfig, RetinaDomain, RetinaGenome};
pub use synthetic::{SyntheticConfig, SyntheticDomain, SyntheticGenome, SyntheticMode};

/// Fitness and feature descriptor of one genome.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub fitness: f64,
    pub descriptor: Vec<f64>,
}

impl Evaluation {
    pub fn is_valid(&self) -> bool {
        self.fitness.is_finite() && self.descriptor.iter().all(|v| v.is_finite())
    }
}

/// A search problem.
///
/// `evaluate` must be a pure function of the genome: the engine calls it from
/// several threads at once and relies on identical genomes producing
/// bit-identical evaluations.
pub trait Domain: Sync {
    type Genome: Clone + PartialEq + Debug + Send + Sync;

    fn name(&self) -> &'static str;

    /// Closed interval per descriptor dimension.
    fn descriptor_bounds(&self) -> Vec<(f64, f64)>;

    fn descriptor_labels(&self) -> Vec<String> {
        (0..self.descriptor_bounds().len())
            .map(|d| format!("dim{d}"))
            .collect()
    }

    fn random_genome<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Genome;

    /// Returns a child that differs from `parent`.
    fn mutate<R: Rng + ?Sized>(&self, parent: &Self::Genome, rng: &mut R) -> Self::Genome;

    fn evaluate(&self, genome: &Self::Genome) -> Evaluation;

    /// Canonical text form used in archive files.
    fn encode(&self, genome: &Self::Genome) -> String;

    fn decode(&self, text: &str) -> Result<Self::Genome>;
}
