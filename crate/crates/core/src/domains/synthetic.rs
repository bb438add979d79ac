//! Closed-form test domain on the unit hypercube.
//!
//! The first two genes are the descriptor. Fitness is either constant or a
//! normalised Rastrigin function of the remaining genes, mapped from `[0, 1]`
//! onto `[-5.12, 5.12]` so that the optimum sits at 0.5.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Domain, Evaluation};
use crate::error::{Error, Result};

const RASTRIGIN_A: f64 = 10.0;
const RASTRIGIN_HALF_WIDTH: f64 = 5.12;
/// Upper bound of one Rastrigin term on `[-5.12, 5.12]`.
const RASTRIGIN_TERM_MAX: f64 =
    RASTRIGIN_A + RASTRIGIN_HALF_WIDTH * RASTRIGIN_HALF_WIDTH + RASTRIGIN_A;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticMode {
    #[default]
    Rastrigin,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub genes: usize,
    pub mode: SyntheticMode,
    pub mutation_sigma: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            genes: 6,
            mode: SyntheticMode::Rastrigin,
            mutation_sigma: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticGenome(pub Vec<f64>);

#[derive(Debug, Clone)]
pub struct SyntheticDomain {
    config: SyntheticConfig,
    noise: Normal<f64>,
}

impl SyntheticDomain {
    pub fn new(config: SyntheticConfig) -> Result<Self> {
        if config.genes < 2 {
            return Err(Error::key("synthetic.genes", "need at least two genes"));
        }
        let noise = Normal::new(0.0, config.mutation_sigma)
            .map_err(|e| Error::key("synthetic.mutation_sigma", e.to_string()))?;
        Ok(Self { config, noise })
    }

    pub fn with_mode(mode: SyntheticMode) -> Self {
        Self::new(SyntheticConfig {
            mode,
            ..SyntheticConfig::default()
        })
        .expect("default synthetic config is valid")
    }

    pub fn config(&self) -> &SyntheticConfig {
        &self.config
    }

    fn rastrigin_fitness(rest: &[f64]) -> f64 {
        if rest.is_empty() {
            return 1.0;
        }
        let f: f64 = rest
            .iter()
            .map(|&g| {
                let x = (2.0 * g - 1.0) * RASTRIGIN_HALF_WIDTH;
                RASTRIGIN_A + x * x - RASTRIGIN_A * (TAU * x).cos()
            })
            .sum();
        1.0 - f / (rest.len() as f64 * RASTRIGIN_TERM_MAX)
    }
}

impl Domain for SyntheticDomain {
    type Genome = SyntheticGenome;

    fn name(&self) -> &'static str {
        "synthetic"
    }

    fn descriptor_bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0), (0.0, 1.0)]
    }

    fn random_genome<R: Rng + ?Sized>(&self, rng: &mut R) -> SyntheticGenome {
        SyntheticGenome((0..self.config.genes).map(|_| rng.random::<f64>()).collect())
    }

    fn mutate<R: Rng + ?Sized>(&self, parent: &SyntheticGenome, rng: &mut R) -> SyntheticGenome {
        let n = parent.0.len();
        let rate = 1.0 / n as f64;
        loop {
            let mut child = parent.clone();
            let forced = rng.random_range(0..n);
            for (i, g) in child.0.iter_mut().enumerate() {
                if i == forced || rng.random_bool(rate) {
                    *g = (*g + self.noise.sample(rng)).clamp(0.0, 1.0);
                }
            }
            if child != *parent {
                return child;
            }
        }
    }

    fn evaluate(&self, g: &SyntheticGenome) -> Evaluation {
        if g.0.len() < 2 {
            return Evaluation {
                fitness: f64::NAN,
                descriptor: vec![f64::NAN, f64::NAN],
            };
        }
        let fitness = match self.config.mode {
            SyntheticMode::Constant => 1.0,
            SyntheticMode::Rastrigin => Self::rastrigin_fitness(&g.0[2..]),
        };
        Evaluation {
            fitness,
            descriptor: vec![g.0[0], g.0[1]],
        }
    }

    fn encode(&self, g: &SyntheticGenome) -> String {
        g.0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    }

    fn decode(&self, text: &str) -> Result<SyntheticGenome> {
        let v = text
            .trim()
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse("synthetic genome", e.to_string()))?;
        if v.len() != self.config.genes {
            return Err(Error::parse("synthetic genome", "wrong number of genes"));
        }
        Ok(SyntheticGenome(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn constant_mode() {
        let d = SyntheticDomain::with_mode(SyntheticMode::Constant);
        let mut rng = seeded(1);
        for _ in 0..100 {
            let g = d.random_genome(&mut rng);
            let e = d.evaluate(&g);
            assert_eq!(e.fitness, 1.0);
            assert_eq!(e.descriptor, vec![g.0[0], g.0[1]]);
        }
    }

    #[test]
    fn rastrigin_optimum_is_one() {
        let d = SyntheticDomain::with_mode(SyntheticMode::Rastrigin);
        let g = SyntheticGenome(vec![0.3, 0.9, 0.5, 0.5, 0.5, 0.5]);
        assert_eq!(d.evaluate(&g).fitness, 1.0);
    }

    #[test]
    fn rastrigin_fitness_in_unit_interval() {
        let d = SyntheticDomain::with_mode(SyntheticMode::Rastrigin);
        let mut rng = seeded(2);
        for _ in 0..1000 {
            let f = d.evaluate(&d.random_genome(&mut rng)).fitness;
            assert!((0.0..=1.0).contains(&f));
        }
        let corner = SyntheticGenome(vec![0.0; 6]);
        assert!(d.evaluate(&corner).fitness < 0.5);
    }

    #[test]
    fn mutation_changes_and_stays_in_range() {
        let d = SyntheticDomain::with_mode(SyntheticMode::Rastrigin);
        let mut rng = seeded(3);
        let mut g = d.random_genome(&mut rng);
        for _ in 0..10_000 {
            let c = d.mutate(&g, &mut rng);
            assert_ne!(c, g);
            assert!(c.0.iter().all(|v| (0.0..=1.0).contains(v)));
            g = c;
        }
    }

    #[test]
    fn encoding_round_trips() {
        let d = SyntheticDomain::with_mode(SyntheticMode::Constant);
        let g = SyntheticGenome(vec![0.1, 0.2, 1.0 / 3.0, 0.0, 1.0, 0.7]);
        assert_eq!(d.decode(&d.encode(&g)).unwrap(), g);
        assert!(d.decode("0.1,0.2").is_err());
    }
}
