use rand::Rng;

use crate::archive::{Archive, FeatureSpace};
use crate::domains::Domain;
use crate::engine::{Execution, RunLog};
use crate::error::Result;
use crate::rng::seeded;

use super::{ControlParams, Individual, Recorder};

fn best_index<G>(pop: &[Individual<G>]) -> usize {
    let mut best = 0;
    for (i, ind) in pop.iter().enumerate() {
        if ind.fitness > pop[best].fitness {
            best = i;
        }
    }
    best
}

fn tournament<'a, G, R: Rng + ?Sized>(pop: &'a [Individual<G>], k: usize, rng: &mut R) -> &'a Individual<G> {
    let mut winner = &pop[rng.random_range(0..pop.len())];
    for _ in 1..k {
        let c = &pop[rng.random_range(0..pop.len())];
        if c.fitness > winner.fitness {
            winner = c;
        }
    }
    winner
}

/// Generational EA selecting on fitness only, keeping the best individual.
pub fn run_traditional_ea<D: Domain>(
    domain: &D,
    space: FeatureSpace,
    budget: u64,
    seed: u64,
    params: &ControlParams,
    execution: Execution,
) -> Result<(Archive<D::Genome>, RunLog)> {
    params.validate(budget)?;
    let mut rec = Recorder::new(domain, space, budget, execution)?;
    let mut rng = seeded(seed);
    let init = (0..params.pop_size).map(|_| domain.random_genome(&mut rng)).collect();
    let mut pop = rec.evaluate(init, 0);
    let mut generation = 1;
    while rec.remaining() > 0 {
        let elite = pop[best_index(&pop)].clone();
        let n = (params.pop_size as u64 - 1).min(rec.remaining()) as usize;
        let children = (0..n)
            .map(|_| {
                let parent = tournament(&pop, params.tournament_size, &mut rng);
                domain.mutate(&parent.genome, &mut rng)
            })
            .collect();
        let mut next = vec![elite];
        next.extend(rec.evaluate(children, generation));
        pop = next;
        generation += 1;
    }
    Ok(rec.finish())
}
