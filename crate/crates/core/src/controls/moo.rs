//! Two-objective controls: EA with a diversity objective, and novelty search
//! with local competition. Both rank with non-dominated sorting and crowding
//! distance and run a (mu + lambda) loop.

use std::cmp::Ordering;

use rand::Rng;

use crate::archive::{Archive, FeatureSpace};
use crate::domains::Domain;
use crate::engine::{Execution, RunLog};
use crate::error::Result;
use crate::rng::seeded;

use super::sorting::{rank_and_crowding, select_survivors};
use super::{euclidean, ControlParams, Individual, Recorder};

/// Mean descriptor distance from each point to every other point.
pub fn diversity_scores(descriptors: &[Vec<f64>]) -> Vec<f64> {
    let n = descriptors.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut sums = vec![0.0; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(&descriptors[i], &descriptors[j]);
            sums[i] += d;
            sums[j] += d;
        }
    }
    sums.into_iter().map(|s| s / (n - 1) as f64).collect()
}

/// `(local competition, novelty)` for every member of `pool`.
///
/// Neighbours are the `k` nearest points among the rest of `pool` plus the
/// novelty `archive` (fewer when not enough exist). Local competition counts
/// neighbours with lower fitness; novelty is the mean distance to them.
pub fn ns_lc_scores(
    pool: &[(Vec<f64>, f64)],
    archive: &[(Vec<f64>, f64)],
    k: usize,
) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(pool.len());
    let mut dists: Vec<(f64, f64)> = Vec::with_capacity(pool.len() + archive.len());
    for (i, (desc, fit)) in pool.iter().enumerate() {
        dists.clear();
        for (j, (d, f)) in pool.iter().enumerate() {
            if j != i {
                dists.push((euclidean(desc, d), *f));
            }
        }
        for (d, f) in archive {
            dists.push((euclidean(desc, d), *f));
        }
        let kk = k.min(dists.len());
        if kk == 0 {
            out.push((0.0, 0.0));
            continue;
        }
        if kk < dists.len() {
            dists.select_nth_unstable_by(kk - 1, |a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        }
        let near = &dists[..kk];
        let beaten = near.iter().filter(|(_, f)| f < fit).count() as f64;
        let novelty = near.iter().map(|(d, _)| d).sum::<f64>() / kk as f64;
        out.push((beaten, novelty));
    }
    out
}

fn binary_tournament<R: Rng + ?Sized>(rank: &[usize], crowd: &[f64], rng: &mut R) -> usize {
    let a = rng.random_range(0..rank.len());
    let b = rng.random_range(0..rank.len());
    match rank[a].cmp(&rank[b]) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => {
            if crowd[b] > crowd[a] {
                b
            } else {
                a
            }
        }
    }
}

/// Shared loop; `objectives` scores a pool given the novelty archive.
fn evolve<D, F>(
    domain: &D,
    space: FeatureSpace,
    budget: u64,
    seed: u64,
    params: &ControlParams,
    execution: Execution,
    archive_probability: f64,
    objectives: F,
) -> Result<(Archive<D::Genome>, RunLog)>
where
    D: Domain,
    F: Fn(&[Individual<D::Genome>], &[(Vec<f64>, f64)]) -> Vec<Vec<f64>>,
{
    params.validate(budget)?;
    let mut rec = Recorder::new(domain, space, budget, execution)?;
    let mut rng = seeded(seed);
    let mut novelty_archive: Vec<(Vec<f64>, f64)> = Vec::new();

    let init = (0..params.pop_size).map(|_| domain.random_genome(&mut rng)).collect();
    let mut pop = rec.evaluate(init, 0);
    for ind in &pop {
        if archive_probability > 0.0 && rng.random_bool(archive_probability) {
            novelty_archive.push((ind.descriptor.clone(), ind.fitness));
        }
    }
    let mut generation = 1;
    while rec.remaining() > 0 {
        let scores = objectives(&pop, &novelty_archive);
        let (rank, crowd) = rank_and_crowding(&scores);
        let n = (params.pop_size as u64).min(rec.remaining()) as usize;
        let children = (0..n)
            .map(|_| {
                let p = binary_tournament(&rank, &crowd, &mut rng);
                domain.mutate(&pop[p].genome, &mut rng)
            })
            .collect();
        let offspring = rec.evaluate(children, generation);
        for ind in &offspring {
            if archive_probability > 0.0 && rng.random_bool(archive_probability) {
                novelty_archive.push((ind.descriptor.clone(), ind.fitness));
            }
        }
        pop.extend(offspring);
        let scores = objectives(&pop, &novelty_archive);
        let keep = select_survivors(&scores, params.pop_size);
        let mut slots: Vec<Option<Individual<D::Genome>>> = pop.into_iter().map(Some).collect();
        pop = keep.into_iter().filter_map(|i| slots[i].take()).collect();
        generation += 1;
    }
    Ok(rec.finish())
}

/// Maximises fitness and mean feature-space distance to the rest of the population.
pub fn run_ea_diversity<D: Domain>(
    domain: &D,
    space: FeatureSpace,
    budget: u64,
    seed: u64,
    params: &ControlParams,
    execution: Execution,
) -> Result<(Archive<D::Genome>, RunLog)> {
    evolve(domain, space, budget, seed, params, execution, 0.0, |pop, _| {
        let descs: Vec<Vec<f64>> = pop.iter().map(|i| i.descriptor.clone()).collect();
        diversity_scores(&descs)
            .into_iter()
            .zip(pop)
            .map(|(d, i)| vec![i.fitness, d])
            .collect()
    })
}

/// Novelty search with local competition over the `k` nearest neighbours.
pub fn run_ns_lc<D: Domain>(
    domain: &D,
    space: FeatureSpace,
    budget: u64,
    seed: u64,
    params: &ControlParams,
    execution: Execution,
) -> Result<(Archive<D::Genome>, RunLog)> {
    let k = params.k_neighbors;
    evolve(
        domain,
        space,
        budget,
        seed,
        params,
        execution,
        params.archive_probability,
        |pop, archive| {
            let pool: Vec<(Vec<f64>, f64)> =
                pop.iter().map(|i| (i.descriptor.clone(), i.fitness)).collect();
            ns_lc_scores(&pool, archive, k)
                .into_iter()
                .map(|(lc, nov)| vec![lc, nov])
                .collect()
        },
    )
}
