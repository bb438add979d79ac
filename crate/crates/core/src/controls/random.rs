use crate::archive::{Archive, FeatureSpace};
use crate::domains::Domain;
use crate::engine::{Execution, RunLog};
use crate::error::Result;
use crate::rng::seeded;

use super::Recorder;

/// Evaluates `budget` independent random genomes.
pub fn run_random_sampling<D: Domain>(
    domain: &D,
    space: FeatureSpace,
    budget: u64,
    seed: u64,
    execution: Execution,
) -> Result<(Archive<D::Genome>, RunLog)> {
    let mut rec = Recorder::new(domain, space, budget, execution)?;
    let mut rng = seeded(seed);
    // chunked only so the run log gets periodic records
    const CHUNK: u64 = 1000;
    let mut chunk = 0;
    while rec.remaining() > 0 {
        let n = rec.remaining().min(CHUNK);
        let genomes = (0..n).map(|_| domain.random_genome(&mut rng)).collect();
        rec.evaluate(genomes, chunk);
        chunk += 1;
    }
    Ok(rec.finish())
}
