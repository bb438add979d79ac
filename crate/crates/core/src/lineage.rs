//! Parent-to-elite arrows and ancestor chains recovered from a run log.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::seq::index::sample;

use crate::archive::{fmt_f64, Archive};
use crate::engine::{LineageRecord, RunLog};
use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};

/// Where an elite's parent sat when it was selected.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrow {
    pub elite_id: u64,
    pub parent_descriptor: Vec<f64>,
    pub elite_descriptor: Vec<f64>,
    pub parent_fitness: f64,
    pub elite_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Arrows {
    pub arrows: Vec<Arrow>,
    /// Sampled elites without a parent (initial batch).
    pub omitted: usize,
    pub sampled: usize,
}

/// Arrows for the final elites, or for `sample` of them chosen with `seed`.
pub fn export_lineage_arrows<G>(
    log: &RunLog,
    archive: &Archive<G>,
    sample_size: Option<usize>,
    seed: u64,
) -> Result<Arrows> {
    let ids: Vec<u64> = archive.elites().map(|e| e.id).collect();
    arrows_for_ids(log, &ids, sample_size, seed)
}

pub(crate) fn arrows_for_ids(
    log: &RunLog,
    ids: &[u64],
    sample_size: Option<usize>,
    seed: u64,
) -> Result<Arrows> {
    let mut chosen: Vec<u64> = match sample_size {
        Some(n) if n < ids.len() => {
            let mut rng = substream(seed, Purpose::Sampling, 0, 0);
            sample(&mut rng, ids.len(), n).into_iter().map(|i| ids[i]).collect()
        }
        _ => ids.to_vec(),
    };
    chosen.sort_unstable();
    let mut out = Arrows {
        sampled: chosen.len(),
        ..Arrows::default()
    };
    for id in chosen {
        let r = log
            .lineage_record(id)
            .ok_or_else(|| Error::NotFound(format!("elite {id} in lineage log")))?;
        match (&r.parent_descriptor, r.parent_fitness) {
            (Some(pd), Some(pf)) => out.arrows.push(Arrow {
                elite_id: id,
                parent_descriptor: pd.clone(),
                elite_descriptor: r.descriptor.clone(),
                parent_fitness: pf,
                elite_fitness: r.fitness,
            }),
            _ => out.omitted += 1,
        }
    }
    Ok(out)
}

/// Ancestor chain of `id`, starting at the elite and ending at its
/// generation-0 ancestor.
pub fn export_lineage_trace(log: &RunLog, id: u64) -> Result<Vec<LineageRecord>> {
    let index: HashMap<u64, &LineageRecord> = log.lineage.iter().map(|r| (r.id, r)).collect();
    let mut chain = Vec::new();
    let mut current = Some(id);
    while let Some(cur) = current {
        let r = index
            .get(&cur)
            .ok_or_else(|| Error::NotFound(format!("id {cur} in lineage log")))?;
        chain.push((*r).clone());
        current = r.parent_id;
    }
    Ok(chain)
}

pub fn write_arrows_csv<W: Write>(out: W, arrows: &[Arrow], dims: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["elite_id".to_string()];
    header.extend((0..dims).map(|d| format!("parent_desc_{d}")));
    header.extend((0..dims).map(|d| format!("elite_desc_{d}")));
    header.push("parent_fitness".into());
    header.push("elite_fitness".into());
    w.write_record(&header)?;
    for a in arrows {
        let mut row = vec![a.elite_id.to_string()];
        row.extend(a.parent_descriptor.iter().map(|&v| fmt_f64(v)));
        row.extend(a.elite_descriptor.iter().map(|&v| fmt_f64(v)));
        row.push(fmt_f64(a.parent_fitness));
        row.push(fmt_f64(a.elite_fitness));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(out: W, trace_id: u64, chain: &[LineageRecord], dims: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["trace_id", "step", "id", "birth_iteration"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..dims).map(|d| format!("desc_{d}")));
    header.push("fitness".into());
    w.write_record(&header)?;
    for (step, r) in chain.iter().enumerate() {
        let mut row = vec![
            trace_id.to_string(),
            step.to_string(),
            r.id.to_string(),
            r.birth_iteration.to_string(),
        ];
        row.extend(r.descriptor.iter().map(|&v| fmt_f64(v)));
        row.push(fmt_f64(r.fitness));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Full birth log of a run, one row per stored candidate.
pub fn write_lineage_csv<W: Write>(out: W, records: &[LineageRecord], dims: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["id", "parent_id", "birth_iteration", "fitness", "parent_fitness"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..dims).map(|d| format!("desc_{d}")));
    header.extend((0..dims).map(|d| format!("parent_desc_{d}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.id.to_string(),
            r.parent_id.map(|p| p.to_string()).unwrap_or_default(),
            r.birth_iteration.to_string(),
            fmt_f64(r.fitness),
            r.parent_fitness.map(fmt_f64).unwrap_or_default(),
        ];
        row.extend(r.descriptor.iter().map(|&v| fmt_f64(v)));
        match &r.parent_descriptor {
            Some(pd) => row.extend(pd.iter().map(|&v| fmt_f64(v))),
            None => row.extend(std::iter::repeat_n(String::new(), dims)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_lineage_csv<R: Read>(input: R) -> Result<(Vec<LineageRecord>, usize)> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.len() < 7 || (header.len() - 5) % 2 != 0 {
        return Err(Error::parse("lineage csv", "unexpected column count"));
    }
    let dims = (header.len() - 5) / 2;
    let mut records = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |m: String| Error::parse("lineage csv", format!("row {}: {m}", line + 1));
        let opt_u = |s: &str| -> Result<Option<u64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| bad(format!("{e}")))
            }
        };
        let opt_f = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| bad(format!("{e}")))
            }
        };
        let f = |s: &str| -> Result<f64> { s.parse().map_err(|e| bad(format!("{e}"))) };
        let descriptor = (0..dims).map(|d| f(&rec[5 + d])).collect::<Result<Vec<_>>>()?;
        let parent_descriptor = if rec[5 + dims].is_empty() {
            None
        } else {
            Some(
                (0..dims)
                    .map(|d| f(&rec[5 + dims + d]))
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        records.push(LineageRecord {
            id: opt_u(&rec[0])?.ok_or_else(|| bad("missing id".into()))?,
            parent_id: opt_u(&rec[1])?,
            birth_iteration: opt_u(&rec[2])?.ok_or_else(|| bad("missing birth".into()))?,
            fitness: f(&rec[3])?,
            parent_fitness: opt_f(&rec[4])?,
            descriptor,
            parent_descriptor,
        });
    }
    Ok((records, dims))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::FeatureSpace;
    use crate::domains::{SyntheticDomain, SyntheticMode};
    use crate::engine::{run_map_elites, EngineParams, Execution};

    fn run() -> (Archive<crate::domains::SyntheticGenome>, RunLog) {
        let d = SyntheticDomain::with_mode(SyntheticMode::Rastrigin);
        let s = FeatureSpace::new(vec![(0.0, 1.0); 2], vec![8, 8]).unwrap();
        let p = EngineParams {
            init_batch: 40,
            batch_size: 10,
            iterations: 60,
            seed: 3,
        };
        run_map_elites(&d, s, &p, Execution::Serial).unwrap()
    }

    #[test]
    fn arrow_accounting() {
        let (a, log) = run();
        let all = export_lineage_arrows(&log, &a, None, 0).unwrap();
        assert_eq!(all.sampled, a.filled_count());
        assert_eq!(all.arrows.len() + all.omitted, all.sampled);
        let roots = a.elites().filter(|e| e.parent_id.is_none()).count();
        assert_eq!(all.omitted, roots);
        for n in [0, 1, 5, 1000] {
            let s = export_lineage_arrows(&log, &a, Some(n), 9).unwrap();
            assert_eq!(s.sampled, n.min(a.filled_count()));
            assert_eq!(s.arrows.len() + s.omitted, s.sampled);
        }
    }

    #[test]
    fn traces_end_at_generation_zero() {
        let (a, log) = run();
        for e in a.elites() {
            let chain = export_lineage_trace(&log, e.id).unwrap();
            assert_eq!(chain[0].id, e.id);
            let last = chain.last().unwrap();
            assert_eq!(last.birth_iteration, 0);
            assert!(last.parent_id.is_none());
            assert!(chain.windows(2).all(|w| w[0].birth_iteration > w[1].birth_iteration));
            for r in &chain {
                assert!(r.descriptor.iter().all(|v| (0.0..=1.0).contains(v)));
            }
            if e.parent_id.is_none() {
                assert_eq!(chain.len(), 1);
            }
        }
        assert!(matches!(
            export_lineage_trace(&log, u64::MAX),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn lineage_csv_round_trip() {
        let (_, log) = run();
        let mut buf = Vec::new();
        write_lineage_csv(&mut buf, &log.lineage, 2).unwrap();
        let (back, dims) = read_lineage_csv(&buf[..]).unwrap();
        assert_eq!(dims, 2);
        assert_eq!(back, log.lineage);
    }
}
