//! Map-quality metrics measured against a cross-run reference map.
//!
//! All ratios compare a map's fitness in a cell with the best fitness any
//! run reached in that cell. Reference cells whose best fitness is not
//! positive cannot serve as a denominator and are left out of the
//! reliability and precision sums and counts. Ratios below zero (a map
//! holding a negative fitness where the reference is positive) count as 0.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::archive::DenseMap;
use crate::error::{Error, Result};

/// Cellwise best fitness over a set of maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMap {
    map: DenseMap,
    contributors: usize,
}

impl ReferenceMap {
    /// Builds the reference from maps that all share one resolution.
    pub fn build<'a, I>(maps: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a DenseMap>,
    {
        let mut iter = maps.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::Undefined("reference map needs at least one map".into()))?;
        let mut acc = first.clone();
        let mut contributors = 1;
        for m in iter {
            check_resolution(&acc.resolution, &m.resolution)?;
            for (a, b) in acc.values.iter_mut().zip(&m.values) {
                if let Some(v) = b {
                    *a = Some(a.map_or(*v, |cur| cur.max(*v)));
                }
            }
            contributors += 1;
        }
        Ok(Self {
            map: acc,
            contributors,
        })
    }

    pub fn resolution(&self) -> &[usize] {
        &self.map.resolution
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.map.values
    }

    pub fn as_dense(&self) -> &DenseMap {
        &self.map
    }

    pub fn contributors(&self) -> usize {
        self.contributors
    }

    /// Number of cells filled by any contributor.
    pub fn filled_count(&self) -> usize {
        self.map.filled_count()
    }

    /// Cells usable as a ratio denominator.
    pub fn positive_count(&self) -> usize {
        self.map.values.iter().flatten().filter(|v| **v > 0.0).count()
    }

    /// SHA-256 over the resolution and the bit patterns of every cell.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for r in &self.map.resolution {
            h.update((*r as u64).to_le_bytes());
        }
        for v in &self.map.values {
            match v {
                Some(x) => {
                    h.update([1u8]);
                    h.update(x.to_bits().to_le_bytes());
                }
                None => h.update([0u8]),
            }
        }
        hex::encode(h.finalize())
    }
}

fn check_resolution(expected: &[usize], found: &[usize]) -> Result<()> {
    if expected != found {
        return Err(Error::ResolutionMismatch {
            expected: expected.to_vec(),
            found: found.to_vec(),
        });
    }
    Ok(())
}

fn ratio(m: f64, reference: f64) -> f64 {
    (m / reference).max(0.0)
}

/// Mean of `m / M` over every positive reference cell, with 0 where `m` is unfilled.
pub fn global_reliability(m: &DenseMap, reference: &ReferenceMap) -> Result<f64> {
    check_resolution(reference.resolution(), &m.resolution)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (mv, rv) in m.values.iter().zip(reference.values()) {
        match rv {
            Some(r) if *r > 0.0 => {
                n += 1;
                if let Some(v) = mv {
                    sum += ratio(*v, *r);
                }
            }
            _ => {}
        }
    }
    if n == 0 {
        return Err(Error::Undefined(
            "global reliability: reference map has no cell with positive fitness".into(),
        ));
    }
    Ok(sum / n as f64)
}

/// Mean of `m / M` over the cells `m` fills; `None` when there are none.
pub fn precision(m: &DenseMap, reference: &ReferenceMap) -> Result<Option<f64>> {
    check_resolution(reference.resolution(), &m.resolution)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (mv, rv) in m.values.iter().zip(reference.values()) {
        if let (Some(v), Some(r)) = (mv, rv) {
            if *r > 0.0 {
                n += 1;
                sum += ratio(*v, *r);
            }
        }
    }
    Ok((n > 0).then(|| sum / n as f64))
}

/// Filled cells of `m` over the cells filled by any contributor.
pub fn coverage(m: &DenseMap, reference: &ReferenceMap) -> Result<f64> {
    check_resolution(reference.resolution(), &m.resolution)?;
    let attainable = reference.filled_count();
    if attainable == 0 {
        return Err(Error::Undefined("coverage: no run filled any cell".into()));
    }
    Ok(m.filled_count() as f64 / attainable as f64)
}

/// Best fitness in `m` over the best fitness anywhere in the reference.
pub fn global_performance(m: &DenseMap, reference: &ReferenceMap) -> Result<Option<f64>> {
    check_resolution(reference.resolution(), &m.resolution)?;
    let best = reference.as_dense().max().filter(|b| *b > 0.0);
    Ok(match (m.max(), best) {
        (Some(v), Some(b)) => Some(ratio(v, b)),
        _ => None,
    })
}

/// The four metrics for one map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub global_performance: Option<f64>,
    pub global_reliability: f64,
    pub precision: Option<f64>,
    pub coverage: f64,
    pub filled: usize,
    pub reference_digest: String,
}

impl MetricsReport {
    pub fn compute(m: &DenseMap, reference: &ReferenceMap) -> Result<Self> {
        Ok(Self {
            global_performance: global_performance(m, reference)?,
            global_reliability: global_reliability(m, reference)?,
            precision: precision(m, reference)?,
            coverage: coverage(m, reference)?,
            filled: m.filled_count(),
            reference_digest: reference.digest(),
        })
    }

    /// Value by metric name as used in report files.
    pub fn get(&self, metric: &str) -> Option<f64> {
        match metric {
            "global_performance" => self.global_performance,
            "global_reliability" => Some(self.global_reliability),
            "precision" => self.precision,
            "coverage" => Some(self.coverage),
            _ => None,
        }
    }
}

pub const METRIC_NAMES: [&str; 4] = ["global_performance", "global_reliability", "precision", "coverage"];

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense(values: &[Option<f64>]) -> DenseMap {
        DenseMap {
            resolution: vec![values.len()],
            values: values.to_vec(),
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn reference_is_cellwise_max() {
        let a = dense(&[Some(1.0), None]);
        let b = dense(&[None, Some(2.0)]);
        let r = ReferenceMap::build([&a, &b]).unwrap();
        assert_eq!(r.values(), &[Some(1.0), Some(2.0)]);
        assert_eq!(r.contributors(), 2);
    }

    #[test]
    fn single_map_reference_is_itself() {
        let a = dense(&[Some(0.3), None, Some(0.9)]);
        assert_eq!(ReferenceMap::build([&a]).unwrap().as_dense(), &a);
    }

    #[test]
    fn mismatched_resolution_is_rejected() {
        let a = dense(&[Some(1.0)]);
        let b = dense(&[Some(1.0), None]);
        assert!(matches!(
            ReferenceMap::build([&a, &b]),
            Err(Error::ResolutionMismatch { .. })
        ));
        let r = ReferenceMap::build([&a]).unwrap();
        assert!(global_reliability(&b, &r).is_err());
    }

    #[test]
    fn worked_examples() {
        let r = ReferenceMap::build([&dense(&[Some(1.0), None, Some(4.0)])]).unwrap();
        let m = dense(&[Some(0.5), None, Some(4.0)]);
        assert!(close(global_reliability(&m, &r).unwrap(), 0.75));

        let r = ReferenceMap::build([&dense(&[Some(1.0), Some(4.0)])]).unwrap();
        let m = dense(&[Some(0.5), None]);
        assert!(close(precision(&m, &r).unwrap().unwrap(), 0.5));
        assert!(close(coverage(&m, &r).unwrap(), 0.5));

        let m = dense(&[Some(2.0), None]);
        assert!(close(global_performance(&m, &r).unwrap().unwrap(), 0.5));
    }

    #[test]
    fn perfect_and_empty_maps() {
        let full = dense(&[Some(0.2), Some(0.7), None, Some(1.5)]);
        let r = ReferenceMap::build([&full]).unwrap();
        let rep = MetricsReport::compute(&full, &r).unwrap();
        assert_eq!(rep.global_reliability, 1.0);
        assert_eq!(rep.precision, Some(1.0));
        assert_eq!(rep.coverage, 1.0);
        assert_eq!(rep.global_performance, Some(1.0));

        let empty = DenseMap::empty(vec![4]);
        let rep = MetricsReport::compute(&empty, &r).unwrap();
        assert_eq!(rep.global_reliability, 0.0);
        assert_eq!(rep.coverage, 0.0);
        assert_eq!(rep.precision, None);
        assert_eq!(rep.global_performance, None);
    }

    #[test]
    fn zero_reference_cells_are_excluded() {
        let r = ReferenceMap::build([&dense(&[Some(0.0), Some(2.0)])]).unwrap();
        let m = dense(&[Some(0.0), Some(1.0)]);
        assert!(close(global_reliability(&m, &r).unwrap(), 0.5));
        assert!(close(precision(&m, &r).unwrap().unwrap(), 0.5));
        // the zero cell still counts as attainable
        assert!(close(coverage(&m, &r).unwrap(), 1.0));

        let r = ReferenceMap::build([&dense(&[Some(0.0)])]).unwrap();
        assert!(global_reliability(&dense(&[Some(0.0)]), &r).is_err());
        assert!(coverage(&DenseMap::empty(vec![1]), &ReferenceMap::build([&DenseMap::empty(vec![1])]).unwrap()).is_err());
    }

    #[test]
    fn negative_fitness_ratio_counts_as_zero() {
        let r = ReferenceMap::build([&dense(&[Some(2.0), Some(-1.0)])]).unwrap();
        let m = dense(&[Some(-0.5), Some(-1.0)]);
        assert_eq!(global_reliability(&m, &r).unwrap(), 0.0);
        assert_eq!(precision(&m, &r).unwrap(), Some(0.0));
        assert_eq!(global_performance(&m, &r).unwrap(), Some(0.0));
    }

    #[test]
    fn digest_tracks_content() {
        let a = ReferenceMap::build([&dense(&[Some(1.0), None])]).unwrap();
        let b = ReferenceMap::build([&dense(&[Some(1.0), Some(0.0)])]).unwrap();
        assert_eq!(a.digest().len(), 64);
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest(), a.clone().digest());
    }

    fn maps(cells: usize, count: usize) -> impl Strategy<Value = Vec<DenseMap>> {
        prop::collection::vec(
            prop::collection::vec(prop::option::of(0.01f64..10.0), cells),
            1..=count,
        )
        .prop_map(|vs| {
            vs.into_iter()
                .map(|values| DenseMap {
                    resolution: vec![values.len()],
                    values,
                })
                .collect()
        })
    }

    fn nonempty_reference(maps: &[DenseMap]) -> bool {
        maps.iter().any(|m| m.filled_count() > 0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn reference_ignores_order(ms in maps(12, 5)) {
            let fwd = ReferenceMap::build(ms.iter()).unwrap();
            let rev = ReferenceMap::build(ms.iter().rev()).unwrap();
            prop_assert_eq!(fwd.values(), rev.values());
        }

        #[test]
        fn reference_is_idempotent(ms in maps(12, 5)) {
            let r = ReferenceMap::build(ms.iter()).unwrap();
            let again = ReferenceMap::build([r.as_dense()]).unwrap();
            prop_assert_eq!(again.values(), r.values());
        }

        #[test]
        fn metrics_lie_in_unit_interval_and_precision_dominates(ms in maps(12, 5)) {
            prop_assume!(nonempty_reference(&ms));
            let r = ReferenceMap::build(ms.iter()).unwrap();
            for m in &ms {
                let rep = MetricsReport::compute(m, &r).unwrap();
                for v in [Some(rep.global_reliability), rep.precision, Some(rep.coverage), rep.global_performance].into_iter().flatten() {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                if let Some(p) = rep.precision {
                    prop_assert!(p >= rep.global_reliability - 1e-12);
                }
            }
        }

        #[test]
        fn metrics_are_scale_invariant(ms in maps(10, 4), c in 0.01f64..100.0) {
            prop_assume!(nonempty_reference(&ms));
            let scaled: Vec<DenseMap> = ms
                .iter()
                .map(|m| DenseMap {
                    resolution: m.resolution.clone(),
                    values: m.values.iter().map(|v| v.map(|x| x * c)).collect(),
                })
                .collect();
            let r = ReferenceMap::build(ms.iter()).unwrap();
            let rs = ReferenceMap::build(scaled.iter()).unwrap();
            for (m, s) in ms.iter().zip(&scaled) {
                let a = MetricsReport::compute(m, &r).unwrap();
                let b = MetricsReport::compute(s, &rs).unwrap();
                for name in METRIC_NAMES {
                    match (a.get(name), b.get(name)) {
                        (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9, "{name}: {x} vs {y}"),
                        (x, y) => prop_assert_eq!(x, y),
                    }
                }
            }
        }

        #[test]
        fn contributors_never_fill_absent_cells(ms in maps(10, 4)) {
            prop_assume!(nonempty_reference(&ms));
            let r = ReferenceMap::build(ms.iter()).unwrap();
            for m in &ms {
                for (v, rv) in m.values.iter().zip(r.values()) {
                    prop_assert!(v.is_none() || rv.is_some());
                }
                prop_assert!(coverage(m, &r).unwrap() <= 1.0);
            }
        }

        #[test]
        fn performance_ignores_added_worse_cells(
            ms in maps(10, 3),
            extra in prop::collection::vec(0.0f64..1.0, 10),
        ) {
            prop_assume!(ms[0].filled_count() > 0);
            let r = ReferenceMap::build(ms.iter()).unwrap();
            let m = &ms[0];
            let best = m.max().unwrap();
            // fill empty cells of m with values below its best and below the reference
            let widened = DenseMap {
                resolution: m.resolution.clone(),
                values: m
                    .values
                    .iter()
                    .zip(r.values())
                    .zip(&extra)
                    .map(|((v, rv), e)| v.or(rv.map(|x| x.min(best) * e)))
                    .collect(),
            };
            prop_assert_eq!(
                global_performance(m, &r).unwrap(),
                global_performance(&widened, &r).unwrap()
            );
        }
    }
}
