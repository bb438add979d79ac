//! Feature space binning and the dense elite grid.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One resolution change: at `iteration`, the grid becomes `resolution`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub iteration: u64,
    pub resolution: Vec<usize>,
}

/// Bounded, gridded feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpace {
    bounds: Vec<(f64, f64)>,
    resolution: Vec<usize>,
    #[serde(default)]
    schedule: Vec<ScheduleStep>,
    #[serde(default)]
    labels: Vec<String>,
}

/// Result of binning a descriptor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binned {
    pub cell: CellIndex,
    /// Some coordinate fell outside the closed bounds and was moved to an edge cell.
    pub clamped: bool,
}

fn check_multiple(from: &[usize], to: &[usize], what: &str) -> Result<()> {
    if from.len() != to.len() {
        return Err(Error::config(format!(
            "{what}: resolution {to:?} has {} dimensions, expected {}",
            to.len(),
            from.len()
        )));
    }
    for (d, (&a, &b)) in from.iter().zip(to).enumerate() {
        if b == 0 || b < a || b % a != 0 {
            return Err(Error::config(format!(
                "{what}: resolution {b} in dimension {d} is not a positive multiple of {a}"
            )));
        }
    }
    Ok(())
}

impl FeatureSpace {
    pub fn new(bounds: Vec<(f64, f64)>, resolution: Vec<usize>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::config("feature space needs at least one dimension"));
        }
        if bounds.len() != resolution.len() {
            return Err(Error::config(format!(
                "{} bounds but {} resolution entries",
                bounds.len(),
                resolution.len()
            )));
        }
        for (d, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::config(format!(
                    "dimension {d}: bounds [{lo}, {hi}] must be finite with min < max"
                )));
            }
        }
        if let Some(d) = resolution.iter().position(|&r| r == 0) {
            return Err(Error::config(format!("dimension {d}: resolution must be >= 1")));
        }
        let labels = (0..bounds.len()).map(|d| format!("dim{d}")).collect();
        Ok(Self {
            bounds,
            resolution,
            schedule: Vec::new(),
            labels,
        })
    }

    /// Attaches a resolution schedule, validating thresholds and multiples.
    pub fn with_schedule(mut self, schedule: Vec<ScheduleStep>) -> Result<Self> {
        let mut prev_res = self.resolution.clone();
        let mut prev_iter: Option<u64> = None;
        for (i, step) in schedule.iter().enumerate() {
            if let Some(p) = prev_iter {
                if step.iteration <= p {
                    return Err(Error::config(format!(
                        "resolution change program entry {i}: iteration {} is not after {p}",
                        step.iteration
                    )));
                }
            }
            check_multiple(
                &prev_res,
                &step.resolution,
                &format!("resolution change program entry {i}"),
            )?;
            prev_res = step.resolution.clone();
            prev_iter = Some(step.iteration);
        }
        self.schedule = schedule;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dims() {
            return Err(Error::config("one label per feature dimension required"));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn schedule(&self) -> &[ScheduleStep] {
        &self.schedule
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Resolution after every schedule step has been applied.
    pub fn final_resolution(&self) -> &[usize] {
        self.schedule
            .last()
            .map(|s| s.resolution.as_slice())
            .unwrap_or(&self.resolution)
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.iter().product()
    }

    /// Maps a descriptor to its cell under the current resolution.
    pub fn bin(&self, descriptor: &[f64]) -> Result<Binned> {
        bin_at(&self.bounds, &self.resolution, descriptor)
    }

    /// Row-major offset with dimension 0 most significant, so flat order is
    /// lexicographic cell order.
    pub fn flat(&self, cell: &CellIndex) -> usize {
        cell.0
            .iter()
            .zip(&self.resolution)
            .fold(0, |acc, (&c, &r)| acc * r + c)
    }

    pub fn unflat(&self, mut flat: usize) -> CellIndex {
        let mut coords = vec![0; self.dims()];
        for d in (0..self.dims()).rev() {
            coords[d] = flat % self.resolution[d];
            flat /= self.resolution[d];
        }
        CellIndex(coords)
    }

    pub fn contains(&self, cell: &CellIndex) -> bool {
        cell.0.len() == self.dims() && cell.0.iter().zip(&self.resolution).all(|(&c, &r)| c < r)
    }

    fn set_resolution(&mut self, resolution: Vec<usize>) {
        self.resolution = resolution;
    }
}

fn bin_at(bounds: &[(f64, f64)], resolution: &[usize], descriptor: &[f64]) -> Result<Binned> {
    if descriptor.len() != bounds.len() {
        return Err(Error::InvalidEvaluation(format!(
            "descriptor has {} entries, feature space has {}",
            descriptor.len(),
            bounds.len()
        )));
    }
    let mut clamped = false;
    let mut coords = Vec::with_capacity(bounds.len());
    for (d, ((&v, &(lo, hi)), &r)) in descriptor.iter().zip(bounds).zip(resolution).enumerate() {
        if !v.is_finite() {
            return Err(Error::InvalidEvaluation(format!(
                "descriptor entry {d} is not finite ({v})"
            )));
        }
        if v < lo || v > hi {
            clamped = true;
        }
        let t = (v - lo) / (hi - lo) * r as f64;
        let c = if t <= 0.0 {
            0
        } else if t >= r as f64 {
            r - 1
        } else {
            (t.floor() as usize).min(r - 1)
        };
        coords.push(c);
    }
    Ok(Binned {
        cell: CellIndex(coords),
        clamped,
    })
}

/// Integer coordinates of a grid cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex(pub Vec<usize>);

impl CellIndex {
    pub fn coords(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for CellIndex {
    fn from(v: Vec<usize>) -> Self {
        CellIndex(v)
    }
}

/// A stored solution together with its evaluation and ancestry.
#[derive(Debug, Clone, PartialEq)]
pub struct Elite<G> {
    pub genome: G,
    pub fitness: f64,
    pub descriptor: Vec<f64>,
    pub birth_iteration: u64,
    pub parent_cell: Option<CellIndex>,
    pub parent_descriptor: Option<Vec<f64>>,
    pub id: u64,
    pub parent_id: Option<u64>,
}

impl<G> Elite<G> {
    /// An elite without a parent, as produced by random initialisation.
    pub fn root(genome: G, fitness: f64, descriptor: Vec<f64>, id: u64) -> Self {
        Self {
            genome,
            fitness,
            descriptor,
            birth_iteration: 0,
            parent_cell: None,
            parent_descriptor: None,
            id,
            parent_id: None,
        }
    }

    /// Copy of this elite carrying a different genome representation.
    pub fn with_genome<H>(&self, genome: H) -> Elite<H> {
        Elite {
            genome,
            fitness: self.fitness,
            descriptor: self.descriptor.clone(),
            birth_iteration: self.birth_iteration,
            parent_cell: self.parent_cell.clone(),
            parent_descriptor: self.parent_descriptor.clone(),
            id: self.id,
            parent_id: self.parent_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    InsertedEmpty,
    ReplacedIncumbent,
    RejectedWorseOrTied,
}

impl InsertOutcome {
    pub fn stored(self) -> bool {
        !matches!(self, InsertOutcome::RejectedWorseOrTied)
    }
}

/// Dense N-dimensional map holding at most one elite per cell.
#[derive(Debug, Clone)]
pub struct Archive<G> {
    space: FeatureSpace,
    cells: Vec<Option<Elite<G>>>,
    // Flat indices of filled cells, in the order they were first filled.
    occupied: Vec<usize>,
}

impl<G> Archive<G> {
    pub fn new(space: FeatureSpace) -> Self {
        let n = space.cell_count();
        let mut cells = Vec::with_capacity(n);
        cells.resize_with(n, || None);
        Self {
            space,
            cells,
            occupied: Vec::new(),
        }
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn resolution(&self) -> &[usize] {
        self.space.resolution()
    }

    pub fn filled_count(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn get(&self, cell: &CellIndex) -> Option<&Elite<G>> {
        if !self.space.contains(cell) {
            return None;
        }
        self.cells[self.space.flat(cell)].as_ref()
    }

    /// Occupied cells in lexicographic cell order.
    pub fn iter(&self) -> impl Iterator<Item = (CellIndex, &Elite<G>)> {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_ref().map(|e| (self.space.unflat(i), e)))
    }

    pub fn elites(&self) -> impl Iterator<Item = &Elite<G>> {
        self.cells.iter().filter_map(Option::as_ref)
    }

    pub fn best(&self) -> Option<&Elite<G>> {
        self.elites()
            .fold(None, |best: Option<&Elite<G>>, e| match best {
                Some(b) if b.fitness >= e.fitness => Some(b),
                _ => Some(e),
            })
    }

    /// Bins the candidate and stores it if its cell is empty or it strictly
    /// beats the incumbent.
    pub fn try_insert(&mut self, candidate: Elite<G>) -> Result<InsertOutcome> {
        if !candidate.fitness.is_finite() {
            return Err(Error::InvalidEvaluation(format!(
                "fitness is not finite ({})",
                candidate.fitness
            )));
        }
        let binned = self.space.bin(&candidate.descriptor)?;
        Ok(self.place(&binned.cell, candidate))
    }

    pub(crate) fn place(&mut self, cell: &CellIndex, candidate: Elite<G>) -> InsertOutcome {
        let flat = self.space.flat(cell);
        match &self.cells[flat] {
            None => {
                self.cells[flat] = Some(candidate);
                self.occupied.push(flat);
                InsertOutcome::InsertedEmpty
            }
            Some(inc) if inc.fitness < candidate.fitness => {
                self.cells[flat] = Some(candidate);
                InsertOutcome::ReplacedIncumbent
            }
            Some(_) => InsertOutcome::RejectedWorseOrTied,
        }
    }

    /// Re-bins every elite by its own descriptor under a finer grid.
    pub fn subdivide(&mut self, new_resolution: &[usize]) -> Result<()> {
        check_multiple(self.space.resolution(), new_resolution, "subdivide")?;
        let old_res = self.space.resolution().to_vec();
        let mut new_space = self.space.clone();
        new_space.set_resolution(new_resolution.to_vec());
        let n = new_space.cell_count();
        let mut cells: Vec<Option<Elite<G>>> = Vec::with_capacity(n);
        cells.resize_with(n, || None);
        let old_cells = std::mem::take(&mut self.cells);
        for (flat, slot) in old_cells.into_iter().enumerate() {
            let Some(elite) = slot else { continue };
            let coarse = self.space.unflat(flat);
            let fine = new_space.bin(&elite.descriptor).map(|b| b.cell);
            // Keep each elite inside the block of sub-cells of its old cell, so
            // the partition is exact even if rounding disagrees at an edge.
            let coords = coarse
                .0
                .iter()
                .enumerate()
                .map(|(d, &c)| {
                    let k = new_resolution[d] / old_res[d];
                    let lo = c * k;
                    match &fine {
                        Ok(f) => f.0[d].clamp(lo, lo + k - 1),
                        Err(_) => lo,
                    }
                })
                .collect();
            let idx = new_space.flat(&CellIndex(coords));
            debug_assert!(cells[idx].is_none());
            cells[idx] = Some(elite);
        }
        self.occupied = cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_ref().map(|_| i))
            .collect();
        self.cells = cells;
        self.space = new_space;
        Ok(())
    }

    /// Uniformly random elite among the filled cells.
    pub fn random_elite<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&Elite<G>> {
        if self.occupied.is_empty() {
            return Err(Error::EmptyArchive);
        }
        let k = rng.random_range(0..self.occupied.len());
        Ok(self.cells[self.occupied[k]]
            .as_ref()
            .expect("occupied list points at a filled cell"))
    }

    pub fn to_dense_map(&self) -> DenseMap {
        DenseMap {
            resolution: self.space.resolution().to_vec(),
            values: self
                .cells
                .iter()
                .map(|c| c.as_ref().map(|e| e.fitness))
                .collect(),
        }
    }

    /// Checks that every stored elite bins to the cell holding it.
    pub fn check_consistency(&self) -> Result<()> {
        for (cell, elite) in self.iter() {
            let b = self.space.bin(&elite.descriptor)?;
            if b.cell != cell {
                return Err(Error::config(format!(
                    "elite {} stored at {:?} but bins to {:?}",
                    elite.id, cell.0, b.cell.0
                )));
            }
        }
        Ok(())
    }
}

/// Fitness per cell; `None` marks an unfilled cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMap {
    pub resolution: Vec<usize>,
    pub values: Vec<Option<f64>>,
}

impl DenseMap {
    pub fn empty(resolution: Vec<usize>) -> Self {
        let n = resolution.iter().product();
        Self {
            resolution,
            values: vec![None; n],
        }
    }

    pub fn filled_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn max(&self) -> Option<f64> {
        self.values.iter().flatten().copied().reduce(f64::max)
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl<G> Archive<G> {
    /// Writes one row per filled cell in lexicographic cell order.
    pub fn write_csv<W: Write>(&self, out: W, encode: impl Fn(&G) -> String) -> Result<()> {
        let n = self.space.dims();
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..n).map(|d| format!("cell_idx_{d}")).collect();
        header.extend((0..n).map(|d| format!("desc_{d}")));
        header.extend(
            ["fitness", "birth_iteration", "id", "parent_id", "genome"]
                .iter()
                .map(|s| s.to_string()),
        );
        w.write_record(&header)?;
        for (cell, e) in self.iter() {
            let mut row: Vec<String> = cell.0.iter().map(|c| c.to_string()).collect();
            row.extend(e.descriptor.iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(e.fitness));
            row.push(e.birth_iteration.to_string());
            row.push(e.id.to_string());
            row.push(e.parent_id.map(|p| p.to_string()).unwrap_or_default());
            row.push(encode(&e.genome));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads an archive written by [`Archive::write_csv`] into `space`.
    pub fn read_csv<R: Read>(
        input: R,
        space: FeatureSpace,
        decode: impl Fn(&str) -> Result<G>,
    ) -> Result<Self> {
        let n = space.dims();
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers()?.clone();
        if header.len() != 2 * n + 5 {
            return Err(Error::parse(
                "archive csv",
                format!("expected {} columns, found {}", 2 * n + 5, header.len()),
            ));
        }
        let mut archive = Archive::new(space);
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |m: String| Error::parse("archive csv", format!("row {}: {m}", line + 1));
            let num = |i: usize| -> Result<f64> {
                rec[i].trim().parse::<f64>().map_err(|e| bad(format!("column {i}: {e}")))
            };
            let int = |i: usize| -> Result<u64> {
                rec[i].trim().parse::<u64>().map_err(|e| bad(format!("column {i}: {e}")))
            };
            let cell = CellIndex(
                (0..n)
                    .map(|i| int(i).map(|v| v as usize))
                    .collect::<Result<Vec<_>>>()?,
            );
            if !archive.space.contains(&cell) {
                return Err(bad(format!("cell {:?} outside the grid", cell.0)));
            }
            let descriptor = (n..2 * n).map(num).collect::<Result<Vec<_>>>()?;
            let parent_id = match rec[2 * n + 3].trim() {
                "" => None,
                s => Some(s.parse::<u64>().map_err(|e| bad(e.to_string()))?),
            };
            let elite = Elite {
                genome: decode(&rec[2 * n + 4])?,
                fitness: num(2 * n)?,
                descriptor,
                birth_iteration: int(2 * n + 1)?,
                parent_cell: None,
                parent_descriptor: None,
                id: int(2 * n + 2)?,
                parent_id,
            };
            if archive.get(&cell).is_some() {
                return Err(bad(format!("duplicate cell {:?}", cell.0)));
            }
            archive.place(&cell, elite);
        }
        Ok(archive)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn unit(res: usize) -> FeatureSpace {
        FeatureSpace::new(vec![(0.0, 1.0); 2], vec![res, res]).unwrap()
    }

    fn elite(fitness: f64, desc: Vec<f64>, id: u64) -> Elite<u32> {
        Elite::root(id as u32, fitness, desc, id)
    }

    #[test]
    fn bin_examples() {
        let s = unit(4);
        assert_eq!(s.bin(&[0.5, 0.25]).unwrap().cell.0, vec![2, 1]);
        let top = s.bin(&[1.0, 1.0]).unwrap();
        assert_eq!(top.cell.0, vec![3, 3]);
        assert!(!top.clamped);
        assert_eq!(s.bin(&[0.0, 0.999]).unwrap().cell.0, vec![0, 3]);
    }

    #[test]
    fn bin_clamps_out_of_range_and_flags_it() {
        let s = unit(4);
        let b = s.bin(&[-0.3, 7.0]).unwrap();
        assert_eq!(b.cell.0, vec![0, 3]);
        assert!(b.clamped);
    }

    #[test]
    fn bin_rejects_non_finite() {
        let s = unit(4);
        assert!(matches!(
            s.bin(&[f64::NAN, 0.1]),
            Err(Error::InvalidEvaluation(_))
        ));
        assert!(s.bin(&[0.1, f64::INFINITY]).is_err());
        assert!(s.bin(&[0.1]).is_err());
    }

    #[test]
    fn space_validation() {
        assert!(FeatureSpace::new(vec![], vec![]).is_err());
        assert!(FeatureSpace::new(vec![(1.0, 1.0)], vec![2]).is_err());
        assert!(FeatureSpace::new(vec![(0.0, 1.0)], vec![0]).is_err());
        let s = unit(16);
        let ok = s.clone().with_schedule(vec![
            ScheduleStep { iteration: 0, resolution: vec![64, 64] },
            ScheduleStep { iteration: 1250, resolution: vec![128, 128] },
        ]);
        assert!(ok.is_ok());
        let not_multiple = s.clone().with_schedule(vec![ScheduleStep {
            iteration: 0,
            resolution: vec![24, 24],
        }]);
        assert!(not_multiple.unwrap_err().to_string().contains("entry 0"));
        let not_increasing = s.with_schedule(vec![
            ScheduleStep { iteration: 5, resolution: vec![32, 32] },
            ScheduleStep { iteration: 5, resolution: vec![64, 64] },
        ]);
        assert!(not_increasing.is_err());
    }

    #[test]
    fn insert_outcomes() {
        let mut a = Archive::new(unit(4));
        assert_eq!(
            a.try_insert(elite(0.5, vec![0.1, 0.1], 0)).unwrap(),
            InsertOutcome::InsertedEmpty
        );
        assert_eq!(
            a.try_insert(elite(0.7, vec![0.2, 0.2], 1)).unwrap(),
            InsertOutcome::ReplacedIncumbent
        );
        assert_eq!(
            a.try_insert(elite(0.7, vec![0.15, 0.15], 2)).unwrap(),
            InsertOutcome::RejectedWorseOrTied
        );
        assert_eq!(a.filled_count(), 1);
        assert_eq!(a.get(&CellIndex(vec![0, 0])).unwrap().id, 1);
        assert!(a.try_insert(elite(f64::NAN, vec![0.1, 0.1], 3)).is_err());
        assert_eq!(a.filled_count(), 1);
    }

    #[test]
    fn subdivide_examples() {
        let mut a = Archive::new(unit(2));
        a.try_insert(elite(1.0, vec![0.3, 0.1], 0)).unwrap();
        assert!(a.get(&CellIndex(vec![0, 0])).is_some());
        a.subdivide(&[4, 4]).unwrap();
        assert_eq!(a.get(&CellIndex(vec![1, 0])).unwrap().id, 0);
        assert_eq!(a.filled_count(), 1);

        let mut empty: Archive<u32> = Archive::new(unit(2));
        empty.subdivide(&[6, 8]).unwrap();
        assert_eq!(empty.resolution(), &[6, 8]);
        assert_eq!(empty.filled_count(), 0);
        assert!(empty.subdivide(&[9, 8]).is_err());
    }

    #[test]
    fn random_elite_cases() {
        let mut rng = seeded(1);
        let mut a: Archive<u32> = Archive::new(unit(4));
        assert!(matches!(a.random_elite(&mut rng), Err(Error::EmptyArchive)));
        a.try_insert(elite(1.0, vec![0.9, 0.9], 42)).unwrap();
        for _ in 0..10 {
            assert_eq!(a.random_elite(&mut rng).unwrap().id, 42);
        }
    }

    #[test]
    fn random_elite_is_uniform_over_two_cells() {
        let mut rng = seeded(2);
        let mut a: Archive<u32> = Archive::new(unit(4));
        a.try_insert(elite(1.0, vec![0.1, 0.1], 0)).unwrap();
        a.try_insert(elite(1.0, vec![0.9, 0.9], 1)).unwrap();
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| a.random_elite(&mut rng).unwrap().id == 0)
            .count();
        let frac = zeros as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.015, "frac = {frac}");
        // chi-square with one degree of freedom, 99.9% quantile 10.83
        let e = n as f64 / 2.0;
        let chi2 = ((zeros as f64 - e).powi(2) + ((n - zeros) as f64 - e).powi(2)) / e;
        assert!(chi2 < 10.83, "chi2 = {chi2}");
    }

    #[test]
    fn dense_map_marks_unfilled() {
        let mut a: Archive<u32> = Archive::new(unit(2));
        assert_eq!(a.to_dense_map().values, vec![None; 4]);
        a.try_insert(elite(1.0, vec![0.1, 0.9], 0)).unwrap();
        let m = a.to_dense_map();
        assert_eq!(m.filled_count(), 1);
        assert_eq!(m.values[1], Some(1.0));
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let mut a: Archive<u32> = Archive::new(unit(3));
        a.try_insert(elite(0.1 + 0.2, vec![0.95, 0.05], 3)).unwrap();
        let mut child = elite(1.0 / 3.0, vec![0.4, 0.6], 9);
        child.parent_id = Some(3);
        child.birth_iteration = 4;
        a.try_insert(child).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf, |g| format!("g,{g};x")).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "cell_idx_0,cell_idx_1,desc_0,desc_1,fitness,birth_iteration,id,parent_id,genome\n"
        ));
        let back = Archive::read_csv(&buf[..], unit(3), |s| {
            s.trim_start_matches("g,")
                .trim_end_matches(";x")
                .parse::<u32>()
                .map_err(|e| Error::parse("genome", e.to_string()))
        })
        .unwrap();
        let mut again = Vec::new();
        back.write_csv(&mut again, |g| format!("g,{g};x")).unwrap();
        assert_eq!(buf, again);
        assert_eq!(back.get(&CellIndex(vec![1, 1])).unwrap().parent_id, Some(3));
        assert_eq!(back.get(&CellIndex(vec![2, 0])).unwrap().fitness, 0.1 + 0.2);
    }

    fn descriptors() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
        prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, -1.0f64..1.0), 0..60)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn subdivide_preserves_elites(
            entries in descriptors(),
            k0 in 1usize..4,
            k1 in 1usize..4,
            base in 1usize..6,
        ) {
            let space = FeatureSpace::new(vec![(0.0, 1.0); 2], vec![base, base + 1]).unwrap();
            let mut a: Archive<u32> = Archive::new(space);
            for (i, (x, y, f)) in entries.iter().enumerate() {
                a.try_insert(elite(*f, vec![*x, *y], i as u64)).unwrap();
            }
            let before: Vec<(u64, f64)> = {
                let mut v: Vec<_> = a.elites().map(|e| (e.id, e.fitness)).collect();
                v.sort_by_key(|p| p.0);
                v
            };
            a.subdivide(&[base * k0, (base + 1) * k1]).unwrap();
            let mut after: Vec<_> = a.elites().map(|e| (e.id, e.fitness)).collect();
            after.sort_by_key(|p| p.0);
            prop_assert_eq!(before, after);
            prop_assert_eq!(a.filled_count(), a.to_dense_map().filled_count());
            a.check_consistency().unwrap();
        }

        #[test]
        fn dense_map_counts_distinct_cells(entries in descriptors()) {
            let mut a: Archive<u32> = Archive::new(unit(5));
            let mut cells = std::collections::BTreeSet::new();
            for (i, (x, y, f)) in entries.iter().enumerate() {
                cells.insert(a.space().bin(&[*x, *y]).unwrap().cell);
                a.try_insert(elite(*f, vec![*x, *y], i as u64)).unwrap();
            }
            prop_assert_eq!(a.to_dense_map().filled_count(), cells.len());
            prop_assert_eq!(a.filled_count(), cells.len());
        }

        #[test]
        fn stored_fitness_never_decreases(entries in descriptors()) {
            let mut a: Archive<u32> = Archive::new(unit(3));
            let mut prev = a.to_dense_map();
            for (i, (x, y, f)) in entries.iter().enumerate() {
                a.try_insert(elite(*f, vec![*x, *y], i as u64)).unwrap();
                let now = a.to_dense_map();
                for (p, n) in prev.values.iter().zip(&now.values) {
                    if let Some(p) = p {
                        prop_assert!(n.unwrap() >= *p);
                    }
                }
                prev = now;
            }
        }
    }
}
