//! Two-dimensional views of an archive as a CSV matrix or a plain PGM image.
//!
//! Fitness is normalised per map to [0, 1] over the filled cells shown. The
//! CSV matrix lists dimension 1 from its highest index down to 0, one row
//! each, with dimension 0 increasing left to right; unfilled cells read
//! `nan`. Metadata travels in leading `#` lines.

use std::io::{BufRead, Write};

use crate::archive::{fmt_f64, Archive, CellIndex};
use crate::error::{Error, Result};

/// Normalised fitness over at most two feature dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    /// Cells along x (dimension 0 of the view) and y (dimension 1, 1 for a 1-D map).
    pub width: usize,
    pub height: usize,
    /// Feature dimensions of the archive shown on x and y.
    pub axes: Vec<usize>,
    pub bounds: Vec<(f64, f64)>,
    pub labels: Vec<String>,
    /// Fixed `(dimension, index)` pairs for the hidden dimensions.
    pub slice: Vec<(usize, usize)>,
    /// Raw fitness range of the shown cells, if any is filled.
    pub fitness_range: Option<(f64, f64)>,
    /// Row-major from the bottom row: `values[y * width + x]`.
    pub values: Vec<Option<f64>>,
}

fn normalise(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

/// Parses a `d=i` slice argument.
pub fn parse_slice(arg: &str) -> Result<(usize, usize)> {
    let (d, i) = arg
        .split_once('=')
        .ok_or_else(|| Error::config(format!("slice `{arg}` must look like d=i")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::config(format!("slice `{arg}` must look like d=i")))
    };
    Ok((parse(d)?, parse(i)?))
}

impl Heatmap {
    /// Builds the view, fixing the dimensions named in `slice`.
    pub fn from_archive<G>(archive: &Archive<G>, slice: &[(usize, usize)]) -> Result<Self> {
        let space = archive.space();
        let res = space.resolution();
        let mut fixed = vec![None; res.len()];
        for &(d, i) in slice {
            if d >= res.len() {
                return Err(Error::config(format!("slice dimension {d} does not exist ({} dimensions)", res.len())));
            }
            if i >= res[d] {
                return Err(Error::config(format!("slice index {i} outside dimension {d} (size {})", res[d])));
            }
            if fixed[d].replace(i).is_some() {
                return Err(Error::config(format!("dimension {d} sliced twice")));
            }
        }
        let axes: Vec<usize> = (0..res.len()).filter(|d| fixed[*d].is_none()).collect();
        if axes.len() > 2 {
            return Err(Error::config(format!(
                "archive has {} free dimensions; fix all but two with --slice d=i",
                axes.len()
            )));
        }
        if axes.is_empty() {
            return Err(Error::config("slice leaves no dimension to show"));
        }
        let width = res[axes[0]];
        let height = axes.get(1).map_or(1, |&d| res[d]);
        let mut raw = vec![None; width * height];
        let mut cell = vec![0; res.len()];
        for y in 0..height {
            for x in 0..width {
                for (d, f) in fixed.iter().enumerate() {
                    if let Some(i) = f {
                        cell[d] = *i;
                    }
                }
                cell[axes[0]] = x;
                if let Some(&d) = axes.get(1) {
                    cell[d] = y;
                }
                raw[y * width + x] = archive.get(&CellIndex(cell.clone())).map(|e| e.fitness);
            }
        }
        let lo = raw.iter().flatten().copied().reduce(f64::min);
        let hi = raw.iter().flatten().copied().reduce(f64::max);
        let fitness_range = lo.zip(hi);
        let values = match fitness_range {
            Some((lo, hi)) => raw.iter().map(|v| v.map(|v| normalise(v, lo, hi))).collect(),
            None => raw,
        };
        let mut slice = slice.to_vec();
        slice.sort_unstable();
        Ok(Self {
            width,
            height,
            bounds: axes.iter().map(|&d| space.bounds()[d]).collect(),
            labels: axes.iter().map(|&d| space.labels().get(d).cloned().unwrap_or_else(|| format!("dim{d}"))).collect(),
            axes,
            slice,
            fitness_range,
            values,
        })
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.values[y * self.width + x]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let join = |v: Vec<String>| v.join(",");
        writeln!(out, "# axes: {}", join(self.axes.iter().map(|a| a.to_string()).collect()))?;
        writeln!(out, "# resolution: {},{}", self.width, self.height)?;
        writeln!(
            out,
            "# bounds: {}",
            join(self.bounds.iter().map(|(l, h)| format!("{}:{}", fmt_f64(*l), fmt_f64(*h))).collect())
        )?;
        writeln!(out, "# labels: {}", join(self.labels.clone()))?;
        writeln!(
            out,
            "# slice: {}",
            join(self.slice.iter().map(|(d, i)| format!("{d}={i}")).collect())
        )?;
        match self.fitness_range {
            Some((lo, hi)) => writeln!(out, "# fitness range: {},{}", fmt_f64(lo), fmt_f64(hi))?,
            None => writeln!(out, "# fitness range: none")?,
        }
        for y in (0..self.height).rev() {
            let row: Vec<String> = (0..self.width)
                .map(|x| self.get(x, y).map_or_else(|| "nan".to_string(), fmt_f64))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let bad = |m: String| Error::parse("heatmap csv", m);
        let mut meta = std::collections::BTreeMap::new();
        let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
        for line in input.lines() {
            let line = line?;
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest.split_once(": ").unwrap_or((rest.trim_end_matches(':'), ""));
                meta.insert(k.to_string(), v.to_string());
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| match s {
                    "nan" => Ok(None),
                    s => s.parse::<f64>().map(Some).map_err(|e| bad(format!("value `{s}`: {e}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let field = |k: &str| meta.get(k).cloned().ok_or_else(|| bad(format!("missing `{k}` line")));
        let list = |s: String| -> Vec<String> {
            if s.is_empty() {
                Vec::new()
            } else {
                s.split(',').map(str::to_string).collect()
            }
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
        let uint = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("`{s}`: {e}")));

        let axes = list(field("axes")?).iter().map(|s| uint(s)).collect::<Result<Vec<_>>>()?;
        let res = list(field("resolution")?).iter().map(|s| uint(s)).collect::<Result<Vec<_>>>()?;
        if res.len() != 2 {
            return Err(bad("resolution needs width and height".into()));
        }
        let bounds = list(field("bounds")?)
            .iter()
            .map(|b| {
                let (l, h) = b.split_once(':').ok_or_else(|| bad(format!("bound `{b}`")))?;
                Ok((num(l)?, num(h)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let labels = list(field("labels")?);
        let slice = list(field("slice")?)
            .iter()
            .map(|s| parse_slice(s).map_err(|e| bad(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let fitness_range = match field("fitness range")?.as_str() {
            "none" => None,
            s => {
                let (l, h) = s.split_once(',').ok_or_else(|| bad(format!("fitness range `{s}`")))?;
                Some((num(l)?, num(h)?))
            }
        };
        let (width, height) = (res[0], res[1]);
        if rows.len() != height || rows.iter().any(|r| r.len() != width) {
            return Err(bad(format!("matrix is not {height} rows of {width} values")));
        }
        let mut values = vec![None; width * height];
        for (k, row) in rows.into_iter().enumerate() {
            let y = height - 1 - k;
            values[y * width..(y + 1) * width].copy_from_slice(&row);
        }
        Ok(Self {
            width,
            height,
            axes,
            bounds,
            labels,
            slice,
            fitness_range,
            values,
        })
    }

    /// Grey level: 0 for unfilled cells, filled cells spread over 1..=255.
    pub fn grey(v: Option<f64>) -> u8 {
        match v {
            None => 0,
            Some(v) => (1.0 + v.clamp(0.0, 1.0) * 254.0).round() as u8,
        }
    }

    /// Plain (P2) PGM with maxval 255, top row = highest dimension-1 index.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "P2")?;
        if let Some((lo, hi)) = self.fitness_range {
            writeln!(out, "# fitness {} to {}", fmt_f64(lo), fmt_f64(hi))?;
        }
        writeln!(out, "{} {}", self.width, self.height)?;
        writeln!(out, "255")?;
        for y in (0..self.height).rev() {
            let row: Vec<String> = (0..self.width).map(|x| Self::grey(self.get(x, y)).to_string()).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::{Elite, FeatureSpace};

    fn archive(res: Vec<usize>, elites: &[(&[f64], f64)]) -> Archive<()> {
        let dims = res.len();
        let mut a = Archive::new(FeatureSpace::new(vec![(0.0, 1.0); dims], res).unwrap());
        for (i, (d, f)) in elites.iter().enumerate() {
            a.try_insert(Elite::root((), *f, d.to_vec(), i as u64)).unwrap();
        }
        a
    }

    fn csv(h: &Heatmap) -> String {
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn pgm(h: &Heatmap) -> String {
        let mut buf = Vec::new();
        h.write_pgm(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn matrix_lines(text: &str) -> Vec<&str> {
        text.lines().filter(|l| !l.starts_with('#')).collect()
    }

    #[test]
    fn empty_archive() {
        let h = Heatmap::from_archive(&archive(vec![3, 2], &[]), &[]).unwrap();
        let text = csv(&h);
        assert_eq!(matrix_lines(&text), vec!["nan,nan,nan"; 2]);
        let p = pgm(&h);
        assert_eq!(p.lines().skip(3).collect::<Vec<_>>(), vec!["0 0 0"; 2]);
    }

    #[test]
    fn single_elite_is_brightest() {
        let h = Heatmap::from_archive(&archive(vec![3, 2], &[(&[0.9, 0.1], 0.37)]), &[]).unwrap();
        let text = csv(&h);
        let cells: Vec<&str> = matrix_lines(&text).iter().flat_map(|l| l.split(',')).collect();
        assert_eq!(cells.iter().filter(|c| **c != "nan").count(), 1);
        let p = pgm(&h);
        let grey: Vec<&str> = p.lines().skip(4).flat_map(|l| l.split(' ')).collect();
        assert_eq!(grey.iter().filter(|g| **g != "0").collect::<Vec<_>>(), vec![&"255"]);
    }

    #[test]
    fn rows_descend_in_dimension_one() {
        // (x=0, y=1) high, (x=1, y=0) low
        let a = archive(vec![2, 2], &[(&[0.2, 0.8], 2.0), (&[0.8, 0.2], 1.0)]);
        let h = Heatmap::from_archive(&a, &[]).unwrap();
        let text = csv(&h);
        let rows = matrix_lines(&text);
        assert!(rows[0].starts_with("1.0"));
        assert!(rows[1].starts_with("nan,0.0"));
        let p = pgm(&h);
        assert_eq!(p.lines().skip(4).collect::<Vec<_>>(), vec!["255 0", "0 1"]);
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let a = archive(
            vec![4, 3],
            &[(&[0.1, 0.1], 0.3), (&[0.6, 0.9], 0.7), (&[0.9, 0.5], 1.0 / 3.0)],
        );
        let h = Heatmap::from_archive(&a, &[]).unwrap();
        let text = csv(&h);
        let back = Heatmap::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, h);
        assert_eq!(csv(&back), text);

        let empty = Heatmap::from_archive(&archive(vec![2, 2], &[]), &[]).unwrap();
        assert_eq!(csv(&Heatmap::read_csv(csv(&empty).as_bytes()).unwrap()), csv(&empty));
    }

    #[test]
    fn one_dimensional_map_is_a_single_row() {
        let a = archive(vec![5], &[(&[0.5], 1.0)]);
        let h = Heatmap::from_archive(&a, &[]).unwrap();
        assert_eq!((h.width, h.height), (5, 1));
        assert_eq!(matrix_lines(&csv(&h)), vec!["nan,nan,1.0000000000000000e0,nan,nan"]);
    }

    #[test]
    fn three_dimensions_need_a_slice() {
        let a = archive(vec![2, 2, 2], &[(&[0.9, 0.9, 0.9], 1.0), (&[0.1, 0.1, 0.1], 0.5)]);
        let e = Heatmap::from_archive(&a, &[]).unwrap_err();
        assert!(e.to_string().contains("--slice"));
        let h = Heatmap::from_archive(&a, &[(2, 1)]).unwrap();
        assert_eq!(h.axes, vec![0, 1]);
        assert_eq!(h.values.iter().flatten().count(), 1);
        assert!(Heatmap::from_archive(&a, &[(3, 0)]).is_err());
        assert!(Heatmap::from_archive(&a, &[(2, 2)]).is_err());
    }

    #[test]
    fn slice_arguments() {
        assert_eq!(parse_slice("2=5").unwrap(), (2, 5));
        assert!(parse_slice("2").is_err());
        assert!(parse_slice("a=1").is_err());
    }
}
