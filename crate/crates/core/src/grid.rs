//! Uniform rectangular grids and fields sampled on them.

use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::space::{Point, SpatialDim, ORIGIN};

/// `n` nodes per axis with spacing `h`, first node at `origin`. As a
/// periodic box the grid has side length `n h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: SpatialDim,
    n: usize,
    h: f64,
    origin: Point,
}

impl Grid {
    pub fn new(dim: SpatialDim, n: usize, h: f64, origin: &[f64]) -> Result<Self> {
        if n < 8 {
            return Err(invalid(format!(
                "grid needs at least 8 points per axis (got {n})"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid(format!("grid spacing must be positive (got {h})")));
        }
        Ok(Grid {
            dim,
            n,
            h,
            origin: dim.point(origin)?,
        })
    }

    /// Grid with node `n/2` of every axis at the coordinate origin.
    pub fn centered(dim: SpatialDim, n: usize, h: f64) -> Result<Self> {
        let o = -((n / 2) as f64) * h;
        Self::new(dim, n, h, &vec![o; dim.get()])
    }

    pub fn dim(&self) -> SpatialDim {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    /// Side length of the periodic box.
    pub fn box_length(&self) -> f64 {
        self.n as f64 * self.h
    }

    /// Volume element `hⁿ`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim.get() as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim.get() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multi-index of a flat index; the last axis varies fastest.
    pub fn multi_index(&self, mut i: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for k in (0..self.dim.get()).rev() {
            idx[k] = i % self.n;
            i /= self.n;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize; 3]) -> usize {
        (0..self.dim.get()).fold(0, |acc, k| acc * self.n + idx[k])
    }

    pub fn node_point(&self, idx: &[usize; 3]) -> Point {
        let mut p = ORIGIN;
        for k in 0..self.dim.get() {
            p[k] = self.origin[k] + idx[k] as f64 * self.h;
        }
        p
    }

    pub fn point(&self, i: usize) -> Point {
        self.node_point(&self.multi_index(i))
    }

    /// Multi-index of the node at `p`, if `p` is (to rounding) a node.
    pub fn node_index_of(&self, p: &Point) -> Option<[usize; 3]> {
        let mut idx = [0; 3];
        for k in 0..self.dim.get() {
            let s = (p[k] - self.origin[k]) / self.h;
            let r = s.round();
            if (s - r).abs() > 1e-9 || r < 0.0 || r >= self.n as f64 {
                return None;
            }
            idx[k] = r as usize;
        }
        Some(idx)
    }

    /// `Σ_k (i_k - c_k)²` between flat node `i` and multi-index `c`.
    pub fn squared_index_distance(&self, i: usize, c: &[usize; 3]) -> u64 {
        let idx = self.multi_index(i);
        (0..self.dim.get())
            .map(|k| {
                let d = idx[k] as i64 - c[k] as i64;
                (d * d) as u64
            })
            .sum()
    }

    /// Largest distance from the origin to the nearest box face.
    pub fn inner_radius(&self) -> f64 {
        (0..self.dim.get())
            .map(|k| {
                let lo = -self.origin[k];
                let hi = self.origin[k] + (self.n - 1) as f64 * self.h;
                lo.min(hi)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Values on a [`Grid`], optionally tagged with the time they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Grid,
    values: Vec<f64>,
    time: Option<f64>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>, time: Option<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "grid has {} nodes but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(match time {
                Some(time) => Error::BlowupDetected { time },
                None => invalid("grid field contains non-finite values"),
            });
        }
        Ok(GridField { grid, values, time })
    }

    pub fn from_fn<F>(grid: Grid, time: Option<f64>, f: F) -> Result<Self>
    where
        F: Fn(&Point) -> f64 + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.point(i)))
            .collect();
        Self::new(grid, values, time)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> Option<f64> {
        self.time
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `‖a - b‖₂ / ‖b‖₂` on a common grid.
    pub fn relative_l2_distance(&self, reference: &GridField) -> Result<f64> {
        if self.grid != reference.grid {
            return Err(invalid("fields live on different grids"));
        }
        let (num, den) = self
            .values
            .iter()
            .zip(&reference.values)
            .fold((0.0, 0.0), |(n, d), (a, b)| {
                (n + (a - b) * (a - b), d + b * b)
            });
        Ok((num / den).sqrt())
    }

    /// CSV with a header row, one row per node: coordinates then value, all
    /// with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let names = ["x", "y", "z"];
        let n = self.grid.dim.get();
        writeln!(w, "{},value", names[..n].join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let p = self.grid.point(i);
            for c in &p[..n] {
                write!(w, "{},", fmt17(*c))?;
            }
            writeln!(w, "{}", fmt17(*v))?;
        }
        Ok(())
    }

    /// Text header (dims, spacing, origin, time) terminated by `end_header`,
    /// followed by the values as little-endian `f64`.
    pub fn write_raw<W: Write>(&self, mut w: W) -> io::Result<()> {
        let g = &self.grid;
        let n = g.dim.get();
        writeln!(w, "edes-gridfield 1")?;
        writeln!(w, "dims {}", vec![g.n.to_string(); n].join(" "))?;
        writeln!(w, "spacing {}", fmt17(g.h))?;
        let origin: Vec<String> = g.origin[..n].iter().map(|c| fmt17(*c)).collect();
        writeln!(w, "origin {}", origin.join(" "))?;
        match self.time {
            Some(t) => writeln!(w, "time {}", fmt17(t))?,
            None => writeln!(w, "time none")?,
        }
        writeln!(w, "end_header")?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_raw<R: BufRead>(mut r: R) -> Result<Self> {
        let bad = |m: &str| invalid(format!("malformed raw grid field: {m}"));
        let mut line = String::new();
        let mut dims: Option<Vec<usize>> = None;
        let mut spacing = None;
        let mut origin: Option<Vec<f64>> = None;
        let mut time = None;
        loop {
            line.clear();
            if r.read_line(&mut line).map_err(|e| bad(&e.to_string()))? == 0 {
                return Err(bad("missing end_header"));
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("edes-gridfield") => {}
                Some("dims") => {
                    dims = Some(
                        parts
                            .map(|p| p.parse().map_err(|_| bad("dims")))
                            .collect::<Result<_>>()?,
                    )
                }
                Some("spacing") => {
                    spacing = Some(
                        parts
                            .next()
                            .and_then(|p| p.parse().ok())
                            .ok_or_else(|| bad("spacing"))?,
                    )
                }
                Some("origin") => {
                    origin = Some(
                        parts
                            .map(|p| p.parse().map_err(|_| bad("origin")))
                            .collect::<Result<_>>()?,
                    )
                }
                Some("time") => {
                    time = match parts.next() {
                        Some("none") => None,
                        Some(p) => Some(p.parse().map_err(|_| bad("time"))?),
                        None => return Err(bad("time")),
                    }
                }
                Some("end_header") => break,
                _ => return Err(bad(line.trim())),
            }
        }
        let dims = dims.ok_or_else(|| bad("dims"))?;
        let dim = SpatialDim::new(dims.len())?;
        if dims.iter().any(|&d| d != dims[0]) {
            return Err(bad("only equal points per axis are supported"));
        }
        let grid = Grid::new(
            dim,
            dims[0],
            spacing.ok_or_else(|| bad("spacing"))?,
            &origin.ok_or_else(|| bad("origin"))?,
        )?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| bad(&e.to_string()))?;
        if bytes.len() != 8 * grid.len() {
            return Err(bad("payload length"));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        GridField::new(grid, values, time)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trips() {
        let g = Grid::new(SpatialDim::THREE, 9, 0.5, &[-2.0, -2.0, -2.0]).unwrap();
        for i in [0, 1, 8, 9, 80, 81, 728] {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
        }
        assert_eq!(g.node_index_of(&[0.0, 0.5, -2.0]), Some([4, 5, 0]));
        assert_eq!(g.node_index_of(&[0.1, 0.5, -2.0]), None);
        assert_eq!(g.squared_index_distance(0, &[4, 4, 4]), 48);
    }

    #[test]
    fn rejects_bad_grids_and_values() {
        assert!(Grid::new(SpatialDim::ONE, 7, 0.1, &[0.0]).is_err());
        assert!(Grid::new(SpatialDim::ONE, 8, 0.0, &[0.0]).is_err());
        let g = Grid::centered(SpatialDim::ONE, 8, 0.1).unwrap();
        assert!(matches!(
            GridField::new(g.clone(), vec![f64::NAN; 8], Some(1.0)),
            Err(Error::BlowupDetected { .. })
        ));
        assert!(GridField::new(g, vec![0.0; 7], None).is_err());
    }

    #[test]
    fn raw_export_round_trips() {
        let g = Grid::centered(SpatialDim::TWO, 8, 0.3).unwrap();
        let f = GridField::from_fn(g, Some(0.25), |p| p[0] - 2.0 * p[1] + 1.0 / 3.0).unwrap();
        let mut buf = Vec::new();
        f.write_raw(&mut buf).unwrap();
        let back = GridField::read_raw(io::Cursor::new(buf)).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn csv_has_coordinates_and_value() {
        let g = Grid::centered(SpatialDim::TWO, 8, 0.5).unwrap();
        let f = GridField::from_fn(g, None, |p| p[0] * p[1]).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y,value"));
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(row, vec![-2.0, -2.0, 4.0]);
        assert_eq!(text.lines().count(), 65);
    }
}
