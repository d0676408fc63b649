//! Spatial dimension and fixed-size points.
//!
//! Points are stored as `[f64; 3]` regardless of dimension; coordinates
//! beyond the active dimension are kept at zero.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Point = [f64; 3];

pub const ORIGIN: Point = [0.0; 3];

/// Spatial dimension of the Cauchy problem, restricted to 1, 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct SpatialDim(usize);

impl SpatialDim {
    pub const ONE: SpatialDim = SpatialDim(1);
    pub const TWO: SpatialDim = SpatialDim(2);
    pub const THREE: SpatialDim = SpatialDim(3);

    pub fn new(n: usize) -> Result<Self> {
        match n {
            1..=3 => Ok(SpatialDim(n)),
            _ => Err(invalid(format!(
                "spatial dimension must be 1, 2 or 3 (got {n})"
            ))),
        }
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    #[inline]
    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    /// Builds a point from a slice whose length must equal the dimension.
    pub fn point(self, coords: &[f64]) -> Result<Point> {
        if coords.len() != self.0 {
            return Err(invalid(format!(
                "expected {} coordinates, got {}",
                self.0,
                coords.len()
            )));
        }
        let mut p = ORIGIN;
        p[..self.0].copy_from_slice(coords);
        Ok(p)
    }
}

impl TryFrom<usize> for SpatialDim {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        SpatialDim::new(n)
    }
}

impl From<SpatialDim> for usize {
    fn from(d: SpatialDim) -> usize {
        d.0
    }
}

impl fmt::Display for SpatialDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// `a + s * b`
#[inline]
pub fn axpy(a: &Point, s: f64, b: &Point) -> Point {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm_sq(a: &Point) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    norm_sq(a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsupported_dimensions() {
        assert!(SpatialDim::new(0).is_err());
        assert!(SpatialDim::new(4).is_err());
        for n in 1..=3 {
            assert_eq!(SpatialDim::new(n).unwrap().get(), n);
        }
    }

    #[test]
    fn point_checks_length() {
        let d = SpatialDim::TWO;
        assert_eq!(d.point(&[1.0, 2.0]).unwrap(), [1.0, 2.0, 0.0]);
        assert!(d.point(&[1.0]).is_err());
    }
}
