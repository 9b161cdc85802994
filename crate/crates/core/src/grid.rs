//! Uniform square grids over the truncated plane.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform `N × N` grid on `[-R, R)²` with spacing `h = 2R/N`.
///
/// Node `(j, k)` sits at `z = (-R + j h) + i(-R + k h)`. Fields are stored
/// row-major with rows running along the imaginary axis: index `k·N + j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    radius: f64,
    points: usize,
    spacing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub radius: f64,
    pub points: usize,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;
    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid::new(spec.radius, spec.points)
    }
}

impl From<Grid> for GridSpec {
    fn from(grid: Grid) -> Self {
        GridSpec {
            radius: grid.radius,
            points: grid.points,
        }
    }
}

pub const MIN_POINTS: usize = 16;

impl Grid {
    pub fn new(radius: f64, points: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidGrid(format!("R must be positive, got {radius}")));
        }
        if !points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("N must be even, got {points}")));
        }
        if points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "N must be at least {MIN_POINTS}, got {points}"
            )));
        }
        Ok(Self {
            radius,
            points,
            spacing: 2.0 * radius / points as f64,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Points per axis.
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total node count `N²`.
    pub fn len(&self) -> usize {
        self.points * self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        -self.radius + j as f64 * self.spacing
    }

    pub fn node(&self, j: usize, k: usize) -> Complex64 {
        Complex64::new(self.coordinate(j), self.coordinate(k))
    }

    pub fn index(&self, j: usize, k: usize) -> usize {
        k * self.points + j
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.points, index / self.points)
    }

    pub fn node_at(&self, index: usize) -> Complex64 {
        let (j, k) = self.coords(index);
        self.node(j, k)
    }

    /// All nodes in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.len()).map(move |i| self.node_at(i))
    }

    /// Index of the node at `z`, if `z` is a node up to `1e-9·h`.
    pub fn locate(&self, z: Complex64) -> Option<usize> {
        let fj = (z.re + self.radius) / self.spacing;
        let fk = (z.im + self.radius) / self.spacing;
        let (j, k) = (fj.round(), fk.round());
        let tol = 1e-9;
        if (fj - j).abs() > tol || (fk - k).abs() > tol {
            return None;
        }
        if j < 0.0 || k < 0.0 || j >= self.points as f64 || k >= self.points as f64 {
            return None;
        }
        Some(self.index(j as usize, k as usize))
    }

    /// Indices of the outermost ring that is symmetric under `z → -z`
    /// (the layer `max(|x₁|, |x₂|) = R - h`).
    pub fn boundary_ring(&self) -> Vec<usize> {
        let n = self.points;
        let (lo, hi) = (1, n - 1);
        (0..self.len())
            .filter(|&i| {
                let (j, k) = self.coords(i);
                let inside = (lo..=hi).contains(&j) && (lo..=hi).contains(&k);
                inside && (j == lo || j == hi || k == lo || k == hi)
            })
            .collect()
    }

    /// Trapezoid-rule integral of a sampled field over the plane.
    ///
    /// Rows are summed first, then the row sums, in a fixed order.
    pub fn integrate<F>(&self, mut field: F) -> Complex64
    where
        F: FnMut(usize) -> Complex64,
    {
        let n = self.points;
        let mut total = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..n {
                row += field(k * n + j);
            }
            total += row;
        }
        total * self.cell_area()
    }
}

/// Builds a grid of `points × points` nodes over `[-radius, radius)²`.
pub fn make_grid(radius: f64, points: usize) -> Result<Grid> {
    Grid::new(radius, points)
}
