//! One-dimensional coordinate grids.
//!
//! Finite grids stand in for the compact state, action, and parameter
//! spaces of the continuous theory. Points are strictly increasing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered list of real coordinates with a text label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
    label: String,
}

impl Grid {
    pub fn new(points: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if points.is_empty()
            || points.iter().any(|p| !p.is_finite())
            || points.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidGrid { label });
        }
        Ok(Self { points, label })
    }

    /// `n` equally spaced points on `[lo, hi]`.
    pub fn linspace(lo: f64, hi: f64, n: usize, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if n == 0 || !(lo < hi) && n > 1 {
            return Err(Error::InvalidGrid { label });
        }
        if n == 1 {
            return Self::new(vec![lo], label);
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        // Pin the last node to hi exactly.
        points[n - 1] = hi;
        Self::new(points, label)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn get(&self, i: usize) -> f64 {
        self.points[i]
    }

    pub fn min(&self) -> f64 {
        self.points[0]
    }

    pub fn max(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Index of the node nearest to `x`; ties break to the lower index.
    pub fn nearest(&self, x: f64) -> usize {
        match self
            .points
            .binary_search_by(|p| p.partial_cmp(&x).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i == self.points.len() => i - 1,
            Err(i) => {
                if x - self.points[i - 1] <= self.points[i] - x {
                    i - 1
                } else {
                    i
                }
            }
        }
    }

    /// Copy of this grid guaranteed to contain `x` as an exact node.
    ///
    /// A node already within `tol` of `x` is snapped to `x`; otherwise `x`
    /// is inserted. Returns the new grid and the index of `x`.
    pub fn with_node(&self, x: f64, tol: f64) -> Result<(Grid, usize)> {
        let mut points = self.points.clone();
        let i = self.nearest(x);
        if (points[i] - x).abs() <= tol {
            points[i] = x;
            let g = Grid::new(points, self.label.clone())?;
            return Ok((g, i));
        }
        let at = if x > points[i] { i + 1 } else { i };
        points.insert(at, x);
        let g = Grid::new(points, self.label.clone())?;
        Ok((g, at))
    }
}
