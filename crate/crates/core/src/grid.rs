//! Fixed evaluation grids.

use crate::error::CoreError;
use crate::Result;
use serde::{Deserialize, Serialize};

/// A fixed set of points in R^m over which priors are evaluated.
///
/// The 1-D experiments use equispaced points on `[0, 1]`; the spatial demo
/// uses 2-D centroids. All encoded draws live on one of these grids — the
/// trained decoder cannot predict off-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<Vec<f64>>,
}

impl Grid {
    /// Builds a grid from explicit points. Fails on an empty list or on
    /// points of unequal dimensionality.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.len())
            .ok_or_else(|| CoreError::InvalidParameter("grid must be nonempty".into()))?;
        if dim == 0 {
            return Err(CoreError::InvalidParameter(
                "grid points must have dimension >= 1".into(),
            ));
        }
        if let Some(bad) = points.iter().position(|p| p.len() != dim) {
            return Err(CoreError::ShapeMismatch(format!(
                "grid point {bad} has dimension {}, expected {dim}",
                points[bad].len()
            )));
        }
        Ok(Grid { points })
    }

    /// `n` equispaced points spanning `[a, b]` inclusive.
    pub fn equispaced_1d(n: usize, a: f64, b: f64) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::InvalidParameter("grid size must be >= 1".into()));
        }
        let points = if n == 1 {
            vec![vec![a]]
        } else {
            (0..n)
                .map(|i| vec![a + (b - a) * i as f64 / (n - 1) as f64])
                .collect()
        };
        Grid::new(points)
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Dimensionality of each point.
    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// The `i`-th point.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
}
