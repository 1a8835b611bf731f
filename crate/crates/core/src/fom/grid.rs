//! 1-D finite-volume grid with the food surface at y = 0.

use crate::error::SolverError;
use serde::{Deserialize, Serialize};

/// Cell-centered grid on `[0, L]`. Face 0 is the exchanging surface,
/// the last face the insulated bottom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    length: f64,
    faces: Vec<f64>,
    centers: Vec<f64>,
    widths: Vec<f64>,
}

impl Grid1D {
    /// Uniform grid with `n_cells` cells.
    pub fn uniform(length: f64, n_cells: usize) -> Result<Self, SolverError> {
        Self::graded(length, n_cells, 1.0)
    }

    /// Geometrically graded grid; `growth > 1` packs smaller cells toward
    /// the surface (cell widths grow by `growth` from one cell to the next).
    pub fn graded(length: f64, n_cells: usize, growth: f64) -> Result<Self, SolverError> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(SolverError::Setup(format!("grid length {length} must be > 0")));
        }
        if n_cells < 3 {
            return Err(SolverError::Setup(format!("need at least 3 cells, got {n_cells}")));
        }
        if !(growth > 0.0) || !growth.is_finite() {
            return Err(SolverError::Setup(format!("grid growth {growth} must be > 0")));
        }
        let n = n_cells;
        let w0 = if (growth - 1.0).abs() < 1e-12 {
            length / n as f64
        } else {
            length * (growth - 1.0) / (growth.powi(n as i32) - 1.0)
        };
        let mut faces = Vec::with_capacity(n + 1);
        faces.push(0.0);
        let mut w = w0;
        for i in 0..n {
            let next = if i == n - 1 { length } else { faces[i] + w };
            faces.push(next);
            w *= growth;
        }
        let widths: Vec<f64> = faces.windows(2).map(|f| f[1] - f[0]).collect();
        let centers: Vec<f64> = faces.windows(2).map(|f| 0.5 * (f[0] + f[1])).collect();
        if widths.iter().any(|&w| w <= 0.0) {
            return Err(SolverError::Setup("grid faces not strictly increasing".into()));
        }
        Ok(Self { length, faces, centers, widths })
    }

    pub fn n_cells(&self) -> usize {
        self.widths.len()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Distance between the centers of cells `i` and `i+1`.
    pub fn center_spacing(&self, i: usize) -> f64 {
        self.centers[i + 1] - self.centers[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_grid_geometry() {
        let g = Grid1D::uniform(0.01, 41).unwrap();
        assert_eq!(g.n_cells(), 41);
        assert_eq!(g.faces()[0], 0.0);
        assert_eq!(*g.faces().last().unwrap(), 0.01);
        for w in g.widths() {
            assert_relative_eq!(*w, 0.01 / 41.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn graded_grid_packs_toward_surface() {
        let g = Grid1D::graded(0.01, 10, 1.2).unwrap();
        assert!(g.widths()[0] < g.widths()[9]);
        assert_relative_eq!(g.widths().iter().sum::<f64>(), 0.01, max_relative = 1e-12);
        assert_relative_eq!(g.widths()[5] / g.widths()[4], 1.2, max_relative = 1e-9);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid1D::uniform(0.0, 10).is_err());
        assert!(Grid1D::uniform(0.01, 2).is_err());
        assert!(Grid1D::graded(0.01, 10, 0.0).is_err());
    }
}
