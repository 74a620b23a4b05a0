//! Structured spatial grid over the square domain and scalar fields on it.
//!
//! The grid holds the `nx x ny` interior nodes of a uniform vertex-centered
//! lattice over a square of edge `L`: node `(i, j)` sits at
//! `((i+1) h_x, (j+1) h_y)` with `h_x = L/(nx+1)`. Boundary values are
//! implicitly zero (homogeneous Dirichlet), so fields store interior values
//! only. The discrete `L^2` norm is the cell-sum quadrature
//! `||y||^2 = h_x h_y * sum y_ij^2`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    edge: f64,
    hx: f64,
    hy: f64,
    /// Diffusion coefficient per interior node (cm^2/day), spatially variable.
    k_field: Vec<f64>,
}

impl Grid {
    /// Uniform diffusion coefficient `k` on an `nx x ny` interior lattice.
    pub fn uniform(nx: usize, ny: usize, edge: f64, k: f64) -> Result<Self> {
        Self::with_k_field(nx, ny, edge, vec![k; nx * ny])
    }

    /// Spatially variable diffusion coefficient, one value per interior node.
    pub fn with_k_field(nx: usize, ny: usize, edge: f64, k_field: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::config("grid.nx/ny", "must be at least 1"));
        }
        if !(edge > 0.0) {
            return Err(Error::config("grid.edge_cm", "must be positive"));
        }
        if k_field.len() != nx * ny {
            return Err(Error::SizeMismatch(format!(
                "k field has {} entries, grid has {}",
                k_field.len(),
                nx * ny
            )));
        }
        if !k_field.iter().all(|k| *k > 0.0 && k.is_finite()) {
            return Err(Error::config(
                "grid.k",
                "diffusion coefficient must be positive and finite everywhere",
            ));
        }
        Ok(Grid {
            nx,
            ny,
            edge,
            hx: edge / (nx + 1) as f64,
            hy: edge / (ny + 1) as f64,
            k_field,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn edge(&self) -> f64 {
        self.edge
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    /// Quadrature weight of one node cell.
    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn k_field(&self) -> &[f64] {
        &self.k_field
    }

    pub fn k_at(&self, i: usize, j: usize) -> f64 {
        self.k_field[self.idx(i, j)]
    }

    /// Bounds `(k0, k1)` of the diffusion coefficient.
    pub fn k_bounds(&self) -> (f64, f64) {
        let mut k0 = f64::INFINITY;
        let mut k1 = f64::NEG_INFINITY;
        for k in &self.k_field {
            k0 = k0.min(*k);
            k1 = k1.max(*k);
        }
        (k0, k1)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Physical coordinates of interior node `(i, j)`.
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        ((i + 1) as f64 * self.hx, (j + 1) as f64 * self.hy)
    }

    /// Row index of the horizontal center line (exact center for odd `ny`).
    pub fn center_row(&self) -> usize {
        (self.ny - 1) / 2
    }

    pub fn n_interior(&self) -> usize {
        self.nx * self.ny
    }
}

/// Scalar field on the grid interior (tumor density `y` or adjoint `p1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    nx: usize,
    ny: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Field {
            nx: grid.nx,
            ny: grid.ny,
            data: vec![0.0; grid.n_interior()],
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.n_interior());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.coords(i, j);
                data.push(f(x, y));
            }
        }
        Field {
            nx: grid.nx,
            ny: grid.ny,
            data,
        }
    }

    /// Constructor for callers that already hold consistent dimensions
    /// (solver internals).
    pub(crate) fn from_raw(nx: usize, ny: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), nx * ny);
        Field { nx, ny, data }
    }

    pub fn from_vec(grid: &Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.n_interior() {
            return Err(Error::SizeMismatch(format!(
                "field has {} entries, grid has {}",
                data.len(),
                grid.n_interior()
            )));
        }
        Ok(Field {
            nx: grid.nx,
            ny: grid.ny,
            data,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Discrete `L^2(Omega)` norm by cell-sum quadrature.
    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        self.l2_norm_sq(grid).sqrt()
    }

    pub fn l2_norm_sq(&self, grid: &Grid) -> f64 {
        let acc: f64 = self.data.iter().map(|v| v * v).sum();
        acc * grid.cell_area()
    }

    /// Discrete `L^2(Omega)` inner product.
    pub fn l2_dot(&self, other: &Field, grid: &Grid) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        let acc: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum();
        acc * grid.cell_area()
    }

    /// Total mass `h_x h_y * sum y_ij` (area integral of the field).
    pub fn mass(&self, grid: &Grid) -> f64 {
        let acc: f64 = self.data.iter().sum();
        acc * grid.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Values along the horizontal center line, left to right.
    pub fn center_line(&self, grid: &Grid) -> Vec<f64> {
        let j = grid.center_row();
        (0..self.nx).map(|i| self.at(i, j)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing_and_coords() {
        let g = Grid::uniform(61, 61, 3.0, 1.0).unwrap();
        assert!((g.hx() - 3.0 / 62.0).abs() < 1e-15);
        // Center node of an odd lattice sits at the domain center.
        let (x, y) = g.coords(30, 30);
        assert!((x - 1.5).abs() < 1e-12 && (y - 1.5).abs() < 1e-12);
        assert_eq!(g.center_row(), 30);
    }

    #[test]
    fn k_validation() {
        assert!(Grid::uniform(4, 4, 3.0, 0.0).is_err());
        assert!(Grid::uniform(4, 4, 3.0, -1.0).is_err());
        assert!(Grid::with_k_field(2, 2, 1.0, vec![1.0; 3]).is_err());
    }

    #[test]
    fn field_norm_and_dot() {
        let g = Grid::uniform(3, 3, 4.0, 1.0).unwrap();
        let ones = Field::from_fn(&g, |_, _| 1.0);
        let h = 1.0; // 4.0 / (3+1)
        assert!((ones.l2_norm_sq(&g) - h * h * 9.0).abs() < 1e-14);
        let two = Field::from_fn(&g, |_, _| 2.0);
        assert!((ones.l2_dot(&two, &g) - 18.0).abs() < 1e-14);
    }
}
