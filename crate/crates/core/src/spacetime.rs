//! Pair-valued space-time fields: the Picard unknown `eta = (phi~, psi~)`,
//! the profile pair `W = (h, k)` and the source `H` all share this shape.

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::fourier::spectral_derivative;
use crate::grid::{SpatialGrid, TimeGrid};
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    time_grid: TimeGrid,
    first: Vec<ComplexField>,
    second: Vec<ComplexField>,
}

impl SpaceTimeField {
    pub fn new(time_grid: TimeGrid, first: Vec<ComplexField>, second: Vec<ComplexField>) -> Result<Self> {
        if first.len() != time_grid.num_nodes() || second.len() != time_grid.num_nodes() {
            return Err(Error::invalid_argument(format!(
                "snapshot counts ({}, {}) must match the {} time nodes",
                first.len(),
                second.len(),
                time_grid.num_nodes()
            )));
        }
        let grid = first[0].grid();
        if first.iter().chain(&second).any(|f| f.grid() != grid) {
            return Err(Error::invalid_argument("all snapshots must share one spatial grid"));
        }
        Ok(SpaceTimeField {
            time_grid,
            first,
            second,
        })
    }

    pub fn zeros(time_grid: TimeGrid, grid: SpatialGrid) -> Self {
        let make = || {
            (0..time_grid.num_nodes())
                .map(|i| ComplexField::zeros(grid, time_grid.node(i)))
                .collect::<Vec<_>>()
        };
        SpaceTimeField {
            time_grid,
            first: make(),
            second: make(),
        }
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn spatial_grid(&self) -> SpatialGrid {
        self.first[0].grid()
    }

    pub fn num_nodes(&self) -> usize {
        self.time_grid.num_nodes()
    }

    pub fn first(&self) -> &[ComplexField] {
        &self.first
    }

    pub fn second(&self) -> &[ComplexField] {
        &self.second
    }

    pub fn pair_at(&self, i: usize) -> (&ComplexField, &ComplexField) {
        (&self.first[i], &self.second[i])
    }

    pub fn assert_aligned(&self, other: &SpaceTimeField) {
        assert_eq!(
            self.time_grid, other.time_grid,
            "space-time fields live on different time grids"
        );
        assert_eq!(self.spatial_grid(), other.spatial_grid());
    }

    pub fn zip_with(&self, other: &SpaceTimeField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        self.assert_aligned(other);
        SpaceTimeField {
            time_grid: self.time_grid,
            first: self
                .first
                .iter()
                .zip(&other.first)
                .map(|(a, b)| a.zip_map(b, &f))
                .collect(),
            second: self
                .second
                .iter()
                .zip(&other.second)
                .map(|(a, b)| a.zip_map(b, &f))
                .collect(),
        }
    }

    pub fn add(&self, other: &SpaceTimeField) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpaceTimeField) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        SpaceTimeField {
            time_grid: self.time_grid,
            first: self.first.iter().map(|f| f.scale_re(s)).collect(),
            second: self.second.iter().map(|f| f.scale_re(s)).collect(),
        }
    }

    /// Snapshot-wise spectral x-derivative of both components.
    pub fn derivative_x(&self) -> Result<SpaceTimeField> {
        Ok(SpaceTimeField {
            time_grid: self.time_grid,
            first: self
                .first
                .iter()
                .map(|f| spectral_derivative(f, 1))
                .collect::<Result<_>>()?,
            second: self
                .second
                .iter()
                .map(|f| spectral_derivative(f, 1))
                .collect::<Result<_>>()?,
        })
    }
}
