//! Complex-valued samples on a spatial grid at one instant.

use crate::grid::SpatialGrid;
use num_complex::Complex64;

/// A single-time complex function of x, sampled on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: SpatialGrid,
    time: f64,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: SpatialGrid, time: f64, values: Vec<Complex64>) -> Self {
        assert_eq!(
            values.len(),
            grid.num_points(),
            "field length must match grid"
        );
        ComplexField { grid, time, values }
    }

    pub fn zeros(grid: SpatialGrid, time: f64) -> Self {
        ComplexField::new(grid, time, vec![Complex64::new(0.0, 0.0); grid.num_points()])
    }

    pub fn from_fn(grid: SpatialGrid, time: f64, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes().map(f).collect();
        ComplexField::new(grid, time, values)
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        ComplexField::new(self.grid, self.time, self.values.iter().map(|&z| f(z)).collect())
    }

    /// Pointwise combination with another field on the same grid.
    pub fn zip_map(&self, other: &ComplexField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        self.assert_compatible(other);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        ComplexField::new(self.grid, self.time, values)
    }

    pub fn add(&self, other: &ComplexField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| s * z)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.map(|z| s * z)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn assert_compatible(&self, other: &ComplexField) {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
    }
}
