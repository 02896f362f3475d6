//! Periodic spatial grid and uniform time grid.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform periodic grid on `[-half_length, half_length)`.
///
/// Whole-line fields are truncated to this box; the box must be wide enough
/// that soliton tails fall below roundoff at the edges (see
/// [`SpatialGrid::box_rule_ok`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    num_points: usize,
    half_length: f64,
    spacing: f64,
}

pub fn build_grid(num_points: usize, half_length: f64) -> Result<SpatialGrid> {
    SpatialGrid::new(num_points, half_length)
}

impl SpatialGrid {
    pub fn new(num_points: usize, half_length: f64) -> Result<Self> {
        if num_points < 8 || !num_points.is_power_of_two() {
            return Err(Error::invalid_argument(format!(
                "num_points must be a power of two >= 8, got {num_points}"
            )));
        }
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::invalid_argument(format!(
                "half_length must be positive and finite, got {half_length}"
            )));
        }
        let spacing = 2.0 * half_length / num_points as f64;
        Ok(SpatialGrid {
            num_points,
            half_length,
            spacing,
        })
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn length(&self) -> f64 {
        2.0 * self.half_length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Node `x_m = -half_length + m * spacing`.
    pub fn node(&self, m: usize) -> f64 {
        -self.half_length + m as f64 * self.spacing
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.num_points).map(move |m| self.node(m))
    }

    /// Largest resolved wavenumber `pi / spacing`.
    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::PI / self.spacing
    }

    /// Tail rule: a soliton of halfwidth `h` centred in the box decays by
    /// `exp(-h * half_length / 2)` at the edge; require that below `1e-10`.
    pub fn box_rule_ok(&self, h: f64) -> bool {
        (-h * self.half_length / 2.0).exp() < 1e-10
    }
}

/// Uniform time grid on `[t_start, t_end]` with `num_steps + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    num_steps: usize,
    step: f64,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, num_steps: usize) -> Result<Self> {
        if !(t_end > t_start) {
            return Err(Error::invalid_argument(format!(
                "t_end ({t_end}) must exceed t_start ({t_start})"
            )));
        }
        if num_steps == 0 {
            return Err(Error::invalid_argument("num_steps must be positive"));
        }
        let step = (t_end - t_start) / num_steps as f64;
        Ok(TimeGrid {
            t_start,
            t_end,
            num_steps,
            step,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn num_nodes(&self) -> usize {
        self.num_steps + 1
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.num_steps {
            self.t_end
        } else {
            self.t_start + i as f64 * self.step
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.num_nodes()).map(|i| self.node(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes_and_spacing() {
        let g = build_grid(8, 4.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        let nodes: Vec<f64> = g.nodes().collect();
        assert_eq!(nodes, vec![-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        // spacing * num_points == 2 * half_length exactly here
        assert_eq!(g.spacing() * g.num_points() as f64, 2.0 * g.half_length());
    }

    #[test]
    fn grid_spacing_large() {
        let g = build_grid(2048, 40.0).unwrap();
        assert!((g.spacing() - 0.0390625).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_non_power_of_two() {
        assert!(build_grid(12, 4.0).is_err());
        assert!(build_grid(4, 4.0).is_err());
        assert!(build_grid(8, 0.0).is_err());
        assert!(build_grid(8, -1.0).is_err());
    }

    #[test]
    fn time_grid_nodes() {
        let tg = TimeGrid::new(0.0, 1.0, 4).unwrap();
        assert_eq!(tg.num_nodes(), 5);
        assert!((tg.step() - 0.25).abs() < 1e-15);
        assert_eq!(tg.node(4), 1.0);
        assert!(TimeGrid::new(1.0, 0.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
    }
}
