//! Sobolev norms via Fourier weights and discrete space-time mixed norms.

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::fourier::{fft, wavenumber};
use crate::grid::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L2,
    H1,
    H2,
    Linf,
    Lp(f64),
}

/// Sobolev / Lebesgue norm of a single snapshot.
///
/// L2, H1, H2 are computed in Fourier space with `(1 + k^2)^s` weights,
/// Linf as the max modulus, Lp by quadrature.
pub fn sobolev_norm(f: &ComplexField, kind: NormKind) -> f64 {
    match kind {
        NormKind::L2 => fourier_hs_norm(f, 0.0),
        NormKind::H1 => fourier_hs_norm(f, 1.0),
        NormKind::H2 => fourier_hs_norm(f, 2.0),
        NormKind::Linf => f.max_abs(),
        NormKind::Lp(p) => {
            assert!(p >= 1.0, "Lp norm requires p >= 1");
            lp_norm(f, p)
        }
    }
}

fn fourier_hs_norm(f: &ComplexField, s: f64) -> f64 {
    let grid = f.grid();
    let n = grid.num_points() as f64;
    let hat = fft(f);
    // dx * sum |f_m|^2 = (dx / N) * sum |F_k|^2 (Parseval)
    let scale = grid.spacing() / n;
    let sum: f64 = hat
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let k = wavenumber(&grid, i);
            let w = if s == 0.0 {
                1.0
            } else if s == 1.0 {
                1.0 + k * k
            } else {
                (1.0 + k * k).powf(s)
            };
            w * h.norm_sqr()
        })
        .sum();
    (scale * sum).sqrt()
}

fn lp_norm(f: &ComplexField, p: f64) -> f64 {
    let dx = f.grid().spacing();
    let sum: f64 = f.values().iter().map(|z| z.norm().powf(p)).sum();
    (dx * sum).powf(1.0 / p)
}

/// The fixed admissible exponent set for the discrete Strichartz norm.
pub const ADMISSIBLE_PAIRS: [(f64, f64); 4] = [
    (f64::INFINITY, 2.0),
    (4.0, f64::INFINITY),
    (6.0, 6.0),
    (8.0, 4.0),
];

pub fn is_admissible(q: f64, r: f64) -> bool {
    ADMISSIBLE_PAIRS
        .iter()
        .any(|&(aq, ar)| aq == q && ar == r)
}

fn spatial_lr(f: &ComplexField, r: f64) -> f64 {
    if r.is_infinite() {
        f.max_abs()
    } else if r == 2.0 {
        sobolev_norm(f, NormKind::L2)
    } else {
        lp_norm(f, r)
    }
}

/// Trapezoid integral of `g` over the time grid nodes.
fn time_trapezoid(grid: &TimeGrid, g: &[f64]) -> f64 {
    let dt = grid.step();
    let n = g.len();
    let mut sum = 0.5 * (g[0] + g[n - 1]);
    for gi in &g[1..n - 1] {
        sum += gi;
    }
    sum * dt
}

/// Discrete `L^q_t L^r_x` norm of one space-time component.
///
/// `q = inf` takes the max over snapshots; finite q uses trapezoid
/// quadrature over the time grid. `(q, r)` must belong to
/// [`ADMISSIBLE_PAIRS`].
pub fn mixed_spacetime_norm(
    snapshots: &[ComplexField],
    times: &TimeGrid,
    q: f64,
    r: f64,
) -> Result<f64> {
    if !is_admissible(q, r) {
        return Err(Error::invalid_argument(format!(
            "(q, r) = ({q}, {r}) is not in the admissible set {ADMISSIBLE_PAIRS:?}"
        )));
    }
    if snapshots.len() != times.num_nodes() {
        return Err(Error::invalid_argument(format!(
            "snapshot count {} does not match time grid nodes {}",
            snapshots.len(),
            times.num_nodes()
        )));
    }
    let spatial: Vec<f64> = snapshots.iter().map(|f| spatial_lr(f, r)).collect();
    if q.is_infinite() {
        Ok(spatial.into_iter().fold(0.0, f64::max))
    } else {
        let powered: Vec<f64> = spatial.iter().map(|h| h.powf(q)).collect();
        Ok(time_trapezoid(times, &powered).powf(1.0 / q))
    }
}
