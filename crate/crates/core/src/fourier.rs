//! FFT-based operators: derivatives, left antiderivative, free propagator.
//!
//! Wavenumbers use the standard symmetric layout `0, 1, .., N/2, -(N/2-1),
//! .., -1` (times `2*pi/L`). The Nyquist mode is kept for even symbols
//! (k^2) and zeroed wherever an odd power of `ik` would make it
//! asymmetric.

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::SpatialGrid;
use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};
use std::sync::{Arc, Mutex};

static PLANNER: Lazy<Mutex<FftPlanner<f64>>> = Lazy::new(|| Mutex::new(FftPlanner::new()));

fn plan_forward(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.lock().unwrap().plan_fft_forward(n)
}

fn plan_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.lock().unwrap().plan_fft_inverse(n)
}

thread_local! {
    // per-thread scratch so transforms on rayon workers never allocate
    static FFT_SCRATCH: std::cell::RefCell<Vec<Complex64>> =
        const { std::cell::RefCell::new(Vec::new()) };
}

fn process_with_tls_scratch(plan: &Arc<dyn Fft<f64>>, values: &mut [Complex64]) {
    FFT_SCRATCH.with(|cell| {
        let mut scratch = cell.borrow_mut();
        let needed = plan.get_inplace_scratch_len();
        if scratch.len() < needed {
            scratch.resize(needed, Complex64::new(0.0, 0.0));
        }
        plan.process_with_scratch(values, &mut scratch[..needed]);
    });
}

/// Unnormalized forward DFT, in place.
pub fn fft_in_place(values: &mut [Complex64]) {
    let plan = plan_forward(values.len());
    process_with_tls_scratch(&plan, values);
}

/// Inverse DFT scaled by 1/N, in place.
pub fn ifft_in_place(values: &mut [Complex64]) {
    let n = values.len();
    let plan = plan_inverse(n);
    process_with_tls_scratch(&plan, values);
    let inv = 1.0 / n as f64;
    for v in values.iter_mut() {
        *v *= inv;
    }
}

pub fn fft(field: &ComplexField) -> Vec<Complex64> {
    let mut hat = field.values().to_vec();
    fft_in_place(&mut hat);
    hat
}

/// Wavenumber of mode index `i` on this grid (Nyquist positive).
pub fn wavenumber(grid: &SpatialGrid, i: usize) -> f64 {
    let n = grid.num_points();
    let scale = 2.0 * std::f64::consts::PI / grid.length();
    let m = if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    };
    m * scale
}

pub fn wavenumbers(grid: &SpatialGrid) -> Vec<f64> {
    (0..grid.num_points()).map(|i| wavenumber(grid, i)).collect()
}

/// Fourier-multiplier derivative of order 1..=3; exact on grid harmonics.
pub fn spectral_derivative(f: &ComplexField, order: usize) -> Result<ComplexField> {
    if order == 0 || order > 3 {
        return Err(Error::UnsupportedOrder(order));
    }
    let grid = f.grid();
    let n = grid.num_points();
    let mut hat = fft(f);
    let odd = order % 2 == 1;
    for (i, h) in hat.iter_mut().enumerate() {
        if odd && i == n / 2 {
            *h = Complex64::new(0.0, 0.0);
            continue;
        }
        let ik = Complex64::new(0.0, wavenumber(&grid, i));
        *h *= ik.powi(order as i32);
    }
    ifft_in_place(&mut hat);
    Ok(ComplexField::new(grid, f.time(), hat))
}

/// Relative field magnitude near the left box edge; large values mean the
/// integrand has mass at the boundary and the cumulative integral is
/// untrustworthy there.
pub fn left_boundary_mass(f: &ComplexField) -> f64 {
    let max = f.max_abs();
    if max == 0.0 {
        return 0.0;
    }
    let probe = (f.len() / 128).max(2);
    f.values()[..probe]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        / max
}

pub const BOUNDARY_MASS_TOL: f64 = 1e-10;

/// Cumulative integral from the left box edge with `g(-L/2) = 0`.
pub struct LeftAntiderivative {
    pub field: ComplexField,
    /// Relative magnitude of the integrand near the left edge.
    pub boundary_mass: f64,
}

impl LeftAntiderivative {
    pub fn boundary_warning(&self) -> bool {
        self.boundary_mass > BOUNDARY_MASS_TOL
    }
}

/// Integral of `f` from the left box edge to each node, spectrally accurate
/// for integrands that are smooth and periodic at box scale.
///
/// The mean mode contributes the linear ramp `mean * (x + L/2)`; every other
/// mode is divided by `ik` and anchored so the value at the first node is
/// zero. Truncating `int_{-inf}^x` to the box is covered by the box-size
/// rule for exponentially localized integrands.
pub fn antiderivative_from_left(f: &ComplexField) -> LeftAntiderivative {
    let grid = f.grid();
    let n = grid.num_points();
    let mut hat = fft(f);
    let mean = hat[0] / n as f64;
    hat[0] = Complex64::new(0.0, 0.0);
    for (i, h) in hat.iter_mut().enumerate().skip(1) {
        if i == n / 2 {
            *h = Complex64::new(0.0, 0.0);
            continue;
        }
        *h /= Complex64::new(0.0, wavenumber(&grid, i));
    }
    ifft_in_place(&mut hat);
    let periodic_at_left = hat[0];
    let dx = grid.spacing();
    for (m, h) in hat.iter_mut().enumerate() {
        // x_m + L/2 = m * dx
        *h = *h - periodic_at_left + mean * (m as f64 * dx);
    }
    LeftAntiderivative {
        boundary_mass: left_boundary_mass(f),
        field: ComplexField::new(grid, f.time(), hat),
    }
}

/// Real-part convenience for nonnegative integrands such as |u|^(2*sigma).
pub fn antiderivative_from_left_real(f: &ComplexField) -> (Vec<f64>, f64) {
    let anti = antiderivative_from_left(f);
    (
        anti.field.values().iter().map(|z| z.re).collect(),
        anti.boundary_mass,
    )
}

/// Free Schroedinger group S(dt): multiplier `exp(-i k^2 dt)`, exactly
/// unitary on the discrete L2 inner product.
pub fn free_propagator_apply(f: &ComplexField, dt: f64) -> ComplexField {
    let grid = f.grid();
    let mut hat = fft(f);
    for (i, h) in hat.iter_mut().enumerate() {
        let k = wavenumber(&grid, i);
        *h *= Complex64::from_polar(1.0, -k * k * dt);
    }
    ifft_in_place(&mut hat);
    let mut out = ComplexField::new(grid, f.time() + dt, hat);
    out.set_time(f.time() + dt);
    out
}

/// Apply `exp(-i k^2 dt)` to a spectrum in place (hat-space propagator).
pub fn propagate_hat(hat: &mut [Complex64], grid: &SpatialGrid, dt: f64) {
    for (i, h) in hat.iter_mut().enumerate() {
        let k = wavenumber(grid, i);
        *h *= Complex64::from_polar(1.0, -k * k * dt);
    }
}

/// Zero all modes with |k| above `frac` of the maximum (2/3-rule when
/// `frac = 2/3`).
pub fn dealias_hat(hat: &mut [Complex64], grid: &SpatialGrid, frac: f64) {
    let k_cut = frac * grid.max_wavenumber();
    for (i, h) in hat.iter_mut().enumerate() {
        if wavenumber(grid, i).abs() > k_cut {
            *h = Complex64::new(0.0, 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::norms::{sobolev_norm, NormKind};

    fn harmonic(grid: SpatialGrid, mode: i32) -> ComplexField {
        let k = 2.0 * std::f64::consts::PI * mode as f64 / grid.length();
        ComplexField::from_fn(grid, 0.0, |x| Complex64::from_polar(1.0, k * x))
    }

    #[test]
    fn derivative_exact_on_harmonics() {
        let grid = build_grid(64, 4.0).unwrap();
        let k0 = 2.0 * std::f64::consts::PI * 3.0 / grid.length();
        let f = harmonic(grid, 3);
        let df = spectral_derivative(&f, 1).unwrap();
        for (d, v) in df.values().iter().zip(f.values()) {
            let expect = Complex64::new(0.0, k0) * v;
            assert!((d - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let grid = build_grid(32, 5.0).unwrap();
        let f = ComplexField::from_fn(grid, 0.0, |_| Complex64::new(2.5, -1.0));
        for order in 1..=3 {
            let df = spectral_derivative(&f, order).unwrap();
            assert!(df.max_abs() < 1e-13, "order {order}");
        }
    }

    #[test]
    fn derivative_rejects_order_4() {
        let grid = build_grid(32, 5.0).unwrap();
        let f = ComplexField::zeros(grid, 0.0);
        assert!(matches!(
            spectral_derivative(&f, 4),
            Err(Error::UnsupportedOrder(4))
        ));
    }

    #[test]
    fn antiderivative_of_one_is_ramp() {
        let grid = build_grid(64, 4.0).unwrap();
        let f = ComplexField::from_fn(grid, 0.0, |_| Complex64::new(1.0, 0.0));
        let g = antiderivative_from_left(&f).field;
        for (m, v) in g.values().iter().enumerate() {
            let expect = grid.node(m) + grid.half_length();
            assert!((v.re - expect).abs() < 1e-12, "node {m}");
            assert!(v.im.abs() < 1e-14);
        }
    }

    #[test]
    fn antiderivative_of_zero_is_zero() {
        let grid = build_grid(32, 4.0).unwrap();
        let g = antiderivative_from_left(&ComplexField::zeros(grid, 0.0));
        assert!(g.field.max_abs() == 0.0);
        assert!(!g.boundary_warning());
    }

    /// Closed form: int_{-inf}^y 4 sech(2s) ds = 2 atan(sinh(2y)) + pi.
    #[test]
    fn antiderivative_matches_sech_closed_form() {
        let grid = build_grid(2048, 40.0).unwrap();
        let f = ComplexField::from_fn(grid, 0.0, |x| {
            Complex64::new(4.0 / (2.0 * x).cosh(), 0.0)
        });
        let g = antiderivative_from_left(&f).field;
        for (m, v) in g.values().iter().enumerate() {
            let y = grid.node(m);
            let expect = 2.0 * (2.0 * y).sinh().atan() + std::f64::consts::PI;
            assert!(
                (v.re - expect).abs() < 1e-9,
                "y={y}: got {} want {expect}",
                v.re
            );
        }
        // total mass 2 pi at the right end
        let last = g.values()[grid.num_points() - 1].re;
        assert!((last - 2.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn antiderivative_then_derivative_recovers() {
        let grid = build_grid(1024, 40.0).unwrap();

        // zero-mean localized integrand: the antiderivative is periodic and
        // the fundamental theorem holds directly
        let f0 = ComplexField::from_fn(grid, 0.0, |x| {
            Complex64::new(-x / 4.0 * (-x * x / 8.0).exp(), 0.0)
        });
        let g0 = antiderivative_from_left(&f0).field;
        let df0 = spectral_derivative(&g0, 1).unwrap();
        assert!(df0.sub(&f0).max_abs() < 1e-10);

        // nonzero mean: subtract the linear ramp carried by the mean mode
        // before differentiating, then add the mean back
        let f = ComplexField::from_fn(grid, 0.0, |x| {
            Complex64::new((-x * x / 8.0).exp(), 0.3 * (-x * x / 10.0).exp())
        });
        let dx = grid.spacing();
        let mean = f.values().iter().sum::<Complex64>() * (dx / grid.length());
        let g = antiderivative_from_left(&f).field;
        let mut periodic = g.clone();
        for (m, v) in periodic.values_mut().iter_mut().enumerate() {
            *v -= mean * (m as f64 * dx);
        }
        let df = spectral_derivative(&periodic, 1).unwrap().map(|z| z + mean);
        let err = df.sub(&f).max_abs();
        assert!(err < 1e-10, "recovery error {err}");
    }

    #[test]
    fn boundary_mass_flag_fires_on_nonlocal_integrand() {
        let grid = build_grid(128, 4.0).unwrap();
        let f = ComplexField::from_fn(grid, 0.0, |_| Complex64::new(1.0, 0.0));
        assert!(antiderivative_from_left(&f).boundary_warning());
    }

    #[test]
    fn propagator_identity_at_zero_dt() {
        let grid = build_grid(128, 10.0).unwrap();
        let f = ComplexField::from_fn(grid, 0.0, |x| Complex64::new((-x * x).exp(), x));
        let g = free_propagator_apply(&f, 0.0);
        assert!(g.sub(&f).max_abs() < 1e-13);
    }

    #[test]
    fn propagator_preserves_l2_and_satisfies_group_law() {
        let grid = build_grid(256, 10.0).unwrap();
        let f = ComplexField::from_fn(grid, 0.0, |x| {
            Complex64::new((-x * x).exp(), (0.5 * x).sin())
        });
        let before = sobolev_norm(&f, NormKind::L2);
        let g1 = free_propagator_apply(&f, 0.37);
        assert!((sobolev_norm(&g1, NormKind::L2) - before).abs() < 1e-12 * before);

        let g2 = free_propagator_apply(&free_propagator_apply(&f, 0.2), 0.17);
        assert!(g1.sub(&g2).max_abs() < 1e-12);
    }

    #[test]
    fn propagator_phase_on_harmonic() {
        let grid = build_grid(64, 8.0).unwrap();
        let f = harmonic(grid, 5);
        let k0 = 2.0 * std::f64::consts::PI * 5.0 / grid.length();
        let dt = 0.31;
        let g = free_propagator_apply(&f, dt);
        let phase = Complex64::from_polar(1.0, -k0 * k0 * dt);
        for (a, b) in g.values().iter().zip(f.values()) {
            assert!((a - phase * b).norm() < 1e-12);
        }
    }
}
