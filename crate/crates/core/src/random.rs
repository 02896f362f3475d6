//! Seeded band-limited random fields for identity tests.

use crate::field::ComplexField;
use crate::fourier::ifft_in_place;
use crate::grid::SpatialGrid;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Smooth random field with modes `|index| <= k_cut`, complex Gaussian
/// coefficients under a Gaussian spectral taper, normalized to unit sup
/// norm. Identical seeds give bit-identical fields on one platform.
pub fn band_limited_field(grid: &SpatialGrid, seed: u64, k_cut: Option<usize>) -> ComplexField {
    let n = grid.num_points();
    let k_cut = k_cut.unwrap_or(n / 8).clamp(1, n / 2 - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;

    let mut hat = vec![Complex64::new(0.0, 0.0); n];
    let draw = |rng: &mut ChaCha8Rng| -> Complex64 {
        let re: f64 = normal.sample(rng);
        let im: f64 = normal.sample(rng);
        Complex64::new(re, im)
    };
    // taper keeps the spectrum well inside the grid so that moderate powers
    // of the field stay resolved
    let taper = |idx: usize| (-3.0 * (idx as f64 / k_cut as f64).powi(2)).exp();
    hat[0] = draw(&mut rng) * taper(0);
    for idx in 1..=k_cut {
        hat[idx] = draw(&mut rng) * taper(idx);
        hat[n - idx] = draw(&mut rng) * taper(idx);
    }
    ifft_in_place(&mut hat);
    let mut field = ComplexField::new(*grid, 0.0, hat);
    let sup = field.max_abs();
    if sup > 0.0 {
        field = field.scale_re(1.0 / sup);
    }
    field
}
