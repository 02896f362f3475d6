//! Duhamel fixed point for the perturbation system around the gauge-
//! transformed multi-soliton profile.
//!
//! The unknown is `eta = (phi~, psi~)` with the truncated Duhamel map
//!
//! ```text
//! Phi(eta)(t) = i int_t^{t_max} S(t - s) [ f(W + eta) - f(W) + H ](s) ds,
//! ```
//!
//! `f = (P, Q)`, `W = (h, k)` the profile pair and `H` the source pair.
//! The ball norm weights Strichartz-type space-time norms by `e^{lambda t}`:
//!
//! ```text
//! |eta|_X = sup_t e^{lambda t} ( |eta|_{S x S} + |d_x eta|_{S x S} ),
//! ```
//!
//! with `S` realized as the max over the fixed admissible exponent pairs.
//! Iterating from `eta = 0` contracts for suitable windows; the fixed point
//! reconstructs a solution `u` whose H1 distance to the profile decays
//! exponentially.

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::fourier::{fft, ifft_in_place, propagate_hat};
use crate::gauge::{
    from_gauge_pair, nonlinearity_pq, profile_pair_w, profile_sources, GaugePair, NSourceForm,
};
use crate::grid::{SpatialGrid, TimeGrid};
use crate::multisoliton::{interaction_residual_chi, profile_sum, MultiSolitonConfig};
use crate::norms::{sobolev_norm, NormKind};
use crate::par;
use crate::spacetime::SpaceTimeField;
use num_complex::Complex64;
use serde::Serialize;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PicardConfig {
    pub t0: f64,
    pub t_max: f64,
    pub num_time_nodes: usize,
    pub lambda: f64,
    pub max_iterations: usize,
    /// X-norm of the successive difference at which iteration stops.
    pub tolerance: f64,
    pub n_source_form: NSourceForm,
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > self.t0) {
            return Err(Error::invalid_argument("t_max must exceed t0"));
        }
        if self.num_time_nodes < 2 {
            return Err(Error::invalid_argument("need at least two time nodes"));
        }
        if !(self.lambda > 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::invalid_argument("lambda and tolerance must be positive"));
        }
        Ok(())
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t0, self.t_max, self.num_time_nodes - 1)
    }

    /// Truncation tail bound `e^{-lambda t_max} / lambda` of the dropped
    /// `[t_max, inf)` part of the Duhamel integral.
    pub fn tail_bound(&self) -> f64 {
        (-self.lambda * self.t_max).exp() / self.lambda
    }
}

/// Per-snapshot spatial norms needed by the admissible pairs.
struct SnapshotNorms {
    l2: Vec<f64>,
    linf: Vec<f64>,
    l4: Vec<f64>,
    l6: Vec<f64>,
}

fn snapshot_norms(snaps: &[ComplexField]) -> SnapshotNorms {
    let rows = par::map(snaps, |f| {
        let dx = f.grid().spacing();
        let mut s2 = 0.0;
        let mut s4 = 0.0;
        let mut s6 = 0.0;
        let mut sup: f64 = 0.0;
        for z in f.values() {
            let a2 = z.norm_sqr();
            s2 += a2;
            s4 += a2 * a2;
            s6 += a2 * a2 * a2;
            sup = sup.max(a2);
        }
        (
            (dx * s2).sqrt(),
            sup.sqrt(),
            (dx * s4).sqrt().sqrt(),
            (dx * s6).powf(1.0 / 6.0),
        )
    });
    let mut out = SnapshotNorms {
        l2: Vec::with_capacity(rows.len()),
        linf: Vec::with_capacity(rows.len()),
        l4: Vec::with_capacity(rows.len()),
        l6: Vec::with_capacity(rows.len()),
    };
    for (l2, linf, l4, l6) in rows {
        out.l2.push(l2);
        out.linf.push(linf);
        out.l4.push(l4);
        out.l6.push(l6);
    }
    out
}

/// `S([t_i, t_max])` values for every start index i: the max over the
/// admissible pairs of the suffix mixed norms, via suffix trapezoids.
fn suffix_s_norms(norms: &SnapshotNorms, dt: f64) -> Vec<f64> {
    let n = norms.l2.len();
    let mut out = vec![0.0; n];
    let mut max_l2: f64 = 0.0;
    let mut i4 = 0.0; // int linf^4
    let mut i6 = 0.0; // int l6^6
    let mut i8 = 0.0; // int l4^8
    for i in (0..n).rev() {
        max_l2 = max_l2.max(norms.l2[i]);
        if i + 1 < n {
            i4 += 0.5 * dt * (norms.linf[i].powi(4) + norms.linf[i + 1].powi(4));
            i6 += 0.5 * dt * (norms.l6[i].powi(6) + norms.l6[i + 1].powi(6));
            i8 += 0.5 * dt * (norms.l4[i].powi(8) + norms.l4[i + 1].powi(8));
        }
        let s = max_l2
            .max(i4.sqrt().sqrt())
            .max(i6.powf(1.0 / 6.0))
            .max(i8.powf(1.0 / 8.0));
        out[i] = s;
    }
    out
}

/// Discrete ball norm: max over grid times `t >= from_time` of
/// `e^{lambda t} * sum over the four components (eta and d_x eta) of the
/// suffix S-norm starting at t`.
pub fn x_norm(eta: &SpaceTimeField, lambda: f64, from_time: f64) -> f64 {
    let deta = eta.derivative_x().expect("first derivative always supported");
    let tg = eta.time_grid();
    let dt = tg.step();
    let components = [
        suffix_s_norms(&snapshot_norms(eta.first()), dt),
        suffix_s_norms(&snapshot_norms(eta.second()), dt),
        suffix_s_norms(&snapshot_norms(deta.first()), dt),
        suffix_s_norms(&snapshot_norms(deta.second()), dt),
    ];
    let mut best: f64 = 0.0;
    for i in 0..tg.num_nodes() {
        let t = tg.node(i);
        if t < from_time - 1e-12 {
            continue;
        }
        let total: f64 = components.iter().map(|c| c[i]).sum();
        best = best.max((lambda * t).exp() * total);
    }
    best
}

/// One application of the truncated Duhamel operator
/// `i int_t^{t_max} S(t-s) [f(W + eta) - f(W) + H](s) ds` with composite
/// trapezoid quadrature over the grid nodes.
pub fn duhamel_map(
    eta: &SpaceTimeField,
    w: &SpaceTimeField,
    h: &SpaceTimeField,
    sigma: f64,
) -> SpaceTimeField {
    eta.assert_aligned(w);
    eta.assert_aligned(h);
    let tg = *eta.time_grid();
    let grid = eta.spatial_grid();
    let n_nodes = tg.num_nodes();
    let dt = tg.step();

    // integrand spectra, twisted back to s = 0: A_j = e^{+i k^2 s_j} g_j^
    let spectra = par::map_range(n_nodes, |j| {
        let s_j = tg.node(j);
        let (w1, w2) = w.pair_at(j);
        let (e1, e2) = eta.pair_at(j);
        let (h1, h2) = h.pair_at(j);
        let perturbed = GaugePair::new(w1.add(e1), w2.add(e2));
        let base = GaugePair::new(w1.clone(), w2.clone());
        let (p1, q1) = nonlinearity_pq(&perturbed, sigma);
        let (p0, q0) = nonlinearity_pq(&base, sigma);
        let g1 = p1.sub(&p0).add(h1);
        let g2 = q1.sub(&q0).add(h2);
        let mut a1 = fft(&g1);
        let mut a2 = fft(&g2);
        propagate_hat(&mut a1, &grid, -s_j);
        propagate_hat(&mut a2, &grid, -s_j);
        (a1, a2)
    });

    // suffix trapezoid sums over j >= i
    let np = grid.num_points();
    let mut suffix1 = vec![vec![Complex64::new(0.0, 0.0); np]; n_nodes];
    let mut suffix2 = vec![vec![Complex64::new(0.0, 0.0); np]; n_nodes];
    for i in (0..n_nodes - 1).rev() {
        for k in 0..np {
            suffix1[i][k] = suffix1[i + 1][k] + 0.5 * dt * (spectra[i].0[k] + spectra[i + 1].0[k]);
            suffix2[i][k] = suffix2[i + 1][k] + 0.5 * dt * (spectra[i].1[k] + spectra[i + 1].1[k]);
        }
    }

    let fields = par::map_range(n_nodes, |i| {
        let t_i = tg.node(i);
        let finish = |sum: &[Complex64]| {
            let mut hat = sum.to_vec();
            propagate_hat(&mut hat, &grid, t_i);
            ifft_in_place(&mut hat);
            for v in hat.iter_mut() {
                *v *= I;
            }
            ComplexField::new(grid, t_i, hat)
        };
        (finish(&suffix1[i]), finish(&suffix2[i]))
    });
    let (first, second): (Vec<_>, Vec<_>) = fields.into_iter().unzip();
    SpaceTimeField::new(tg, first, second).expect("aligned by construction")
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardReport {
    pub iterates_x_norm: Vec<f64>,
    pub diff_x_norm: Vec<f64>,
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
    /// Final iterate satisfies the ball bound `|eta|_X <= 1`.
    pub in_ball: bool,
    pub lambda: f64,
    pub tail_bound: f64,
    #[serde(skip)]
    pub final_eta: SpaceTimeField,
}

/// Profile pair and source data assembled on the Picard time grid.
pub struct ProfileData {
    pub w: SpaceTimeField,
    pub h: SpaceTimeField,
}

/// Build `W = (h, k)` and `H = -e^{-lambda t} (m, n)` on the time grid.
///
/// The sign makes the Duhamel operator consistent with the perturbation
/// system `L eta = f(W + eta) - f(W) - e^{-lambda t}(m, n)` satisfied by
/// `eta = (phi - h, psi - k)`.
pub fn assemble_profile_data(
    cfg: &MultiSolitonConfig,
    pcfg: &PicardConfig,
    grid: &SpatialGrid,
) -> Result<ProfileData> {
    let tg = pcfg.time_grid()?;
    let nodes = tg.nodes();
    let rows = par::map(&nodes, |&t| -> Result<_> {
        let pair = profile_pair_w(cfg, t, grid)?;
        let src = profile_sources(cfg, t, grid, pcfg.lambda, pcfg.n_source_form)?;
        let damp = -(-pcfg.lambda * t).exp();
        Ok((pair.phi, pair.psi, src.m.scale_re(damp), src.n.scale_re(damp)))
    });
    let mut w1 = Vec::with_capacity(nodes.len());
    let mut w2 = Vec::with_capacity(nodes.len());
    let mut h1 = Vec::with_capacity(nodes.len());
    let mut h2 = Vec::with_capacity(nodes.len());
    for row in rows {
        let (a, b, c, d) = row?;
        w1.push(a);
        w2.push(b);
        h1.push(c);
        h2.push(d);
    }
    Ok(ProfileData {
        w: SpaceTimeField::new(tg, w1, w2)?,
        h: SpaceTimeField::new(tg, h1, h2)?,
    })
}

/// Iterate `eta <- Phi(eta)` from `eta = 0` until the X-norm of the
/// successive difference drops below tolerance.
pub fn solve_fixed_point(
    cfg: &MultiSolitonConfig,
    pcfg: &PicardConfig,
    grid: &SpatialGrid,
) -> Result<PicardReport> {
    pcfg.validate()?;
    let data = assemble_profile_data(cfg, pcfg, grid)?;
    solve_with_data(&data, cfg.sigma(), pcfg, None)
}

/// Same iteration from a caller-supplied initial iterate (used for the
/// perturbation-stability check).
pub fn solve_with_data(
    data: &ProfileData,
    sigma: f64,
    pcfg: &PicardConfig,
    initial: Option<SpaceTimeField>,
) -> Result<PicardReport> {
    let tg = pcfg.time_grid()?;
    let grid = data.w.spatial_grid();
    let mut eta = initial.unwrap_or_else(|| SpaceTimeField::zeros(tg, grid));

    let mut iterates_x_norm = Vec::new();
    let mut diff_x_norm = Vec::new();
    let mut contraction_ratios = Vec::new();
    let mut converged = false;

    for _ in 0..pcfg.max_iterations {
        let next = duhamel_map(&eta, &data.w, &data.h, sigma);
        let diff = x_norm(&next.sub(&eta), pcfg.lambda, pcfg.t0);
        iterates_x_norm.push(x_norm(&next, pcfg.lambda, pcfg.t0));
        if let Some(prev) = diff_x_norm.last() {
            contraction_ratios.push(if *prev > 1e-300 { diff / prev } else { 0.0 });
        }
        diff_x_norm.push(diff);
        eta = next;
        if diff <= pcfg.tolerance {
            converged = true;
            break;
        }
    }

    let final_x = *iterates_x_norm.last().unwrap_or(&0.0);
    Ok(PicardReport {
        in_ball: final_x <= 1.0 + 1e-12,
        iterates_x_norm,
        diff_x_norm,
        contraction_ratios,
        converged,
        lambda: pcfg.lambda,
        tail_bound: pcfg.tail_bound(),
        final_eta: eta,
    })
}

/// `|Phi(a) - Phi(b)|_X / |a - b|_X`, zero-guarded.
pub fn contraction_ratio(
    eta_a: &SpaceTimeField,
    eta_b: &SpaceTimeField,
    data: &ProfileData,
    sigma: f64,
    pcfg: &PicardConfig,
) -> f64 {
    let denom = x_norm(&eta_a.sub(eta_b), pcfg.lambda, pcfg.t0);
    if denom < 1e-15 {
        return 0.0;
    }
    let fa = duhamel_map(eta_a, &data.w, &data.h, sigma);
    let fb = duhamel_map(eta_b, &data.w, &data.h, sigma);
    x_norm(&fa.sub(&fb), pcfg.lambda, pcfg.t0) / denom
}

/// Reconstructed solution `u = gauge^{-1}(h + phi~)` and its per-time H1
/// distance to the profile R.
pub struct Reconstruction {
    pub trajectory: crate::evolution::Trajectory,
    pub h1_distance: Vec<f64>,
}

pub fn reconstruct_solution(
    report: &PicardReport,
    cfg: &MultiSolitonConfig,
    grid: &SpatialGrid,
) -> Result<Reconstruction> {
    if !report.converged {
        return Err(Error::InvalidState(
            "cannot reconstruct from a non-converged Picard report".into(),
        ));
    }
    let eta = &report.final_eta;
    let tg = eta.time_grid();
    let nodes = tg.nodes();
    let rows = par::map_range(nodes.len(), |i| -> Result<_> {
        let t = nodes[i];
        let pair = profile_pair_w(cfg, t, grid)?;
        let phi = pair.phi.add(&eta.first()[i]);
        let mut u = from_gauge_pair(&phi, cfg.sigma());
        u.set_time(t);
        let r = profile_sum(cfg, t, grid)?;
        let dist = sobolev_norm(&u.sub(&r), NormKind::H1);
        let m = crate::evolution::mass(&u);
        Ok((u, dist, m))
    });
    let mut snapshots = Vec::with_capacity(nodes.len());
    let mut h1_distance = Vec::with_capacity(nodes.len());
    let mut mass_history = Vec::with_capacity(nodes.len());
    for row in rows {
        let (u, dist, m) = row?;
        snapshots.push(u);
        h1_distance.push(dist);
        mass_history.push(m);
    }
    Ok(Reconstruction {
        trajectory: crate::evolution::Trajectory {
            times: nodes,
            snapshots,
            mass_history,
        },
        h1_distance,
    })
}

/// Per-time L2 residual of the constraint the continuum argument proves to
/// vanish:
/// `psi~ - d_x phi~ + (i/2) (|phi~ + h|^(2 sigma) (phi~ + h) - |h|^(2 sigma) h)`.
pub fn pair_consistency_residual(
    report: &PicardReport,
    cfg: &MultiSolitonConfig,
    grid: &SpatialGrid,
) -> Result<Vec<f64>> {
    if !report.converged {
        return Err(Error::InvalidState(
            "pair consistency requires a converged report".into(),
        ));
    }
    let sigma = cfg.sigma();
    let two_sigma = 2.0 * sigma;
    let eta = &report.final_eta;
    let nodes = eta.time_grid().nodes();
    let rows = par::map_range(nodes.len(), |i| -> Result<f64> {
        let t = nodes[i];
        let pair = profile_pair_w(cfg, t, grid)?;
        let phi_t = &eta.first()[i];
        let psi_t = &eta.second()[i];
        let dphi_t = crate::fourier::spectral_derivative(phi_t, 1)?;
        let mut res = ComplexField::zeros(*grid, t);
        for idx in 0..res.len() {
            let h = pair.phi.values()[idx];
            let pt = phi_t.values()[idx];
            let full = pt + h;
            let nl = crate::util::abs_pow(full.norm(), two_sigma) * full
                - crate::util::abs_pow(h.norm(), two_sigma) * h;
            res.values_mut()[idx] = psi_t.values()[idx] - dphi_t.values()[idx] + 0.5 * I * nl;
        }
        Ok(sobolev_norm(&res, NormKind::L2))
    });
    rows.into_iter().collect()
}

/// Smallest scan node with `|chi(t)|_H2 <= e^{-lambda t}` (the decay-onset
/// selection rule for T0).
pub fn select_t0(
    cfg: &MultiSolitonConfig,
    grid: &SpatialGrid,
    lambda: f64,
    scan: &TimeGrid,
) -> Result<Option<f64>> {
    for t in scan.nodes() {
        let chi = interaction_residual_chi(cfg, t, grid)?;
        if sobolev_norm(&chi, NormKind::H2) <= (-lambda * t).exp() {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaProbe {
    pub lambda: f64,
    pub converged: bool,
    pub in_ball: bool,
    pub worst_ratio: f64,
}

/// Probe a geometric ladder of rates and report the largest one for which
/// the iteration still converges inside the ball.
///
/// On a truncated window the map contracts for every small rate and loses
/// ball membership once `lambda` exceeds the actual source decay, so the
/// feasibility edge found here is an upper bound for usable rates rather
/// than the continuum threshold.
pub fn find_lambda_star(
    cfg: &MultiSolitonConfig,
    grid: &SpatialGrid,
    base: &PicardConfig,
    lambda_lo: f64,
    lambda_hi: f64,
    steps: usize,
) -> Result<(Option<f64>, Vec<LambdaProbe>)> {
    let mut probes = Vec::new();
    let mut best = None;
    for i in 0..steps {
        let lambda = lambda_lo * (lambda_hi / lambda_lo).powf(i as f64 / (steps - 1).max(1) as f64);
        let pcfg = PicardConfig { lambda, ..*base };
        let report = solve_fixed_point(cfg, &pcfg, grid)?;
        let worst_ratio = report
            .contraction_ratios
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        if report.converged && report.in_ball {
            best = Some(lambda);
        }
        probes.push(LambdaProbe {
            lambda,
            converged: report.converged,
            in_ball: report.in_ball,
            worst_ratio,
        });
    }
    Ok((best, probes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::multisoliton::velocity_scaled_family;
    use crate::norms::sobolev_norm;
    use crate::random::band_limited_field;

    fn test_grid() -> SpatialGrid {
        build_grid(256, 40.0).unwrap()
    }

    fn single_snapshot_eta(grid: SpatialGrid, tg: TimeGrid, at: usize, f: &ComplexField) -> SpaceTimeField {
        let eta = SpaceTimeField::zeros(tg, grid);
        let mut first = eta.first().to_vec();
        first[at] = f.clone();
        SpaceTimeField::new(tg, first, eta.second().to_vec()).unwrap()
    }

    #[test]
    fn x_norm_zero_and_homogeneity() {
        let grid = test_grid();
        let tg = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let zero = SpaceTimeField::zeros(tg, grid);
        assert_eq!(x_norm(&zero, 0.7, 0.0), 0.0);

        let f = band_limited_field(&grid, 5, None);
        let eta = single_snapshot_eta(grid, tg, 2, &f);
        let x1 = x_norm(&eta, 0.7, 0.0);
        let x2 = x_norm(&eta.scale_re(2.0), 0.7, 0.0);
        assert!(
            (x2 - 2.0 * x1).abs() <= 1e-13 * x1,
            "homogeneity: {x2} vs {}",
            2.0 * x1
        );
    }

    #[test]
    fn x_norm_single_snapshot_lower_bound() {
        let grid = test_grid();
        let tg = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let f = band_limited_field(&grid, 9, None);
        let lambda = 0.9;
        let at = 3;
        let eta = single_snapshot_eta(grid, tg, at, &f);
        let bound = (lambda * tg.node(at)).exp() * sobolev_norm(&f, NormKind::L2);
        assert!(x_norm(&eta, lambda, 0.0) >= bound * (1.0 - 1e-12));
    }

    #[test]
    fn x_norm_triangle_inequality() {
        let grid = test_grid();
        let tg = TimeGrid::new(0.0, 1.0, 6).unwrap();
        for seed in 0..20 {
            let mk = |s: u64| {
                let f1: Vec<ComplexField> = (0..tg.num_nodes())
                    .map(|i| band_limited_field(&grid, s * 100 + i as u64, None))
                    .collect();
                let f2: Vec<ComplexField> = (0..tg.num_nodes())
                    .map(|i| band_limited_field(&grid, s * 100 + 50 + i as u64, None))
                    .collect();
                SpaceTimeField::new(tg, f1, f2).unwrap()
            };
            let a = mk(seed * 3 + 1);
            let b = mk(seed * 3 + 2);
            let slack =
                x_norm(&a, 0.5, 0.0) + x_norm(&b, 0.5, 0.0) - x_norm(&a.add(&b), 0.5, 0.0);
            assert!(slack >= -1e-12, "seed {seed}: slack {slack}");
        }
    }

    fn small_family() -> (MultiSolitonConfig, SpatialGrid, PicardConfig) {
        let cfg = velocity_scaled_family(10.0, &[-1.0, -2.0], &[1.2, 1.2], 2.5)
            .unwrap()
            .with_shifts(&[30.0, 20.0], &[0.0, 0.0])
            .unwrap();
        let grid = build_grid(512, 40.0).unwrap();
        let pcfg = PicardConfig {
            t0: 1.75,
            t_max: 1.77,
            num_time_nodes: 41,
            lambda: 4.0,
            max_iterations: 25,
            tolerance: 1e-10,
            n_source_form: NSourceForm::Derived,
        };
        (cfg, grid, pcfg)
    }

    #[test]
    fn duhamel_zero_eta_zero_source_is_zero() {
        let (cfg, grid, pcfg) = small_family();
        let data = assemble_profile_data(&cfg, &pcfg, &grid).unwrap();
        let tg = pcfg.time_grid().unwrap();
        let zero = SpaceTimeField::zeros(tg, grid);
        let out = duhamel_map(&zero, &data.w, &zero, cfg.sigma());
        let worst = out
            .first()
            .iter()
            .chain(out.second())
            .map(|f| f.max_abs())
            .fold(0.0, f64::max);
        assert_eq!(worst, 0.0, "f(W) - f(W) must cancel exactly");
    }

    #[test]
    fn duhamel_linear_in_source() {
        let (cfg, grid, pcfg) = small_family();
        let data = assemble_profile_data(&cfg, &pcfg, &grid).unwrap();
        let tg = pcfg.time_grid().unwrap();
        let zero = SpaceTimeField::zeros(tg, grid);
        let out1 = duhamel_map(&zero, &data.w, &data.h, cfg.sigma());
        let out2 = duhamel_map(&zero, &data.w, &data.h.scale_re(2.0), cfg.sigma());
        let diff = out2.sub(&out1.scale_re(2.0));
        let worst = diff
            .first()
            .iter()
            .chain(diff.second())
            .map(|f| f.max_abs())
            .fold(0.0, f64::max);
        let scale = out1
            .first()
            .iter()
            .map(|f| f.max_abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-12 * scale.max(1e-300), "linearity defect {worst}");
    }

    #[test]
    fn duhamel_quadrature_against_refined_grid() {
        // single-pulse eta, W = 0: compare against 4x time resolution
        let grid = build_grid(256, 40.0).unwrap();
        let sigma = 2.5;
        let tg = TimeGrid::new(0.0, 0.4, 16).unwrap();
        let tg_fine = TimeGrid::new(0.0, 0.4, 64).unwrap();
        let pulse = band_limited_field(&grid, 11, None).scale_re(0.3);

        let mk_eta = |tg: &TimeGrid| {
            let first: Vec<ComplexField> = (0..tg.num_nodes())
                .map(|i| {
                    let t = tg.node(i);
                    // smooth bump in time centred at 0.2
                    let w = (-200.0 * (t - 0.2) * (t - 0.2)).exp();
                    let mut f = pulse.scale_re(w);
                    f.set_time(t);
                    f
                })
                .collect();
            let second: Vec<ComplexField> = first
                .iter()
                .map(|f| {
                    let mut z = ComplexField::zeros(grid, f.time());
                    z.set_time(f.time());
                    z
                })
                .collect();
            SpaceTimeField::new(*tg, first, second).unwrap()
        };

        let zero_w = SpaceTimeField::zeros(tg, grid);
        let zero_h = SpaceTimeField::zeros(tg, grid);
        let coarse = duhamel_map(&mk_eta(&tg), &zero_w, &zero_h, sigma);

        let zero_w_f = SpaceTimeField::zeros(tg_fine, grid);
        let zero_h_f = SpaceTimeField::zeros(tg_fine, grid);
        let fine = duhamel_map(&mk_eta(&tg_fine), &zero_w_f, &zero_h_f, sigma);

        // compare at the coarse nodes (every 4th fine node)
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..tg.num_nodes() {
            let d = coarse.first()[i].sub(&fine.first()[4 * i]).max_abs();
            worst = worst.max(d);
            scale = scale.max(fine.first()[4 * i].max_abs());
        }
        assert!(
            worst <= 1e-3 * scale,
            "quadrature refinement error {worst} vs scale {scale}"
        );
    }

    #[test]
    fn zero_source_fixed_point_is_zero() {
        let (cfg, grid, pcfg) = small_family();
        let mut data = assemble_profile_data(&cfg, &pcfg, &grid).unwrap();
        data.h = SpaceTimeField::zeros(pcfg.time_grid().unwrap(), grid);
        let report = solve_with_data(&data, cfg.sigma(), &pcfg, None).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterates_x_norm[0], 0.0);
        assert_eq!(report.diff_x_norm[0], 0.0);
    }

    #[test]
    fn scaled_family_fixed_point_converges() {
        let (cfg, grid, pcfg) = small_family();
        let report = solve_fixed_point(&cfg, &pcfg, &grid).unwrap();
        assert!(report.converged, "diffs: {:?}", report.diff_x_norm);
        assert!(report.in_ball, "final X norm {:?}", report.iterates_x_norm.last());
        for (k, r) in report.contraction_ratios.iter().enumerate() {
            assert!(*r < 0.5, "ratio[{k}] = {r}, all {:?}", report.contraction_ratios);
        }
        // reconstruction works and pair consistency is small
        let rec = reconstruct_solution(&report, &cfg, &grid).unwrap();
        assert_eq!(rec.trajectory.snapshots.len(), pcfg.num_time_nodes);
        let res = pair_consistency_residual(&report, &cfg, &grid).unwrap();
        let eta_scale: f64 = report
            .final_eta
            .second()
            .iter()
            .map(|f| sobolev_norm(f, NormKind::L2))
            .fold(0.0, f64::max);
        let worst = res.iter().cloned().fold(0.0, f64::max);
        assert!(
            worst < 0.5 * eta_scale.max(1e-12),
            "consistency residual {worst} vs eta scale {eta_scale}"
        );
    }

    #[test]
    fn contraction_ratio_guard_and_ball_pairs() {
        let (cfg, grid, pcfg) = small_family();
        let data = assemble_profile_data(&cfg, &pcfg, &grid).unwrap();
        let tg = pcfg.time_grid().unwrap();
        let mk = |seed: u64, scale: f64| {
            let first: Vec<ComplexField> = (0..tg.num_nodes())
                .map(|i| {
                    let mut f = band_limited_field(&grid, seed + i as u64, None).scale_re(scale);
                    f.set_time(tg.node(i));
                    f
                })
                .collect();
            let second: Vec<ComplexField> = (0..tg.num_nodes())
                .map(|i| {
                    let mut f =
                        band_limited_field(&grid, seed + 300 + i as u64, None).scale_re(scale);
                    f.set_time(tg.node(i));
                    f
                })
                .collect();
            SpaceTimeField::new(tg, first, second).unwrap()
        };
        // equal arguments: guarded zero
        let a = mk(1, 1e-4);
        assert_eq!(contraction_ratio(&a, &a, &data, cfg.sigma(), &pcfg), 0.0);
        // random pairs inside the ball contract below one half
        for seed in 0..5u64 {
            let a = mk(10 * seed + 1, 1e-4);
            let b = mk(10 * seed + 6, 1e-4);
            let r = contraction_ratio(&a, &b, &data, cfg.sigma(), &pcfg);
            assert!(r < 0.5, "seed {seed}: ratio {r}");
        }
    }

    #[test]
    fn zero_source_reconstruction_sits_on_the_profile() {
        // eta = 0: phi = h, so u is the gauge roundtrip of R and the H1
        // distance to R is the roundtrip floor; the pair residual vanishes
        let (cfg, grid, pcfg) = small_family();
        let mut data = assemble_profile_data(&cfg, &pcfg, &grid).unwrap();
        data.h = SpaceTimeField::zeros(pcfg.time_grid().unwrap(), grid);
        let report = solve_with_data(&data, cfg.sigma(), &pcfg, None).unwrap();
        assert!(report.converged);
        let rec = reconstruct_solution(&report, &cfg, &grid).unwrap();
        let worst = rec.h1_distance.iter().cloned().fold(0.0, f64::max);
        assert!(worst < 1e-10, "gauge roundtrip floor {worst}");
        let res = pair_consistency_residual(&report, &cfg, &grid).unwrap();
        assert!(res.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn reconstruct_requires_convergence() {
        let (cfg, grid, pcfg) = small_family();
        let tg = pcfg.time_grid().unwrap();
        let report = PicardReport {
            iterates_x_norm: vec![],
            diff_x_norm: vec![],
            contraction_ratios: vec![],
            converged: false,
            in_ball: false,
            lambda: pcfg.lambda,
            tail_bound: pcfg.tail_bound(),
            final_eta: SpaceTimeField::zeros(tg, grid),
        };
        assert!(reconstruct_solution(&report, &cfg, &grid).is_err());
        assert!(pair_consistency_residual(&report, &cfg, &grid).is_err());
    }
}
