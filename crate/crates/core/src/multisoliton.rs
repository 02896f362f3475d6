//! Multi-soliton profiles, the interaction residual and the separation
//! condition.
//!
//! The profile is `R = sum_j R_j` with `R_j = e^{i theta_j} psi_{omega_j,
//! c_j}(t, x - x_j)`. Because each `R_j` solves the equation on its own,
//! the defect of `R` reduces to the closed-form cross term
//!
//! ```text
//! chi = -i |R|^(2 sigma) dR/dx + i sum_j |R_j|^(2 sigma) dR_j/dx,
//! ```
//!
//! which decays exponentially as the solitons separate. The minimal
//! separation speed is `v* = inf_{j != k} h_j |c_j - c_k|`, and `lambda =
//! v*/16` is the decay rate of the constructed solution.

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::fit::log_slope;
use crate::grid::{SpatialGrid, TimeGrid};
use crate::norms::{sobolev_norm, NormKind};
use crate::par;
use crate::soliton::{soliton_field, soliton_field_dx, SolitonParams};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSolitonConfig {
    solitons: Vec<SolitonParams>,
}

impl MultiSolitonConfig {
    pub fn new(solitons: Vec<SolitonParams>) -> Result<Self> {
        if solitons.is_empty() {
            return Err(Error::invalid_argument("need at least one soliton"));
        }
        for p in &solitons {
            p.validate()?;
        }
        let sigma = solitons[0].sigma;
        if solitons.iter().any(|p| p.sigma != sigma) {
            return Err(Error::invalid_argument(
                "all solitons in one configuration must share sigma",
            ));
        }
        for (j, a) in solitons.iter().enumerate() {
            for b in &solitons[j + 1..] {
                if a.c == b.c {
                    return Err(Error::invalid_argument(format!(
                        "velocities must be pairwise distinct, got c = {} twice",
                        a.c
                    )));
                }
            }
        }
        Ok(MultiSolitonConfig { solitons })
    }

    pub fn solitons(&self) -> &[SolitonParams] {
        &self.solitons
    }

    pub fn len(&self) -> usize {
        self.solitons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solitons.is_empty()
    }

    pub fn sigma(&self) -> f64 {
        self.solitons[0].sigma
    }

    /// Rebuild with different shifts, keeping (omega, c, sigma).
    pub fn with_shifts(&self, x0: &[f64], theta0: &[f64]) -> Result<Self> {
        if x0.len() != self.len() || theta0.len() != self.len() {
            return Err(Error::invalid_argument("shift arrays must match soliton count"));
        }
        let solitons = self
            .solitons
            .iter()
            .zip(x0.iter().zip(theta0))
            .map(|(p, (&x, &th))| SolitonParams { x0: x, theta0: th, ..*p })
            .collect();
        MultiSolitonConfig::new(solitons)
    }
}

/// `(c_j, omega_j) = (M d_j, (h_j^2 + M^2 d_j^2) / 4)` with zero shifts.
///
/// Every member automatically satisfies `omega > c^2/4` since `h_j > 0`,
/// and `halfwidth_h` returns exactly `h_j` again.
pub fn velocity_scaled_family(
    m: f64,
    d: &[f64],
    h: &[f64],
    sigma: f64,
) -> Result<MultiSolitonConfig> {
    if d.len() != h.len() || d.is_empty() {
        return Err(Error::invalid_argument(
            "d and h must have equal, nonzero length",
        ));
    }
    if !(m > 0.0) {
        return Err(Error::invalid_argument("M must be positive"));
    }
    let mut solitons = Vec::with_capacity(d.len());
    for (&dj, &hj) in d.iter().zip(h) {
        if !(dj < 0.0) {
            return Err(Error::invalid_argument("d_j must be negative"));
        }
        if !(hj > 0.0) {
            return Err(Error::invalid_argument("h_j must be positive"));
        }
        let c = m * dj;
        let omega = 0.25 * (hj * hj + c * c);
        solitons.push(SolitonParams::new(omega, c, 0.0, 0.0, sigma)?);
    }
    MultiSolitonConfig::new(solitons)
}

/// `R(t, .) = sum_j R_j(t, .)`.
pub fn profile_sum(cfg: &MultiSolitonConfig, t: f64, grid: &SpatialGrid) -> Result<ComplexField> {
    let mut sum = ComplexField::zeros(*grid, t);
    for p in cfg.solitons() {
        sum = sum.add(&soliton_field(p, t, grid)?);
    }
    Ok(sum)
}

/// Analytic x-derivative of the profile sum.
pub fn profile_sum_dx(cfg: &MultiSolitonConfig, t: f64, grid: &SpatialGrid) -> Result<ComplexField> {
    let mut sum = ComplexField::zeros(*grid, t);
    for p in cfg.solitons() {
        sum = sum.add(&soliton_field_dx(p, t, grid)?);
    }
    Ok(sum)
}

/// `v* = inf over ordered pairs j != k of h_j |c_j - c_k|`.
///
/// Both orders are scanned, which lower-bounds either reading of the
/// asymmetric infimum.
pub fn relative_velocity_v_star(cfg: &MultiSolitonConfig) -> Result<f64> {
    if cfg.len() < 2 {
        return Err(Error::UndefinedVStar);
    }
    let mut v = f64::INFINITY;
    for (j, a) in cfg.solitons().iter().enumerate() {
        for (k, b) in cfg.solitons().iter().enumerate() {
            if j != k {
                v = v.min(a.halfwidth_h() * (a.c - b.c).abs());
            }
        }
    }
    Ok(v)
}

/// `lambda = v*/16`.
pub fn decay_rate_lambda(cfg: &MultiSolitonConfig) -> Result<f64> {
    Ok(relative_velocity_v_star(cfg)? / 16.0)
}

/// The interaction residual
/// `chi = -i |R|^(2 sigma) dR + i sum_j |R_j|^(2 sigma) dR_j`,
/// evaluated from closed forms (no time derivative involved). Identically
/// zero for a single soliton.
pub fn interaction_residual_chi(
    cfg: &MultiSolitonConfig,
    t: f64,
    grid: &SpatialGrid,
) -> Result<ComplexField> {
    let two_sigma = 2.0 * cfg.sigma();
    let i = Complex64::new(0.0, 1.0);

    let fields: Vec<ComplexField> = cfg
        .solitons()
        .iter()
        .map(|p| soliton_field(p, t, grid))
        .collect::<Result<_>>()?;
    let derivs: Vec<ComplexField> = cfg
        .solitons()
        .iter()
        .map(|p| soliton_field_dx(p, t, grid))
        .collect::<Result<_>>()?;

    let mut r = ComplexField::zeros(*grid, t);
    let mut dr = ComplexField::zeros(*grid, t);
    let mut own_terms = ComplexField::zeros(*grid, t);
    for (f, df) in fields.iter().zip(&derivs) {
        r = r.add(f);
        dr = dr.add(df);
        own_terms = own_terms.add(&f.zip_map(df, |v, dv| crate::util::abs_pow(v.norm(), two_sigma) * dv));
    }
    Ok(r.zip_map(&dr, |v, dv| -i * crate::util::abs_pow(v.norm(), two_sigma) * dv)
        .add(&own_terms.scale(i)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ScanVerdict {
    Fitted,
    /// All norms fell below 1e-13; no rate available.
    Underflow,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualScan {
    pub times: Vec<f64>,
    pub h2_norms: Vec<f64>,
    pub fitted_rate: Option<f64>,
    /// Index range (inclusive start, exclusive end) used for the fit.
    pub fit_window: Option<(usize, usize)>,
    pub verdict: ScanVerdict,
}

const UNDERFLOW_FLOOR: f64 = 1e-13;

/// Scan `|chi(t)|_H2` over a time grid and fit the tail decay rate.
///
/// The fit skips the pre-asymptotic regime (first t where the norm drops
/// below a tenth of its initial value) and uses the last half of the
/// remaining samples above the underflow floor; `fitted_rate` is the
/// negated log-slope.
pub fn chi_decay_scan(
    cfg: &MultiSolitonConfig,
    times: &TimeGrid,
    grid: &SpatialGrid,
) -> Result<ResidualScan> {
    let nodes = times.nodes();
    let norms = par::map(&nodes, |&t| {
        interaction_residual_chi(cfg, t, grid).map(|chi| sobolev_norm(&chi, NormKind::H2))
    });
    let h2_norms: Vec<f64> = norms.into_iter().collect::<Result<_>>()?;

    let onset_level = 0.1 * h2_norms[0];
    let eligible: Vec<usize> = (0..h2_norms.len())
        .filter(|&i| h2_norms[i] > UNDERFLOW_FLOOR && h2_norms[i] <= onset_level.max(UNDERFLOW_FLOOR))
        .collect();
    // when the scan starts already past the transient, everything above the
    // floor is eligible
    let eligible = if eligible.len() < 2 {
        (0..h2_norms.len())
            .filter(|&i| h2_norms[i] > UNDERFLOW_FLOOR)
            .collect()
    } else {
        eligible
    };

    if eligible.len() < 2 {
        return Ok(ResidualScan {
            times: nodes,
            h2_norms,
            fitted_rate: None,
            fit_window: None,
            verdict: ScanVerdict::Underflow,
        });
    }

    let tail = &eligible[eligible.len() / 2..];
    let (tail, window) = if tail.len() >= 2 {
        (tail, (tail[0], tail[tail.len() - 1] + 1))
    } else {
        (&eligible[..], (eligible[0], eligible[eligible.len() - 1] + 1))
    };
    let ts: Vec<f64> = tail.iter().map(|&i| nodes[i]).collect();
    let vs: Vec<f64> = tail.iter().map(|&i| h2_norms[i]).collect();
    let rate = -log_slope(&ts, &vs);

    Ok(ResidualScan {
        times: nodes,
        h2_norms,
        fitted_rate: Some(rate),
        fit_window: Some(window),
        verdict: ScanVerdict::Fitted,
    })
}

impl ResidualScan {
    /// CSV with `t,h2_norm` rows and a `fitted_rate` footer row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,h2_norm\n");
        for (t, v) in self.times.iter().zip(&self.h2_norms) {
            out.push_str(&format!("{t:.16e},{v:.16e}\n"));
        }
        match self.fitted_rate {
            Some(r) => out.push_str(&format!("fitted_rate,{r:.16e}\n")),
            None => out.push_str("fitted_rate,unavailable\n"),
        }
        out
    }
}

/// The three norm factors of the separation condition
/// `C* (1 + |R|_{L inf L inf}^(2(sigma-1))) (1 + |R|_{L inf H1}^2)
///     (1 + |dR|_{L inf L inf} + |R|_{L inf L inf}^(2 sigma + 1)) <= v*`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConditionFactors {
    pub sup_r: f64,
    pub h1_sq: f64,
    pub sup_dr: f64,
}

impl ConditionFactors {
    pub fn lhs(&self, sigma: f64) -> f64 {
        (1.0 + self.sup_r.powf(2.0 * (sigma - 1.0)))
            * (1.0 + self.h1_sq)
            * (1.0 + self.sup_dr + self.sup_r.powf(2.0 * sigma + 1.0))
    }
}

/// Condition left-hand side with every norm measured on the grid over the
/// horizon snapshots (sup-in-time as max over snapshots). The H1 norm here
/// is the full norm of the complex field, phase gradients included.
pub fn separation_condition_lhs(
    cfg: &MultiSolitonConfig,
    horizon: &TimeGrid,
    grid: &SpatialGrid,
) -> Result<f64> {
    Ok(condition_factors_grid(cfg, horizon, grid)?.lhs(cfg.sigma()))
}

pub fn condition_factors_grid(
    cfg: &MultiSolitonConfig,
    horizon: &TimeGrid,
    grid: &SpatialGrid,
) -> Result<ConditionFactors> {
    let nodes = horizon.nodes();
    let per_snapshot = par::map(&nodes, |&t| -> Result<(f64, f64, f64)> {
        let r = profile_sum(cfg, t, grid)?;
        let dr = profile_sum_dx(cfg, t, grid)?;
        let l2 = sobolev_norm(&r, NormKind::L2);
        let dl2 = sobolev_norm(&dr, NormKind::L2);
        Ok((r.max_abs(), l2 * l2 + dl2 * dl2, dr.max_abs()))
    });
    let mut f = ConditionFactors {
        sup_r: 0.0,
        h1_sq: 0.0,
        sup_dr: 0.0,
    };
    for item in per_snapshot {
        let (sup_r, h1_sq, sup_dr) = item?;
        f.sup_r = f.sup_r.max(sup_r);
        f.h1_sq = f.h1_sq.max(h1_sq);
        f.sup_dr = f.sup_dr.max(sup_dr);
    }
    Ok(f)
}

/// Condition left-hand side from per-soliton closed forms, with the H1
/// factor built from the amplitude envelopes (no carrier phase gradient).
/// Grid-free, so it also covers soliton widths no periodic box can hold.
pub fn condition_lhs_profile(cfg: &MultiSolitonConfig) -> f64 {
    let mut sup_r: f64 = 0.0;
    let mut h1_sq = 0.0;
    let mut sup_dr: f64 = 0.0;
    for p in cfg.solitons() {
        let scan = profile_scan(p);
        sup_r = sup_r.max(scan.amp_max);
        h1_sq += scan.amp_l2_sq + scan.damp_l2_sq;
        sup_dr = sup_dr.max(scan.dprofile_max);
    }
    ConditionFactors {
        sup_r,
        h1_sq,
        sup_dr,
    }
    .lhs(cfg.sigma())
}

struct ProfileScan {
    amp_max: f64,
    /// max over y of |d/dy (phi e^{i theta})|
    dprofile_max: f64,
    amp_l2_sq: f64,
    damp_l2_sq: f64,
}

/// Dense 1D scan of the closed-form profile on its own decay scale.
fn profile_scan(p: &SolitonParams) -> ProfileScan {
    let h = p.halfwidth_h();
    let span = 60.0 / h;
    let n = 20_000usize;
    let dy = 2.0 * span / n as f64;
    let mut amp_max: f64 = 0.0;
    let mut dprofile_max: f64 = 0.0;
    let mut amp_l2 = 0.0;
    let mut damp_l2 = 0.0;
    for i in 0..=n {
        let y = -span + i as f64 * dy;
        let a = p.amplitude(y);
        let da = p.amplitude_derivative(y);
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        amp_max = amp_max.max(a);
        dprofile_max = dprofile_max.max(p.profile_derivative_modulus(y));
        amp_l2 += w * a * a;
        damp_l2 += w * da * da;
    }
    ProfileScan {
        amp_max,
        dprofile_max,
        amp_l2_sq: amp_l2 * dy,
        damp_l2_sq: damp_l2 * dy,
    }
}

/// The closed-form estimate of the condition left-hand side for the
/// `(M d_j, (h_j^2 + M^2 d_j^2)/4)` family:
/// `(1 + sum_j h_j^(1/sigma - 1)) *
///  (1 + sum_j (1 + |c_j|) (h_j^2 / |c_j|)^(1/(2 sigma)))`,
/// of order `M^(1 - 1/(2 sigma))` as the velocity scale grows.
pub fn condition_lhs_closed_form(cfg: &MultiSolitonConfig) -> f64 {
    let sigma = cfg.sigma();
    let mut first = 1.0;
    let mut second = 1.0;
    for p in cfg.solitons() {
        let h = p.halfwidth_h();
        first += h.powf(1.0 / sigma - 1.0);
        let root = (h * h / p.c.abs()).powf(1.0 / (2.0 * sigma));
        second += (1.0 + p.c.abs()) * root;
    }
    first * second
}

/// Everything the condition-margin experiment reports for one family member.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionMarginRow {
    pub m: f64,
    pub v_star: f64,
    pub lhs_estimate: f64,
    pub lhs_grid: Option<f64>,
    pub lhs_profile: f64,
    /// `v* / (C* * lhs_estimate)`.
    pub margin: f64,
}

pub fn condition_margin_row(
    m: f64,
    d: &[f64],
    h: &[f64],
    sigma: f64,
    c_star: f64,
    grid_horizon: Option<(&TimeGrid, &SpatialGrid)>,
) -> Result<ConditionMarginRow> {
    let cfg = velocity_scaled_family(m, d, h, sigma)?;
    let v_star = relative_velocity_v_star(&cfg)?;
    let lhs_estimate = condition_lhs_closed_form(&cfg);
    let lhs_profile = condition_lhs_profile(&cfg);
    let lhs_grid = match grid_horizon {
        Some((horizon, grid)) => Some(separation_condition_lhs(&cfg, horizon, grid)?),
        None => None,
    };
    Ok(ConditionMarginRow {
        m,
        v_star,
        lhs_estimate,
        lhs_grid,
        lhs_profile,
        margin: v_star / (c_star * lhs_estimate),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn soliton(omega: f64, c: f64, x0: f64, sigma: f64) -> SolitonParams {
        SolitonParams::new(omega, c, x0, 0.0, sigma).unwrap()
    }

    #[test]
    fn config_validation() {
        let a = soliton(1.0, 0.0, 0.0, 2.0);
        let b = soliton(1.0, 0.5, 3.0, 2.0);
        assert!(MultiSolitonConfig::new(vec![a, b]).is_ok());
        // repeated velocity
        let b2 = soliton(2.0, 0.0, 3.0, 2.0);
        assert!(MultiSolitonConfig::new(vec![a, b2]).is_err());
        // mixed sigma
        let b3 = soliton(1.0, 0.5, 3.0, 3.0);
        assert!(MultiSolitonConfig::new(vec![a, b3]).is_err());
        assert!(MultiSolitonConfig::new(vec![]).is_err());
    }

    #[test]
    fn single_soliton_profile_equals_field() {
        let grid = build_grid(1024, 40.0).unwrap();
        let p = soliton(1.0, 0.3, -2.0, 2.5);
        let cfg = MultiSolitonConfig::new(vec![p]).unwrap();
        let r = profile_sum(&cfg, 0.7, &grid).unwrap();
        let f = soliton_field(&p, 0.7, &grid).unwrap();
        assert!(r.sub(&f).max_abs() < 1e-15);
    }

    #[test]
    fn profile_sum_is_linear_in_parts() {
        let grid = build_grid(1024, 40.0).unwrap();
        let a = soliton(1.0, 0.0, -15.0, 1.0);
        let b = soliton(1.0, 0.5, 15.0, 1.0);
        let both = profile_sum(&MultiSolitonConfig::new(vec![a, b]).unwrap(), 0.0, &grid).unwrap();
        let fa = soliton_field(&a, 0.0, &grid).unwrap();
        let fb = soliton_field(&b, 0.0, &grid).unwrap();
        assert!(both.sub(&fa.add(&fb)).max_abs() < 1e-15);
        // far separation (gap 30): the peaks do not interact beyond tail
        // overlap, so the sup norm is the larger single peak up to < 1e-10
        let sup = both.max_abs();
        assert!(sup <= fa.max_abs() + fb.max_abs());
        assert!((sup - fa.max_abs().max(fb.max_abs())).abs() < 1e-10);
    }

    #[test]
    fn v_star_values() {
        // equal h = 2 (omega = (h^2 + c^2)/4): both ordered pairs agree
        let cfg = MultiSolitonConfig::new(vec![soliton(1.0, 0.0, 0.0, 1.0), soliton(1.25, 1.0, 0.0, 1.0)])
            .unwrap();
        assert!((relative_velocity_v_star(&cfg).unwrap() - 2.0).abs() < 1e-12);

        // asymmetric h: h = (1, 3), |dc| = 2 -> min(2, 6) = 2
        let a = SolitonParams::new(0.25 * (1.0 + 0.0), 0.0, 0.0, 0.0, 1.0).unwrap(); // h = 1
        let b = SolitonParams::new(0.25 * (9.0 + 4.0), -2.0, 0.0, 0.0, 1.0).unwrap(); // h = 3
        let cfg = MultiSolitonConfig::new(vec![a, b]).unwrap();
        assert!((relative_velocity_v_star(&cfg).unwrap() - 2.0).abs() < 1e-12);

        // relabeling invariance
        let cfg2 = MultiSolitonConfig::new(vec![b, a]).unwrap();
        assert_eq!(
            relative_velocity_v_star(&cfg).unwrap(),
            relative_velocity_v_star(&cfg2).unwrap()
        );

        // single soliton: undefined
        let single = MultiSolitonConfig::new(vec![a]).unwrap();
        assert!(matches!(
            relative_velocity_v_star(&single),
            Err(Error::UndefinedVStar)
        ));
        assert!((decay_rate_lambda(&cfg).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn velocity_scaled_family_construction() {
        let cfg = velocity_scaled_family(10.0, &[-1.0], &[2.0], 2.5).unwrap();
        let p = cfg.solitons()[0];
        assert!((p.c + 10.0).abs() < 1e-14);
        assert!((p.omega - 26.0).abs() < 1e-14);
        assert!((p.halfwidth_h() - 2.0).abs() < 1e-12);

        // repeated d -> coinciding velocities
        assert!(velocity_scaled_family(10.0, &[-1.0, -1.0], &[2.0, 2.0], 2.5).is_err());
        // halfwidth round-trip on a two-member family
        let cfg = velocity_scaled_family(7.0, &[-1.0, -2.5], &[1.3, 0.7], 2.5).unwrap();
        for (p, h) in cfg.solitons().iter().zip([1.3, 0.7]) {
            assert!((p.halfwidth_h() - h).abs() < 1e-12);
        }
    }

    #[test]
    fn chi_vanishes_for_single_soliton() {
        let grid = build_grid(1024, 40.0).unwrap();
        let cfg = MultiSolitonConfig::new(vec![soliton(1.0, 0.4, 0.0, 2.5)]).unwrap();
        for t in [0.0, 1.1] {
            let chi = interaction_residual_chi(&cfg, t, &grid).unwrap();
            assert!(chi.max_abs() < 1e-14);
        }
    }

    #[test]
    fn chi_colocated_pair_is_order_one() {
        let grid = build_grid(2048, 40.0).unwrap();
        let cfg = MultiSolitonConfig::new(vec![
            soliton(1.0, 0.5, 0.0, 2.5),
            soliton(1.0, -0.5, 0.0, 2.5),
        ])
        .unwrap();
        let chi = interaction_residual_chi(&cfg, 0.0, &grid).unwrap();
        let h2 = sobolev_norm(&chi, NormKind::H2);
        assert!(h2 > 0.01, "colocated pair H2 residual {h2}");
    }

    #[test]
    fn chi_scan_underflow_for_single_soliton() {
        let grid = build_grid(512, 40.0).unwrap();
        let cfg = MultiSolitonConfig::new(vec![soliton(1.0, 0.0, 0.0, 1.0)]).unwrap();
        let times = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let scan = chi_decay_scan(&cfg, &times, &grid).unwrap();
        assert!(matches!(scan.verdict, ScanVerdict::Underflow));
        assert!(scan.fitted_rate.is_none());
        assert!(scan.to_csv().contains("fitted_rate,unavailable"));
    }

    #[test]
    fn chi_decays_at_least_at_lambda_for_scaled_family() {
        let grid = build_grid(2048, 40.0).unwrap();
        let cfg = velocity_scaled_family(10.0, &[-1.0, -2.0], &[2.0, 2.0], 2.5)
            .unwrap()
            .with_shifts(&[5.0, -5.0], &[0.0, 0.0])
            .unwrap();
        let times = TimeGrid::new(0.0, 0.6, 40).unwrap();
        let scan = chi_decay_scan(&cfg, &times, &grid).unwrap();
        let lambda = decay_rate_lambda(&cfg).unwrap();
        assert!((lambda - 1.25).abs() < 1e-12);
        let rate = scan.fitted_rate.expect("rate should be fitted");
        assert!(rate >= lambda, "fitted rate {rate} < lambda {lambda}");
        // eventually monotone decreasing on the tail window
        let (lo, hi) = scan.fit_window.unwrap();
        for i in lo..hi - 1 {
            assert!(scan.h2_norms[i + 1] <= scan.h2_norms[i] * (1.0 + 1e-9));
        }
    }

    #[test]
    fn condition_lhs_shift_invariance() {
        let grid = build_grid(2048, 40.0).unwrap();
        let horizon = TimeGrid::new(0.0, 0.5, 5).unwrap();
        let base = MultiSolitonConfig::new(vec![
            soliton(1.0, 0.3, -12.0, 2.5),
            soliton(1.2, -0.4, 12.0, 2.5),
        ])
        .unwrap();
        let lhs0 = separation_condition_lhs(&base, &horizon, &grid).unwrap();
        let shifted = base.with_shifts(&[-14.0, 10.0], &[0.7, -0.3]).unwrap();
        let lhs1 = separation_condition_lhs(&shifted, &horizon, &grid).unwrap();
        assert!(
            (lhs0 - lhs1).abs() / lhs0 < 0.01,
            "lhs {lhs0} vs shifted {lhs1}"
        );
    }

    #[test]
    fn condition_lhs_profile_tends_to_one_for_small_solitons() {
        // sigma in (1, 2) is the regime where every factor vanishes with h;
        // fix c = -2 and take omega = 1 + h^2/4 so the halfwidth is exactly h
        let sigma = 1.5;
        for (h, tol) in [(1e-3_f64, 0.35_f64), (3e-6, 0.1)] {
            let c = -2.0;
            let omega = 1.0 + h * h / 4.0;
            let p = SolitonParams::new(omega, c, 0.0, 0.0, sigma).unwrap();
            let cfg = MultiSolitonConfig::new(vec![p]).unwrap();
            let lhs = condition_lhs_profile(&cfg);
            assert!(
                (lhs - 1.0).abs() < tol,
                "h = {h}: lhs = {lhs} not within {tol} of 1"
            );
        }
    }

    #[test]
    fn closed_form_estimate_scaling_exponent() {
        let ms = [10.0, 20.0, 40.0, 80.0];
        let mut lhs = Vec::new();
        let mut vs = Vec::new();
        for &m in &ms {
            let row = condition_margin_row(m, &[-1.0, -2.0], &[2.0, 2.0], 2.5, 1.0, None).unwrap();
            lhs.push(row.lhs_estimate);
            vs.push(row.v_star);
        }
        let slope_lhs = crate::fit::loglog_slope(&ms, &lhs);
        let slope_v = crate::fit::loglog_slope(&ms, &vs);
        // order M^(1 - 1/(2 sigma)) = M^0.8 and M^1
        assert!((slope_lhs - 0.8).abs() < 0.15, "lhs slope {slope_lhs}");
        assert!((slope_v - 1.0).abs() < 0.05, "v* slope {slope_v}");
    }
}
