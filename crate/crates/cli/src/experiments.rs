//! Experiment pipelines: each writes CSV/JSON/binary artifacts plus a
//! MANIFEST into its output directory and reports success or a
//! machine-readable failure reason.

use crate::config::Spec;
use anyhow::{Context, Result};
use gdnls::evolution::{evolve, profile_error_h1, relative_mass_drift, soliton_error_h1};
use gdnls::fit::{log_slope, loglog_slope};
use gdnls::gauge::gq_identity_residual;
use gdnls::grid::TimeGrid;
use gdnls::io::{write_csv, write_snapshot_container, write_trajectory, ContainerHeader};
use gdnls::multisoliton::{
    chi_decay_scan, condition_margin_row, relative_velocity_v_star, ScanVerdict,
};
use gdnls::picard::{
    pair_consistency_residual, reconstruct_solution, select_t0, solve_fixed_point, PicardConfig,
    PicardReport,
};
use gdnls::random::band_limited_field;
use gdnls::soliton::{
    decay_bound_check, phi_ode_residual, profile_ode_residual, resolution_report,
    SolitonParams,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::Path;

pub struct RunOutcome {
    pub pass: bool,
    pub reason: Option<String>,
}

impl RunOutcome {
    fn pass(_report: Value) -> Self {
        RunOutcome {
            pass: true,
            reason: None,
        }
    }

    fn fail(reason: impl Into<String>, _report: Value) -> Self {
        RunOutcome {
            pass: false,
            reason: Some(reason.into()),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    kind: &'a str,
    library_version: &'a str,
    seed: u64,
    spec: &'a Spec,
}

pub fn write_manifest(out: &Path, kind: &str, spec: &Spec) -> Result<()> {
    let manifest = Manifest {
        kind,
        library_version: env!("CARGO_PKG_VERSION"),
        seed: spec.seed,
        spec,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(out.join("MANIFEST.json"), text).context("writing MANIFEST.json")?;
    Ok(())
}

pub fn write_report(out: &Path, report: &Value) -> Result<()> {
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(report)?)?;
    Ok(())
}

/// Every structural rule the run relies on: hard violations plus
/// warning-level observations.
pub fn validate_spec(spec: &Spec) -> Result<(Vec<String>, Vec<String>)> {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    let grid = match spec.spatial_grid() {
        Ok(g) => g,
        Err(e) => {
            violations.push(format!("grid: {e}"));
            return Ok((violations, warnings));
        }
    };
    let params = match spec.soliton_params() {
        Ok(p) => p,
        Err(e) => {
            violations.push(format!("solitons: {e}"));
            return Ok((violations, warnings));
        }
    };
    if params.len() > 1 {
        if let Err(e) = spec.multi_soliton_config() {
            violations.push(format!("configuration: {e}"));
        }
    }
    for (j, p) in params.iter().enumerate() {
        let report = resolution_report(p, &grid);
        for problem in report.errors {
            violations.push(format!("soliton {j}: {problem}"));
        }
        for note in report.warnings {
            warnings.push(format!("soliton {j}: {note}"));
        }
        // centres must stay in the middle half of the box over the horizon
        if let Some(t) = spec.time {
            for end in [t.t_start, t.t_end] {
                let centre = p.x0 + p.c * end;
                if centre.abs() > 0.5 * grid.half_length() {
                    violations.push(format!(
                        "soliton {j}: centre {centre:.2} at t = {end} leaves the middle half of the box"
                    ));
                }
            }
        }
    }
    if let (Some(t), Some(e)) = (spec.time, spec.evolution) {
        let span_step = (t.t_end - t.t_start) / t.num_steps as f64;
        let per = span_step / e.dt;
        if (per - per.round()).abs() > 1e-9 {
            violations.push(format!(
                "time: span spacing {span_step} is not an integer multiple of dt {}",
                e.dt
            ));
        }
    }
    Ok((violations, warnings))
}

pub fn run_validate(spec: &Spec, out: &Path) -> Result<RunOutcome> {
    let (violations, warnings) = validate_spec(spec)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let report = json!({ "violations": violations, "warnings": warnings });
    write_report(out, &report)?;
    if violations.is_empty() {
        Ok(RunOutcome::pass(report))
    } else {
        Ok(RunOutcome {
            pass: false,
            reason: Some(format!("{} validation rule(s) violated", violations.len())),
        })
    }
}

fn ensure_valid(spec: &Spec) -> Result<()> {
    let (violations, warnings) = validate_spec(spec)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if !violations.is_empty() {
        return Err(gdnls::Error::Validation(violations).into());
    }
    Ok(())
}

pub fn run_soliton_check(spec: &Spec, out: &Path) -> Result<RunOutcome> {
    let grid = spec.spatial_grid()?;
    let check = spec.soliton_check.clone().unwrap_or_else(|| crate::config::SolitonCheckSpec {
        sigmas: vec![spec.sigma],
        regimes: vec![],
        max_derivative: 3,
    });
    let mut cases: Vec<SolitonParams> = Vec::new();
    if check.regimes.is_empty() {
        cases.extend(spec.soliton_params()?);
    } else {
        for &sigma in &check.sigmas {
            for &(omega, c) in &check.regimes {
                cases.push(SolitonParams::new(omega, c, 0.0, 0.0, sigma)?);
            }
        }
    }
    if cases.is_empty() {
        anyhow::bail!("soliton-check needs solitons or a [soliton_check] matrix");
    }

    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    let mut all_envelopes_ok = true;
    for p in &cases {
        let rp = profile_ode_residual(p, &grid)?;
        let rc = phi_ode_residual(p, &grid)?;
        let decay = decay_bound_check(p, 0.0, &grid, check.max_derivative, None)?;
        worst = worst.max(rp).max(rc);
        all_envelopes_ok &= decay.pass;
        let mut row = vec![p.sigma, p.omega, p.c, p.halfwidth_h(), rp, rc];
        row.extend(decay.fits.iter().map(|f| f.constant));
        rows.push(row);
    }
    let mut header = vec![
        "sigma".to_string(),
        "omega".to_string(),
        "c".to_string(),
        "h".to_string(),
        "profile_residual".to_string(),
        "phi_residual".to_string(),
    ];
    for k in 0..=check.max_derivative {
        header.push(format!("envelope_c{k}"));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    write_csv(&out.join("residuals.csv"), &header_refs, &rows)?;

    let pass = worst < 1e-8 && all_envelopes_ok;
    let report = json!({
        "cases": rows.len(),
        "worst_residual": worst,
        "envelopes_bounded": all_envelopes_ok,
        "threshold": 1e-8,
    });
    write_report(out, &report)?;
    if pass {
        Ok(RunOutcome::pass(report))
    } else {
        Ok(RunOutcome::fail(
            format!("worst ODE residual {worst:.3e} (threshold 1e-8) or unbounded envelope"),
            report,
        ))
    }
}

pub fn run_evolve(spec: &Spec, out: &Path) -> Result<RunOutcome> {
    ensure_valid(spec)?;
    let grid = spec.spatial_grid()?;
    let cfg = spec.multi_soliton_config()?;
    let span = spec.time_grid()?;
    let ecfg = spec.evolution_config()?;

    let u0 = gdnls::multisoliton::profile_sum(&cfg, span.t_start(), &grid)?;
    let traj = evolve(&u0, &span, &ecfg)?;
    let errors = if cfg.len() == 1 {
        soliton_error_h1(&traj, &cfg.solitons()[0])?
    } else {
        profile_error_h1(&traj, &cfg)?
    };
    let rows: Vec<Vec<f64>> = traj
        .times
        .iter()
        .zip(&traj.mass_history)
        .zip(&errors)
        .map(|((&t, &m), &e)| vec![t, m, e])
        .collect();
    write_csv(&out.join("summary.csv"), &["t", "mass", "h1_error"], &rows)?;
    write_trajectory(
        &out.join("trajectory.bin"),
        &traj,
        spec.sigma,
        ecfg.dt,
        Some(ecfg.scheme),
    )?;

    let max_err = errors.iter().cloned().fold(0.0, f64::max);
    let drift = relative_mass_drift(&traj);
    let report = json!({
        "scheme": format!("{:?}", ecfg.scheme),
        "max_h1_error": max_err,
        "relative_mass_drift": drift,
        "snapshots": traj.times.len(),
    });
    write_report(out, &report)?;
    Ok(RunOutcome::pass(report))
}

pub fn run_chi_scan(spec: &Spec, out: &Path) -> Result<RunOutcome> {
    ensure_valid(spec)?;
    let grid = spec.spatial_grid()?;
    let cfg = spec.multi_soliton_config()?;
    let times = spec.time_grid()?;
    let scan = chi_decay_scan(&cfg, &times, &grid)?;
    std::fs::write(out.join("chi_scan.csv"), scan.to_csv())?;

    let (v_star, lambda) = match relative_velocity_v_star(&cfg) {
        Ok(v) => (Some(v), Some(v / 16.0)),
        Err(_) => (None, None),
    };
    let report = json!({
        "v_star": v_star,
        "lambda": lambda,
        "fitted_rate": scan.fitted_rate,
        "verdict": format!("{:?}", scan.verdict),
        "fit_window": scan.fit_window,
    });
    write_report(out, &report)?;
    let pass = match (scan.verdict, scan.fitted_rate, lambda) {
        (ScanVerdict::Underflow, _, _) => true,
        (_, Some(rate), Some(l)) => rate >= l,
        _ => true,
    };
    if pass {
        Ok(RunOutcome::pass(report))
    } else {
        Ok(RunOutcome::fail(
            format!(
                "fitted decay rate {:?} below v*/16 = {:?}",
                scan.fitted_rate, lambda
            ),
            report,
        ))
    }
}

pub fn run_condition_margin(spec: &Spec, out: &Path) -> Result<RunOutcome> {
    let cond = spec
        .condition
        .clone()
        .context("condition-margin needs a [condition] section")?;
    let grid = spec.spatial_grid()?;
    let horizon = TimeGrid::new(0.0, cond.horizon_len, cond.horizon_steps)?;

    let mut rows = Vec::new();
    let mut ms = Vec::new();
    let mut lhs = Vec::new();
    let mut vs = Vec::new();
    let mut margins = Vec::new();
    for &m in &cond.m_values {
        let row = condition_margin_row(m, &cond.d, &cond.h, spec.sigma, cond.c_star, Some((&horizon, &grid)))?;
        ms.push(m);
        lhs.push(row.lhs_estimate);
        vs.push(row.v_star);
        margins.push(row.margin);
        rows.push(vec![
            row.m,
            row.v_star,
            row.lhs_estimate,
            row.lhs_grid.unwrap_or(f64::NAN),
            row.lhs_profile,
            row.margin,
        ]);
    }
    write_csv(
        &out.join("margin.csv"),
        &["m", "v_star", "lhs_estimate", "lhs_grid", "lhs_profile", "margin"],
        &rows,
    )?;

    let slope_lhs = loglog_slope(&ms, &lhs);
    let slope_v = loglog_slope(&ms, &vs);
    let increasing = margins.windows(2).all(|w| w[1] > w[0]);

    // locate the admissible-M crossing with the grid-free estimate
    let mut m = *ms.last().unwrap();
    let mut crossing = None;
    while m < 1e9 {
        m *= 2.0;
        let row = condition_margin_row(m, &cond.d, &cond.h, spec.sigma, cond.c_star, None)?;
        if row.margin > 1.0 {
            crossing = Some((m, row.margin));
            break;
        }
    }

    let report = json!({
        "lhs_exponent": slope_lhs,
        "v_star_exponent": slope_v,
        "margins": margins,
        "margin_increasing": increasing,
        "crossing": crossing.map(|(m, margin)| json!({"m": m, "margin": margin})),
    });
    write_report(out, &report)?;
    if increasing && crossing.is_some() {
        Ok(RunOutcome::pass(report))
    } else {
        Ok(RunOutcome::fail(
            "condition margin does not increase to an admissible M",
            report,
        ))
    }
}

pub fn run_gq_identity(spec: &Spec, out: &Path) -> Result<RunOutcome> {
    let gq = spec.gq.clone().unwrap_or_else(|| crate::config::GqSpec {
        num_fields: 10,
        k_cut: None,
        sigmas: vec![spec.sigma],
    });
    let grid = spec.spatial_grid()?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &sigma in &gq.sigmas {
        for i in 0..gq.num_fields {
            let seed = spec.seed.wrapping_add(i as u64);
            let phi = band_limited_field(&grid, seed, gq.k_cut);
            let res = gq_identity_residual(&phi, sigma)?;
            worst = worst.max(res);
            rows.push(vec![sigma, seed as f64, res]);
        }
    }
    write_csv(&out.join("residuals.csv"), &["sigma", "seed", "residual"], &rows)?;
    let report = json!({
        "fields": rows.len(),
        "worst_residual": worst,
        "threshold": 1e-9,
    });
    write_report(out, &report)?;
    if worst < 1e-9 {
        Ok(RunOutcome::pass(report))
    } else {
        Ok(RunOutcome::fail(
            format!("worst G-Q residual {worst:.3e} exceeds 1e-9"),
            report,
        ))
    }
}

/// Resolve lambda, T0 and the window per the selection rules.
fn resolve_picard_config(spec: &Spec) -> Result<(PicardConfig, Value)> {
    let grid = spec.spatial_grid()?;
    let cfg = spec.multi_soliton_config()?;
    let p = spec.picard.unwrap_or(crate::config::PicardSpec {
        lambda: None,
        t0: None,
        t0_decay: 1e-3,
        window: None,
        num_time_nodes: 200,
        max_iterations: 30,
        tolerance: 1e-9,
        n_source_as_printed: false,
    });
    let lambda = match p.lambda {
        Some(l) => l,
        None => relative_velocity_v_star(&cfg)? / 16.0,
    };
    let t0 = match p.t0 {
        Some(t) => t,
        None => {
            let scan_end = (2.0 * (1.0 / p.t0_decay).ln() / lambda).max(2.0);
            let scan = TimeGrid::new(0.0, scan_end, 400)?;
            let onset = select_t0(&cfg, &grid, lambda, &scan)?
                .context("chi onset rule found no admissible T0 in the scan window")?;
            onset.max(((1.0 / p.t0_decay).ln() + 0.05) / lambda)
        }
    };
    // cap the window so every centre stays in the middle half of the box
    let mut window = p.window.unwrap_or(8.0 / lambda);
    for s in cfg.solitons() {
        if s.c.abs() > 0.0 {
            let room = 0.5 * grid.half_length() - (s.x0 + s.c * t0).abs();
            if room < 0.0 {
                anyhow::bail!(
                    "soliton centre {:.2} already outside the middle half of the box at T0 = {t0:.3}",
                    s.x0 + s.c * t0
                );
            }
            window = window.min(room / s.c.abs());
        }
    }
    let pcfg = PicardConfig {
        t0,
        t_max: t0 + window,
        num_time_nodes: p.num_time_nodes,
        lambda,
        max_iterations: p.max_iterations,
        tolerance: p.tolerance,
        n_source_form: spec.n_source_form(),
    };
    let resolved = json!({
        "lambda": lambda,
        "t0": t0,
        "window": window,
        "num_time_nodes": p.num_time_nodes,
        "tolerance": p.tolerance,
        "n_source_form": format!("{:?}", pcfg.n_source_form),
    });
    Ok((pcfg, resolved))
}

fn picard_report_json(report: &PicardReport, resolved: &Value) -> Value {
    json!({
        "config": resolved,
        "converged": report.converged,
        "in_ball": report.in_ball,
        "iterates_x_norm": report.iterates_x_norm,
        "diff_x_norm": report.diff_x_norm,
        "contraction_ratios": report.contraction_ratios,
        "tail_bound": report.tail_bound,
    })
}

fn write_eta(out: &Path, spec: &Spec, report: &PicardReport) -> Result<()> {
    let eta = &report.final_eta;
    let grid = eta.spatial_grid();
    let header = ContainerHeader {
        num_points: grid.num_points() as u64,
        length: grid.length(),
        sigma: spec.sigma,
        dt: eta.time_grid().step(),
        scheme_tag: 2,
    };
    let times = eta.time_grid().nodes();
    let first: Vec<(f64, &gdnls::ComplexField)> =
        times.iter().cloned().zip(eta.first().iter()).collect();
    let second: Vec<(f64, &gdnls::ComplexField)> =
        times.iter().cloned().zip(eta.second().iter()).collect();
    write_snapshot_container(&out.join("eta_phi.bin"), &header, &first)?;
    write_snapshot_container(&out.join("eta_psi.bin"), &header, &second)?;
    Ok(())
}

pub fn run_picard(spec: &Spec, out: &Path) -> Result<RunOutcome> {
    ensure_valid(spec)?;
    let grid = spec.spatial_grid()?;
    let cfg = spec.multi_soliton_config()?;
    let (pcfg, resolved) = resolve_picard_config(spec)?;
    let report = solve_fixed_point(&cfg, &pcfg, &grid)?;
    write_eta(out, spec, &report)?;
    let report_json = picard_report_json(&report, &resolved);
    write_report(out, &report_json)?;
    if report.converged && report.in_ball {
        Ok(RunOutcome::pass(report_json))
    } else {
        Ok(RunOutcome::fail(
            format!(
                "fixed point iteration: converged = {}, in_ball = {}",
                report.converged, report.in_ball
            ),
            report_json,
        ))
    }
}

pub fn run_full_construct(spec: &Spec, out: &Path) -> Result<RunOutcome> {
    ensure_valid(spec)?;
    let grid = spec.spatial_grid()?;
    let cfg = spec.multi_soliton_config()?;
    let (pcfg, resolved) = resolve_picard_config(spec)?;
    let report = solve_fixed_point(&cfg, &pcfg, &grid)?;
    write_eta(out, spec, &report)?;
    if !report.converged {
        let rj = picard_report_json(&report, &resolved);
        write_report(out, &rj)?;
        return Ok(RunOutcome::fail("fixed point did not converge", rj));
    }

    let rec = reconstruct_solution(&report, &cfg, &grid)?;
    let residuals = pair_consistency_residual(&report, &cfg, &grid)?;
    let rows: Vec<Vec<f64>> = rec
        .trajectory
        .times
        .iter()
        .zip(&rec.h1_distance)
        .zip(&residuals)
        .map(|((&t, &d), &r)| vec![t, d, r])
        .collect();
    write_csv(
        &out.join("construction.csv"),
        &["t", "h1_distance", "pair_residual"],
        &rows,
    )?;
    write_trajectory(&out.join("u_trajectory.bin"), &rec.trajectory, spec.sigma, 0.0, None)?;

    // fit away from the truncation end of the window
    let n_fit = ((rows.len() as f64) * 0.6) as usize;
    let rate = -log_slope(
        &rec.trajectory.times[..n_fit],
        &rec.h1_distance[..n_fit],
    );
    let worst_residual = residuals.iter().cloned().fold(0.0, f64::max);
    let report_json = json!({
        "picard": picard_report_json(&report, &resolved),
        "fitted_h1_rate": rate,
        "rate_over_lambda": rate / pcfg.lambda,
        "worst_pair_residual": worst_residual,
        "initial_h1_distance": rec.h1_distance.first(),
    });
    write_report(out, &report_json)?;
    if rate >= 0.9 * pcfg.lambda {
        Ok(RunOutcome::pass(report_json))
    } else {
        Ok(RunOutcome::fail(
            format!(
                "fitted H1 decay rate {rate:.3} below 0.9 lambda = {:.3}",
                0.9 * pcfg.lambda
            ),
            report_json,
        ))
    }
}
