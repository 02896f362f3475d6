//! TOML experiment specification with dotted-path command-line overrides.

use anyhow::{bail, Context, Result};
use gdnls::evolution::{Composition, EvolutionConfig, Scheme};
use gdnls::gauge::NSourceForm;
use gdnls::grid::{build_grid, SpatialGrid, TimeGrid};
use gdnls::multisoliton::{velocity_scaled_family, MultiSolitonConfig};
use gdnls::soliton::SolitonParams;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spec {
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub sigma: f64,
    pub grid: GridSpec,
    #[serde(default)]
    pub solitons: Vec<SolitonSpec>,
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub time: Option<TimeSpec>,
    #[serde(default)]
    pub evolution: Option<EvolutionSpec>,
    #[serde(default)]
    pub picard: Option<PicardSpec>,
    #[serde(default)]
    pub condition: Option<ConditionSpec>,
    #[serde(default)]
    pub gq: Option<GqSpec>,
    #[serde(default)]
    pub soliton_check: Option<SolitonCheckSpec>,
}

fn default_seed() -> u64 {
    0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub num_points: usize,
    pub half_length: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonSpec {
    pub omega: f64,
    pub c: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub theta0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub m: f64,
    pub d: Vec<f64>,
    pub h: Vec<f64>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub num_steps: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    pub dt: f64,
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub dealias: Option<bool>,
    #[serde(default = "one")]
    pub nonlin_scale: f64,
    #[serde(default)]
    pub composition: Option<CompositionSpec>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeSpec {
    SplitStepGauge,
    Ifrk4,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompositionSpec {
    Strang,
    Yoshida4,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSpec {
    /// Decay rate; defaults to v*/16 when absent.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Start of the iteration window; selected by the chi-onset rule
    /// (pushed out until `e^{-lambda t0} < t0_decay`) when absent.
    #[serde(default)]
    pub t0: Option<f64>,
    #[serde(default = "default_t0_decay")]
    pub t0_decay: f64,
    /// Window length; defaults to `8/lambda`, capped by the box drift rule.
    #[serde(default)]
    pub window: Option<f64>,
    #[serde(default = "default_nodes")]
    pub num_time_nodes: usize,
    #[serde(default = "default_max_iter")]
    pub max_iterations: usize,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub n_source_as_printed: bool,
}

fn default_t0_decay() -> f64 {
    1e-3
}
fn default_nodes() -> usize {
    200
}
fn default_max_iter() -> usize {
    30
}
fn default_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSpec {
    pub m_values: Vec<f64>,
    pub d: Vec<f64>,
    pub h: Vec<f64>,
    #[serde(default = "one")]
    pub c_star: f64,
    #[serde(default = "default_horizon_len")]
    pub horizon_len: f64,
    #[serde(default = "default_horizon_steps")]
    pub horizon_steps: usize,
}

fn default_horizon_len() -> f64 {
    20.0
}
fn default_horizon_steps() -> usize {
    40
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GqSpec {
    #[serde(default = "default_num_fields")]
    pub num_fields: usize,
    #[serde(default)]
    pub k_cut: Option<usize>,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
}

fn default_num_fields() -> usize {
    10
}
fn default_sigmas() -> Vec<f64> {
    vec![1.0, 2.0, 2.5, 3.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonCheckSpec {
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    /// (omega, c) pairs to check; the configured solitons are used when empty.
    #[serde(default)]
    pub regimes: Vec<(f64, f64)>,
    #[serde(default = "default_max_derivative")]
    pub max_derivative: usize,
}

fn default_max_derivative() -> usize {
    3
}

impl Spec {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut value: toml::Value = text.parse().context("parsing TOML")?;
        for item in overrides {
            apply_override(&mut value, item)?;
        }
        let spec: Spec = value.try_into().context("deserializing experiment spec")?;
        Ok(spec)
    }

    pub fn spatial_grid(&self) -> gdnls::Result<SpatialGrid> {
        build_grid(self.grid.num_points, self.grid.half_length)
    }

    pub fn soliton_params(&self) -> Result<Vec<SolitonParams>> {
        if !self.solitons.is_empty() && self.family.is_some() {
            bail!("configure either [[solitons]] or [family], not both");
        }
        if let Some(fam) = &self.family {
            let mut cfg = velocity_scaled_family(fam.m, &fam.d, &fam.h, self.sigma)?;
            let k = cfg.len();
            let x0 = fam.x0.clone().unwrap_or_else(|| vec![0.0; k]);
            let theta0 = fam.theta0.clone().unwrap_or_else(|| vec![0.0; k]);
            cfg = cfg.with_shifts(&x0, &theta0)?;
            return Ok(cfg.solitons().to_vec());
        }
        self.solitons
            .iter()
            .map(|s| Ok(SolitonParams::new(s.omega, s.c, s.x0, s.theta0, self.sigma)?))
            .collect()
    }

    pub fn multi_soliton_config(&self) -> Result<MultiSolitonConfig> {
        let params = self.soliton_params()?;
        if params.is_empty() {
            bail!("this experiment needs solitons ([[solitons]] or [family])");
        }
        Ok(MultiSolitonConfig::new(params)?)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        let t = self.time.context("this experiment needs a [time] section")?;
        Ok(TimeGrid::new(t.t_start, t.t_end, t.num_steps)?)
    }

    pub fn evolution_config(&self) -> Result<EvolutionConfig> {
        let e = self
            .evolution
            .context("this experiment needs an [evolution] section")?;
        let scheme = match e.scheme {
            SchemeSpec::SplitStepGauge => Scheme::SplitStepGauge,
            SchemeSpec::Ifrk4 => Scheme::IntegratingFactorRK4,
        };
        let mut cfg = EvolutionConfig::new(e.dt, scheme, self.sigma)?;
        if let Some(d) = e.dealias {
            cfg.dealias = d;
        }
        cfg.nonlin_scale = e.nonlin_scale;
        if let Some(c) = e.composition {
            cfg.composition = match c {
                CompositionSpec::Strang => Composition::Strang,
                CompositionSpec::Yoshida4 => Composition::Yoshida4,
            };
        }
        Ok(cfg)
    }

    pub fn n_source_form(&self) -> NSourceForm {
        match self.picard {
            Some(p) if p.n_source_as_printed => NSourceForm::AsPrinted,
            _ => NSourceForm::Derived,
        }
    }
}

/// Apply one `dotted.path=value` override to the parsed TOML tree.
fn apply_override(root: &mut toml::Value, item: &str) -> Result<()> {
    let (path, raw) = item
        .split_once('=')
        .with_context(|| format!("override '{item}' must look like key.path=value"))?;
    // parse the right-hand side as a TOML literal; bare words become strings
    let parsed = match format!("v = {raw}").parse::<toml::Value>() {
        Ok(toml::Value::Table(mut t)) => t.remove("v").unwrap(),
        _ => toml::Value::String(raw.to_string()),
    };
    let mut node = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let table = node
            .as_table_mut()
            .with_context(|| format!("override path '{path}': '{seg}' is not a table"))?;
        if i + 1 == segments.len() {
            table.insert(seg.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(seg.to_string())
            .or_insert(toml::Value::Table(Default::default()));
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply() {
        let mut v: toml::Value = r#"
name = "x"
sigma = 1.0
[grid]
num_points = 256
half_length = 40.0
"#
        .parse()
        .unwrap();
        apply_override(&mut v, "grid.num_points=512").unwrap();
        apply_override(&mut v, "sigma=2.5").unwrap();
        apply_override(&mut v, "picard.lambda=4.0").unwrap();
        let spec: Spec = v.try_into().unwrap();
        assert_eq!(spec.grid.num_points, 512);
        assert_eq!(spec.sigma, 2.5);
        assert_eq!(spec.picard.unwrap().lambda, Some(4.0));
    }
}
