//! TOML run configuration. Unknown keys are rejected.

use descent_vi_core::{
    build_grid, model_power, Error as CoreError, FlowParams, Grid, Nonlinearity, Obstacle,
    Schedule, SearchConfig,
};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub grid: GridSection,
    pub model: ModelSection,
    pub obstacle: ObstacleSection,
    pub penalty: Option<PenaltySection>,
    pub flow: Option<FlowSection>,
    pub search: Option<SearchSection>,
    pub schedule: Option<ScheduleSection>,
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dimension: usize,
    pub extents: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    pub s: f64,
    #[serde(default = "default_true")]
    pub strict: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSection {
    pub name: String,
    pub level: Option<f64>,
    pub height: Option<f64>,
    pub low: Option<f64>,
    pub high: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltySection {
    pub eps: f64,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub tol: Option<f64>,
    pub max_steps: Option<usize>,
    pub h_init: Option<f64>,
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub patience: Option<usize>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub t0: Option<f64>,
    pub r_seed: Option<f64>,
    pub r1: Option<f64>,
    pub angles: Option<usize>,
    pub depth: Option<usize>,
    pub part_tol: Option<f64>,
    pub rho0: Option<f64>,
    pub probe_max_steps: Option<usize>,
    pub sc_tol: Option<f64>,
    /// Seed direction for `solve-penalty`: phi1 | neg_phi1 | phi2 | neg_phi2.
    pub seed_dir: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub eps0: f64,
    pub gamma: f64,
    pub stages: usize,
    pub tol_feas: f64,
    pub branch: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub verbosity: u8,
    #[serde(default)]
    pub trace: bool,
}

fn default_true() -> bool {
    true
}

/// Fully resolved run configuration.
pub struct RunConfig {
    pub grid: Grid,
    pub nonlinearity: Nonlinearity,
    pub obstacle: Obstacle,
    pub eps: Option<f64>,
    pub search: SearchConfig,
    /// Whether `r_seed` was set explicitly (otherwise the H5 default applies).
    pub r_seed_explicit: bool,
    pub seed_dir: String,
    pub schedule: Option<Schedule>,
    pub branch: Option<String>,
    pub out_dir: std::path::PathBuf,
    pub seed: u64,
    pub verbosity: u8,
    pub trace: bool,
}

/// Parse and validate; requires sections named in `required`.
pub fn load(path: &std::path::Path, required: &[&str]) -> Result<RunConfig, CoreError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::config(format!("cannot read {}: {e}", path.display())))?;
    let value: toml::Value = text
        .parse()
        .map_err(|e| CoreError::config(format!("config parse error: {e}")))?;
    for &section in ["grid", "model", "obstacle", "output"].iter().chain(required) {
        if value.get(section).is_none() {
            return Err(CoreError::config(format!("missing section [{section}]")));
        }
    }
    let raw: RawConfig = RawConfig::deserialize(value)
        .map_err(|e| CoreError::config(format!("config error: {e}")))?;

    let grid = build_grid(raw.grid.dimension, &raw.grid.extents, &raw.grid.counts)?;
    let nonlinearity = match raw.model.name.as_str() {
        "power" => model_power(raw.model.s, raw.model.strict)?,
        other => {
            return Err(CoreError::config(format!(
                "unknown model \"{other}\" (bundled: power)"
            )))
        }
    };
    let need = |v: Option<f64>, key: &str, kind: &str| {
        v.ok_or_else(|| CoreError::config(format!("obstacle \"{kind}\" requires key {key}")))
    };
    let obstacle = match raw.obstacle.name.as_str() {
        "constant" => Obstacle::constant(&grid, need(raw.obstacle.level, "level", "constant")?)?,
        "tent" => Obstacle::tent(&grid, need(raw.obstacle.height, "height", "tent")?)?,
        "two_bump" => Obstacle::two_bump(
            &grid,
            need(raw.obstacle.low, "low", "two_bump")?,
            need(raw.obstacle.high, "high", "two_bump")?,
        )?,
        other => {
            return Err(CoreError::config(format!(
                "unknown obstacle \"{other}\" (bundled: constant, tent, two_bump)"
            )))
        }
    };

    let f = raw.flow.unwrap_or_default();
    let defaults = FlowParams::default();
    let flow = FlowParams {
        tol: f.tol.unwrap_or(defaults.tol),
        max_steps: f.max_steps.unwrap_or(defaults.max_steps),
        h_init: f.h_init.unwrap_or(defaults.h_init),
        h_min: f.h_min.unwrap_or(defaults.h_min),
        h_max: f.h_max.unwrap_or(defaults.h_max),
        patience: f.patience.unwrap_or(defaults.patience),
        ..defaults
    };
    let s = raw.search.unwrap_or_default();
    let sd = SearchConfig::default();
    let search = SearchConfig {
        t0: s.t0.unwrap_or(sd.t0),
        r_seed: s.r_seed.unwrap_or(sd.r_seed),
        r1: s.r1.unwrap_or(sd.r1),
        angle_count: s.angles.unwrap_or(sd.angle_count),
        bisect_depth: s.depth.unwrap_or(sd.bisect_depth),
        part_tol: s.part_tol.unwrap_or(sd.part_tol),
        rho0: s.rho0.unwrap_or(sd.rho0),
        probe_max_steps: s.probe_max_steps.unwrap_or(sd.probe_max_steps),
        sc_tol: s.sc_tol,
        flow,
    };
    search.validate()?;
    let schedule = raw.schedule.as_ref().map(|sc| Schedule {
        eps0: sc.eps0,
        gamma: sc.gamma,
        max_stages: sc.stages,
        tol_feas: sc.tol_feas,
    });
    if let Some(ref sch) = schedule {
        sch.validate()?;
    }
    if let Some(eps) = raw.penalty.as_ref().map(|p| p.eps) {
        if !(eps > 0.0) {
            return Err(CoreError::config(format!("penalty eps must be positive, got {eps}")));
        }
    }

    Ok(RunConfig {
        grid,
        nonlinearity,
        obstacle,
        eps: raw.penalty.map(|p| p.eps),
        r_seed_explicit: s.r_seed.is_some(),
        seed_dir: s.seed_dir.unwrap_or_else(|| "phi1".to_string()),
        search,
        schedule,
        branch: raw.schedule.and_then(|sc| sc.branch),
        out_dir: std::path::PathBuf::from(raw.output.dir),
        seed: raw.output.seed,
        verbosity: raw.output.verbosity,
        trace: raw.output.trace,
    })
}
