//! Strict JSON configuration with `--block.key=value` overrides.

use std::path::{Path, PathBuf};

use halfspace_core::grid::make_grid;
use halfspace_core::minmax::BarycenterConstraint;
use halfspace_core::{GridSpec, ProblemParams};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Campaign {
    GroundState,
    CutoffSweep,
    MEquality,
    BarycenterScan,
    Solve,
}

impl Campaign {
    pub const ALL: [Campaign; 5] = [
        Campaign::GroundState,
        Campaign::CutoffSweep,
        Campaign::MEquality,
        Campaign::BarycenterScan,
        Campaign::Solve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Campaign::GroundState => "ground-state",
            Campaign::CutoffSweep => "cutoff-sweep",
            Campaign::MEquality => "m-equality",
            Campaign::BarycenterScan => "barycenter-scan",
            Campaign::Solve => "solve",
        }
    }

    /// File stem of the campaign's JSON summary.
    pub fn stem(self) -> &'static str {
        match self {
            Campaign::GroundState => "gs",
            Campaign::CutoffSweep => "cutoff",
            Campaign::MEquality => "m_equality",
            Campaign::BarycenterScan => "barycenter",
            Campaign::Solve => "solve",
        }
    }

    pub fn parse(name: &str) -> Result<Self, HarnessError> {
        Campaign::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| HarnessError::Config(format!("unknown campaign {name:?}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub dim: usize,
    #[serde(rename = "L")]
    pub half_extent: f64,
    #[serde(rename = "M")]
    pub points_per_dim: usize,
}

fn default_r_sweep() -> Vec<f64> {
    vec![8.0, 16.0, 32.0]
}

fn default_rho_sweep() -> Vec<f64> {
    vec![2.0, 1.0, 0.5]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub s: f64,
    pub p: f64,
    pub rho: f64,
    /// Hole height used by every campaign except the `r` sweep.
    pub r: f64,
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default = "default_r_sweep")]
    pub r_sweep: Vec<f64>,
    #[serde(default = "default_rho_sweep")]
    pub rho_sweep: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub tol_residual: f64,
    pub tol_constraint: f64,
    pub max_iters: usize,
    pub deterministic: bool,
    /// Keep every k-th descent iterate for the bubbling diagnostic (0 disables).
    pub snapshot_every: usize,
    /// Also write kept iterates as FRF1 files.
    pub dump_snapshots: bool,
    pub sphere_samples: usize,
    pub barycenter: BarycenterConstraint,
    pub family_spacing: Option<f64>,
}

impl Default for SolverBlock {
    fn default() -> Self {
        Self {
            tol_residual: 1e-5,
            tol_constraint: 1e-8,
            max_iters: 20_000,
            deterministic: true,
            snapshot_every: 5,
            dump_snapshots: false,
            sphere_samples: 32,
            barycenter: BarycenterConstraint::Origin,
            family_spacing: None,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: GridBlock,
    pub problem: ProblemBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub campaigns: Vec<Campaign>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

/// Parses `value` as JSON, falling back to a plain string.
fn parse_scalar(value: &str) -> Value {
    serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()))
}

/// Applies `block.key=value` (the leading `--` already stripped).
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), HarnessError> {
    let (path, value) = assignment
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("override {assignment:?} needs '='")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.len() < 2 || keys.iter().any(|k| k.is_empty()) {
        return Err(HarnessError::Config(format!(
            "override {path:?} must have the form block.key"
        )));
    }
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| HarnessError::Config(format!("override {path:?}: {key} is not a block")))?;
        node = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| HarnessError::Config(format!("override {path:?}: parent is not a block")))?;
    obj.insert(keys[keys.len() - 1].to_string(), parse_scalar(value));
    Ok(())
}

impl Config {
    pub fn from_value(value: Value) -> Result<Self, HarnessError> {
        let config: Config =
            serde_json::from_value(value).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path`, applies overrides in order, and validates.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut value: Value = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        Self::from_value(value)
    }

    pub fn grid(&self) -> Result<GridSpec, HarnessError> {
        make_grid(self.grid.dim, self.grid.half_extent, self.grid.points_per_dim)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Problem parameters with the hole at height `r` and radius `rho`.
    pub fn params_at(&self, r: f64, rho: f64) -> ProblemParams {
        ProblemParams {
            dim: self.grid.dim,
            s: self.problem.s,
            p: self.problem.p,
            rho,
            r,
            a: self.problem.a.clone(),
            tol_residual: self.solver.tol_residual,
            tol_constraint: self.solver.tol_constraint,
            max_iters: self.solver.max_iters,
            deterministic_reduction: self.solver.deterministic,
        }
    }

    pub fn params(&self) -> ProblemParams {
        self.params_at(self.problem.r, self.problem.rho)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let spec = self.grid()?;
        let check = |p: ProblemParams| -> Result<(), HarnessError> {
            p.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
            // The hole must sit inside the box.
            spec.snap_offset(&p.hole_center())
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            Ok(())
        };
        check(self.params())?;
        for &r in &self.problem.r_sweep {
            check(self.params_at(r, self.problem.rho))?;
        }
        for &rho in &self.problem.rho_sweep {
            check(self.params_at(self.problem.r, rho))?;
        }
        if self.solver.sphere_samples < 3 && self.grid.dim == 2 {
            return Err(HarnessError::Config("solver.sphere_samples must be >= 3".into()));
        }
        Ok(())
    }

    /// Campaigns to run: the command line wins over the config list; an empty
    /// selection means all five.
    pub fn selection(&self, cli: &[Campaign]) -> Vec<Campaign> {
        let chosen = if cli.is_empty() { &self.campaigns } else { cli };
        if chosen.is_empty() {
            Campaign::ALL.to_vec()
        } else {
            Campaign::ALL.into_iter().filter(|c| chosen.contains(c)).collect()
        }
    }
}
