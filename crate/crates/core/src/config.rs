//! JSON experiment configuration. Every section is optional; missing fields
//! take the preset values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridSpec;
use crate::initial::{ConstructionError, ConstructionParams};
use crate::lagrangian::seeds::SeedLayout;
use crate::solver::SolverConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

/// Box side `L` and points per side `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub side_length: f64,
    pub n: usize,
}

impl GridConfig {
    pub const fn new(side_length: f64, n: usize) -> Self {
        Self { side_length, n }
    }

    pub fn spec(&self) -> Result<GridSpec, crate::FieldError> {
        GridSpec::new(self.side_length, self.n)
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self::new(8.0, 1024)
    }
}

/// Axes of the `sweep` subcommand. The cartesian product may not exceed `cap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(rename = "M")]
    pub amplitudes: Vec<f64>,
    #[serde(rename = "N")]
    pub scale_counts: Vec<u32>,
    pub p: Vec<f64>,
    pub n_pert: Vec<u32>,
    pub cap: usize,
}

impl Default for SweepAxes {
    fn default() -> Self {
        Self {
            amplitudes: vec![3.0],
            scale_counts: vec![3],
            p: vec![2.5],
            n_pert: (1..=8).collect(),
            cap: 256,
        }
    }
}

impl SweepAxes {
    pub fn cells(&self) -> usize {
        self.amplitudes.len() * self.scale_counts.len() * self.p.len() * self.n_pert.len()
    }
}

/// Settings of the individual checks run by `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Grid of the initial-norm sweep.
    pub norms_grid: GridConfig,
    pub norms_m: Vec<f64>,
    pub norms_n: Vec<u32>,
    pub norms_p: Vec<f64>,
    /// Perturbation indices for the β bounds and the inflation experiment.
    pub n_pert: Vec<u32>,
    /// Center of the β bounds (placement-independent quantities).
    pub beta_center: [f64; 2],
    /// `null` picks `x*` from the base flow.
    pub x_star: Option<[f64; 2]>,
    /// Grid for the origin value against the cubature oracle.
    pub oracle_grid: GridConfig,
    /// Grid and `N` values of the growth experiment.
    pub growth_grid: GridConfig,
    pub growth_n: Vec<u32>,
    /// `N` whose growth run doubles as the fine Kato–Ponce run, and the
    /// points per side of its coarse companion.
    pub kato_ponce_n: u32,
    pub kato_ponce_coarse: usize,
    /// `(λ, x*₁)` pairs for the cos² constant.
    pub cos2_pairs: Vec<[f64; 2]>,
    pub comparison_amplitudes: Vec<f64>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            norms_grid: GridConfig::new(2.0, 1024),
            norms_m: vec![2.0, 3.0, 4.0],
            norms_n: (1..=5).collect(),
            norms_p: vec![2.1, 2.5, 3.0],
            n_pert: (1..=8).collect(),
            beta_center: [1.0, 1.0],
            x_star: None,
            oracle_grid: GridConfig::new(12.0, 8192),
            growth_grid: GridConfig::new(4.0, 1024),
            growth_n: (1..=5).collect(),
            kato_ponce_n: 3,
            kato_ponce_coarse: 512,
            cos2_pairs: vec![
                [3.0, 1.0],
                [6.0, 0.37],
                [9.0, 1.42],
                [12.0, 0.81],
                [15.0, 0.55],
                [18.0, 1.13],
                [21.0, 0.29],
                [24.0, 0.96],
                [27.0, 1.7],
                [30.0, 0.64],
            ],
            comparison_amplitudes: vec![1e-2, 5e-3, 2.5e-3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub construction: ConstructionParams,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub seeds: SeedLayout,
    pub output: PathBuf,
    /// Check names, or `["all"]`.
    pub checks: Vec<String>,
    pub sweep: SweepAxes,
    pub diagnostics: DiagnosticsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            construction: ConstructionParams::default(),
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            seeds: SeedLayout::default(),
            output: PathBuf::from("out"),
            checks: vec!["all".to_string()],
            sweep: SweepAxes::default(),
            diagnostics: DiagnosticsConfig::default(),
        }
    }
}

/// Names accepted by `--check` and the `checks` list.
pub const CHECK_NAMES: [&str; 13] = [
    "initial_norms",
    "beta_bounds",
    "cos2_constant",
    "conservation",
    "kato_ponce",
    "flow_structure",
    "riesz_bound",
    "lambda_chain",
    "lambda_oracle",
    "sector_ratio",
    "comparison",
    "gradient_growth",
    "norm_inflation",
];

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(if path == "." { "(root)".to_string() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.grid.spec().expect("validated at load")
    }

    /// Fail-fast checks of every section, reported with the JSON path.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let grid = self.grid.spec().map_err(|e| invalid("grid", e.to_string()))?;
        self.construction.validate(&grid).map_err(|e| match e {
            ConstructionError::InvalidParam { field, message } => invalid(format!("construction.{field}"), message),
            other => invalid("construction", other.to_string()),
        })?;
        self.solver.validate().map_err(|e| invalid("solver", e.to_string()))?;
        if self.seeds.uniform_per_side == 0 || !(self.seeds.uniform_radius > 0.0) {
            return Err(invalid("seeds", "uniform block needs seeds and a positive radius"));
        }
        if self.seeds.fd_offset == 0 {
            return Err(invalid("seeds.fd_offset", "must be at least 1"));
        }
        for c in &self.checks {
            if c != "all" && !CHECK_NAMES.contains(&c.as_str()) {
                return Err(invalid("checks", format!("unknown check {c:?}")));
            }
        }
        let cells = self.sweep.cells();
        if cells == 0 {
            return Err(invalid("sweep", "every axis needs at least one value"));
        }
        if cells > self.sweep.cap {
            return Err(invalid(
                "sweep",
                format!("{cells} cells exceed the cap of {}", self.sweep.cap),
            ));
        }
        for (i, &m) in self.sweep.amplitudes.iter().enumerate() {
            if !(m >= 2.0) {
                return Err(invalid(format!("sweep.M[{i}]"), "M must be at least 2"));
            }
        }
        for (i, &p) in self.sweep.p.iter().enumerate() {
            if !(p > 2.0 && p <= 3.0) {
                return Err(invalid(format!("sweep.p[{i}]"), "p must lie in (2, 3]"));
            }
        }
        if self.sweep.scale_counts.contains(&0) || self.sweep.n_pert.contains(&0) {
            return Err(invalid("sweep", "N and n_pert must be at least 1"));
        }
        let d = &self.diagnostics;
        for (name, g) in [
            ("norms_grid", d.norms_grid),
            ("oracle_grid", d.oracle_grid),
            ("growth_grid", d.growth_grid),
        ] {
            g.spec().map_err(|e| invalid(format!("diagnostics.{name}"), e.to_string()))?;
        }
        GridSpec::new(d.growth_grid.side_length, d.kato_ponce_coarse)
            .map_err(|e| invalid("diagnostics.kato_ponce_coarse", e.to_string()))?;
        if d.kato_ponce_coarse >= d.growth_grid.n {
            return Err(invalid(
                "diagnostics.kato_ponce_coarse",
                "must be coarser than the growth grid",
            ));
        }
        if d.n_pert.contains(&0) {
            return Err(invalid("diagnostics.n_pert", "indices must be at least 1"));
        }
        if d.comparison_amplitudes.iter().any(|&e| !(e > 0.0)) {
            return Err(invalid("diagnostics.comparison_amplitudes", "amplitudes must be positive"));
        }
        Ok(())
    }

    /// Whether `name` is selected by the `checks` list.
    pub fn selects(&self, name: &str) -> bool {
        self.checks.iter().any(|c| c == "all" || c == name)
    }
}
