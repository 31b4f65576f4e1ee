//! Run configuration: solver tolerances, grid sizes and check thresholds.
//!
//! Loaded from `--config <file>`, else from the file named by `FREESTEIN_CONFIG`,
//! else defaults. Every key is optional; unknown keys are rejected.

use freestein_core::stein::SteinOptions;
use freestein_core::{ConvolutionOptions, EquilibriumOptions, MomentMapOptions};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const CONFIG_ENV: &str = "FREESTEIN_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Acceptance thresholds used by `check` and report pass flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub schwinger_dyson: f64,
    pub euler_lagrange: f64,
    pub pushforward: f64,
    pub kahler_einstein: f64,
    pub stein_residual: f64,
    pub ws_slack: f64,
    pub contraction: f64,
    pub caffarelli: f64,
    pub stability: f64,
    pub eigen: f64,
    pub dirichlet: f64,
    pub dirichlet_symmetry: f64,
    pub stationarity: f64,
    pub langevin: f64,
    pub variance_slack: f64,
    pub clt_moment: f64,
    pub clt_slope_min: f64,
    pub clt_slope_max: f64,
    pub grid_certificate: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            schwinger_dyson: 1e-8,
            euler_lagrange: 1e-7,
            pushforward: 1e-6,
            kahler_einstein: 1e-5,
            stein_residual: 1e-6,
            ws_slack: 1e-8,
            contraction: 1e-6,
            caffarelli: 1e-8,
            stability: 1e-6,
            eigen: 1e-5,
            dirichlet: 1e-6,
            dirichlet_symmetry: 1e-8,
            stationarity: 1e-7,
            langevin: 1e-7,
            variance_slack: 1e-9,
            clt_moment: 1e-8,
            clt_slope_min: -1.3,
            clt_slope_max: -0.7,
            grid_certificate: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Gauss-Chebyshev nodes for the equilibrium endpoint system.
    pub equilibrium_nodes: usize,
    pub equilibrium_tol: f64,
    pub sd_test_degree: u32,
    pub moment_tol: f64,
    pub damping: f64,
    pub max_iter: usize,
    /// Interpolation degree of `u'` in the moment-map iteration.
    pub moment_degree: usize,
    /// Tensor quadrature nodes per axis; absent means the measure's own default.
    pub stein_nodes: Option<usize>,
    pub kernel_grid: usize,
    pub convolution_eps: f64,
    pub convolution_grid: usize,
    pub convolution_max_iter: usize,
    pub certificate_grid: usize,
    pub thresholds: Thresholds,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            equilibrium_nodes: 256,
            equilibrium_tol: 1e-13,
            sd_test_degree: 8,
            moment_tol: 1e-13,
            damping: 0.5,
            max_iter: 200,
            moment_degree: 128,
            stein_nodes: None,
            kernel_grid: 64,
            convolution_eps: 1e-4,
            convolution_grid: 1024,
            convolution_max_iter: 500,
            certificate_grid: 64,
            thresholds: Thresholds::default(),
        }
    }
}

fn node_count(name: &str, n: usize) -> Result<(), ConfigError> {
    if n.is_power_of_two() && (32..=4096).contains(&n) {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} = {n} must be a power of two between 32 and 4096")))
    }
}

fn grid_size(name: &str, n: usize) -> Result<(), ConfigError> {
    if (2..=4096).contains(&n) {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} = {n} must lie between 2 and 4096")))
    }
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} = {v} must be positive")))
    }
}

impl RunConfig {
    pub fn load(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        let path = explicit.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        let config = match path {
            None => Self::default(),
            Some(path) => {
                let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
                serde_json::from_str(&text).map_err(|source| ConfigError::Json { path, source })?
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        node_count("equilibrium_nodes", self.equilibrium_nodes)?;
        grid_size("kernel_grid", self.kernel_grid)?;
        node_count("convolution_grid", self.convolution_grid)?;
        grid_size("certificate_grid", self.certificate_grid)?;
        if let Some(n) = self.stein_nodes {
            node_count("stein_nodes", n)?;
        }
        positive("equilibrium_tol", self.equilibrium_tol)?;
        positive("moment_tol", self.moment_tol)?;
        positive("convolution_eps", self.convolution_eps)?;
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(ConfigError::Invalid(format!("damping = {} must lie in (0, 1]", self.damping)));
        }
        if self.max_iter == 0 || self.convolution_max_iter == 0 || self.moment_degree < 8 {
            return Err(ConfigError::Invalid("iteration counts and degrees must be positive".into()));
        }
        let t = &self.thresholds;
        for (name, v) in [
            ("schwinger_dyson", t.schwinger_dyson),
            ("euler_lagrange", t.euler_lagrange),
            ("pushforward", t.pushforward),
            ("kahler_einstein", t.kahler_einstein),
            ("stein_residual", t.stein_residual),
            ("ws_slack", t.ws_slack),
            ("contraction", t.contraction),
            ("caffarelli", t.caffarelli),
            ("stability", t.stability),
            ("eigen", t.eigen),
            ("dirichlet", t.dirichlet),
            ("dirichlet_symmetry", t.dirichlet_symmetry),
            ("stationarity", t.stationarity),
            ("langevin", t.langevin),
            ("variance_slack", t.variance_slack),
            ("clt_moment", t.clt_moment),
            ("grid_certificate", t.grid_certificate),
        ] {
            positive(&format!("thresholds.{name}"), v)?;
        }
        if !(t.clt_slope_min < t.clt_slope_max) {
            return Err(ConfigError::Invalid("thresholds.clt_slope_min must be below clt_slope_max".into()));
        }
        Ok(())
    }

    pub fn equilibrium(&self) -> EquilibriumOptions {
        EquilibriumOptions {
            nodes: self.equilibrium_nodes,
            tol: self.equilibrium_tol,
            sd_test_degree: self.sd_test_degree,
            ..Default::default()
        }
    }

    pub fn moment_map(&self) -> MomentMapOptions {
        MomentMapOptions {
            tol: self.moment_tol,
            damping: self.damping,
            max_iter: self.max_iter,
            degree: self.moment_degree,
            equilibrium: self.equilibrium(),
            ..Default::default()
        }
    }

    pub fn convolution(&self) -> ConvolutionOptions {
        ConvolutionOptions { eps: self.convolution_eps, grid: self.convolution_grid, max_iter: self.convolution_max_iter }
    }

    pub fn stein(&self) -> SteinOptions {
        SteinOptions { nodes: self.stein_nodes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let c = RunConfig { equilibrium_nodes: 100, ..Default::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { moment_tol: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { stein_nodes: Some(8192), ..Default::default() };
        assert!(c.validate().is_err());
        let parsed: Result<RunConfig, _> = serde_json::from_str(r#"{"nodes": 3}"#);
        assert!(parsed.is_err());
        let partial: RunConfig = serde_json::from_str(r#"{"damping": 0.25, "thresholds": {"eigen": 1e-6}}"#).unwrap();
        assert_eq!(partial.damping, 0.25);
        assert_eq!(partial.thresholds.eigen, 1e-6);
        assert_eq!(partial.thresholds.dirichlet, 1e-6);
    }
}
