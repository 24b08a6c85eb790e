//! Declarative experiment configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::presets::{CurvatureSpec, ModelSpec};
use crate::transport::{GridResolution, MeasureSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub tolerance_scale: f64,
    pub workers: Option<usize>,
    pub model: ModelSpec,
    pub curvature: CurvatureSpec,
    /// Samples for ball suprema of non-radial curvature fields.
    pub curvature_samples: usize,
    pub source: MeasureSpec,
    pub target: MeasureSpec,
    pub resolution: GridResolution,
    pub compare: CompareConfig,
    pub distortion: DistortionConfig,
    pub transport: TransportConfig,
    pub convexity: ConvexityConfig,
    pub probe: ProbeConfig,
    pub growth: GrowthConfig,
    pub suite: SuiteConfig,
    /// Directory relative paths in the config resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tolerance_scale: 1.0,
            workers: None,
            model: ModelSpec::named("hyperbolic-plane"),
            curvature: CurvatureSpec::default(),
            curvature_samples: 10_000,
            source: MeasureSpec::uniform_ball(1.0),
            target: MeasureSpec::uniform_ball(2.0),
            resolution: GridResolution::default(),
            compare: CompareConfig::default(),
            distortion: DistortionConfig::default(),
            transport: TransportConfig::default(),
            convexity: ConvexityConfig::default(),
            probe: ProbeConfig::default(),
            growth: GrowthConfig::default(),
            suite: SuiteConfig::default(),
            base_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub r_max: f64,
    pub r_count: usize,
    pub k_min: f64,
    pub k_count: usize,
    pub dims: Vec<u32>,
    pub tolerance: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            r_max: 5.0,
            r_count: 100,
            k_min: -10.0,
            k_count: 101,
            dims: vec![2, 3, 5],
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistortionConfig {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub t_grid: Vec<f64>,
    pub tolerance: f64,
}

impl Default for DistortionConfig {
    fn default() -> Self {
        Self {
            x: [-1.0, 0.0],
            y: [1.0, 0.0],
            t_grid: (1..=20).map(|i| i as f64 / 20.0).collect(),
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportMethod {
    Radial,
    Exact,
    Sinkhorn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportConfig {
    pub method: TransportMethod,
    /// Sinkhorn regularization relative to the largest cost.
    pub relative_epsilon: f64,
    /// Grid used to discretize the measures into particles for the discrete
    /// solvers.
    pub particles: GridResolution,
    /// Marginal error above which the run fails.
    pub tolerance: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            method: TransportMethod::Radial,
            relative_epsilon: 1e-3,
            particles: GridResolution::new(6, 8),
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvexityConfig {
    pub t_grid: Vec<f64>,
    pub slack_tolerance: f64,
    /// Also evaluate the Jacobian concavity inequality along the transport.
    pub concavity_samples: usize,
}

impl Default for ConvexityConfig {
    fn default() -> Self {
        Self {
            t_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            slack_tolerance: 5e-3,
            concavity_samples: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub z0: [f64; 2],
    pub radii: Vec<f64>,
    pub directions: usize,
    pub rings: usize,
    pub tolerance: f64,
    pub epsilon0: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            z0: [0.0, 0.0],
            radii: vec![0.2, 0.1, 0.05],
            directions: 8,
            rings: 4,
            tolerance: 0.1,
            epsilon0: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthConfig {
    pub x0: [f64; 2],
    pub eps: f64,
    pub r_grid: Vec<f64>,
    /// `C` of the linear-growth variant, if reported.
    pub linear_c: Option<f64>,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            x0: [0.0, 0.0],
            eps: 0.5,
            r_grid: (2..=16).map(|i| 0.5 * i as f64).collect(),
            linear_c: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    /// Criterion ids to run; empty runs all.
    pub criteria: Vec<u8>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
            Error::Parse {
                field: format!("{origin}:{line}"),
                column,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        // relative table paths resolve against the config location
        cfg.base_dir = Path::new(origin).parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tolerance_scale", self.tolerance_scale),
            ("compare.tolerance", self.compare.tolerance),
            ("distortion.tolerance", self.distortion.tolerance),
            ("transport.tolerance", self.transport.tolerance),
            ("transport.relative_epsilon", self.transport.relative_epsilon),
            ("convexity.slack_tolerance", self.convexity.slack_tolerance),
            ("probe.tolerance", self.probe.tolerance),
            ("growth.eps", self.growth.eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::input(format!("{name} must be positive, got {v}")));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::input("workers must be at least 1"));
        }
        Ok(())
    }

    /// Measure spec with table paths resolved against the config directory.
    pub fn resolved(&self, spec: &MeasureSpec) -> MeasureSpec {
        match spec {
            MeasureSpec::Table { path: Some(p), rows } => MeasureSpec::Table {
                path: Some(
                    crate::presets::resolve(self.base_dir.as_deref(), p)
                        .display()
                        .to_string(),
                ),
                rows: rows.clone(),
            },
            other => other.clone(),
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config_parses() {
        let text = r#"
seed = 7
curvature = 1.0

[model]
kind = "hyperbolic-plane"
r_max = 6.0

[source]
preset = "uniform-ball"
radius = 1.0

[target]
preset = "annulus"
inner = 0.5
outer = 2.0

[probe]
z0 = [0.7, 0.4]
radii = [0.2]
"#;
        let c = ExperimentConfig::from_toml(text, "exp/cfg.toml").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.curvature, CurvatureSpec::Constant(1.0));
        assert_eq!(c.target, MeasureSpec::Annulus { inner: 0.5, outer: 2.0 });
        assert_eq!(c.probe.directions, 8);
        assert_eq!(c.base_dir.as_deref(), Some(Path::new("exp")));
    }

    #[test]
    fn errors_point_at_the_line() {
        let text = "seed = 1\n\n[model]\nkind = \"sphere-cap\"\nradius = 2\n";
        match ExperimentConfig::from_toml(text, "c.toml") {
            Err(Error::Parse { field, message, .. }) => {
                assert_eq!(field, "c.toml:5");
                assert!(message.contains("radius"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::from_toml("tolerance_scale = -1.0", "c.toml").is_err());
    }
}
