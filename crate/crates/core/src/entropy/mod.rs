//! Relative entropy, its evolution along radial Wasserstein geodesics, the
//! variable-curvature convexity checker and the small-ball curvature probe.

mod probe;

use serde::Serialize;

pub use probe::{curvature_probe, probe_sweep, ProbeOptions, ProbeResult, ProbeSweep};

use crate::error::{Error, Result};
use crate::geometry::{CurvatureField, CurvatureSource, ManifoldModel, ModelSummary, Point};
use crate::jacobi::check_jacobian_concavity;
use crate::par::Execution;
use crate::transport::{GridMeasure, GridResolution, MonotoneRadialMap, ParticleMeasure};

pub const CONVEXITY_SCHEMA: &str = "riccilab.convexity/1";

/// `Ent(ν)`: finite for absolutely continuous grid measures, `+∞` for
/// measures with an atomic part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "state", content = "value", rename_all = "kebab-case")]
pub enum EntropyValue {
    Finite(f64),
    Infinite,
}

impl EntropyValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            EntropyValue::Finite(v) => Some(v),
            EntropyValue::Infinite => None,
        }
    }
}

/// `∫ ρ log ρ dm` of a grid measure.
pub fn entropy(mu: &GridMeasure) -> f64 {
    mu.entropy()
}

/// Particle measures are singular with respect to the volume.
pub fn particle_entropy(_mu: &ParticleMeasure) -> EntropyValue {
    EntropyValue::Infinite
}

/// `Ent(μ_t) = Ent(μ₀) − ∫ log J_t dμ₀` along the radial geodesic.
pub fn entropy_along_path(map: &MonotoneRadialMap, mu0: &GridMeasure, t: f64, exec: Execution) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("t = {t} must lie in [0, 1]")));
    }
    let ent0 = mu0.entropy();
    if t == 0.0 {
        return Ok(ent0);
    }
    let ft = map.at(t);
    let log_j = map.try_integrate_source(
        |s| {
            let j = ft.jacobian(s)?;
            if !(j > 0.0 && j.is_finite()) {
                return Err(Error::Inconsistent(format!(
                    "transport Jacobian J_{t} = {j} at radius {s} is not positive"
                )));
            }
            Ok(j.ln())
        },
        exec,
    )?;
    Ok(ent0 - log_j)
}

/// Entropy of the exact pushforward re-binned on `rings` uniform rings.
pub fn rebinned_entropy(map: &MonotoneRadialMap, t: f64, rings: usize) -> Result<f64> {
    Ok(map.pushforward(t, rings, 1)?.entropy())
}

/// `∫ K(B_x(ρ(x, F(x)))) ρ(x, F(x))² dμ₀(x)`.
pub fn k_integral(map: &MonotoneRadialMap, k: &CurvatureField, exec: Execution) -> Result<f64> {
    let c0 = map.source_center();
    let shift = Point::new(map.target_center().x - c0.x, map.target_center().y - c0.y);
    // off-centre plane transports vary with the angle; average over it
    let angles: Vec<f64> = if shift.radius() > 0.0 {
        (0..64)
            .map(|i| std::f64::consts::TAU * (i as f64 + 0.5) / 64.0)
            .collect()
    } else {
        vec![0.0]
    };
    let constant = matches!(k.source(), CurvatureSource::Constant(_));
    map.try_integrate_source(
        |s| {
            let mut acc = 0.0;
            for &theta in &angles {
                let x = Point::new(c0.x + s * theta.cos(), c0.y + s * theta.sin());
                let d = if shift.radius() > 0.0 {
                    let fx = map.apply(x);
                    x.dist_chart(fx)
                } else {
                    (map.radius_and_derivative(s).0 - s).abs()
                };
                let sup = if constant { k.value(x) } else { k.sup_on_ball(x, d)? };
                acc += sup * d * d;
            }
            Ok(acc / angles.len() as f64)
        },
        exec,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexityTolerances {
    /// Admissible negative slack.
    pub slack: f64,
}

impl Default for ConvexityTolerances {
    fn default() -> Self {
        Self { slack: 5e-3 }
    }
}

/// Both sides of the entropy inequality on a `t` grid.
#[derive(Debug, Clone, Serialize)]
pub struct ConvexityReport {
    pub schema: &'static str,
    pub model: ModelSummary,
    pub measures: Vec<String>,
    pub t_grid: Vec<f64>,
    pub ent: Vec<f64>,
    /// Entropy of the re-binned pushforward, an independent estimate of `ent`.
    pub ent_rebinned: Vec<f64>,
    pub rhs: Vec<f64>,
    pub slack: Vec<f64>,
    #[serde(rename = "K_integral")]
    pub k_integral: f64,
    pub w2_sq: f64,
    pub min_slack: f64,
    pub cross_check_error: f64,
    pub pass: bool,
    pub tolerances: ConvexityTolerances,
    pub grid_resolution: GridResolution,
}

/// Evaluates `Ent(μ_t) ≤ (1−t)Ent(μ₀) + tEnt(μ₁) + t(1−t)/2 ∫ K(B_x(ρ))ρ² dμ₀`
/// along the radial geodesic from `mu0` to `mu1`.
pub fn check_convexity(
    model: &ManifoldModel,
    k: &CurvatureField,
    mu0: &GridMeasure,
    mu1: &GridMeasure,
    t_grid: &[f64],
    tolerances: ConvexityTolerances,
    exec: Execution,
) -> Result<ConvexityReport> {
    let map = MonotoneRadialMap::new(model, mu0, mu1)?;
    let (e0, e1) = (mu0.entropy(), mu1.entropy());
    let k_int = k_integral(&map, k, exec)?;
    let ent = exec.try_map(t_grid, |&t| match t {
        1.0 => Ok(e1),
        t => entropy_along_path(&map, mu0, t, Execution::Sequential),
    })?;
    let ent_rebinned = exec.try_map(t_grid, |&t| match t {
        0.0 => Ok(e0),
        1.0 => Ok(e1),
        t => rebinned_entropy(&map, t, mu0.rings()),
    })?;
    let rhs: Vec<f64> = t_grid
        .iter()
        .map(|&t| (1.0 - t) * e0 + t * e1 + 0.5 * t * (1.0 - t) * k_int)
        .collect();
    let slack: Vec<f64> = rhs.iter().zip(&ent).map(|(r, e)| r - e).collect();
    let min_slack = slack.iter().copied().fold(f64::INFINITY, f64::min);
    let cross_check_error = ent
        .iter()
        .zip(&ent_rebinned)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(ConvexityReport {
        schema: CONVEXITY_SCHEMA,
        model: model.summary(),
        measures: vec![describe(mu0), describe(mu1)],
        t_grid: t_grid.to_vec(),
        ent,
        ent_rebinned,
        rhs,
        slack,
        k_integral: k_int,
        w2_sq: map.cost(),
        min_slack,
        cross_check_error,
        pass: min_slack >= -tolerances.slack,
        tolerances,
        grid_resolution: mu0.resolution(),
    })
}

fn describe(mu: &GridMeasure) -> String {
    let c = mu.center();
    format!(
        "radial grid measure on [{}, {}] about ({}, {})",
        mu.edges()[0],
        mu.edges()[mu.rings()],
        c.x,
        c.y
    )
}

/// Smallest slack of the Jacobian concavity inequality over `samples`
/// source radii and the given `t` values.
pub fn jacobian_concavity_along(
    map: &MonotoneRadialMap,
    t_grid: &[f64],
    samples: usize,
    exec: Execution,
) -> Result<f64> {
    let (lo, hi) = (map.source().inner(), map.source().outer());
    let radii: Vec<f64> = (0..samples)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / samples as f64)
        .collect();
    let jobs: Vec<(f64, f64)> = radii
        .iter()
        .flat_map(|&s| t_grid.iter().map(move |&t| (s, t)))
        .collect();
    let model = map.model();
    let c0 = map.source_center();
    let slacks = exec.try_map(&jobs, |&(s, t)| {
        let x = Point::new(c0.x + s * 0.3f64.cos(), c0.y + s * 0.3f64.sin());
        let image = map.apply(x);
        let jt = map.at(t).jacobian(s)?;
        let j1 = map.at(1.0).jacobian(s)?;
        check_jacobian_concavity(model, x, image, t, jt, j1)
    })?;
    Ok(slacks.into_iter().fold(f64::INFINITY, f64::min))
}

/// `Ent(μ_t) + log V_{ε+t(R+ε)}` along the geodesic between the uniform
/// measures on `B̄_ε(x₀)` and `B̄_R(x₀)`; nonnegative by Jensen.
pub fn jensen_margins(
    model: &ManifoldModel,
    x0: Point,
    eps: f64,
    radius: f64,
    t_grid: &[f64],
    res: GridResolution,
    exec: Execution,
) -> Result<Vec<f64>> {
    let mu0 = GridMeasure::uniform_ball(model, x0, eps, res)?;
    let mu1 = GridMeasure::uniform_ball(model, x0, radius, res)?;
    let map = MonotoneRadialMap::new(model, &mu0, &mu1)?;
    exec.try_map(t_grid, |&t| {
        let ent = entropy_along_path(&map, &mu0, t, Execution::Sequential)?;
        let v = model.ball_volume(x0, eps + t * (radius + eps))?;
        Ok(ent + v.ln())
    })
}
