//! Small-ball curvature probe.
//!
//! Two uniform measures on `β`-balls centred at `exp_{z0}(∓r e₁)` are coupled
//! by the exact discrete plan and pushed to their midpoint measure. The
//! entropy defect `Ent(μ_½) − ½Ent(μ₀) − ½Ent(μ₁)` divided by `W₂²/8` tends to
//! the curvature bound at `z0` as `r → 0`; comparing it with `K(B_{z0}(6r))`
//! falsifies claimed bounds that are too small.
//!
//! The balls are discretized by polar lattices laid out in parallel-transported
//! frames, so the coupling is a near-translation. Entropies of the (nearly
//! uniform) measures are read off the Riemannian areas of their support
//! polygons; a binned estimate is kept as a diagnostic.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{CurvatureField, ManifoldModel, Point, Tangent};
use crate::par::Execution;
use crate::transport::{plan_particles, Method, ParticleMeasure, TransportPlan};

pub const PROBE_SCHEMA: &str = "riccilab.probe/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeOptions {
    /// Lattice rings per ball; ring `j` carries `6j` particles.
    pub rings: usize,
    /// Directions per radius in a sweep.
    pub directions: usize,
    /// Slack `ε₀` in the ellipse overlay.
    pub epsilon0: f64,
    /// Margin by which the estimate must exceed the comparison to flag a
    /// violation.
    pub tolerance: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            rings: 4,
            directions: 8,
            epsilon0: 0.1,
            tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeDiagnostics {
    /// Entropy defect from binning the particles at width `β/4`.
    pub binned_ent_gap: f64,
    pub binned_estimate: f64,
    /// Largest `(u/β₁)² + (w/β₂)²` over the midpoint particles.
    pub ellipse_max_ratio: f64,
    pub ellipse_contains: bool,
    /// Plan mass on lattice-corresponding pairs.
    pub diagonal_mass: f64,
    pub particles: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeResult {
    pub z0: Point,
    pub r: f64,
    pub beta: f64,
    /// Angle of `e₁` in the frame at `z0`.
    pub direction: f64,
    pub ent_gap: f64,
    pub w2_sq: f64,
    pub estimate: f64,
    /// `K(B_{z0}(6r))`.
    pub comparison: f64,
    pub diagnostics: ProbeDiagnostics,
}

impl ProbeResult {
    pub fn violation(&self, tolerance: f64) -> bool {
        self.estimate > self.comparison + tolerance
    }
}

struct Lattice {
    points: Vec<Point>,
    weights: Vec<f64>,
    /// Indices of the outer ring in counter-clockwise frame order.
    boundary: Vec<usize>,
}

fn add(u: Tangent, v: Tangent) -> Tangent {
    Tangent::new(u.a + v.a, u.b + v.b)
}

fn dot(u: Tangent, v: Tangent) -> f64 {
    u.a * v.a + u.b * v.b
}

/// Uniform measure on `B_β(c)` sampled on a polar lattice in the frame
/// `(e1, e2)` at `c`.
fn lattice(model: &ManifoldModel, c: Point, e1: Tangent, e2: Tangent, beta: f64, rings: usize) -> Result<Lattice> {
    let h = beta / rings as f64;
    let mut points = vec![c];
    let mut weights = vec![PI * (0.5 * h).powi(2)];
    let mut boundary = Vec::new();
    for j in 1..=rings {
        let rho = h * j as f64;
        let outer = (rho + 0.5 * h).min(beta);
        let count = 6 * j;
        let w = PI * (outer * outer - (rho - 0.5 * h).powi(2)) / count as f64;
        for k in 0..count {
            let phi = TAU * k as f64 / count as f64;
            let v = add(e1.scale(rho * phi.cos()), e2.scale(rho * phi.sin()));
            if j == rings {
                boundary.push(points.len());
            }
            points.push(model.exp(c, v)?);
            weights.push(w);
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(Lattice {
        points,
        weights,
        boundary,
    })
}

/// `Σ m log(m / area)` over chart bins of side `width`, with Riemannian cell
/// areas `f(ρ)/ρ · width²`.
fn binned_entropy(model: &ManifoldModel, points: &[Point], weights: &[f64], width: f64) -> f64 {
    let mut bins: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    for (p, &w) in points.iter().zip(weights) {
        let key = ((p.x / width).floor() as i64, (p.y / width).floor() as i64);
        *bins.entry(key).or_insert(0.0) += w;
    }
    bins.iter()
        .filter(|(_, &m)| m > 0.0)
        .map(|(&(i, j), &m)| {
            let c = Point::new((i as f64 + 0.5) * width, (j as f64 + 0.5) * width);
            let rho = c.radius();
            let density = if rho > 0.0 { model.warp().value(rho) / rho } else { 1.0 };
            m * (m / (density * width * width)).ln()
        })
        .sum()
}

fn dominant_target(plan: &TransportPlan, i: usize) -> Option<usize> {
    plan.entries
        .iter()
        .filter(|e| e.i == i)
        .max_by(|a, b| a.mass.total_cmp(&b.mass))
        .map(|e| e.j)
}

/// One probe along the direction at angle `direction` in the frame at `z0`.
pub fn curvature_probe(
    model: &ManifoldModel,
    k: &CurvatureField,
    z0: Point,
    r: f64,
    beta: f64,
    direction: f64,
    opts: &ProbeOptions,
) -> Result<ProbeResult> {
    if !(r > 0.0 && beta > 0.0) {
        return Err(Error::input(format!(
            "probe radii must be positive (r = {r}, beta = {beta})"
        )));
    }
    if beta > r / 10.0 * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "beta = {beta} must not exceed r/10 = {}",
            r / 10.0
        )));
    }
    if z0.radius() + 6.0 * r > model.r_max() {
        return Err(Error::domain(format!(
            "B(z0, 6r) leaves the chart: |z0| + 6r = {} > r_max = {}",
            z0.radius() + 6.0 * r,
            model.r_max()
        )));
    }
    if opts.rings == 0 {
        return Err(Error::input("probe lattice needs at least one ring"));
    }
    let e1 = Tangent::unit_at(direction);
    let e2 = Tangent::unit_at(direction + 0.5 * PI);
    let (c0, f0) = (
        model.parallel_transport(z0, e1.scale(-r), e1)?,
        model.parallel_transport(z0, e1.scale(-r), e2)?,
    );
    let (c1, f1) = (
        model.parallel_transport(z0, e1.scale(r), e1)?,
        model.parallel_transport(z0, e1.scale(r), e2)?,
    );
    let a0 = lattice(model, c0.0, c0.1, f0.1, beta, opts.rings)?;
    let a1 = lattice(model, c1.0, c1.1, f1.1, beta, opts.rings)?;
    let mu0 = ParticleMeasure::new(a0.points.clone(), a0.weights.clone())?;
    let mu1 = ParticleMeasure::new(a1.points.clone(), a1.weights.clone())?;
    let plan = plan_particles(model, &mu0, &mu1, Method::Exact, Execution::Sequential)?;
    let w2_sq = plan.cost;

    let mids = plan
        .entries
        .iter()
        .map(|e| model.geodesic(mu0.points[e.i], mu1.points[e.j])?.midpoint())
        .collect::<Result<Vec<_>>>()?;
    let masses: Vec<f64> = plan.entries.iter().map(|e| e.mass).collect();

    let mid_boundary = a0
        .boundary
        .iter()
        .map(|&i| {
            let j =
                dominant_target(&plan, i).ok_or_else(|| Error::Inconsistent(format!("particle {i} is not coupled")))?;
            model.geodesic(mu0.points[i], mu1.points[j])?.midpoint()
        })
        .collect::<Result<Vec<_>>>()?;
    let boundary_of = |l: &Lattice| l.boundary.iter().map(|&i| l.points[i]).collect::<Vec<_>>();
    let p0 = model.polygon_area(&boundary_of(&a0)).abs();
    let p1 = model.polygon_area(&boundary_of(&a1)).abs();
    let ph = model.polygon_area(&mid_boundary).abs();
    let ent_gap = 0.5 * p0.ln() + 0.5 * p1.ln() - ph.ln();

    let width = beta / 4.0;
    let binned_ent_gap = binned_entropy(model, &mids, &masses, width)
        - 0.5 * binned_entropy(model, &mu0.points, &mu0.weights, width)
        - 0.5 * binned_entropy(model, &mu1.points, &mu1.weights, width);

    let comparison = k.sup_on_ball(z0, 6.0 * r)?;
    let n = 2.0;
    let beta1 = beta * (1.0 + r * r * (opts.epsilon0 / (2.0 * n)) / 2.0);
    let beta2 = beta * (1.0 + r * r * (comparison + opts.epsilon0 / (2.0 * n)) / 2.0);
    let mut ellipse_max_ratio: f64 = 0.0;
    for &m in &mids {
        let v = model.log_map(z0, m)?;
        let (u, w) = (dot(v, e1), dot(v, e2));
        ellipse_max_ratio = ellipse_max_ratio.max((u / beta1).powi(2) + (w / beta2).powi(2));
    }
    let diagonal_mass = plan.entries.iter().filter(|e| e.i == e.j).map(|e| e.mass).sum();

    if !(w2_sq > 0.0) {
        return Err(Error::numeric("probe balls coincide: W2 vanishes", w2_sq));
    }
    Ok(ProbeResult {
        z0,
        r,
        beta,
        direction,
        ent_gap,
        w2_sq,
        estimate: 8.0 * ent_gap / w2_sq,
        comparison,
        diagnostics: ProbeDiagnostics {
            binned_ent_gap,
            binned_estimate: 8.0 * binned_ent_gap / w2_sq,
            ellipse_max_ratio,
            ellipse_contains: ellipse_max_ratio <= 1.0 + 1e-9,
            diagonal_mass,
            particles: mids.len(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusSummary {
    pub r: f64,
    pub mean: f64,
    pub std: f64,
    /// `(max − min) / |mean|` across directions.
    pub spread: f64,
    pub binned_mean: f64,
    pub comparison: f64,
    pub violation: bool,
}

/// Probes over several radii and evenly spaced directions.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeSweep {
    pub schema: &'static str,
    pub z0: Point,
    pub options: ProbeOptions,
    pub seed: u64,
    pub radii: Vec<RadiusSummary>,
    /// Intercept of the least-squares fit `estimate ≈ a + b r²`.
    pub extrapolated: f64,
    pub violation: bool,
    pub trials: Vec<ProbeResult>,
}

/// Runs [`curvature_probe`] with `β = r/10` for every radius and
/// `opts.directions` directions offset by a seeded random angle.
pub fn probe_sweep(
    model: &ManifoldModel,
    k: &CurvatureField,
    z0: Point,
    radii: &[f64],
    opts: &ProbeOptions,
    seed: u64,
    exec: Execution,
) -> Result<ProbeSweep> {
    if radii.is_empty() || opts.directions == 0 {
        return Err(Error::input("probe sweep needs at least one radius and one direction"));
    }
    let step = TAU / opts.directions as f64;
    let offset = ChaCha8Rng::seed_from_u64(seed).gen::<f64>() * step;
    let jobs: Vec<(f64, f64)> = radii
        .iter()
        .flat_map(|&r| (0..opts.directions).map(move |d| (r, offset + step * d as f64)))
        .collect();
    let trials = exec.try_map(&jobs, |&(r, dir)| curvature_probe(model, k, z0, r, r / 10.0, dir, opts))?;

    let summaries: Vec<RadiusSummary> = trials
        .chunks(opts.directions)
        .map(|chunk| {
            let n = chunk.len() as f64;
            let mean = chunk.iter().map(|p| p.estimate).sum::<f64>() / n;
            let var = chunk.iter().map(|p| (p.estimate - mean).powi(2)).sum::<f64>() / n;
            let (lo, hi) = chunk.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.estimate), hi.max(p.estimate))
            });
            let comparison = chunk[0].comparison;
            RadiusSummary {
                r: chunk[0].r,
                mean,
                std: var.sqrt(),
                spread: (hi - lo) / mean.abs().max(f64::MIN_POSITIVE),
                binned_mean: chunk.iter().map(|p| p.diagnostics.binned_estimate).sum::<f64>() / n,
                comparison,
                violation: mean > comparison + opts.tolerance,
            }
        })
        .collect();
    let extrapolated = extrapolate_r2(&summaries);
    Ok(ProbeSweep {
        schema: PROBE_SCHEMA,
        z0,
        options: *opts,
        seed,
        violation: summaries.iter().any(|s| s.violation),
        radii: summaries,
        extrapolated,
        trials,
    })
}

/// Intercept of the least-squares line through `(r², mean)`; a single radius
/// is returned as is.
fn extrapolate_r2(s: &[RadiusSummary]) -> f64 {
    if s.len() == 1 {
        return s[0].mean;
    }
    let n = s.len() as f64;
    let xs: Vec<f64> = s.iter().map(|v| v.r * v.r).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = s.iter().map(|v| v.mean).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(s).map(|(x, v)| (x - mx) * (v.mean - my)).sum();
    my - sxy / sxx * mx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Warp;

    #[test]
    fn flat_plane_has_no_defect() {
        let e = ManifoldModel::euclidean(10.0).unwrap();
        let k = CurvatureField::constant(&e, 0.0);
        let p = curvature_probe(&e, &k, Point::new(0.5, -0.2), 0.2, 0.02, 0.7, &ProbeOptions::default()).unwrap();
        assert!(p.estimate.abs() < 1e-8, "{}", p.estimate);
        assert!((p.diagnostics.diagonal_mass - 1.0).abs() < 1e-12);
        assert!((p.w2_sq - 0.16).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_estimate_near_one() {
        let h = ManifoldModel::hyperbolic(12.0).unwrap();
        let k = CurvatureField::constant(&h, 1.0);
        let p = curvature_probe(&h, &k, Point::new(0.3, 0.1), 0.2, 0.02, 0.4, &ProbeOptions::default()).unwrap();
        // polygonal supports of translated balls: 8 log cosh r / (2r)² to leading order
        let expect = 8.0 * 0.2f64.cosh().ln() / 0.16;
        assert!((p.estimate - expect).abs() < 0.03, "{} vs {expect}", p.estimate);
        assert!(p.diagnostics.ellipse_contains);
        assert!(!p.violation(0.1));
    }

    #[test]
    fn rejects_bad_radii() {
        let h = ManifoldModel::hyperbolic(2.0).unwrap();
        let k = CurvatureField::constant(&h, 1.0);
        let o = ProbeOptions::default();
        assert!(matches!(
            curvature_probe(&h, &k, Point::ORIGIN, 0.2, 0.05, 0.0, &o),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            curvature_probe(&h, &k, Point::ORIGIN, 0.4, 0.04, 0.0, &o),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sweep_is_deterministic_and_flags_false_bound() {
        let w = Warp::expression("(sinh(r) + 0.05*sinh(2*r))/1.1", "warp").unwrap();
        let m = ManifoldModel::surface_of_revolution(w, 4.0).unwrap();
        let z0 = Point::polar(5f64.acosh(), 0.0);
        assert!((m.ricci_min(z0).unwrap() + 2.0).abs() < 1e-9);
        let k = CurvatureField::constant(&m, 1.0);
        let o = ProbeOptions {
            directions: 2,
            rings: 3,
            ..ProbeOptions::default()
        };
        let a = probe_sweep(&m, &k, z0, &[0.1], &o, 7, Execution::Parallel).unwrap();
        let b = probe_sweep(&m, &k, z0, &[0.1], &o, 7, Execution::Sequential).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.violation, "{:?}", a.radii);
    }
}
