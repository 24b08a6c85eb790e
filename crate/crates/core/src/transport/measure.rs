use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::expr::Expr;
use crate::geometry::{ManifoldModel, ModelKind, Point};

/// Radial × angular cell counts of a polar grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridResolution {
    pub radial: usize,
    pub angular: usize,
}

impl Default for GridResolution {
    fn default() -> Self {
        Self {
            radial: 256,
            angular: 64,
        }
    }
}

impl GridResolution {
    pub fn new(radial: usize, angular: usize) -> Self {
        Self { radial, angular }
    }

    pub fn refined(self, factor: usize) -> Self {
        Self {
            radial: self.radial * factor,
            angular: self.angular * factor,
        }
    }
}

/// Absolutely continuous measure with piecewise-constant density on a polar
/// grid of geodesic rings about `center`.
///
/// Off-pole centres are only admitted on the euclidean plane, where a polar
/// grid about any point is again a Riemannian polar grid.
#[derive(Debug, Clone)]
pub struct GridMeasure {
    model: ManifoldModel,
    center: Point,
    edges: Vec<f64>,
    n_theta: usize,
    density: Vec<f64>,
    ring_area: Vec<f64>,
}

impl GridMeasure {
    /// General constructor; `density` is ring-major (`n_theta` cells per ring)
    /// and is normalized to unit mass.
    pub fn from_cells(
        model: &ManifoldModel,
        center: Point,
        edges: Vec<f64>,
        n_theta: usize,
        density: Vec<f64>,
    ) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) || edges[0] < 0.0 {
            return Err(Error::input("grid radii must be nonnegative and strictly increasing"));
        }
        if n_theta == 0 || density.len() != (edges.len() - 1) * n_theta {
            return Err(Error::input(format!(
                "density has {} cells, grid has {}",
                density.len(),
                (edges.len() - 1) * n_theta
            )));
        }
        if center.radius() > 0.0 && model.kind() != ModelKind::EuclideanPlane {
            return Err(Error::input(
                "grid measures off the pole are only supported on the euclidean plane",
            ));
        }
        let reach = center.radius() + edges[edges.len() - 1];
        if reach > model.r_max() * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "measure support reaches radius {reach}, beyond r_max = {}",
                model.r_max()
            )));
        }
        if density.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::input("densities must be finite and nonnegative"));
        }
        let warp = model.warp();
        let g: Vec<f64> = edges.iter().map(|&r| warp.antiderivative(r)).collect();
        let ring_area: Vec<f64> = g.windows(2).map(|w| (w[1] - w[0]) * TAU / n_theta as f64).collect();
        let mut m = Self {
            model: model.clone(),
            center,
            edges,
            n_theta,
            density,
            ring_area,
        };
        let mass = m.mass();
        if !(mass > 0.0) {
            return Err(Error::input("measure has zero mass"));
        }
        m.density.iter_mut().for_each(|d| *d /= mass);
        Ok(m)
    }

    /// Rotationally symmetric measure from one density per ring.
    pub fn from_rings(
        model: &ManifoldModel,
        center: Point,
        edges: Vec<f64>,
        n_theta: usize,
        ring_density: &[f64],
    ) -> Result<Self> {
        let density = ring_density
            .iter()
            .flat_map(|&d| std::iter::repeat_n(d, n_theta))
            .collect();
        Self::from_cells(model, center, edges, n_theta, density)
    }

    /// Rotationally symmetric measure with density `profile(r)` sampled at the
    /// ring midpoints of a uniform grid on `[inner, outer]`.
    pub fn from_profile(
        model: &ManifoldModel,
        center: Point,
        inner: f64,
        outer: f64,
        res: GridResolution,
        profile: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if !(outer > inner && inner >= 0.0) {
            return Err(Error::input(format!("invalid radial support [{inner}, {outer}]")));
        }
        let edges = uniform_edges(inner, outer, res.radial);
        let rings: Vec<f64> = edges.windows(2).map(|w| profile(0.5 * (w[0] + w[1]))).collect();
        Self::from_rings(model, center, edges, res.angular, &rings)
    }

    pub fn uniform_ball(model: &ManifoldModel, center: Point, radius: f64, res: GridResolution) -> Result<Self> {
        Self::from_profile(model, center, 0.0, radius, res, |_| 1.0)
    }

    pub fn annulus(model: &ManifoldModel, inner: f64, outer: f64, res: GridResolution) -> Result<Self> {
        Self::from_profile(model, Point::ORIGIN, inner, outer, res, |_| 1.0)
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn rings(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn resolution(&self) -> GridResolution {
        GridResolution::new(self.rings(), self.n_theta)
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn cell_density(&self, ring: usize, k: usize) -> f64 {
        self.density[ring * self.n_theta + k]
    }

    /// Riemannian area of every cell in ring `i`.
    pub fn cell_area(&self, ring: usize) -> f64 {
        self.ring_area[ring]
    }

    pub fn mass(&self) -> f64 {
        self.density
            .chunks(self.n_theta)
            .zip(&self.ring_area)
            .map(|(row, a)| row.iter().sum::<f64>() * a)
            .sum()
    }

    /// `Σ ρ log ρ · area` with `0 log 0 = 0`.
    pub fn entropy(&self) -> f64 {
        self.density
            .chunks(self.n_theta)
            .zip(&self.ring_area)
            .map(|(row, a)| row.iter().filter(|d| **d > 0.0).map(|d| d * d.ln()).sum::<f64>() * a)
            .sum()
    }

    /// Per-ring density if every ring is constant in the angle.
    pub fn ring_densities(&self) -> Option<Vec<f64>> {
        self.density
            .chunks(self.n_theta)
            .map(|row| {
                let d = row[0];
                if row.iter().all(|v| (v - d).abs() <= 1e-12 * d.abs().max(1e-300)) {
                    Some(d)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn is_rotationally_symmetric(&self) -> bool {
        self.ring_densities().is_some()
    }

    /// Chart point at geodesic distance `s` from the centre in direction `theta`.
    pub fn point_at(&self, s: f64, theta: f64) -> Point {
        let p = Point::polar(s, theta);
        Point::new(self.center.x + p.x, self.center.y + p.y)
    }

    /// Area-weighted centre of a cell: the radius splitting the ring area in
    /// half and the mid angle.
    pub fn cell_center(&self, ring: usize, k: usize) -> Point {
        let warp = self.model.warp();
        let g = 0.5 * (warp.antiderivative(self.edges[ring]) + warp.antiderivative(self.edges[ring + 1]));
        let s = warp.antiderivative_inverse(g, self.edges[ring + 1]);
        self.point_at(s, TAU * (k as f64 + 0.5) / self.n_theta as f64)
    }

    /// One particle per positive-mass cell at its centre.
    pub fn to_particles(&self) -> ParticleMeasure {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for ring in 0..self.rings() {
            for k in 0..self.n_theta {
                let w = self.cell_density(ring, k) * self.ring_area[ring];
                if w > 0.0 {
                    points.push(self.cell_center(ring, k));
                    weights.push(w);
                }
            }
        }
        ParticleMeasure::normalized(points, weights).expect("grid measure has positive mass")
    }
}

pub(crate) fn uniform_edges(inner: f64, outer: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            if i == n {
                outer
            } else {
                inner + (outer - inner) * i as f64 / n as f64
            }
        })
        .collect()
}

/// Weighted point cloud.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticleMeasure {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl ParticleMeasure {
    /// Requires positive weights summing to one within `1e-12`.
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        Self::check_shape(&points, &weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!("particle weights sum to {total}, not 1")));
        }
        Ok(Self { points, weights })
    }

    /// Rescales positive weights to unit total.
    pub fn normalized(points: Vec<Point>, mut weights: Vec<f64>) -> Result<Self> {
        Self::check_shape(&points, &weights)?;
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { points, weights })
    }

    pub fn dirac(p: Point) -> Self {
        Self {
            points: vec![p],
            weights: vec![1.0],
        }
    }

    pub fn uniform(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        Self::normalized(points, vec![1.0; n])
    }

    fn check_shape(points: &[Point], weights: &[f64]) -> Result<()> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::input(
                "particle measure needs matching, nonempty points and weights",
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::input("particle weights must be positive"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Declarative measure description used by configs and presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// Normalized volume on `B_radius(center)`.
    UniformBall {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Normalized volume on the pole-centred annulus `inner ≤ r ≤ outer`.
    Annulus { inner: f64, outer: f64 },
    /// Density proportional to an expression in `r` on `[0, radius]`; the
    /// gaussian-like profile is `exp(-r^2/(2*s^2))`.
    RadialProfile { density: String, radius: f64 },
    /// Two-column `(r, density)` table, linearly interpolated.
    Table {
        #[serde(default)]
        path: Option<String>,
        #[serde(default)]
        rows: Option<Vec<[f64; 2]>>,
    },
}

impl MeasureSpec {
    pub fn uniform_ball(radius: f64) -> Self {
        MeasureSpec::UniformBall {
            radius,
            center: [0.0, 0.0],
        }
    }

    pub fn build(&self, model: &ManifoldModel, res: GridResolution) -> Result<GridMeasure> {
        match self {
            MeasureSpec::UniformBall { radius, center } => {
                GridMeasure::uniform_ball(model, Point::from(*center), *radius, res)
            }
            MeasureSpec::Annulus { inner, outer } => GridMeasure::annulus(model, *inner, *outer, res),
            MeasureSpec::RadialProfile { density, radius } => {
                let e = Expr::parse(density, "measure.density")?;
                check_profile(|r| e.eval(r), *radius)?;
                GridMeasure::from_profile(model, Point::ORIGIN, 0.0, *radius, res, |r| e.eval(r))
            }
            MeasureSpec::Table { path, rows } => {
                let (r, d) = match (path, rows) {
                    (Some(p), None) => {
                        let text = std::fs::read_to_string(p)
                            .map_err(|e| Error::input(format!("cannot read density table {p}: {e}")))?;
                        crate::geometry::warp::parse_two_column(&text, "density table")?
                    }
                    (None, Some(rows)) => rows.iter().map(|r| (r[0], r[1])).unzip(),
                    _ => return Err(Error::input("density table needs exactly one of `path` or `rows`")),
                };
                if r.len() < 2 || r.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::input("density table radii must be strictly increasing"));
                }
                let interp = |x: f64| {
                    let i = r.partition_point(|&v| v <= x).clamp(1, r.len() - 1);
                    let w = (x - r[i - 1]) / (r[i] - r[i - 1]);
                    d[i - 1] + w * (d[i] - d[i - 1])
                };
                check_profile(interp, r[r.len() - 1])?;
                GridMeasure::from_profile(model, Point::ORIGIN, r[0], r[r.len() - 1], res, interp)
            }
        }
    }
}

fn check_profile(profile: impl Fn(f64) -> f64, radius: f64) -> Result<()> {
    for i in 0..=1000 {
        let r = radius * i as f64 / 1000.0;
        let v = profile(r);
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::input(format!(
                "density {v} at r = {r} is not finite and nonnegative"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_ball_entropy_is_minus_log_area() {
        let h = ManifoldModel::hyperbolic(5.0).unwrap();
        let m = GridMeasure::uniform_ball(&h, Point::ORIGIN, 1.0, GridResolution::new(32, 8)).unwrap();
        assert!((m.mass() - 1.0).abs() < 1e-12);
        let area = TAU * (1f64.cosh() - 1.0);
        assert!((m.entropy() + area.ln()).abs() < 1e-12);
        assert!((m.entropy() + 1.2273796).abs() < 1e-6);
    }

    #[test]
    fn concentrating_mass_raises_entropy() {
        let e = ManifoldModel::euclidean(5.0).unwrap();
        let res = GridResolution::new(10, 4);
        let flat = GridMeasure::uniform_ball(&e, Point::ORIGIN, 1.0, res).unwrap();
        let lumpy =
            GridMeasure::from_profile(&e, Point::ORIGIN, 0.0, 1.0, res, |r| if r < 0.7 { 2.0 } else { 1.0 }).unwrap();
        assert!(lumpy.entropy() > flat.entropy());
    }

    #[test]
    fn off_pole_grids_only_in_the_plane() {
        let h = ManifoldModel::hyperbolic(5.0).unwrap();
        assert!(GridMeasure::uniform_ball(&h, Point::new(1.0, 0.0), 0.5, GridResolution::new(4, 4)).is_err());
        let e = ManifoldModel::euclidean(5.0).unwrap();
        let m = GridMeasure::uniform_ball(&e, Point::new(1.0, 0.0), 0.5, GridResolution::new(4, 4)).unwrap();
        let p = m.to_particles();
        assert_eq!(p.len(), 16);
        assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let cx: f64 = p.points.iter().zip(&p.weights).map(|(q, w)| q.x * w).sum();
        assert!((cx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec: MeasureSpec = toml::from_str("preset = \"annulus\"\ninner = 0.5\nouter = 1.0").unwrap();
        assert_eq!(spec, MeasureSpec::Annulus { inner: 0.5, outer: 1.0 });
        let spec: MeasureSpec =
            toml::from_str("preset = \"radial-profile\"\ndensity = \"exp(-r^2/0.5)\"\nradius = 1.5").unwrap();
        let h = ManifoldModel::hyperbolic(5.0).unwrap();
        let m = spec.build(&h, GridResolution::new(16, 4)).unwrap();
        assert!(m.is_rotationally_symmetric());
        let bad = MeasureSpec::RadialProfile {
            density: "exp(".into(),
            radius: 1.0,
        };
        assert!(matches!(
            bad.build(&h, GridResolution::new(4, 4)),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn particle_weights_are_validated() {
        assert!(ParticleMeasure::new(vec![Point::ORIGIN; 2], vec![0.5, 0.4]).is_err());
        assert!(ParticleMeasure::new(vec![Point::ORIGIN; 2], vec![0.5, 0.5]).is_ok());
        assert!(ParticleMeasure::normalized(vec![Point::ORIGIN], vec![0.0]).is_err());
    }
}
