//! Two-dimensional model surfaces `dr² + f(r)² dθ²`.
//!
//! Every model is charted by normal coordinates `(x, y)` at the pole `o`,
//! `(x, y) = r (cos θ, sin θ)`. Tangent vectors are stored as components in
//! the orthonormal frame obtained by rotating `(∂_r, f⁻¹∂_θ)` back by `θ`;
//! the frame is smooth through the pole and coincides with the chart basis in
//! the flat case. The chart origin doubles as the base point `o` used for
//! `ρ_o`.

mod constant;
mod curvature;
pub mod expr;
mod geodesic;
mod volume;
pub mod warp;

use serde::{Deserialize, Serialize};

pub use constant::ConstantCurvature;
pub use curvature::{CurvatureField, CurvatureSource};
pub use geodesic::GeodesicSegment;
pub use warp::Warp;

use crate::error::{Error, Result};
use crate::ode::Tolerance;

/// Manifold dimension. Formulas carry `n` explicitly; models instantiate 2.
pub const DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    pub fn radius(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    /// Euclidean distance between chart coordinates.
    pub fn dist_chart(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

/// Tangent vector in the rotated orthonormal frame at its base point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tangent {
    pub a: f64,
    pub b: f64,
}

impl Tangent {
    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub const fn zero() -> Self {
        Self { a: 0.0, b: 0.0 }
    }

    pub fn norm(self) -> f64 {
        self.a.hypot(self.b)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s)
    }

    pub fn unit_at(angle: f64) -> Self {
        Self::new(angle.cos(), angle.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    EuclideanPlane,
    HyperbolicPlane,
    SphereCap,
    SurfaceOfRevolution,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::EuclideanPlane => "euclidean-plane",
            ModelKind::HyperbolicPlane => "hyperbolic-plane",
            ModelKind::SphereCap => "sphere-cap",
            ModelKind::SurfaceOfRevolution => "surface-of-revolution",
        }
    }
}

/// Serializable description of a model for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub kind: ModelKind,
    pub warp: String,
    pub r_max: f64,
    pub ode_tolerance: f64,
    pub quadrature_tolerance: f64,
}

/// Default radius below which the geodesic equation switches to its pole
/// expansion.
pub const DEFAULT_POLE_PATCH: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct ManifoldModel {
    kind: ModelKind,
    warp: Warp,
    r_max: f64,
    ode_tolerance: f64,
    quadrature_tolerance: f64,
    pole_patch: f64,
    pole_coeffs: PoleCoefficients,
}

#[derive(Debug, Clone, Copy)]
struct PoleCoefficients {
    alpha0: f64,
    beta0: f64,
    alpha_patch: f64,
    beta_patch: f64,
}

impl ManifoldModel {
    pub fn euclidean(r_max: f64) -> Result<Self> {
        Self::build(ModelKind::EuclideanPlane, Warp::flat(), r_max)
    }

    pub fn hyperbolic(r_max: f64) -> Result<Self> {
        Self::build(ModelKind::HyperbolicPlane, Warp::sinh(), r_max)
    }

    /// Cap of the unit sphere about the north pole; `r_max < π/2` keeps the
    /// cap geodesically convex.
    pub fn sphere_cap(r_max: f64) -> Result<Self> {
        if r_max >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::domain(format!(
                "sphere cap radius {r_max} must be below π/2 for a convex chart"
            )));
        }
        Self::build(ModelKind::SphereCap, Warp::sin(), r_max)
    }

    pub fn surface_of_revolution(warp: Warp, r_max: f64) -> Result<Self> {
        Self::build(ModelKind::SurfaceOfRevolution, warp, r_max)
    }

    fn build(kind: ModelKind, warp: Warp, r_max: f64) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::domain(format!("r_max must be positive, got {r_max}")));
        }
        warp.validate(r_max)?;
        if kind == ModelKind::SurfaceOfRevolution {
            let n = 2000;
            for i in 1..=n {
                let r = r_max * i as f64 / n as f64;
                if warp.derivative(r, 1) <= 0.0 {
                    return Err(Error::domain(format!(
                        "f'({r:.4}) ≤ 0: circles about the pole stop being convex inside r_max"
                    )));
                }
            }
        }
        let mut model = Self {
            kind,
            warp,
            r_max,
            ode_tolerance: 1e-10,
            quadrature_tolerance: 1e-10,
            pole_patch: DEFAULT_POLE_PATCH,
            pole_coeffs: PoleCoefficients {
                alpha0: 0.0,
                beta0: 0.0,
                alpha_patch: 0.0,
                beta_patch: 0.0,
            },
        };
        model.refresh_pole_coefficients();
        Ok(model)
    }

    fn refresh_pole_coefficients(&mut self) {
        let d3 = self.warp.derivative(0.0, 3);
        let (a, b) = self.alpha_beta_direct(self.pole_patch);
        self.pole_coeffs = PoleCoefficients {
            alpha0: 2.0 * d3 / 3.0,
            beta0: -d3 / 3.0,
            alpha_patch: a,
            beta_patch: b,
        };
    }

    pub fn with_tolerances(mut self, ode: f64, quadrature: f64) -> Result<Self> {
        if !(ode > 0.0 && quadrature > 0.0) {
            return Err(Error::input("tolerances must be positive"));
        }
        self.ode_tolerance = ode;
        self.quadrature_tolerance = quadrature;
        Ok(self)
    }

    pub fn with_pole_patch(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < 0.1) {
            return Err(Error::input("pole patch radius must lie in (0, 0.1)"));
        }
        self.pole_patch = radius;
        self.refresh_pole_coefficients();
        Ok(self)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn warp(&self) -> &Warp {
        &self.warp
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn quadrature_tolerance(&self) -> f64 {
        self.quadrature_tolerance
    }

    pub fn ode_tolerance(&self) -> f64 {
        self.ode_tolerance
    }

    pub(crate) fn ode_tol(&self) -> Tolerance {
        Tolerance::new(self.ode_tolerance * 0.1, self.ode_tolerance * 0.01)
    }

    /// Closed-form geometry when the curvature is constant.
    pub fn constant_curvature(&self) -> Option<ConstantCurvature> {
        match self.kind {
            ModelKind::EuclideanPlane => Some(ConstantCurvature::new(0.0)),
            ModelKind::HyperbolicPlane => Some(ConstantCurvature::new(-1.0)),
            ModelKind::SphereCap => Some(ConstantCurvature::new(1.0)),
            ModelKind::SurfaceOfRevolution => None,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x.is_finite() && p.y.is_finite() && p.radius() <= self.r_max * (1.0 + 1e-12)
    }

    pub fn check_domain(&self, p: Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "point ({:.6}, {:.6}) at radius {:.6} lies outside the chart (r_max = {})",
                p.x,
                p.y,
                p.radius(),
                self.r_max
            )))
        }
    }

    /// Minimal Ricci eigenvalue at `p`; in two dimensions the Gauss curvature.
    pub fn ricci_min(&self, p: Point) -> Result<f64> {
        self.check_domain(p)?;
        Ok(self.gauss_curvature_at_radius(p.radius()))
    }

    pub(crate) fn gauss_curvature_at_radius(&self, r: f64) -> f64 {
        self.warp.gauss_curvature(r)
    }

    /// Riemannian area of the centred disc, `2π ∫₀ʳ f`.
    pub fn centered_disc_area(&self, r: f64) -> f64 {
        std::f64::consts::TAU * self.warp.antiderivative(r)
    }

    /// Chart-coordinate velocity of frame components `v` at `p`.
    pub(crate) fn chart_velocity(&self, p: Point, v: Tangent) -> [f64; 2] {
        let r = p.radius();
        if r == 0.0 {
            return [v.a, v.b];
        }
        let (c, s) = (p.x / r, p.y / r);
        let radial = v.a * c + v.b * s;
        let angular = -v.a * s + v.b * c;
        let lambda = r / self.warp.value(r);
        [radial * c - lambda * angular * s, radial * s + lambda * angular * c]
    }

    /// Frame components of a chart velocity at `p`.
    pub(crate) fn frame_components(&self, p: Point, w: [f64; 2]) -> Tangent {
        let r = p.radius();
        if r == 0.0 {
            return Tangent::new(w[0], w[1]);
        }
        let (c, s) = (p.x / r, p.y / r);
        let radial = w[0] * c + w[1] * s;
        let angular = (-w[0] * s + w[1] * c) * self.warp.value(r) / r;
        Tangent::new(radial * c - angular * s, radial * s + angular * c)
    }

    fn alpha_beta_direct(&self, r: f64) -> (f64, f64) {
        let f = self.warp.value(r);
        let d = self.warp.derivative(r, 1);
        ((f * d - r) / (r * r * r), (1.0 - r * d / f) / (r * r))
    }

    fn alpha_beta(&self, r: f64) -> (f64, f64) {
        if r < self.pole_patch {
            let c = &self.pole_coeffs;
            let w = (r / self.pole_patch).powi(2);
            (
                c.alpha0 + (c.alpha_patch - c.alpha0) * w,
                c.beta0 + (c.beta_patch - c.beta0) * w,
            )
        } else {
            self.alpha_beta_direct(r)
        }
    }

    /// Chart acceleration of a geodesic at position `x` with chart velocity
    /// `v`. Regular at the pole: the polar equations are rewritten with
    /// `α = (f f' - r)/r³` and `β = (1 - r f'/f)/r²`, both bounded.
    pub(crate) fn geodesic_acceleration(&self, x: [f64; 2], v: [f64; 2]) -> [f64; 2] {
        if self.kind == ModelKind::EuclideanPlane {
            return [0.0, 0.0];
        }
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 == 0.0 {
            return [0.0, 0.0];
        }
        let r = r2.sqrt();
        let (alpha, beta) = self.alpha_beta(r);
        let c = x[0] * v[1] - x[1] * v[0];
        let xv = x[0] * v[0] + x[1] * v[1];
        let radial = alpha * c * c / r2;
        let swirl = 2.0 * beta * xv * c / r2;
        [radial * x[0] - swirl * x[1], radial * x[1] + swirl * x[0]]
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            kind: self.kind,
            warp: self.warp.to_string(),
            r_max: self.r_max,
            ode_tolerance: self.ode_tolerance,
            quadrature_tolerance: self.quadrature_tolerance,
        }
    }

    /// Geodesic distance ρ(p, q).
    pub fn distance(&self, p: Point, q: Point) -> Result<f64> {
        self.check_domain(p)?;
        self.check_domain(q)?;
        match self.constant_curvature() {
            Some(cc) => Ok(cc.distance(p, q)),
            None => Ok(self.log_unchecked(p, q)?.norm()),
        }
    }

    /// `exp_p(v)`.
    pub fn exp(&self, p: Point, v: Tangent) -> Result<Point> {
        self.check_domain(p)?;
        match self.constant_curvature() {
            Some(cc) => Ok(cc.exp(p, v)),
            None => self.exp_numeric(p, v),
        }
    }

    /// `exp_p⁻¹(q)`; unique in the convex chart.
    pub fn log_map(&self, p: Point, q: Point) -> Result<Tangent> {
        self.check_domain(p)?;
        self.check_domain(q)?;
        self.log_unchecked(p, q)
    }

    fn log_unchecked(&self, p: Point, q: Point) -> Result<Tangent> {
        match self.constant_curvature() {
            Some(cc) => Ok(cc.log(p, q)),
            None => self.log_shooting(p, q),
        }
    }

    /// Minimizing constant-speed geodesic from `p` to `q`.
    pub fn geodesic(&self, p: Point, q: Point) -> Result<GeodesicSegment<'_>> {
        let v = self.log_map(p, q)?;
        Ok(GeodesicSegment::new(self, p, q, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_and_frame_conversions_invert() {
        let m =
            ManifoldModel::surface_of_revolution(Warp::expression("(sinh(r) + 0.05*sinh(2*r))/1.1", "w").unwrap(), 4.0)
                .unwrap();
        let p = Point::new(0.8, -1.1);
        let v = Tangent::new(0.3, 0.7);
        let w = m.chart_velocity(p, v);
        let back = m.frame_components(p, w);
        assert!((back.a - v.a).abs() < 1e-14 && (back.b - v.b).abs() < 1e-14);
    }

    #[test]
    fn sphere_cap_must_be_convex() {
        assert!(matches!(ManifoldModel::sphere_cap(1.6), Err(Error::Domain(_))));
        assert!(ManifoldModel::sphere_cap(1.5).is_ok());
    }

    #[test]
    fn ricci_min_examples() {
        let h = ManifoldModel::hyperbolic(5.0).unwrap();
        assert_eq!(h.ricci_min(Point::new(1.0, 2.0)).unwrap(), -1.0);
        let e = ManifoldModel::euclidean(5.0).unwrap();
        assert_eq!(e.ricci_min(Point::new(1.0, 2.0)).unwrap(), 0.0);
        assert!(matches!(h.ricci_min(Point::new(9.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn pole_expansion_is_continuous() {
        let m =
            ManifoldModel::surface_of_revolution(Warp::expression("r - r^3/12 + r^5/40", "w").unwrap(), 3.0).unwrap();
        let below = m.alpha_beta(m.pole_patch * (1.0 - 1e-12));
        let above = m.alpha_beta_direct(m.pole_patch);
        assert!((below.0 - above.0).abs() < 1e-9);
        assert!((below.1 - above.1).abs() < 1e-9);
        let near = m.alpha_beta(1e-7);
        assert!((near.0 - m.pole_coeffs.alpha0).abs() < 1e-9);
    }
}
