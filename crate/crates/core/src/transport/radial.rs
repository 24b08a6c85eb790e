//! Monotone rearrangement along meridians for rotationally symmetric measures.
//!
//! Radial mass `C(s) = μ(B_s(center))` is exact for ring-wise constant
//! densities: on ring `i`, `C(s) = C(e_i) + 2π ρ_i (G(s) − G(e_i))` with
//! `G = ∫ f`, so `F = C₁⁻¹ ∘ C₀` only needs the inverse of `G`.

use std::f64::consts::TAU;

use super::measure::{uniform_edges, GridMeasure};
use crate::error::{Error, Result};
use crate::geometry::{ManifoldModel, ModelKind, Point, Warp};
use crate::jacobi::{radial_jacobian, RadialMap};
use crate::par::Execution;
use crate::quad::GaussLegendre;

/// Ring-wise radial mass profile of a symmetric grid measure.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    edges: Vec<f64>,
    /// Density with respect to Riemannian area on each ring.
    density: Vec<f64>,
    g_edges: Vec<f64>,
    cumulative: Vec<f64>,
}

impl RadialProfile {
    pub fn of(measure: &GridMeasure) -> Result<Self> {
        let density = measure
            .ring_densities()
            .ok_or_else(|| Error::input("radial transport needs rotationally symmetric measures"))?;
        let warp = measure.model().warp();
        let edges = measure.edges().to_vec();
        let g_edges: Vec<f64> = edges.iter().map(|&r| warp.antiderivative(r)).collect();
        let mut cumulative = vec![0.0];
        for i in 0..density.len() {
            let c = cumulative[i] + TAU * density[i] * (g_edges[i + 1] - g_edges[i]);
            cumulative.push(c);
        }
        Ok(Self {
            edges,
            density,
            g_edges,
            cumulative,
        })
    }

    pub fn inner(&self) -> f64 {
        self.edges[0]
    }

    pub fn outer(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn total(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    fn ring_of(&self, s: f64) -> usize {
        self.edges.partition_point(|&e| e <= s).clamp(1, self.edges.len() - 1) - 1
    }

    pub fn density_at(&self, s: f64) -> f64 {
        if s < self.inner() || s > self.outer() {
            0.0
        } else {
            self.density[self.ring_of(s)]
        }
    }

    /// Mass inside radius `s`.
    pub fn cdf(&self, warp: &Warp, s: f64) -> f64 {
        if s <= self.inner() {
            return 0.0;
        }
        if s >= self.outer() {
            return self.total();
        }
        let i = self.ring_of(s);
        self.cumulative[i] + TAU * self.density[i] * (warp.antiderivative(s) - self.g_edges[i])
    }

    /// Smallest radius carrying mass `m`, with the ring it falls in.
    pub fn quantile(&self, warp: &Warp, m: f64) -> (f64, usize) {
        if m <= 0.0 {
            let first = self.density.iter().position(|d| *d > 0.0).unwrap_or(0);
            return (self.edges[first], first);
        }
        if m >= self.total() {
            if m > self.total() * (1.0 + 1e-9) {
                log::warn!("radial quantile of mass {m} clamped to the support edge");
            }
            let last = self.density.iter().rposition(|d| *d > 0.0).unwrap_or(0);
            return (self.edges[last + 1], last);
        }
        // first ring whose cumulative mass exceeds m and that carries mass
        let mut i = self
            .cumulative
            .partition_point(|&c| c <= m)
            .clamp(1, self.density.len())
            - 1;
        while self.density[i] == 0.0 && i + 1 < self.density.len() {
            i += 1;
        }
        let g = self.g_edges[i] + (m - self.cumulative[i]) / (TAU * self.density[i]);
        let g = g.clamp(self.g_edges[i], self.g_edges[i + 1]);
        let s = warp.antiderivative_inverse(g, self.edges[i + 1]);
        (s.clamp(self.edges[i], self.edges[i + 1]), i)
    }
}

/// `F(x) = c₁ + R(|x − c₀|) u` for `x = c₀ + |x − c₀| u`; on curved models
/// both centres are the pole and `F` moves points along meridians.
#[derive(Debug, Clone)]
pub struct MonotoneRadialMap {
    model: ManifoldModel,
    c0: Point,
    c1: Point,
    source: RadialProfile,
    target: RadialProfile,
}

impl MonotoneRadialMap {
    pub fn new(model: &ManifoldModel, mu0: &GridMeasure, mu1: &GridMeasure) -> Result<Self> {
        if mu0.center() != mu1.center() && model.kind() != ModelKind::EuclideanPlane {
            return Err(Error::input(
                "radial transport between different centres needs the euclidean plane",
            ));
        }
        Ok(Self {
            model: model.clone(),
            c0: mu0.center(),
            c1: mu1.center(),
            source: RadialProfile::of(mu0)?,
            target: RadialProfile::of(mu1)?,
        })
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn source(&self) -> &RadialProfile {
        &self.source
    }

    pub fn target(&self) -> &RadialProfile {
        &self.target
    }

    pub fn source_center(&self) -> Point {
        self.c0
    }

    pub fn target_center(&self) -> Point {
        self.c1
    }

    /// `R(s)` together with the derivative `R'(s) = ρ₀(s) f(s) / (ρ₁(R) f(R))`.
    pub fn radius_and_derivative(&self, s: f64) -> (f64, f64) {
        let warp = self.model.warp();
        let m = self.source.cdf(warp, s);
        let (r, ring) = self.target.quantile(warp, m);
        let rho0 = self.source.density_at(s);
        let rho1 = self.target.density[ring];
        let d = if rho0 == 0.0 {
            0.0
        } else if r < 1e-12 && s < 1e-12 {
            (rho0 / rho1).sqrt()
        } else {
            rho0 * warp.value(s) / (rho1 * warp.value(r))
        };
        (r, d)
    }

    /// Interpolating map `F_t`: radius `(1−t)s + tR(s)` about the moving
    /// centre `(1−t)c₀ + tc₁`.
    pub fn at(&self, t: f64) -> InterpolatedMap<'_> {
        InterpolatedMap { map: self, t }
    }

    pub fn apply(&self, x: Point) -> Point {
        self.at(1.0).apply(x)
    }

    /// `W₂²(μ₀, F_*μ₀) = ∫ |F(x) − x|² dμ₀`; the angular average of the
    /// centre shift cross term vanishes.
    pub fn cost(&self) -> f64 {
        let shift = self.c0.dist_chart(self.c1);
        self.integrate_source(
            |s| {
                let r = self.radius_and_derivative(s).0;
                shift * shift + (r - s).powi(2)
            },
            Execution::Sequential,
        )
    }

    /// Source radius intervals on which `R` is smooth: positive-density
    /// source rings split at the preimages of target ring edges.
    pub fn smooth_pieces(&self) -> Vec<(f64, f64, f64)> {
        let warp = self.model.warp();
        let cuts: Vec<f64> = self
            .target
            .edges
            .iter()
            .map(|&e| self.source.quantile(warp, self.target.cdf(warp, e)).0)
            .collect();
        let src = &self.source;
        let mut pieces = Vec::new();
        for i in 0..src.density.len() {
            if src.density[i] == 0.0 {
                continue;
            }
            let (a, b) = (src.edges[i], src.edges[i + 1]);
            let mut knots = vec![a];
            knots.extend(cuts.iter().copied().filter(|&c| c > a && c < b));
            knots.push(b);
            knots.sort_by(f64::total_cmp);
            knots.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + y.abs()));
            pieces.extend(knots.windows(2).map(|w| (w[0], w[1], src.density[i])));
        }
        pieces
    }

    /// `∫ h(|x − c₀|) dμ₀(x)` by 8-point Gauss–Legendre on every smooth piece.
    pub fn integrate_source(&self, h: impl Fn(f64) -> f64 + Sync + Send, exec: Execution) -> f64 {
        self.try_integrate_source(|s| Ok(h(s)), exec)
            .expect("infallible integrand")
    }

    pub fn try_integrate_source(&self, h: impl Fn(f64) -> Result<f64> + Sync + Send, exec: Execution) -> Result<f64> {
        let rule = GaussLegendre::cached(8);
        let warp = self.model.warp();
        let parts = exec.try_map(&self.smooth_pieces(), |&(a, b, rho)| {
            let mut acc = 0.0;
            for (s, w) in rule.points(a, b) {
                acc += w * h(s)? * warp.value(s);
            }
            Ok::<_, Error>(TAU * rho * acc)
        })?;
        Ok(parts.iter().sum())
    }

    /// Exact pushforward `(F_t)_* μ₀` binned on `rings` uniform rings about
    /// the moving centre.
    pub fn pushforward(&self, t: f64, rings: usize, n_theta: usize) -> Result<GridMeasure> {
        let ft = self.at(t);
        let warp = self.model.warp();
        let (lo, hi) = (ft.eval(self.source.inner()), ft.eval(self.source.outer()));
        if !(hi > lo) {
            return Err(Error::Inconsistent("interpolated support has no extent".into()));
        }
        let edges = uniform_edges(lo, hi, rings);
        let masses: Vec<f64> = edges.iter().map(|&e| self.source.cdf(warp, ft.inverse(e))).collect();
        let g: Vec<f64> = edges.iter().map(|&e| warp.antiderivative(e)).collect();
        let density: Vec<f64> = (0..rings)
            .map(|i| (masses[i + 1] - masses[i]).max(0.0) / (TAU * (g[i + 1] - g[i])))
            .collect();
        let c = ft.center();
        GridMeasure::from_rings(&self.model, c, edges, n_theta, &density)
    }
}

/// `F_t` of a [`MonotoneRadialMap`].
#[derive(Debug, Clone, Copy)]
pub struct InterpolatedMap<'a> {
    map: &'a MonotoneRadialMap,
    t: f64,
}

impl InterpolatedMap<'_> {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn center(&self) -> Point {
        let (a, b) = (self.map.c0, self.map.c1);
        Point::new((1.0 - self.t) * a.x + self.t * b.x, (1.0 - self.t) * a.y + self.t * b.y)
    }

    pub fn apply(&self, x: Point) -> Point {
        let d = Point::new(x.x - self.map.c0.x, x.y - self.map.c0.y);
        let s = d.radius();
        let theta = if s == 0.0 { 0.0 } else { d.angle() };
        let p = Point::polar(self.eval(s), theta);
        let c = self.center();
        Point::new(c.x + p.x, c.y + p.y)
    }

    /// `s` with `F_t(s) = r`: Newton on the analytic derivative, safeguarded
    /// by a bracketing interval.
    pub fn inverse(&self, r: f64) -> f64 {
        let (mut lo, mut hi) = (self.map.source.inner(), self.map.source.outer());
        if r <= self.eval(lo) {
            return lo;
        }
        if r >= self.eval(hi) {
            return hi;
        }
        let mut s = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (big_r, d) = self.map.radius_and_derivative(s);
            let val = (1.0 - self.t) * s + self.t * big_r - r;
            if val < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let slope = (1.0 - self.t) + self.t * d;
            let mut next = s - val / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-15 * (1.0 + s) || hi - lo <= 1e-15 * (1.0 + hi) {
                return next;
            }
            s = next;
        }
        s
    }

    /// `J_t(s)`, the Jacobian determinant of `F_t` at source radius `s`.
    pub fn jacobian(&self, s: f64) -> Result<f64> {
        if self.t == 1.0 {
            // F' f(F)/f = ρ₀/ρ₁(F), also where F reaches the pole
            let warp = self.map.model.warp();
            let (_, ring) = self.map.target.quantile(warp, self.map.source.cdf(warp, s));
            return Ok(self.map.source.density_at(s) / self.map.target.density[ring]);
        }
        radial_jacobian(&self.map.model, self, s)
    }
}

impl RadialMap for InterpolatedMap<'_> {
    fn eval(&self, s: f64) -> f64 {
        if self.t == 0.0 {
            return s;
        }
        (1.0 - self.t) * s + self.t * self.map.radius_and_derivative(s).0
    }

    fn derivative(&self, s: f64) -> f64 {
        (1.0 - self.t) + self.t * self.map.radius_and_derivative(s).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::GridResolution;

    fn res() -> GridResolution {
        GridResolution::new(64, 8)
    }

    #[test]
    fn identity_between_equal_measures() {
        let h = ManifoldModel::hyperbolic(5.0).unwrap();
        let mu = GridMeasure::uniform_ball(&h, Point::ORIGIN, 1.5, res()).unwrap();
        let f = MonotoneRadialMap::new(&h, &mu, &mu).unwrap();
        for s in [0.0, 0.3, 1.0, 1.5] {
            let (r, d) = f.radius_and_derivative(s);
            assert!((r - s).abs() < 1e-12 && (d - 1.0).abs() < 1e-9, "{s}: {r} {d}");
        }
        assert!(f.cost() < 1e-24);
    }

    #[test]
    fn euclidean_disc_dilation() {
        let e = ManifoldModel::euclidean(5.0).unwrap();
        let a = GridMeasure::uniform_ball(&e, Point::ORIGIN, 1.0, res()).unwrap();
        let b = GridMeasure::uniform_ball(&e, Point::ORIGIN, 2.0, res()).unwrap();
        let f = MonotoneRadialMap::new(&e, &a, &b).unwrap();
        for s in [0.0, 0.2, 0.77, 1.0] {
            let (r, d) = f.radius_and_derivative(s);
            assert!((r - 2.0 * s).abs() < 1e-12 && (d - 2.0).abs() < 1e-12);
        }
        assert!((f.cost() - 0.5).abs() < 1e-12);
        let half = f.at(0.5);
        assert!((half.jacobian(0.4).unwrap() - 2.25).abs() < 1e-12);
        assert!((half.jacobian(0.0).unwrap() - 2.25).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_disc_matching_closed_form() {
        let h = ManifoldModel::hyperbolic(5.0).unwrap();
        let a = GridMeasure::uniform_ball(&h, Point::ORIGIN, 1.0, res()).unwrap();
        let b = GridMeasure::uniform_ball(&h, Point::ORIGIN, 2.0, res()).unwrap();
        let f = MonotoneRadialMap::new(&h, &a, &b).unwrap();
        for s in [0.1f64, 0.5, 0.9] {
            let exact = (1.0 + (s.cosh() - 1.0) * (2f64.cosh() - 1.0) / (1f64.cosh() - 1.0)).acosh();
            assert!((f.radius_and_derivative(s).0 - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn translation_with_dilation_in_the_plane() {
        let e = ManifoldModel::euclidean(6.0).unwrap();
        let a = GridMeasure::uniform_ball(&e, Point::new(-1.0, 0.0), 1.0, res()).unwrap();
        let b = GridMeasure::uniform_ball(&e, Point::new(2.0, 0.0), 1.0, res()).unwrap();
        let f = MonotoneRadialMap::new(&e, &a, &b).unwrap();
        let x = Point::new(-0.5, 0.3);
        assert!(f.apply(x).dist_chart(Point::new(2.5, 0.3)) < 1e-12);
        assert!((f.cost() - 9.0).abs() < 1e-12);
        let mid = f.pushforward(0.5, 32, 8).unwrap();
        assert!(mid.center().dist_chart(Point::new(0.5, 0.0)) < 1e-15);
        assert!((mid.entropy() - a.entropy()).abs() < 1e-10);
    }

    #[test]
    fn annulus_to_ball_skips_the_hole() {
        let h = ManifoldModel::hyperbolic(5.0).unwrap();
        let a = GridMeasure::annulus(&h, 0.5, 1.0, res()).unwrap();
        let b = GridMeasure::uniform_ball(&h, Point::ORIGIN, 1.2, res()).unwrap();
        let f = MonotoneRadialMap::new(&h, &a, &b).unwrap();
        let (r0, _) = f.radius_and_derivative(0.5);
        let (r1, _) = f.radius_and_derivative(1.0);
        assert!(r0.abs() < 1e-12 && (r1 - 1.2).abs() < 1e-12);
        let push = f.pushforward(1.0, 64, 8).unwrap();
        assert!((push.entropy() - b.entropy()).abs() < 1e-9);
    }
}
