use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::Expr;
use super::{ManifoldModel, Point, Tangent};
use crate::error::Result;

pub type PointFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Where the curvature bound `x ↦ K_x` comes from.
#[derive(Clone)]
pub enum CurvatureSource {
    Constant(f64),
    /// `K_x = -ricci_min(x)`, the sharp bound for the model.
    NegRicciMin,
    /// Radial expression in `r` (distance to the pole).
    Radial(Expr),
    /// Arbitrary field; ball suprema fall back to sampling.
    Custom(PointFn),
}

impl fmt::Debug for CurvatureSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurvatureSource::Constant(k) => write!(f, "Constant({k})"),
            CurvatureSource::NegRicciMin => write!(f, "NegRicciMin"),
            CurvatureSource::Radial(e) => write!(f, "Radial({e})"),
            CurvatureSource::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Continuous field `K_x` with ball suprema `K(B_x(r)) = sup_{z ∈ B_x(r)} K_z`.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    source: CurvatureSource,
    model: ManifoldModel,
    samples: usize,
    seed: u64,
}

const RADIAL_SAMPLES: usize = 256;

impl CurvatureField {
    pub fn new(model: &ManifoldModel, source: CurvatureSource) -> Self {
        Self {
            source,
            model: model.clone(),
            samples: 10_000,
            seed: 0,
        }
    }

    pub fn constant(model: &ManifoldModel, k: f64) -> Self {
        Self::new(model, CurvatureSource::Constant(k))
    }

    pub fn neg_ricci_min(model: &ManifoldModel) -> Self {
        Self::new(model, CurvatureSource::NegRicciMin)
    }

    /// Sample count and seed for the non-radial sampling fallback.
    pub fn with_sampling(mut self, samples: usize, seed: u64) -> Self {
        self.samples = samples.max(1);
        self.seed = seed;
        self
    }

    pub fn source(&self) -> &CurvatureSource {
        &self.source
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self.source, CurvatureSource::Custom(_))
    }

    /// `K` as a function of the distance to the pole (radial sources only).
    fn radial_value(&self, r: f64) -> f64 {
        match &self.source {
            CurvatureSource::Constant(k) => *k,
            CurvatureSource::NegRicciMin => -self.model.gauss_curvature_at_radius(r),
            CurvatureSource::Radial(e) => e.eval(r),
            CurvatureSource::Custom(f) => f(Point::new(r, 0.0)),
        }
    }

    pub fn value(&self, p: Point) -> f64 {
        match &self.source {
            CurvatureSource::Custom(f) => f(p),
            _ => self.radial_value(p.radius()),
        }
    }

    /// `K(B_center(radius))`. Closed balls; `radius = 0` gives `K_center`.
    pub fn sup_on_ball(&self, center: Point, radius: f64) -> Result<f64> {
        if let CurvatureSource::Constant(k) = self.source {
            return Ok(k);
        }
        if radius <= 0.0 {
            return Ok(self.value(center));
        }
        if self.is_radial() {
            let c = center.radius();
            let lo = (c - radius).max(0.0);
            let hi = c + radius;
            return Ok(self.radial_sup(lo, hi));
        }
        self.sampled_sup(center, radius)
    }

    /// Supremum of the radial profile on `[lo, hi]`: dense scan then golden
    /// section around the best sample.
    fn radial_sup(&self, lo: f64, hi: f64) -> f64 {
        let n = RADIAL_SAMPLES;
        let mut best = f64::NEG_INFINITY;
        let mut best_i = 0;
        for i in 0..=n {
            let r = lo + (hi - lo) * i as f64 / n as f64;
            let v = self.radial_value(r);
            if v > best {
                best = v;
                best_i = i;
            }
        }
        if best_i == 0 || best_i == n {
            return best;
        }
        let step = (hi - lo) / n as f64;
        let (mut a, mut b) = (lo + step * (best_i - 1) as f64, lo + step * (best_i + 1) as f64);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let mut f1 = self.radial_value(x1);
        let mut f2 = self.radial_value(x2);
        for _ in 0..80 {
            if f1 > f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = self.radial_value(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = self.radial_value(x2);
            }
            if (b - a).abs() < 1e-14 * (1.0 + b.abs()) {
                break;
            }
        }
        best.max(f1).max(f2)
    }

    /// Seeded sampling through `exp_center` of a uniform tangent disc, which
    /// covers the geodesic ball exactly inside a convex chart.
    fn sampled_sup(&self, center: Point, radius: f64) -> Result<f64> {
        let mix = center.x.to_bits() ^ center.y.to_bits().rotate_left(17) ^ radius.to_bits().rotate_left(41);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ mix);
        let mut best = self.value(center);
        for _ in 0..self.samples {
            let s = radius * rng.gen::<f64>().sqrt();
            let phi = rng.gen::<f64>() * std::f64::consts::TAU;
            let z = self.model.exp(center, Tangent::unit_at(phi).scale(s))?;
            best = best.max(self.value(z));
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Warp;

    fn warped() -> ManifoldModel {
        ManifoldModel::surface_of_revolution(Warp::expression("(sinh(r) + 0.05*sinh(2*r))/1.1", "w").unwrap(), 4.0)
            .unwrap()
    }

    #[test]
    fn neg_ricci_min_sup_is_attained_at_the_far_edge() {
        let m = warped();
        let k = CurvatureField::neg_ricci_min(&m);
        let c = Point::new(1.0, 0.5);
        let r = 0.7;
        let sup = k.sup_on_ball(c, r).unwrap();
        let far = -m.gauss_curvature_at_radius(c.radius() + r);
        assert!((sup - far).abs() < 1e-12);
        assert!(sup >= k.value(c));
    }

    #[test]
    fn radial_sup_finds_interior_maximum() {
        let m = ManifoldModel::euclidean(5.0).unwrap();
        let k = CurvatureField::new(
            &m,
            CurvatureSource::Radial(Expr::parse("-(r - 1.2345)^2", "k").unwrap()),
        );
        let sup = k.sup_on_ball(Point::new(1.0, 0.0), 1.0).unwrap();
        assert!(sup.abs() < 1e-14);
    }

    #[test]
    fn sampled_sup_is_deterministic_and_bounded() {
        let m = ManifoldModel::hyperbolic(5.0).unwrap();
        let f: PointFn = Arc::new(|p: Point| p.x);
        let k = CurvatureField::new(&m, CurvatureSource::Custom(f)).with_sampling(2000, 7);
        let c = Point::new(0.5, 0.0);
        let a = k.sup_on_ball(c, 0.4).unwrap();
        let b = k.sup_on_ball(c, 0.4).unwrap();
        assert_eq!(a, b);
        let truth = m.exp(c, Tangent::new(0.4, 0.0)).unwrap().x;
        assert!(a <= truth + 1e-12 && a > truth - 5e-3);
    }
}
