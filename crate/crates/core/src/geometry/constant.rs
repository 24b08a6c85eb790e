//! Closed-form exponential and logarithm maps on constant-curvature planes.
//!
//! Points are normal coordinates at the pole. Curvature `κ` planes are handled
//! by rescaling to the unit hyperboloid (`κ < 0`) or unit sphere (`κ > 0`).

use super::{Point, Tangent};

/// `sinh(r)/r` or `sin(r)/r` depending on `sign`.
fn shape_s(r: f64, sign: f64) -> f64 {
    if r.abs() < 1e-4 {
        let r2 = r * r;
        1.0 + sign * r2 / 6.0 + r2 * r2 / 120.0
    } else if sign > 0.0 {
        r.sinh() / r
    } else {
        r.sin() / r
    }
}

/// `(cosh(r) - 1)/r²` or `(cos(r) - 1)/r²`.
fn shape_c(r: f64, sign: f64) -> f64 {
    if r.abs() < 1e-4 {
        let r2 = r * r;
        sign * 0.5 + r2 / 24.0
    } else if sign > 0.0 {
        let h = (0.5 * r).sinh();
        2.0 * h * h / (r * r)
    } else {
        let h = (0.5 * r).sin();
        -2.0 * h * h / (r * r)
    }
}

/// Unit model with curvature `-sign` (sign = +1 hyperbolic, -1 spherical).
#[derive(Debug, Clone, Copy)]
struct Unit {
    sign: f64,
}

impl Unit {
    fn inner(self, a: &[f64; 3], b: &[f64; 3]) -> f64 {
        -self.sign * a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    fn embed(self, p: Point) -> [f64; 3] {
        let r = p.radius();
        let c0 = if self.sign > 0.0 { r.cosh() } else { r.cos() };
        let s = shape_s(r, self.sign);
        [c0, s * p.x, s * p.y]
    }

    fn frame(self, p: Point) -> ([f64; 3], [f64; 3]) {
        let r = p.radius();
        let s = self.sign * shape_s(r, self.sign);
        let c = shape_c(r, self.sign);
        (
            [p.x * s, 1.0 + p.x * p.x * c, p.x * p.y * c],
            [p.y * s, p.x * p.y * c, 1.0 + p.y * p.y * c],
        )
    }

    fn unembed(self, q: &[f64; 3]) -> Point {
        let n = q[1].hypot(q[2]);
        if n == 0.0 {
            return Point::new(0.0, 0.0);
        }
        let r = if self.sign > 0.0 { n.asinh() } else { n.atan2(q[0]) };
        Point::new(r * q[1] / n, r * q[2] / n)
    }

    fn dist(self, p: Point, q: Point) -> f64 {
        let (a, b) = (self.embed(p), self.embed(q));
        let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let m = self.inner(&d, &d).max(0.0);
        if self.sign > 0.0 {
            2.0 * (0.5 * m.sqrt()).asinh()
        } else {
            2.0 * (0.5 * m.sqrt()).min(1.0).asin()
        }
    }

    fn exp(self, p: Point, v: Tangent) -> Point {
        let a = self.embed(p);
        let (ex, ey) = self.frame(p);
        let d = v.norm();
        let vec = [
            v.a * ex[0] + v.b * ey[0],
            v.a * ex[1] + v.b * ey[1],
            v.a * ex[2] + v.b * ey[2],
        ];
        let (c, s) = if self.sign > 0.0 {
            (d.cosh(), shape_s(d, 1.0))
        } else {
            (d.cos(), shape_s(d, -1.0))
        };
        let q = [c * a[0] + s * vec[0], c * a[1] + s * vec[1], c * a[2] + s * vec[2]];
        self.unembed(&q)
    }

    fn log(self, p: Point, q: Point) -> Tangent {
        let a = self.embed(p);
        let b = self.embed(q);
        let diff = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let m = self.inner(&diff, &diff).max(0.0);
        if m == 0.0 {
            return Tangent::zero();
        }
        let d = self.dist(p, q);
        // W = Q + <P,Q> P with <P,Q> = ∓(1 + m/2) written without cancellation.
        let half = 0.5 * m * self.sign;
        let w = [diff[0] - half * a[0], diff[1] - half * a[1], diff[2] - half * a[2]];
        let scale = 1.0 / shape_s(d, self.sign);
        let (ex, ey) = self.frame(p);
        Tangent::new(scale * self.inner(&w, &ex), scale * self.inner(&w, &ey))
    }
}

/// Constant-curvature plane of curvature `kappa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCurvature {
    pub kappa: f64,
}

impl ConstantCurvature {
    pub fn new(kappa: f64) -> Self {
        Self { kappa }
    }

    fn unit(self) -> Option<(Unit, f64)> {
        if self.kappa == 0.0 {
            None
        } else {
            let s = self.kappa.abs().sqrt();
            let sign = if self.kappa < 0.0 { 1.0 } else { -1.0 };
            Some((Unit { sign }, s))
        }
    }

    pub fn distance(self, p: Point, q: Point) -> f64 {
        match self.unit() {
            None => (q.x - p.x).hypot(q.y - p.y),
            Some((u, s)) => u.dist(p.scale(s), q.scale(s)) / s,
        }
    }

    pub fn exp(self, p: Point, v: Tangent) -> Point {
        match self.unit() {
            None => Point::new(p.x + v.a, p.y + v.b),
            Some((u, s)) => u.exp(p.scale(s), v.scale(s)).scale(1.0 / s),
        }
    }

    pub fn log(self, p: Point, q: Point) -> Tangent {
        match self.unit() {
            None => Tangent::new(q.x - p.x, q.y - p.y),
            Some((u, s)) => u.log(p.scale(s), q.scale(s)).scale(1.0 / s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_are_orthonormal() {
        for sign in [1.0, -1.0] {
            let u = Unit { sign };
            for p in [Point::new(0.0, 0.0), Point::new(0.3, -0.9), Point::new(1e-6, 2e-6)] {
                let (ex, ey) = u.frame(p);
                let a = u.embed(p);
                assert!((u.inner(&ex, &ex) - 1.0).abs() < 1e-13);
                assert!((u.inner(&ey, &ey) - 1.0).abs() < 1e-13);
                assert!(u.inner(&ex, &ey).abs() < 1e-13);
                assert!(u.inner(&ex, &a).abs() < 1e-13);
                assert!((u.inner(&a, &a) + sign).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exp_log_round_trip() {
        for kappa in [-2.0, -1.0, 0.0, 1.0, 0.5] {
            let m = ConstantCurvature::new(kappa);
            let p = Point::new(0.4, -0.2);
            let q = Point::new(-0.3, 0.6);
            let v = m.log(p, q);
            assert!((v.norm() - m.distance(p, q)).abs() < 1e-13);
            let back = m.exp(p, v);
            assert!(back.dist_chart(q) < 1e-12, "kappa {kappa}: {back:?}");
        }
    }

    #[test]
    fn radial_distances() {
        let h = ConstantCurvature::new(-1.0);
        assert!((h.distance(Point::polar(1.0, 0.7), Point::polar(3.0, 0.7)) - 2.0).abs() < 1e-12);
        let s = ConstantCurvature::new(1.0);
        let pi4 = std::f64::consts::FRAC_PI_4;
        assert!((s.distance(Point::new(0.0, 0.0), Point::polar(pi4, 2.0)) - pi4).abs() < 1e-15);
    }
}
