use std::f64::consts::TAU;

use super::{ManifoldModel, Point, Tangent};
use crate::error::{Error, Result};
use crate::ode;
use crate::quad::{self, GaussLegendre};

impl ManifoldModel {
    /// Riemannian area `m(B̄_R(x0))` of a closed geodesic ball.
    ///
    /// Pole-centred balls reduce to `2π ∫₀ᴿ f`; otherwise the volume element
    /// is integrated in geodesic polar coordinates about `x0`, radially by the
    /// Jacobi equation and angularly by a doubling periodic trapezoid rule.
    pub fn ball_volume(&self, x0: Point, radius: f64) -> Result<f64> {
        self.check_domain(x0)?;
        if radius < 0.0 {
            return Err(Error::domain("negative ball radius"));
        }
        let reach = x0.radius() + radius;
        if reach > self.r_max() * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "ball of radius {radius} about ({:.4}, {:.4}) leaves the chart; largest admissible radius is {:.6}",
                x0.x,
                x0.y,
                (self.r_max() - x0.radius()).max(0.0)
            )));
        }
        if radius == 0.0 {
            return Ok(0.0);
        }
        if x0.radius() < 1e-14 {
            let warp = self.warp();
            let v = quad::adaptive(0.0, radius, self.quadrature_tolerance() * 1e-2, |r| warp.value(r))?;
            return Ok(TAU * v);
        }
        let mut n = 16;
        let mut prev = self.polar_area(x0, radius, n)?;
        loop {
            n *= 2;
            let next = self.polar_area(x0, radius, n)?;
            if (next - prev).abs() <= self.quadrature_tolerance() * next.abs() {
                return Ok(next);
            }
            if n >= 4096 {
                return Err(Error::numeric(
                    "angular quadrature of the ball volume did not converge",
                    (next - prev).abs() / next,
                ));
            }
            prev = next;
        }
    }

    fn polar_area(&self, x0: Point, radius: f64, n: usize) -> Result<f64> {
        let mut sum = 0.0;
        for i in 0..n {
            let phi = TAU * i as f64 / n as f64;
            sum += self.radial_jacobi_integral(x0, phi, radius)?;
        }
        Ok(sum * TAU / n as f64)
    }

    /// `∫₀ᴿ J(s) ds` along the unit-speed geodesic from `x0` in direction `phi`,
    /// `J'' = -K J`, `J(0) = 0`, `J'(0) = 1`.
    fn radial_jacobi_integral(&self, x0: Point, phi: f64, radius: f64) -> Result<f64> {
        let w = self.chart_velocity(x0, Tangent::unit_at(phi));
        let y0 = [x0.x, x0.y, w[0], w[1], 0.0, 1.0, 0.0];
        let tol = self.ode_tol();
        let y = ode::integrate_observed(
            |_, y: &[f64; 7]| {
                let acc = self.geodesic_acceleration([y[0], y[1]], [y[2], y[3]]);
                let k = self.gauss_curvature_at_radius(y[0].hypot(y[1]));
                [y[2], y[3], acc[0], acc[1], y[5], -k * y[4], y[4]]
            },
            0.0,
            y0,
            &[radius],
            tol,
            |s, y| {
                if y[4] <= 0.0 {
                    Err(Error::ConjugatePoint { s, length: radius })
                } else {
                    Ok(())
                }
            },
        )?[0];
        Ok(y[6])
    }

    /// Riemannian area enclosed by a closed chart polygon (counter-clockwise
    /// positive), from `∮ G(ρ)/ρ² (x dy − y dx)` with `G = ∫₀^ρ f`.
    pub fn polygon_area(&self, vertices: &[Point]) -> f64 {
        let rule = GaussLegendre::cached(4);
        let warp = self.warp();
        let n = vertices.len();
        let mut total = 0.0;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let cross = a.x * b.y - a.y * b.x;
            if cross == 0.0 {
                continue;
            }
            let mean = rule.integrate(0.0, 1.0, |t| {
                let r = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)).radius();
                warp.antiderivative_over_square(r)
            });
            total += cross * mean;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Warp;

    #[test]
    fn centred_and_off_centre_volumes() {
        let e = ManifoldModel::euclidean(5.0).unwrap();
        let v = e.ball_volume(Point::ORIGIN, 2.0).unwrap();
        assert!((v - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        let h = ManifoldModel::hyperbolic(6.0).unwrap();
        let exact = TAU * (1f64.cosh() - 1.0);
        let c = h.ball_volume(Point::ORIGIN, 1.0).unwrap();
        assert!((c - exact).abs() / exact < 1e-10);
        let off = h.ball_volume(Point::new(1.5, -0.7), 1.0).unwrap();
        assert!((off - exact).abs() / exact < 1e-8, "{off} vs {exact}");
    }

    #[test]
    fn ball_leaving_chart_is_rejected() {
        let h = ManifoldModel::hyperbolic(3.0).unwrap();
        match h.ball_volume(Point::new(2.0, 0.0), 1.5) {
            Err(Error::Domain(msg)) => assert!(msg.contains("largest admissible radius")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn variable_warp_off_centre_ball_matches_polygon_area() {
        let m =
            ManifoldModel::surface_of_revolution(Warp::expression("(sinh(r) + 0.05*sinh(2*r))/1.1", "w").unwrap(), 4.0)
                .unwrap();
        let x0 = Point::new(1.0, 0.3);
        let r = 0.6;
        let vol = m.ball_volume(x0, r).unwrap();
        let n = 4096;
        let boundary: Vec<Point> = (0..n)
            .map(|i| m.exp(x0, Tangent::unit_at(TAU * i as f64 / n as f64).scale(r)).unwrap())
            .collect();
        let poly = m.polygon_area(&boundary);
        assert!((vol - poly).abs() / vol < 1e-6, "{vol} vs {poly}");
    }

    #[test]
    fn polygon_area_of_centred_square_in_the_plane() {
        let e = ManifoldModel::euclidean(5.0).unwrap();
        let sq = [
            Point::new(0.5, 0.5),
            Point::new(1.5, 0.5),
            Point::new(1.5, 1.5),
            Point::new(0.5, 1.5),
        ];
        assert!((e.polygon_area(&sq) - 1.0).abs() < 1e-14);
    }
}
