use super::{ConstantCurvature, ManifoldModel, Point, Tangent};
use crate::error::{Error, Result};
use crate::ode;

const MAX_NEWTON: usize = 40;

impl ManifoldModel {
    /// Integrates the geodesic ODE for `s ∈ [0, 1]` from `p` with initial
    /// velocity `v`, returning the chart states at the requested parameters.
    pub(crate) fn geodesic_states(&self, p: Point, v: Tangent, params: &[f64]) -> Result<Vec<[f64; 4]>> {
        let w = self.chart_velocity(p, v);
        let y0 = [p.x, p.y, w[0], w[1]];
        ode::integrate_to(
            |_, y: &[f64; 4]| {
                let acc = self.geodesic_acceleration([y[0], y[1]], [y[2], y[3]]);
                [y[2], y[3], acc[0], acc[1]]
            },
            0.0,
            y0,
            params,
            self.ode_tol(),
        )
    }

    pub(crate) fn exp_numeric(&self, p: Point, v: Tangent) -> Result<Point> {
        if v.norm() == 0.0 {
            return Ok(p);
        }
        let y = self.geodesic_states(p, v, &[1.0])?[0];
        Ok(Point::new(y[0], y[1]))
    }

    /// Parallel transport of `w` along `s ↦ exp_p(s v)`, `s ∈ [0, 1]`.
    ///
    /// The chart Christoffel contraction `Γ(V, W)` is recovered from the
    /// quadratic geodesic acceleration by polarization.
    pub fn parallel_transport(&self, p: Point, v: Tangent, w: Tangent) -> Result<(Point, Tangent)> {
        self.check_domain(p)?;
        let cv = self.chart_velocity(p, v);
        let cw = self.chart_velocity(p, w);
        let y = ode::integrate_to(
            |_, y: &[f64; 6]| {
                let x = [y[0], y[1]];
                let (vv, ww) = ([y[2], y[3]], [y[4], y[5]]);
                let a = self.geodesic_acceleration(x, vv);
                let sum = self.geodesic_acceleration(x, [vv[0] + ww[0], vv[1] + ww[1]]);
                let b = self.geodesic_acceleration(x, ww);
                [
                    y[2],
                    y[3],
                    a[0],
                    a[1],
                    0.5 * (sum[0] - a[0] - b[0]),
                    0.5 * (sum[1] - a[1] - b[1]),
                ]
            },
            0.0,
            [p.x, p.y, cv[0], cv[1], cw[0], cw[1]],
            &[1.0],
            self.ode_tol(),
        )?[0];
        let q = Point::new(y[0], y[1]);
        Ok((q, self.frame_components(q, [y[4], y[5]])))
    }

    /// Comparison-model initial guess: log map of the constant-curvature plane
    /// whose curvature matches the model at the chart midpoint.
    fn comparison_log(&self, p: Point, q: Point) -> Tangent {
        let mid = Point::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y));
        let mut kappa = self.gauss_curvature_at_radius(mid.radius());
        if kappa > 0.0 {
            // keep the comparison sphere large enough to hold both points
            let reach = p.radius().max(q.radius());
            kappa = kappa.min((0.45 * std::f64::consts::PI / reach.max(1e-9)).powi(2));
        }
        let v = ConstantCurvature::new(kappa).log(p, q);
        if v.a.is_finite() && v.b.is_finite() {
            v
        } else {
            Tangent::new(q.x - p.x, q.y - p.y)
        }
    }

    /// Boundary-value shooting: Newton iteration on `exp_p(v) = q` with a
    /// central-difference Jacobian and backtracking on the residual norm.
    pub(crate) fn log_shooting(&self, p: Point, q: Point) -> Result<Tangent> {
        if p == q {
            return Ok(Tangent::zero());
        }
        let target = 1e-2 * self.ode_tolerance;
        let accept = 10.0 * self.ode_tolerance;
        let residual = |v: Tangent| -> Result<[f64; 2]> {
            let e = self.exp_numeric(p, v)?;
            Ok([e.x - q.x, e.y - q.y])
        };
        let norm = |r: [f64; 2]| r[0].hypot(r[1]);

        let mut v = self.comparison_log(p, q);
        let mut res = residual(v)?;
        let mut rn = norm(res);
        for _ in 0..MAX_NEWTON {
            if rn <= target {
                return Ok(v);
            }
            let h = 1e-6 * v.norm().max(1e-3);
            let mut jac = [[0.0; 2]; 2];
            for (col, dv) in [Tangent::new(h, 0.0), Tangent::new(0.0, h)].iter().enumerate() {
                let plus = residual(Tangent::new(v.a + dv.a, v.b + dv.b))?;
                let minus = residual(Tangent::new(v.a - dv.a, v.b - dv.b))?;
                jac[0][col] = (plus[0] - minus[0]) / (2.0 * h);
                jac[1][col] = (plus[1] - minus[1]) / (2.0 * h);
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det.abs() < 1e-300 || !det.is_finite() {
                return Err(Error::numeric("singular shooting Jacobian", rn));
            }
            let step = Tangent::new(
                (jac[1][1] * res[0] - jac[0][1] * res[1]) / det,
                (-jac[1][0] * res[0] + jac[0][0] * res[1]) / det,
            );
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let trial = Tangent::new(v.a - lambda * step.a, v.b - lambda * step.b);
                if let Ok(r) = residual(trial) {
                    let n = norm(r);
                    if n < rn || n <= target {
                        v = trial;
                        res = r;
                        rn = n;
                        improved = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if rn <= accept {
            Ok(v)
        } else {
            Err(Error::numeric(
                format!(
                    "geodesic shooting from ({:.4}, {:.4}) to ({:.4}, {:.4}) did not converge",
                    p.x, p.y, q.x, q.y
                ),
                rn,
            ))
        }
    }
}

/// Constant-speed geodesic `γ: [0, 1] → M` with `γ(0) = p`, `γ(1) = q`.
#[derive(Debug, Clone)]
pub struct GeodesicSegment<'m> {
    model: &'m ManifoldModel,
    pub p: Point,
    pub q: Point,
    pub length: f64,
    pub initial_velocity: Tangent,
}

impl<'m> GeodesicSegment<'m> {
    pub(crate) fn new(model: &'m ManifoldModel, p: Point, q: Point, v: Tangent) -> Self {
        Self {
            model,
            p,
            q,
            length: v.norm(),
            initial_velocity: v,
        }
    }

    pub fn model(&self) -> &'m ManifoldModel {
        self.model
    }

    pub fn point_at(&self, t: f64) -> Result<Point> {
        if t == 0.0 {
            return Ok(self.p);
        }
        if t == 1.0 {
            return Ok(self.q);
        }
        self.model.exp(self.p, self.initial_velocity.scale(t))
    }

    /// Points at each parameter in `ts` (sorted ascending).
    pub fn points_at(&self, ts: &[f64]) -> Result<Vec<Point>> {
        match self.model.constant_curvature() {
            Some(_) => ts.iter().map(|&t| self.point_at(t)).collect(),
            None => {
                let inner: Vec<f64> = ts.iter().copied().filter(|t| *t > 0.0).collect();
                let states = if inner.is_empty() || self.length == 0.0 {
                    Vec::new()
                } else {
                    self.model.geodesic_states(self.p, self.initial_velocity, &inner)?
                };
                let mut it = states.into_iter();
                Ok(ts
                    .iter()
                    .map(|&t| {
                        if t <= 0.0 || self.length == 0.0 {
                            self.p
                        } else {
                            let y = it.next().expect("state per positive parameter");
                            Point::new(y[0], y[1])
                        }
                    })
                    .collect())
            }
        }
    }

    pub fn midpoint(&self) -> Result<Point> {
        self.point_at(0.5)
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
    fn numeric_sinh_surface_matches_hyperbolic_closed_form() {
        let num = ManifoldModel::surface_of_revolution(Warp::sinh(), 5.0).unwrap();
        let exact = ManifoldModel::hyperbolic(5.0).unwrap();
        let pairs = [
            (Point::new(0.5, 0.2), Point::new(-1.0, 1.5)),
            (Point::new(0.0, 0.0), Point::new(2.0, -1.0)),
            (Point::new(1.0, 0.0), Point::new(-1.0, 1e-4)),
            (Point::new(3e-4, -2e-4), Point::new(0.1, 0.3)),
        ];
        for (p, q) in pairs {
            let dn = num.distance(p, q).unwrap();
            let de = exact.distance(p, q).unwrap();
            assert!((dn - de).abs() < 1e-9 * (1.0 + de), "{dn} vs {de}");
            let vn = num.log_map(p, q).unwrap();
            let ve = exact.log_map(p, q).unwrap();
            assert!((vn.a - ve.a).abs() < 1e-8 && (vn.b - ve.b).abs() < 1e-8);
        }
    }

    #[test]
    fn shooting_round_trip_on_variable_warp() {
        let m = warped();
        let p = Point::new(1.2, -0.4);
        let q = Point::new(-0.9, 1.7);
        let v = m.log_map(p, q).unwrap();
        let back = m.exp(p, v).unwrap();
        assert!(back.dist_chart(q) < 1e-9);
        let g = m.geodesic(p, q).unwrap();
        for t in [0.25, 0.5, 0.75] {
            let z = g.point_at(t).unwrap();
            assert!((m.distance(p, z).unwrap() - t * g.length).abs() < 1e-8);
        }
    }

    #[test]
    fn parallel_transport_preserves_norms_and_angles() {
        let m = warped();
        let p = Point::new(0.8, -0.3);
        let v = Tangent::new(-1.1, 0.9);
        let (e1, e2) = (Tangent::new(1.0, 0.0), Tangent::new(0.0, 1.0));
        let (q1, t1) = m.parallel_transport(p, v, e1).unwrap();
        let (q2, t2) = m.parallel_transport(p, v, e2).unwrap();
        assert!(q1.dist_chart(m.exp(p, v).unwrap()) < 1e-9 && q1.dist_chart(q2) < 1e-9);
        assert!((t1.norm() - 1.0).abs() < 1e-9 && (t2.norm() - 1.0).abs() < 1e-9);
        assert!((t1.a * t2.a + t1.b * t2.b).abs() < 1e-9);
        // the velocity itself is parallel
        let (_, tv) = m.parallel_transport(p, v, v).unwrap();
        let back = m.log_map(q1, p).unwrap();
        assert!((tv.a + back.a).abs() < 1e-8 && (tv.b + back.b).abs() < 1e-8);
    }

    #[test]
    fn straight_and_meridian_midpoints() {
        let e = ManifoldModel::euclidean(5.0).unwrap();
        let g = e.geodesic(Point::new(0.0, 0.0), Point::new(2.0, 0.0)).unwrap();
        let mid = g.midpoint().unwrap();
        assert!(mid.dist_chart(Point::new(1.0, 0.0)) < 1e-15);
        let h = ManifoldModel::hyperbolic(5.0).unwrap();
        let g = h.geodesic(Point::polar(1.0, 0.3), Point::polar(3.0, 0.3)).unwrap();
        let mid = g.midpoint().unwrap();
        assert!(mid.dist_chart(Point::polar(2.0, 0.3)) < 1e-12);
    }

    #[test]
    fn points_at_matches_point_at() {
        let m = warped();
        let g = m.geodesic(Point::new(0.3, 0.1), Point::new(-1.0, -1.0)).unwrap();
        let ts = [0.0, 0.3, 0.6, 1.0];
        let pts = g.points_at(&ts).unwrap();
        for (t, z) in ts.iter().zip(&pts) {
            assert!(z.dist_chart(g.point_at(*t).unwrap()) < 1e-9);
        }
    }
}
