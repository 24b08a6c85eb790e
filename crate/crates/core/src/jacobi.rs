//! Jacobi fields along geodesics, volume distortion coefficients and radial
//! transport Jacobians.
//!
//! Along a geodesic `γ: [0, 1] → M` of length `L` the normal Jacobi matrix
//! solves `A'' + L² K(γ(s)) A = 0`, `A(0) = 0`, `A'(0) = L·I`, so that on a
//! plane of curvature `κ` it is `s_κ(sL)·I`. In two dimensions the normal block
//! is 1×1; it is kept as a matrix so the formulas read as in general dimension.

use nalgebra::Matrix1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{GeodesicSegment, ManifoldModel, Point, DIM};
use crate::ode;

/// Normal Jacobi matrix sampled along a geodesic.
#[derive(Debug, Clone)]
pub struct JacobiSolution {
    pub length: f64,
    pub s: Vec<f64>,
    pub a: Vec<Matrix1<f64>>,
    pub da: Vec<Matrix1<f64>>,
    /// Companion solution with `B(0) = I`, `B'(0) = 0`, used for the
    /// cross-Wronskian drift check.
    b: Vec<Matrix1<f64>>,
    db: Vec<Matrix1<f64>>,
}

impl JacobiSolution {
    /// `Aᵀ A' − (A')ᵀ A` at sample `i`.
    pub fn wronskian(&self, i: usize) -> Matrix1<f64> {
        self.a[i].transpose() * self.da[i] - self.da[i].transpose() * self.a[i]
    }

    /// Largest deviation of `A'ᵀ B − Aᵀ B'` from its initial value `L·I`,
    /// relative to `max(L, 1)`.
    pub fn wronskian_drift(&self) -> f64 {
        let w0 = Matrix1::new(self.length);
        (0..self.s.len())
            .map(|i| {
                let w = self.da[i].transpose() * self.b[i] - self.a[i].transpose() * self.db[i];
                (w - w0).abs().max()
            })
            .fold(0.0, f64::max)
            / self.length.max(1.0)
    }

    /// Determinant of the full Jacobi matrix `diag(sL, A(s))` at sample `i`.
    pub fn full_determinant(&self, i: usize) -> f64 {
        self.s[i] * self.length * self.a[i].determinant()
    }
}

/// Default sampling of [`solve_jacobi`].
pub const DEFAULT_SAMPLES: usize = 64;

/// Solves the normal Jacobi equation along `geodesic` on a uniform grid of
/// `DEFAULT_SAMPLES + 1` parameters.
pub fn solve_jacobi(model: &ManifoldModel, geodesic: &GeodesicSegment<'_>) -> Result<JacobiSolution> {
    let s: Vec<f64> = (0..=DEFAULT_SAMPLES)
        .map(|i| i as f64 / DEFAULT_SAMPLES as f64)
        .collect();
    solve_jacobi_at(model, geodesic, &s)
}

/// As [`solve_jacobi`] at the given ascending parameters in `[0, 1]`.
pub fn solve_jacobi_at(
    model: &ManifoldModel,
    geodesic: &GeodesicSegment<'_>,
    params: &[f64],
) -> Result<JacobiSolution> {
    let length = geodesic.length;
    if length == 0.0 {
        return Err(Error::domain("Jacobi fields need a nondegenerate geodesic"));
    }
    let p = geodesic.p;
    let w = model.chart_velocity(p, geodesic.initial_velocity);
    let l2 = length * length;
    // state: position, chart velocity, A, A', B, B'
    let y0 = [p.x, p.y, w[0], w[1], 0.0, length, 1.0, 0.0];
    let tol = model.ode_tol();
    let states = ode::integrate_observed(
        |_, y: &[f64; 8]| {
            let acc = model.geodesic_acceleration([y[0], y[1]], [y[2], y[3]]);
            let k = model.gauss_curvature_at_radius(y[0].hypot(y[1]));
            [y[2], y[3], acc[0], acc[1], y[5], -l2 * k * y[4], y[7], -l2 * k * y[6]]
        },
        0.0,
        y0,
        params,
        tol,
        |s, y| {
            if s > 0.0 && y[4] <= 0.0 {
                Err(Error::ConjugatePoint { s, length })
            } else {
                Ok(())
            }
        },
    )?;
    Ok(JacobiSolution {
        length,
        s: params.to_vec(),
        a: states.iter().map(|y| Matrix1::new(y[4])).collect(),
        da: states.iter().map(|y| Matrix1::new(y[5])).collect(),
        b: states.iter().map(|y| Matrix1::new(y[6])).collect(),
        db: states.iter().map(|y| Matrix1::new(y[7])).collect(),
    })
}

/// `v_t(x, y)` with its arguments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistortionValue {
    pub x: Point,
    pub y: Point,
    pub t: f64,
    pub value: f64,
}

/// `v_t(x, y) = det Ā(t) / (tⁿ det Ā(1))` along the geodesic from `x` to `y`.
pub fn volume_distortion(model: &ManifoldModel, x: Point, y: Point, t: f64) -> Result<DistortionValue> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("t = {t} must lie in (0, 1]")));
    }
    if x == y {
        return Err(Error::domain("volume distortion needs distinct points"));
    }
    let geodesic = model.geodesic(x, y)?;
    let value = if t == 1.0 {
        1.0
    } else {
        let sol = solve_jacobi_at(model, &geodesic, &[t, 1.0])?;
        sol.full_determinant(0) / (t.powi(DIM as i32) * sol.full_determinant(1))
    };
    if !(value > 0.0) {
        return Err(Error::numeric("nonpositive volume distortion", value));
    }
    Ok(DistortionValue { x, y, t, value })
}

/// A monotone map of meridian arclength `r ↦ F(r)`, applied as
/// `(r, θ) ↦ (F(r), θ)`.
pub trait RadialMap {
    fn eval(&self, r: f64) -> f64;

    /// `F'(r)`; central differences at step `1e-6` unless overridden.
    fn derivative(&self, r: f64) -> f64 {
        let h = 1e-6;
        if r < h {
            (self.eval(r + h) - self.eval(r)) / h
        } else {
            (self.eval(r + h) - self.eval(r - h)) / (2.0 * h)
        }
    }
}

/// Closure-backed [`RadialMap`] with finite-difference derivative.
pub struct FnRadialMap<F>(pub F);

impl<F: Fn(f64) -> f64> RadialMap for FnRadialMap<F> {
    fn eval(&self, r: f64) -> f64 {
        (self.0)(r)
    }
}

/// `J(r) = F'(r) f(F(r)) / f(r)`, with the pole limit `F'(0)²`.
pub fn radial_jacobian(model: &ManifoldModel, map: &dyn RadialMap, r: f64) -> Result<f64> {
    let d = map.derivative(r);
    let warp = model.warp();
    if r < 1e-12 {
        let f0 = map.eval(0.0);
        if f0.abs() > 1e-12 {
            return Err(Error::domain(format!(
                "radial map sends the pole to radius {f0}; its Jacobian is unbounded there"
            )));
        }
        return Ok(d * d);
    }
    Ok(d * warp.value(map.eval(r)) / warp.value(r))
}

/// Slack of `J_t^{1/n} ≥ (1−t) v_{1−t}(F(x), x)^{1/n} + t v_t(x, F(x))^{1/n} J_1^{1/n}`.
pub fn check_jacobian_concavity(
    model: &ManifoldModel,
    x: Point,
    image: Point,
    t: f64,
    j_t: f64,
    j_1: f64,
) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::domain(format!("t = {t} must lie in (0, 1)")));
    }
    if !(j_t > 0.0 && j_1 > 0.0) {
        return Err(Error::Inconsistent(format!(
            "transport Jacobians must be positive (J_t = {j_t}, J_1 = {j_1})"
        )));
    }
    let n = DIM as f64;
    let (v_back, v_fwd) = if x.dist_chart(image) < 1e-14 {
        (1.0, 1.0)
    } else {
        (
            volume_distortion(model, image, x, 1.0 - t)?.value,
            volume_distortion(model, x, image, t)?.value,
        )
    };
    Ok(j_t.powf(1.0 / n) - (1.0 - t) * v_back.powf(1.0 / n) - t * v_fwd.powf(1.0 / n) * j_1.powf(1.0 / n))
}
