//! Independent oracles used by the suite: brute-force assignment and the
//! finite-radius barycentre-set ratio that defines volume distortion.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ManifoldModel, Point, Tangent};
use crate::jacobi::volume_distortion;
use crate::transport::CostMatrix;

/// Vertices on the boundary circles of the finite-radius ratio.
pub const RATIO_BOUNDARY_POINTS: usize = 512;

/// `min_σ (1/n) Σ c_{iσ(i)}` by enumerating all permutations (Heap's
/// algorithm); `n ≤ 9`.
pub fn brute_force_assignment(costs: &CostMatrix) -> Result<f64> {
    let n = costs.rows();
    if costs.cols() != n || n == 0 || n > 9 {
        return Err(Error::input(format!(
            "brute force needs a square matrix of size 1..=9, got {}x{}",
            n,
            costs.cols()
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let eval = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| costs.get(i, j)).sum::<f64>();
    let mut best = eval(&perm);
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best / n as f64)
}

/// `m(Z_t(x, B_r(y))) / m(B_{tr}(y))` with both regions bounded by polygons on
/// `points` equally spaced boundary directions; the common inscribed-polygon
/// bias cancels in the ratio.
pub fn finite_distortion_ratio(
    model: &ManifoldModel,
    x: Point,
    y: Point,
    t: f64,
    r: f64,
    points: usize,
) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0 && r > 0.0) {
        return Err(Error::domain(format!("need t in (0, 1] and r > 0 (t = {t}, r = {r})")));
    }
    let mut image = Vec::with_capacity(points);
    let mut ball = Vec::with_capacity(points);
    for i in 0..points {
        let u = Tangent::unit_at(TAU * i as f64 / points as f64);
        let z = model.exp(y, u.scale(r))?;
        image.push(model.geodesic(x, z)?.point_at(t)?);
        ball.push(model.exp(y, u.scale(t * r))?);
    }
    Ok(model.polygon_area(&image).abs() / model.polygon_area(&ball).abs())
}

#[derive(Debug, Clone, Serialize)]
pub struct DistortionConvergence {
    pub x: Point,
    pub y: Point,
    pub t: f64,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Jacobi-field value of `v_t(x, y)`.
    pub jacobi: f64,
    /// `log₂` of successive difference ratios on halving radii.
    pub observed_order: f64,
    /// Richardson extrapolation of the two finest ratios assuming order two.
    pub extrapolated: f64,
}

/// Finite-radius ratios on `r, r/2, r/4, ...` and their convergence order.
pub fn distortion_convergence(
    model: &ManifoldModel,
    x: Point,
    y: Point,
    t: f64,
    r: f64,
    levels: usize,
) -> Result<DistortionConvergence> {
    if levels < 3 {
        return Err(Error::input("convergence order needs at least three radii"));
    }
    let radii: Vec<f64> = (0..levels).map(|i| r / 2f64.powi(i as i32)).collect();
    let ratios = radii
        .iter()
        .map(|&ri| finite_distortion_ratio(model, x, y, t, ri, RATIO_BOUNDARY_POINTS))
        .collect::<Result<Vec<_>>>()?;
    let k = levels - 1;
    let d1 = ratios[k - 2] - ratios[k - 1];
    let d2 = ratios[k - 1] - ratios[k];
    Ok(DistortionConvergence {
        x,
        y,
        t,
        jacobi: volume_distortion(model, x, y, t)?.value,
        observed_order: (d1 / d2).abs().log2(),
        extrapolated: (4.0 * ratios[k] - ratios[k - 1]) / 3.0,
        radii,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::solve_exact;

    #[test]
    fn brute_force_matches_simplex() {
        let data: Vec<f64> = (0..25).map(|i| ((i * 37) % 11) as f64).collect();
        let c = CostMatrix::new(5, 5, data).unwrap();
        let w = vec![0.2; 5];
        let exact = solve_exact(&c, &w, &w).unwrap().cost;
        assert!((brute_force_assignment(&c).unwrap() - exact).abs() < 1e-12);
        assert!(brute_force_assignment(&CostMatrix::new(1, 2, vec![0.0, 1.0]).unwrap()).is_err());
    }

    #[test]
    fn hyperbolic_ratio_converges_to_closed_form() {
        let h = ManifoldModel::hyperbolic(6.0).unwrap();
        let (x, y) = (Point::new(-1.0, 0.0), Point::new(1.0, 0.0));
        let c = distortion_convergence(&h, x, y, 0.5, 0.08, 4).unwrap();
        let closed = 1f64.sinh() / (0.5 * 2f64.sinh());
        assert!((c.jacobi - closed).abs() < 1e-9);
        assert!((c.extrapolated - closed).abs() < 1e-6, "{} vs {closed}", c.extrapolated);
        assert!(c.observed_order > 1.9, "{}", c.observed_order);
    }

    #[test]
    fn flat_ratio_is_one() {
        let e = ManifoldModel::euclidean(5.0).unwrap();
        let r = finite_distortion_ratio(&e, Point::ORIGIN, Point::new(2.0, 1.0), 0.3, 0.1, 64).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }
}
