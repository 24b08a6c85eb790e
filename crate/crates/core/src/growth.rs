//! Volume growth of geodesic balls under a variable Ricci lower bound.
//!
//! With `V_R = m(B̄_R(x₀))`, the entropy inequality along the interpolation
//! between uniform measures on `B̄_ε` and `B̄_R` yields
//!
//! ```text
//! V_R ≤ V_{2ε} (V_{2ε}/V_ε)^{R/ε} exp(K(B_{x₀}(R+2ε)) R(R+ε)/2).
//! ```
//!
//! Everything is evaluated in log space; the exponential overflows doubles
//! long before the radii of interest stop being interesting.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{CurvatureField, ManifoldModel, ModelSummary, Point};
use crate::par::Execution;

pub const GROWTH_SCHEMA: &str = "riccilab.growth/1";

fn check_args(v_eps: f64, v_2eps: f64, r: f64, eps: f64) -> Result<()> {
    if !(v_eps > 0.0 && v_2eps > 0.0) {
        return Err(Error::domain(format!(
            "ball volumes must be positive (V_eps = {v_eps}, V_2eps = {v_2eps})"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::domain(format!("eps = {eps} must be positive")));
    }
    if r < 2.0 * eps {
        return Err(Error::domain(format!("R = {r} must be at least 2 eps = {}", 2.0 * eps)));
    }
    Ok(())
}

/// Natural log of the growth bound.
pub fn log_growth_bound(v_eps: f64, v_2eps: f64, k_ball: f64, r: f64, eps: f64) -> Result<f64> {
    check_args(v_eps, v_2eps, r, eps)?;
    Ok(v_2eps.ln() + (r / eps) * (v_2eps.ln() - v_eps.ln()) + 0.5 * k_ball * r * (r + eps))
}

/// `V_{2ε}(V_{2ε}/V_ε)^{R/ε} exp(K R(R+ε)/2)`; `+∞` once it leaves `f64`.
pub fn growth_bound(v_eps: f64, v_2eps: f64, k_ball: f64, r: f64, eps: f64) -> Result<f64> {
    log_growth_bound(v_eps, v_2eps, k_ball, r, eps).map(f64::exp)
}

/// The bound for a linearly growing field `K_x ≤ C(1 + ρ_o(x))`, for which
/// `K(B_{x₀}(R+2ε)) ≤ C(1 + ρ_o(x₀) + R + 2ε)`.
pub fn growth_bound_linear(v_eps: f64, v_2eps: f64, c: f64, rho_o_x0: f64, r: f64, eps: f64) -> Result<f64> {
    log_growth_bound_linear(v_eps, v_2eps, c, rho_o_x0, r, eps).map(f64::exp)
}

pub fn log_growth_bound_linear(v_eps: f64, v_2eps: f64, c: f64, rho_o_x0: f64, r: f64, eps: f64) -> Result<f64> {
    if c < 0.0 {
        return Err(Error::domain(format!("C = {c} must be nonnegative")));
    }
    log_growth_bound(v_eps, v_2eps, c * (1.0 + rho_o_x0 + r + 2.0 * eps), r, eps)
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub schema: &'static str,
    pub model: ModelSummary,
    pub x0: Point,
    pub eps: f64,
    #[serde(rename = "R_grid")]
    pub r_grid: Vec<f64>,
    #[serde(rename = "V")]
    pub volumes: Vec<f64>,
    /// `K(B_{x₀}(R+2ε))` per radius.
    pub k_ball: Vec<f64>,
    /// `+∞` entries serialize as `null`; `log_bound` is always finite.
    pub bound: Vec<f64>,
    pub log_bound: Vec<f64>,
    pub bound_linear: Option<Vec<f64>>,
    pub margins: Vec<f64>,
    /// `log bound − log V`.
    pub log_margins: Vec<f64>,
    pub pass: bool,
}

impl GrowthReport {
    /// `R,V_R,bound,log_margin` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::input(format!("cannot write growth table: {e}"));
        w.write_record(["R", "V_R", "bound", "log_margin"]).map_err(io)?;
        for i in 0..self.r_grid.len() {
            w.serialize((self.r_grid[i], self.volumes[i], self.bound[i], self.log_margins[i]))
                .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::input(format!("cannot write growth table: {e}")))?;
        Ok(())
    }
}

/// Measures `V_R` on `r_grid` and compares with the growth bound. With
/// `linear = Some(C)` the linear-growth variant is reported as well.
pub fn verify_growth(
    model: &ManifoldModel,
    k: &CurvatureField,
    x0: Point,
    eps: f64,
    r_grid: &[f64],
    linear: Option<f64>,
    exec: Execution,
) -> Result<GrowthReport> {
    if r_grid.is_empty() {
        return Err(Error::input("R grid is empty"));
    }
    let r_top = r_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let admissible = model.r_max() - x0.radius() - 2.0 * eps;
    if r_top > admissible {
        return Err(Error::domain(format!(
            "B(x0, R + 2 eps) leaves the chart for R = {r_top}; the largest admissible R is {admissible:.6}"
        )));
    }
    let v_eps = model.ball_volume(x0, eps)?;
    let v_2eps = model.ball_volume(x0, 2.0 * eps)?;
    let rows = exec.try_map(r_grid, |&r| -> Result<(f64, f64, f64, Option<f64>)> {
        let v = model.ball_volume(x0, r)?;
        let kb = k.sup_on_ball(x0, r + 2.0 * eps)?;
        let lb = log_growth_bound(v_eps, v_2eps, kb, r, eps)?;
        let lin = linear
            .map(|c| log_growth_bound_linear(v_eps, v_2eps, c, x0.radius(), r, eps))
            .transpose()?;
        Ok((v, kb, lb, lin))
    })?;
    let volumes: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let log_bound: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let bound: Vec<f64> = log_bound.iter().map(|l| l.exp()).collect();
    let log_margins: Vec<f64> = log_bound.iter().zip(&volumes).map(|(l, v)| l - v.ln()).collect();
    Ok(GrowthReport {
        schema: GROWTH_SCHEMA,
        model: model.summary(),
        x0,
        eps,
        r_grid: r_grid.to_vec(),
        k_ball: rows.iter().map(|r| r.1).collect(),
        bound_linear: linear.map(|_| rows.iter().map(|r| r.3.unwrap_or(f64::NAN).exp()).collect()),
        margins: bound.iter().zip(&volumes).map(|(b, v)| b - v).collect(),
        pass: log_margins.iter().all(|m| *m >= 0.0),
        volumes,
        bound,
        log_bound,
        log_margins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn degenerate_volumes_collapse() {
        assert!((growth_bound(3.0, 3.0, 0.0, 4.0, 1.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_example() {
        let v1 = 2.0 * PI * (1f64.cosh() - 1.0);
        let v2 = 2.0 * PI * (2f64.cosh() - 1.0);
        let b = growth_bound(v1, v2, 1.0, 5.0, 1.0).unwrap();
        let direct = v2 * (v2 / v1).powi(5) * 15f64.exp();
        assert!((b - direct).abs() / direct < 1e-12);
        assert!((b / 1.9e11 - 1.0).abs() < 0.02, "{b}");
        let v5 = 2.0 * PI * (5f64.cosh() - 1.0);
        assert!(b > v5);
        let lin = growth_bound_linear(v1, v2, 1.0, 0.0, 5.0, 1.0).unwrap();
        assert!(lin.is_finite() && lin > v5);
    }

    #[test]
    fn linear_variant_is_a_substitution() {
        let (a, b) = (1.3, 4.1);
        let lin = log_growth_bound_linear(a, b, 0.7, 1.5, 3.0, 0.5).unwrap();
        let sub = log_growth_bound(a, b, 0.7 * (1.0 + 1.5 + 3.0 + 1.0), 3.0, 0.5).unwrap();
        assert!((lin - sub).abs() < 1e-14);
        let zero = growth_bound_linear(a, b, 0.0, 1.5, 3.0, 0.5).unwrap();
        assert_eq!(zero, growth_bound(a, b, 0.0, 3.0, 0.5).unwrap());
    }

    #[test]
    fn preconditions() {
        assert!(matches!(growth_bound(1.0, 2.0, 0.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(growth_bound(0.0, 2.0, 0.0, 4.0, 1.0).is_err());
        // log space survives where the direct product overflows
        let l = log_growth_bound(1.0, 2.0, 1.0, 60.0, 1.0).unwrap();
        assert!(l.is_finite() && l > 709.0);
    }

    #[test]
    fn euclidean_closed_form() {
        let e = ManifoldModel::euclidean(20.0).unwrap();
        let k = CurvatureField::constant(&e, 0.0);
        let grid = [2.0, 4.0, 8.0, 16.0];
        let rep = verify_growth(&e, &k, Point::ORIGIN, 1.0, &grid, None, Execution::Sequential).unwrap();
        assert!(rep.pass);
        for (i, r) in grid.iter().enumerate() {
            assert!((rep.volumes[i] - PI * r * r).abs() < 1e-9);
            let closed = 4.0 * PI * 4f64.powf(*r);
            assert!((rep.bound[i] - closed).abs() / closed < 1e-10);
        }
        // not tight in flat space: bound/V grows with R
        assert!(rep.log_margins.windows(2).all(|w| w[1] > w[0]));
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("R,V_R,bound,log_margin\n2.0,"));
    }

    #[test]
    fn hyperbolic_passes_and_chart_overflow_is_reported() {
        let h = ManifoldModel::hyperbolic(12.0).unwrap();
        let k = CurvatureField::constant(&h, 1.0);
        for eps in [0.5, 1.0] {
            let grid: Vec<f64> = (0..=12)
                .map(|i| 2.0 * eps + (8.0 - 2.0 * eps) * i as f64 / 12.0)
                .collect();
            let rep = verify_growth(&h, &k, Point::ORIGIN, eps, &grid, Some(1.0), Execution::Parallel).unwrap();
            assert!(rep.pass);
            assert!(rep.volumes.windows(2).all(|w| w[1] >= w[0]));
        }
        match verify_growth(&h, &k, Point::ORIGIN, 1.0, &[11.0], None, Execution::Sequential) {
            Err(Error::Domain(msg)) => assert!(msg.contains("largest admissible R is 10")),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn monotone_in_each_argument(
            v1 in 0.1f64..5.0, ratio in 1.0f64..6.0, k in -2.0f64..3.0,
            eps in 0.2f64..1.0, extra in 0.0f64..6.0, d in 1e-3f64..0.5,
        ) {
            let v2 = v1 * ratio;
            let r = 2.0 * eps + extra;
            let base = log_growth_bound(v1, v2, k, r, eps).unwrap();
            prop_assert!(log_growth_bound(v1, v2 * (1.0 + d), k, r, eps).unwrap() >= base);
            prop_assert!(log_growth_bound(v1, v2, k + d, r, eps).unwrap() >= base);
            if k >= 0.0 {
                prop_assert!(log_growth_bound(v1, v2, k, r + d, eps).unwrap() >= base);
            }
        }
    }
}
