//! Constant-curvature comparison scalars.
//!
//! `k` is always a lower bound on the Ricci curvature and enters through
//! `√(|k|/(n−1))`, so `S(r; k)` with `n = 2` is the Jacobi growth ratio of the
//! plane of curvature `k`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Arguments of the comparison function and the scalar gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonParams {
    pub r: f64,
    pub t: f64,
    pub k: f64,
    pub n: u32,
}

impl ComparisonParams {
    pub fn new(r: f64, t: f64, k: f64, n: u32) -> Result<Self> {
        let p = Self { r, t, k, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::domain(format!("dimension n = {} must be at least 2", self.n)));
        }
        if !(self.r >= 0.0) {
            return Err(Error::domain(format!("radius r = {} must be nonnegative", self.r)));
        }
        if !(0.0..=1.0).contains(&self.t) {
            return Err(Error::domain(format!("t = {} must lie in [0, 1]", self.t)));
        }
        check_guard(self.r, self.k, self.n)
    }
}

/// Below this argument sin/sinh ratios use their Taylor series.
const SERIES_SWITCH: f64 = 1e-4;

/// Largest admissible `k > 0` at radius `r`: `r √(k/(n−1)) < π`.
pub fn k_guard(r: f64, n: u32) -> f64 {
    if r == 0.0 {
        f64::INFINITY
    } else {
        (n as f64 - 1.0) * (std::f64::consts::PI / r).powi(2)
    }
}

fn check_guard(r: f64, k: f64, n: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("dimension n = {n} must be at least 2")));
    }
    if k > 0.0 && r * (k / (n as f64 - 1.0)).sqrt() >= std::f64::consts::PI {
        return Err(Error::domain(format!(
            "r √(k/(n−1)) = {:.6} reaches π (r = {r}, k = {k}, n = {n})",
            r * (k / (n as f64 - 1.0)).sqrt()
        )));
    }
    Ok(())
}

/// `S(r; k)`: `sin(x)/x` for `k > 0`, 1 for `k = 0`, `sinh(x)/x` for `k < 0`,
/// with `x = r √(|k|/(n−1))`.
pub fn comparison_s(r: f64, k: f64, n: u32) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::domain(format!("radius r = {r} must be nonnegative")));
    }
    check_guard(r, k, n)?;
    if k == 0.0 {
        return Ok(1.0);
    }
    let x = r * (k.abs() / (n as f64 - 1.0)).sqrt();
    let sign = if k < 0.0 { 1.0 } else { -1.0 };
    if x < SERIES_SWITCH {
        let x2 = x * x;
        return Ok(1.0 + sign * x2 / 6.0 + x2 * x2 / 120.0);
    }
    Ok(if k < 0.0 { x.sinh() / x } else { x.sin() / x })
}

/// `(1−t) log S((1−t)r;k) + t log S(tr;k) − log S(r;k) − t(1−t)/2 · k/(n−1) · r²`.
pub fn rs_gap(t: f64, r: f64, k: f64, n: u32) -> Result<f64> {
    ComparisonParams::new(r, t, k, n)?;
    let s_lo = comparison_s((1.0 - t) * r, k, n)?;
    let s_hi = comparison_s(t * r, k, n)?;
    let s = comparison_s(r, k, n)?;
    Ok((1.0 - t) * s_lo.ln() + t * s_hi.ln() - s.ln() - 0.5 * t * (1.0 - t) * k / (n as f64 - 1.0) * r * r)
}

/// `(S(tL;k)/S(L;k))^{n−1}`, the lower bound on `v_t(x, y)` when
/// `Ric ≥ k` and `ρ(x, y) = L`.
pub fn distortion_lower_bound(t: f64, length: f64, k: f64, n: u32) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("t = {t} must lie in (0, 1]")));
    }
    if !(length >= 0.0) {
        return Err(Error::domain(format!("length {length} must be nonnegative")));
    }
    let ratio = comparison_s(t * length, k, n)? / comparison_s(length, k, n)?;
    Ok(ratio.powi(n as i32 - 1))
}

/// A row of the `compare` sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapSample {
    pub t: f64,
    pub r: f64,
    pub k: f64,
    pub n: u32,
    pub gap: f64,
}

/// Grid of `rs_gap` values: `t ∈ {0.05, …, 0.95}`, `r_count` radii in `(0, r_max]`,
/// `k_count` curvatures from `k_min` to just below the positive guard.
pub fn rs_gap_grid(
    r_max: f64,
    r_count: usize,
    k_min: f64,
    k_count: usize,
    dims: &[u32],
    exec: crate::par::Execution,
) -> Result<Vec<GapSample>> {
    let ts: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();
    let mut jobs = Vec::new();
    for &n in dims {
        for ri in 1..=r_count {
            let r = r_max * ri as f64 / r_count as f64;
            let k_max = 0.999 * k_guard(r, n);
            for ki in 0..k_count {
                let k = k_min + (k_max - k_min) * ki as f64 / (k_count - 1).max(1) as f64;
                jobs.push((n, r, k));
            }
        }
    }
    let rows = exec.try_map(&jobs, |&(n, r, k)| {
        ts.iter()
            .map(|&t| rs_gap(t, r, k, n).map(|gap| GapSample { t, r, k, n, gap }))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn comparison_s_examples() {
        assert_eq!(comparison_s(3.7, 0.0, 2).unwrap(), 1.0);
        for k in [-4.0, -1.0, 0.5, 2.0] {
            assert_eq!(comparison_s(0.0, k, 3).unwrap(), 1.0);
        }
        assert!((comparison_s(1.0, -1.0, 2).unwrap() - 1f64.sinh()).abs() < 1e-15);
        assert!((comparison_s(1.0, -1.0, 2).unwrap() - 1.175201).abs() < 1e-6);
    }

    #[test]
    fn guard_is_enforced() {
        assert!(matches!(comparison_s(3.2, 1.0, 2), Err(Error::Domain(_))));
        assert!(comparison_s(3.1, 1.0, 2).is_ok());
        assert!(matches!(comparison_s(1.0, 1.0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn rs_gap_examples() {
        for (t, r) in [(0.3, 1.0), (0.5, 4.0), (0.9, 0.1)] {
            assert_eq!(rs_gap(t, r, 0.0, 3).unwrap(), 0.0);
        }
        let s_half = 0.5f64.sinh() / 0.5;
        let expected = s_half.ln() - 1f64.sinh().ln() + 0.125;
        let g = rs_gap(0.5, 1.0, -1.0, 2).unwrap();
        assert!((g - expected).abs() < 1e-15);
        assert!((g - 0.0048855).abs() < 1e-6);
        for k in [-3.0, 0.7] {
            assert!(rs_gap(0.0, 1.3, k, 2).unwrap().abs() < 1e-15);
            assert!(rs_gap(1.0, 1.3, k, 2).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn distortion_bound_examples() {
        assert_eq!(distortion_lower_bound(0.3, 2.0, 0.0, 2).unwrap(), 1.0);
        assert!((distortion_lower_bound(1.0, 2.0, -1.0, 2).unwrap() - 1.0).abs() < 1e-15);
        let b = distortion_lower_bound(0.5, 2.0, -1.0, 2).unwrap();
        assert!((b - 1f64.sinh() / 2f64.sinh() * 2.0).abs() < 1e-14);
        assert!((b - 0.648054).abs() < 1e-6);
    }

    #[test]
    fn continuity_across_zero_curvature() {
        for eps in [1e-6, 1e-8, 1e-10] {
            for r in [0.5, 2.0, 5.0] {
                let plus = comparison_s(r, eps, 2).unwrap();
                let minus = comparison_s(r, -eps, 2).unwrap();
                assert!((plus - 1.0).abs() <= r * r * eps);
                assert!((minus - 1.0).abs() <= r * r * eps);
            }
        }
    }

    #[test]
    fn series_and_direct_branches_agree() {
        let x = SERIES_SWITCH;
        let below = comparison_s(x * (1.0 - 1e-9), -1.0, 2).unwrap();
        let above = (x * (1.0 + 1e-9)).sinh() / (x * (1.0 + 1e-9));
        assert!((below - above).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn s_is_nonincreasing_in_k(r in 0.01f64..5.0, k in -10.0f64..1.0, n in 2u32..6) {
            let dk = 1e-3;
            prop_assume!(k + dk < 0.99 * k_guard(r, n));
            let a = comparison_s(r, k, n).unwrap();
            let b = comparison_s(r, k + dk, n).unwrap();
            prop_assert!(b <= a + 1e-15);
        }

        #[test]
        fn distortion_bound_below_one_for_nonpositive_k(
            t in 0.01f64..0.99, l in 0.01f64..5.0, k in -10.0f64..0.0, n in 2u32..6
        ) {
            prop_assert!(distortion_lower_bound(t, l, k, n).unwrap() <= 1.0 + 1e-15);
        }

        #[test]
        fn rs_gap_nonnegative(t in 0.0f64..=1.0, r in 0.0f64..5.0, k in -10.0f64..10.0, n in 2u32..6) {
            prop_assume!(k < 0.999 * k_guard(r, n));
            prop_assert!(rs_gap(t, r, k, n).unwrap() >= -1e-12);
        }
    }
}
