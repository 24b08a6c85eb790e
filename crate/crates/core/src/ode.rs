//! Dormand–Prince 5(4) integrator with embedded error control.
//!
//! States are fixed-size arrays; geodesic and Jacobi systems are at most a
//! handful of components so stack arrays keep the hot loop allocation free.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub const fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            rtol: self.rtol * factor,
            atol: self.atol * factor,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-10, 1e-12)
    }
}

const MAX_STEPS: usize = 200_000;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn comb<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// Integrates `y' = rhs(s, y)` from `s0` through each of the sorted output
/// abscissae in `outputs`, landing exactly on them. `observe` sees every
/// accepted step and may abort the integration.
pub fn integrate_observed<const N: usize, F, O>(
    mut rhs: F,
    s0: f64,
    y0: [f64; N],
    outputs: &[f64],
    tol: Tolerance,
    mut observe: O,
) -> Result<Vec<[f64; N]>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N]) -> Result<()>,
{
    let mut out = Vec::with_capacity(outputs.len());
    let mut s = s0;
    let mut y = y0;
    let mut k1 = rhs(s, &y);
    let span = outputs.last().map_or(0.0, |e| (e - s0).abs());
    let mut h = (span * 0.05).max(1e-6);
    let mut steps = 0usize;

    for &target in outputs {
        let dir = if target >= s { 1.0 } else { -1.0 };
        while (target - s).abs() > 1e-15 * (1.0 + target.abs()) {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::numeric("ODE step budget exhausted", (target - s).abs()));
            }
            let mut last = false;
            let mut step = h.min((target - s).abs());
            if step >= (target - s).abs() {
                step = (target - s).abs();
                last = true;
            }
            let hs = dir * step;
            let k2 = rhs(s + C2 * hs, &comb(&y, hs, &[(A21, &k1)]));
            let k3 = rhs(s + C3 * hs, &comb(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(s + C4 * hs, &comb(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = rhs(
                s + C5 * hs,
                &comb(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = rhs(
                s + hs,
                &comb(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = comb(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = rhs(s + hs, &y_new);

            let mut err = 0.0;
            for i in 0..N {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                h = step * 0.1;
                if h < 1e-14 {
                    return Err(Error::numeric("ODE right-hand side not finite", f64::NAN));
                }
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                s = if last { target } else { s + hs };
                y = y_new;
                k1 = k7;
                observe(s, &y)?;
                if !last || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                h = step * factor.min(1.0);
                if h < 1e-14 * (1.0 + s.abs()) {
                    return Err(Error::numeric("ODE step size underflow", err));
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}

pub fn integrate_to<const N: usize, F>(
    rhs: F,
    s0: f64,
    y0: [f64; N],
    outputs: &[f64],
    tol: Tolerance,
) -> Result<Vec<[f64; N]>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    integrate_observed(rhs, s0, y0, outputs, tol, |_, _| Ok(()))
}

pub fn integrate<const N: usize, F>(rhs: F, s0: f64, y0: [f64; N], s1: f64, tol: Tolerance) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    Ok(integrate_to(rhs, s0, y0, &[s1], tol)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_matches_closed_form() {
        let tol = Tolerance::new(1e-12, 1e-14);
        let y = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 3.0, tol).unwrap();
        assert!((y[0] - 3f64.sin()).abs() < 1e-10);
        assert!((y[1] - 3f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn outputs_land_on_requested_abscissae() {
        let tol = Tolerance::default();
        let pts = [0.25, 0.5, 1.0];
        let ys = integrate_to(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], &pts, tol).unwrap();
        for (p, y) in pts.iter().zip(&ys) {
            assert!((y[0] - p.exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn backward_integration() {
        let y = integrate(|_, y: &[f64; 1]| [y[0]], 1.0, [1f64.exp()], 0.0, Tolerance::default()).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn observer_can_abort() {
        let r = integrate_observed(
            |_, _: &[f64; 1]| [1.0],
            0.0,
            [0.0],
            &[1.0],
            Tolerance::default(),
            |s, _| {
                if s > 0.5 {
                    Err(Error::ConjugatePoint { s, length: 1.0 })
                } else {
                    Ok(())
                }
            },
        );
        assert!(matches!(r, Err(Error::ConjugatePoint { .. })));
    }
}
