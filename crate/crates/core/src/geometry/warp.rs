//! Warp functions `f(r)` of rotationally symmetric metrics `dr² + f(r)² dθ²`.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::expr::Expr;
use crate::quad::GaussLegendre;

/// Cubic spline through `(r_i, f_i)` with `f'(0) = 1` clamped at the pole and
/// a natural right end.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
    cumulative: Vec<f64>,
}

impl CubicSpline {
    pub fn clamped_at_pole(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let m = knots.len();
        if m < 3 || values.len() != m {
            return Err(Error::input("warp table needs at least three rows of (r, f(r))"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::input("warp table radii must be strictly increasing"));
        }
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        // Tridiagonal system for second derivatives M_0..M_{m-1}.
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        diag[0] = 2.0 * h[0];
        upper[0] = h[0];
        rhs[0] = 6.0 * ((values[1] - values[0]) / h[0] - 1.0);
        for i in 1..m - 1 {
            lower[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            upper[i] = h[i];
            rhs[i] = 6.0 * ((values[i + 1] - values[i]) / h[i] - (values[i] - values[i - 1]) / h[i - 1]);
        }
        diag[m - 1] = 1.0;
        rhs[m - 1] = 0.0;
        for i in 1..m {
            let w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut second = vec![0.0; m];
        second[m - 1] = rhs[m - 1] / diag[m - 1];
        for i in (0..m - 1).rev() {
            second[i] = (rhs[i] - upper[i] * second[i + 1]) / diag[i];
        }
        let mut spline = Self {
            knots,
            values,
            second,
            cumulative: vec![0.0; m],
        };
        for i in 0..m - 1 {
            let c = spline.coefficients(i);
            let hi = h[i];
            spline.cumulative[i + 1] = spline.cumulative[i]
                + c[0] * hi
                + c[1] * hi * hi / 2.0
                + c[2] * hi.powi(3) / 3.0
                + c[3] * hi.powi(4) / 4.0;
        }
        Ok(spline)
    }

    fn segment(&self, r: f64) -> usize {
        let m = self.knots.len();
        match self.knots.partition_point(|k| *k <= r) {
            0 => 0,
            p if p >= m => m - 2,
            p => p - 1,
        }
    }

    fn coefficients(&self, i: usize) -> [f64; 4] {
        let h = self.knots[i + 1] - self.knots[i];
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        [
            y0,
            (y1 - y0) / h - h * (2.0 * m0 + m1) / 6.0,
            m0 / 2.0,
            (m1 - m0) / (6.0 * h),
        ]
    }

    pub fn eval(&self, r: f64, order: usize) -> f64 {
        let i = self.segment(r);
        let t = r - self.knots[i];
        let [a, b, c, d] = self.coefficients(i);
        match order {
            0 => a + t * (b + t * (c + t * d)),
            1 => b + t * (2.0 * c + 3.0 * d * t),
            2 => 2.0 * c + 6.0 * d * t,
            3 => 6.0 * d,
            _ => 0.0,
        }
    }

    pub fn integral(&self, r: f64) -> f64 {
        let i = self.segment(r);
        let t = r - self.knots[i];
        let [a, b, c, d] = self.coefficients(i);
        self.cumulative[i] + t * (a + t * (b / 2.0 + t * (c / 3.0 + t * d / 4.0)))
    }

    pub fn domain_end(&self) -> f64 {
        *self.knots.last().expect("non-empty")
    }
}

/// Parses a two-column whitespace separated table; `#` starts a comment.
pub fn parse_two_column(text: &str, what: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if cols.len() != 2 {
            return Err(Error::Parse {
                field: format!("{what} line {}", lineno + 1),
                column: 1,
                message: format!("expected two columns, found {}", cols.len()),
            });
        }
        let parse = |s: &str, col: usize| {
            s.parse::<f64>().map_err(|_| Error::Parse {
                field: format!("{what} line {}", lineno + 1),
                column: col,
                message: format!("not a number: '{s}'"),
            })
        };
        xs.push(parse(cols[0], 1)?);
        ys.push(parse(cols[1], 2)?);
    }
    Ok((xs, ys))
}

#[derive(Debug, Clone)]
struct Symbolic {
    source: String,
    derivatives: [Expr; 4],
    /// `G` at multiples of `PANEL`, filled on first use.
    g_table: OnceLock<Vec<f64>>,
}

/// Panel width and count of the cached primitive of symbolic warps.
const PANEL: f64 = 0.25;
const PANELS: usize = 64;

#[derive(Debug, Clone)]
enum Repr {
    Flat,
    Sinh,
    Sin,
    Symbolic(Box<Symbolic>),
    Spline(CubicSpline),
}

/// The warp `f` with derivatives up to third order and `G(r) = ∫₀ʳ f`.
#[derive(Debug, Clone)]
pub struct Warp {
    repr: Repr,
}

impl fmt::Display for Warp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Flat => write!(f, "r"),
            Repr::Sinh => write!(f, "sinh(r)"),
            Repr::Sin => write!(f, "sin(r)"),
            Repr::Symbolic(s) => write!(f, "{}", s.source),
            Repr::Spline(s) => write!(f, "spline table ({} knots)", s.knots.len()),
        }
    }
}

impl Warp {
    pub fn flat() -> Self {
        Self { repr: Repr::Flat }
    }

    pub fn sinh() -> Self {
        Self { repr: Repr::Sinh }
    }

    pub fn sin() -> Self {
        Self { repr: Repr::Sin }
    }

    pub fn expression(source: &str, field: &str) -> Result<Self> {
        let f = Expr::parse(source, field)?;
        let d1 = f.derivative();
        let d2 = d1.derivative();
        let d3 = d2.derivative();
        Ok(Self {
            repr: Repr::Symbolic(Box::new(Symbolic {
                source: source.trim().to_string(),
                derivatives: [f, d1, d2, d3],
                g_table: OnceLock::new(),
            })),
        })
    }

    pub fn table(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(Self {
            repr: Repr::Spline(CubicSpline::clamped_at_pole(knots, values)?),
        })
    }

    /// Largest radius the warp is defined on (tables only).
    pub fn table_end(&self) -> Option<f64> {
        match &self.repr {
            Repr::Spline(s) => Some(s.domain_end()),
            _ => None,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.derivative(r, 0)
    }

    /// `order`-th derivative of `f` at `r`, `order ≤ 3`.
    pub fn derivative(&self, r: f64, order: usize) -> f64 {
        match &self.repr {
            Repr::Flat => match order {
                0 => r,
                1 => 1.0,
                _ => 0.0,
            },
            Repr::Sinh => {
                if order.is_multiple_of(2) {
                    r.sinh()
                } else {
                    r.cosh()
                }
            }
            Repr::Sin => match order % 4 {
                0 => r.sin(),
                1 => r.cos(),
                2 => -r.sin(),
                _ => -r.cos(),
            },
            Repr::Symbolic(s) => s.derivatives[order.min(3)].eval(r),
            Repr::Spline(s) => s.eval(r, order),
        }
    }

    /// `G(r) = ∫₀ʳ f(s) ds`, the radial area primitive (area of the disc of
    /// radius `r` about the pole is `2π G(r)`).
    pub fn antiderivative(&self, r: f64) -> f64 {
        match &self.repr {
            Repr::Flat => 0.5 * r * r,
            Repr::Sinh => {
                let h = (0.5 * r).sinh();
                2.0 * h * h
            }
            Repr::Sin => {
                let h = (0.5 * r).sin();
                2.0 * h * h
            }
            Repr::Spline(s) => s.integral(r),
            Repr::Symbolic(s) => {
                if r == 0.0 {
                    return 0.0;
                }
                let rule = GaussLegendre::cached(16);
                let f = |x: f64| s.derivatives[0].eval(x);
                let table = s.g_table.get_or_init(|| {
                    let mut acc = vec![0.0];
                    for p in 0..PANELS {
                        let a = p as f64 * PANEL;
                        acc.push(acc[p] + rule.integrate(a, a + PANEL, f));
                    }
                    acc
                });
                let p = (r / PANEL).floor();
                if r > 0.0 && (p as usize) < PANELS {
                    let a = p * PANEL;
                    return table[p as usize] + rule.integrate(a, r, f);
                }
                let panels = (r.abs() / PANEL).ceil().max(1.0) as usize;
                let width = r / panels as f64;
                (0..panels)
                    .map(|p| {
                        let a = p as f64 * width;
                        rule.integrate(a, a + width, f)
                    })
                    .sum()
            }
        }
    }

    /// `G(r) / r²`, finite at the pole (limit 1/2).
    pub fn antiderivative_over_square(&self, r: f64) -> f64 {
        if r.abs() < 1e-4 {
            // G = r²/2 + f'''(0) r⁴/24 + O(r⁶)
            0.5 + self.derivative(0.0, 3) * r * r / 24.0
        } else {
            self.antiderivative(r) / (r * r)
        }
    }

    /// Inverse of [`Warp::antiderivative`] on `[0, hi]`.
    pub fn antiderivative_inverse(&self, g: f64, hi: f64) -> f64 {
        if g <= 0.0 {
            return 0.0;
        }
        match &self.repr {
            Repr::Flat => return (2.0 * g).sqrt(),
            Repr::Sinh => return 2.0 * (0.5 * g).sqrt().asinh(),
            Repr::Sin if g < 2.0 => return 2.0 * (0.5 * g).sqrt().asin(),
            _ => {}
        }
        let (mut lo, mut up) = (0.0, hi);
        let mut r = (2.0 * g).sqrt().min(hi);
        for _ in 0..200 {
            let val = self.antiderivative(r) - g;
            if val > 0.0 {
                up = r;
            } else {
                lo = r;
            }
            let slope = self.value(r);
            let mut next = r - val / slope;
            if !(next > lo && next < up) || !next.is_finite() {
                next = 0.5 * (lo + up);
            }
            if (next - r).abs() <= 1e-15 * (1.0 + r) {
                return next;
            }
            r = next;
        }
        r
    }

    /// Gauss curvature `-f''(r)/f(r)`; at the pole the limit `-f'''(0)`.
    pub fn gauss_curvature(&self, r: f64) -> f64 {
        match &self.repr {
            Repr::Flat => 0.0,
            Repr::Sinh => -1.0,
            Repr::Sin => 1.0,
            _ => {
                if r.abs() < 1e-12 {
                    -self.derivative(0.0, 3)
                } else {
                    -self.derivative(r, 2) / self.value(r)
                }
            }
        }
    }

    /// Validates `f(0) = 0`, `f'(0) = 1` and `f > 0` on `(0, r_max]`.
    pub fn validate(&self, r_max: f64) -> Result<()> {
        let f0 = self.value(0.0);
        let d0 = self.derivative(0.0, 1);
        if f0.abs() > 1e-10 {
            return Err(Error::input(format!("warp must vanish at the pole, f(0) = {f0}")));
        }
        if (d0 - 1.0).abs() > 1e-8 {
            return Err(Error::input(format!(
                "warp must satisfy f'(0) = 1 (smooth pole), found {d0}; rescale f by 1/f'(0)"
            )));
        }
        if let Some(end) = self.table_end() {
            if r_max > end + 1e-12 {
                return Err(Error::domain(format!(
                    "r_max = {r_max} exceeds the warp table range {end}"
                )));
            }
        }
        let samples = 4000;
        for i in 1..=samples {
            let r = r_max * i as f64 / samples as f64;
            let v = self.value(r);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::input(format!("warp not positive at r = {r}: f = {v}")));
            }
        }
        Ok(())
    }

    pub fn is_constant_curvature(&self) -> bool {
        matches!(self.repr, Repr::Flat | Repr::Sinh | Repr::Sin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_primitives() {
        for w in [Warp::flat(), Warp::sinh(), Warp::sin()] {
            for r in [0.0, 0.3, 1.0, 1.4] {
                let num = crate::quad::adaptive(0.0, r, 1e-14, |x| w.value(x)).unwrap();
                assert!((w.antiderivative(r) - num).abs() < 1e-13);
                let back = w.antiderivative_inverse(w.antiderivative(r), 3.0);
                assert!((back - r).abs() < 1e-9, "{w}: {back} vs {r}");
            }
        }
    }

    #[test]
    fn symbolic_warp_curvature_and_inverse() {
        let w = Warp::expression("(sinh(r) + 0.05*sinh(2*r))/1.1", "warp").unwrap();
        w.validate(4.0).unwrap();
        let r = 1.0f64;
        let f = (r.sinh() + 0.05 * (2.0 * r).sinh()) / 1.1;
        let f2 = (r.sinh() + 0.2 * (2.0 * r).sinh()) / 1.1;
        assert!((w.gauss_curvature(r) + f2 / f).abs() < 1e-14);
        assert!((w.gauss_curvature(0.0) + 1.4 / 1.1).abs() < 1e-14);
        let g = w.antiderivative(2.3);
        let exact = ((2.3f64).cosh() - 1.0 + 0.025 * ((4.6f64).cosh() - 1.0)) / 1.1;
        assert!((g - exact).abs() < 1e-12);
        assert!((w.antiderivative_inverse(g, 4.0) - 2.3).abs() < 1e-10);
    }

    #[test]
    fn unnormalized_warp_is_rejected() {
        let w = Warp::expression("sinh(r) + 0.05*sinh(2*r)", "warp").unwrap();
        assert!(matches!(w.validate(2.0), Err(Error::Input(_))));
    }

    #[test]
    fn spline_reproduces_sinh() {
        let knots: Vec<f64> = (0..=400).map(|i| i as f64 * 0.01).collect();
        let values: Vec<f64> = knots.iter().map(|r| r.sinh()).collect();
        let w = Warp::table(knots, values).unwrap();
        w.validate(4.0).unwrap();
        assert!((w.value(1.234) - 1.234f64.sinh()).abs() < 1e-8);
        assert!((w.derivative(1.234, 2) - 1.234f64.sinh()).abs() < 1e-3);
        assert!((w.antiderivative(2.0) - (2f64.cosh() - 1.0)).abs() < 1e-8);
        assert!((w.gauss_curvature(1.5) + 1.0).abs() < 2e-3);
    }

    #[test]
    fn table_parser_diagnostics() {
        let (x, y) = parse_two_column("# r f\n0 0\n0.5, 0.52\n1 1.17\n", "t").unwrap();
        assert_eq!(x, vec![0.0, 0.5, 1.0]);
        assert_eq!(y[1], 0.52);
        let err = parse_two_column("0 0\n1 abc\n", "t").unwrap_err();
        assert!(matches!(err, Error::Parse { column: 2, .. }));
    }
}
