//! Optimal transport: exact and entropic discrete solvers, the radial monotone
//! rearrangement, `W₂` and displacement interpolation.

mod exact;
mod measure;
mod radial;
mod sinkhorn;

use std::io::Write;

use serde::Serialize;

pub use exact::solve_exact;
pub use measure::{GridMeasure, GridResolution, MeasureSpec, ParticleMeasure};
pub use radial::{InterpolatedMap, MonotoneRadialMap, RadialProfile};
pub use sinkhorn::solve_sinkhorn;

use crate::error::{Error, Result};
use crate::geometry::{GeodesicSegment, ManifoldModel, Point};
use crate::par::Execution;

/// Dense row-major cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::input(format!(
                "cost matrix data has {} entries, expected {rows}×{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// `ρ(x_i, y_j)²`, assembled row-parallel.
    pub fn squared_distances(model: &ManifoldModel, xs: &[Point], ys: &[Point], exec: Execution) -> Result<Self> {
        let rows = exec.try_map(xs, |&x| {
            ys.iter()
                .map(|&y| model.distance(x, y).map(|d| d * d))
                .collect::<Result<Vec<_>>>()
        })?;
        Self::new(xs.len(), ys.len(), rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Largest absolute entry.
    pub fn scale(&self) -> f64 {
        self.data.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanEntry {
    pub i: usize,
    pub j: usize,
    pub mass: f64,
}

/// Dual potentials certifying optimality of an exact plan: `u_i + v_j ≤ c_ij`
/// everywhere, with equality on the support.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `min_ij c_ij − u_i − v_j`; nonnegative up to rounding at optimality.
    pub min_reduced_cost: f64,
    /// Primal cost minus dual objective.
    pub duality_gap: f64,
}

/// Sparse coupling `π_ij` with its transport cost `Σ π_ij c_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<PlanEntry>,
    pub cost: f64,
    pub certificate: Option<DualCertificate>,
}

impl TransportPlan {
    /// Largest deviation of a row or column sum from its marginal.
    pub fn marginal_error(&self, source: &[f64], target: &[f64]) -> f64 {
        let mut rows = vec![0.0; self.rows];
        let mut cols = vec![0.0; self.cols];
        for e in &self.entries {
            rows[e.i] += e.mass;
            cols[e.j] += e.mass;
        }
        rows.iter()
            .zip(source)
            .chain(cols.iter().zip(target))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Geodesic for every coupled pair, in entry order.
    pub fn matching_geodesics<'m>(
        &self,
        model: &'m ManifoldModel,
        source: &ParticleMeasure,
        target: &ParticleMeasure,
        exec: Execution,
    ) -> Result<Vec<GeodesicSegment<'m>>> {
        exec.try_map(&self.entries, |e| {
            model.geodesic(source.points[e.i], target.points[e.j])
        })
    }

    /// Writes `i,j,mass` triplets with a header row.
    pub fn write_triplets<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::input(format!("cannot write plan: {e}"));
        w.write_record(["i", "j", "mass"]).map_err(io)?;
        for e in &self.entries {
            w.serialize((e.i, e.j, e.mass)).map_err(io)?;
        }
        w.flush().map_err(|e| Error::input(format!("cannot write plan: {e}")))?;
        Ok(())
    }
}

/// Discrete solver selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    Exact,
    /// Regularization relative to the largest cost.
    Sinkhorn {
        relative_epsilon: f64,
    },
}

pub fn solve(costs: &CostMatrix, source: &[f64], target: &[f64], method: Method) -> Result<TransportPlan> {
    match method {
        Method::Exact => solve_exact(costs, source, target),
        Method::Sinkhorn { relative_epsilon } => solve_sinkhorn(
            costs,
            source,
            target,
            relative_epsilon * costs.scale().max(f64::MIN_POSITIVE),
        ),
    }
}

/// Optimal plan between particle measures under squared geodesic cost.
pub fn plan_particles(
    model: &ManifoldModel,
    mu: &ParticleMeasure,
    nu: &ParticleMeasure,
    method: Method,
    exec: Execution,
) -> Result<TransportPlan> {
    let costs = CostMatrix::squared_distances(model, &mu.points, &nu.points, exec)?;
    solve(&costs, &mu.weights, &nu.weights, method)
}

/// `W₂(μ, ν)` between particle measures.
pub fn w2(
    model: &ManifoldModel,
    mu: &ParticleMeasure,
    nu: &ParticleMeasure,
    method: Method,
    exec: Execution,
) -> Result<f64> {
    Ok(plan_particles(model, mu, nu, method, exec)?.cost.max(0.0).sqrt())
}

/// `W₂` between symmetric grid measures through the radial monotone map.
pub fn w2_radial(model: &ManifoldModel, mu: &GridMeasure, nu: &GridMeasure) -> Result<f64> {
    Ok(MonotoneRadialMap::new(model, mu, nu)?.cost().max(0.0).sqrt())
}

/// Displacement interpolation of a discrete plan: every coupled pair moves to
/// its geodesic point at `t`, carrying the coupled mass.
pub fn interpolate_plan(
    model: &ManifoldModel,
    plan: &TransportPlan,
    source: &ParticleMeasure,
    target: &ParticleMeasure,
    t: f64,
    exec: Execution,
) -> Result<ParticleMeasure> {
    check_t(t)?;
    if t == 0.0 {
        return Ok(source.clone());
    }
    if t == 1.0 {
        return Ok(target.clone());
    }
    let points = exec.try_map(&plan.entries, |e| {
        model.geodesic(source.points[e.i], target.points[e.j])?.point_at(t)
    })?;
    let weights = plan.entries.iter().map(|e| e.mass).collect();
    ParticleMeasure::normalized(points, weights)
}

/// `(F_t)_* μ₀` for the radial map between symmetric measures, binned on the
/// source resolution; the endpoints are returned unchanged.
pub fn interpolate_radial(
    map: &MonotoneRadialMap,
    mu0: &GridMeasure,
    mu1: &GridMeasure,
    t: f64,
) -> Result<GridMeasure> {
    check_t(t)?;
    if t == 0.0 {
        return Ok(mu0.clone());
    }
    if t == 1.0 {
        return Ok(mu1.clone());
    }
    map.pushforward(t, mu0.rings(), mu0.n_theta())
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::domain(format!("t = {t} must lie in [0, 1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_diracs() {
        let h = ManifoldModel::hyperbolic(5.0).unwrap();
        let (x, y) = (Point::polar(1.0, 0.0), Point::polar(3.0, 0.0));
        let (mu, nu) = (ParticleMeasure::dirac(x), ParticleMeasure::dirac(y));
        let d = w2(&h, &mu, &nu, Method::Exact, Execution::Sequential).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
        let s = w2(
            &h,
            &mu,
            &nu,
            Method::Sinkhorn { relative_epsilon: 0.3 },
            Execution::Sequential,
        )
        .unwrap();
        assert!((s - 2.0).abs() < 1e-12);
        let plan = plan_particles(&h, &mu, &nu, Method::Exact, Execution::Sequential).unwrap();
        let mid = interpolate_plan(&h, &plan, &mu, &nu, 0.5, Execution::Sequential).unwrap();
        assert!(mid.points[0].dist_chart(Point::polar(2.0, 0.0)) < 1e-12);
        assert_eq!(
            interpolate_plan(&h, &plan, &mu, &nu, 0.0, Execution::Sequential).unwrap(),
            mu
        );
        assert_eq!(
            interpolate_plan(&h, &plan, &mu, &nu, 1.0, Execution::Sequential).unwrap(),
            nu
        );
        assert!(w2(&h, &mu, &mu, Method::Exact, Execution::Sequential).unwrap() == 0.0);
    }

    #[test]
    fn triplet_export() {
        let c = CostMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let plan = solve_exact(&c, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        let mut buf = Vec::new();
        plan.write_triplets(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "i,j,mass\n0,0,0.5\n1,1,0.5\n");
    }

    #[test]
    fn parallel_and_sequential_cost_matrices_agree() {
        let m = ManifoldModel::hyperbolic(4.0).unwrap();
        let xs: Vec<Point> = (0..7).map(|i| Point::polar(0.3 * i as f64, i as f64)).collect();
        let a = CostMatrix::squared_distances(&m, &xs, &xs, Execution::Sequential).unwrap();
        let b = CostMatrix::squared_distances(&m, &xs, &xs, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
