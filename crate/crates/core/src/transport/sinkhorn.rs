//! Entropic transport by log-domain Sinkhorn iterations with ε-scaling,
//! followed by rounding onto the exact marginals.

use super::exact::check_marginals;
use super::{CostMatrix, PlanEntry, TransportPlan};
use crate::error::{Error, Result};

/// Marginal L1 violation at which each ε stage stops.
const STAGE_TOL: f64 = 1e-11;
const MAX_ITER_PER_STAGE: usize = 20_000;

/// Entropically regularized plan at regularization `epsilon` (same units as
/// the costs). Marginals are exact after rounding up to floating point.
pub fn solve_sinkhorn(costs: &CostMatrix, source: &[f64], target: &[f64], epsilon: f64) -> Result<TransportPlan> {
    check_marginals(costs, source, target)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::input(format!(
            "regularization epsilon = {epsilon} must be positive"
        )));
    }
    let (m, n) = (costs.rows(), costs.cols());
    let log_a: Vec<f64> = source.iter().map(|w| w.ln()).collect();
    let log_b: Vec<f64> = target.iter().map(|w| w.ln()).collect();
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];

    let mut eps = costs.scale().max(epsilon);
    loop {
        for _ in 0..MAX_ITER_PER_STAGE {
            for i in 0..m {
                if source[i] == 0.0 {
                    f[i] = f64::NEG_INFINITY;
                    continue;
                }
                let row = costs.row(i);
                f[i] = eps * log_a[i] - eps * log_sum_exp((0..n).map(|j| (g[j] - row[j]) / eps));
            }
            for j in 0..n {
                if target[j] == 0.0 {
                    g[j] = f64::NEG_INFINITY;
                    continue;
                }
                g[j] = eps * log_b[j] - eps * log_sum_exp((0..m).map(|i| (f[i] - costs.get(i, j)) / eps));
            }
            // columns are exact after the g update; check the rows
            let err: f64 = (0..m)
                .map(|i| {
                    let row = costs.row(i);
                    let s: f64 = (0..n).map(|j| plan_entry(f[i], g[j], row[j], eps)).sum();
                    (s - source[i]).abs()
                })
                .sum();
            if err < STAGE_TOL {
                break;
            }
        }
        if eps <= epsilon {
            break;
        }
        eps = (0.5 * eps).max(epsilon);
    }

    let mut p: Vec<f64> = (0..m)
        .flat_map(|i| {
            let row = costs.row(i);
            let (fi, g) = (f[i], &g);
            (0..n).map(move |j| plan_entry(fi, g[j], row[j], epsilon))
        })
        .collect();
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::numeric("Sinkhorn plan is not finite", f64::NAN));
    }
    round_to_marginals(&mut p, m, n, source, target);

    let mut entries = Vec::new();
    let mut cost = 0.0;
    for i in 0..m {
        for j in 0..n {
            let mass = p[i * n + j];
            if mass > 0.0 {
                cost += mass * costs.get(i, j);
                entries.push(PlanEntry { i, j, mass });
            }
        }
    }
    Ok(TransportPlan {
        rows: m,
        cols: n,
        entries,
        cost,
        certificate: None,
    })
}

fn plan_entry(f: f64, g: f64, c: f64, eps: f64) -> f64 {
    if f == f64::NEG_INFINITY || g == f64::NEG_INFINITY {
        0.0
    } else {
        ((f + g - c) / eps).exp()
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Scales rows and columns down to their marginals, then restores the missing
/// mass with a rank-one correction, giving a plan with exact marginals.
fn round_to_marginals(p: &mut [f64], m: usize, n: usize, a: &[f64], b: &[f64]) {
    for i in 0..m {
        let s: f64 = p[i * n..(i + 1) * n].iter().sum();
        if s > a[i] {
            let k = a[i] / s;
            p[i * n..(i + 1) * n].iter_mut().for_each(|x| *x *= k);
        }
    }
    for j in 0..n {
        let s: f64 = (0..m).map(|i| p[i * n + j]).sum();
        if s > b[j] {
            let k = b[j] / s;
            (0..m).for_each(|i| p[i * n + j] *= k);
        }
    }
    let ea: Vec<f64> = (0..m)
        .map(|i| a[i] - p[i * n..(i + 1) * n].iter().sum::<f64>())
        .collect();
    let eb: Vec<f64> = (0..n)
        .map(|j| b[j] - (0..m).map(|i| p[i * n + j]).sum::<f64>())
        .collect();
    let total: f64 = ea.iter().sum();
    if total > 0.0 {
        for i in 0..m {
            for j in 0..n {
                p[i * n + j] += (ea[i] * eb[j] / total).max(0.0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::solve_exact;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn close_to_exact_at_small_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [3, 5, 6] {
            let data: Vec<f64> = (0..n * n).map(|_| rng.gen::<f64>()).collect();
            let c = CostMatrix::new(n, n, data).unwrap();
            let w = vec![1.0 / n as f64; n];
            let exact = solve_exact(&c, &w, &w).unwrap();
            let approx = solve_sinkhorn(&c, &w, &w, 1e-3 * c.scale()).unwrap();
            assert!(approx.marginal_error(&w, &w) < 1e-8);
            assert!(approx.cost >= exact.cost - 1e-12);
            assert!(
                (approx.cost - exact.cost) < 1e-3 * c.scale(),
                "{} vs {}",
                approx.cost,
                exact.cost
            );
        }
    }

    #[test]
    fn single_coupling_and_identical_measures() {
        let c = CostMatrix::new(1, 1, vec![4.0]).unwrap();
        for eps in [10.0, 1.0, 1e-3] {
            let p = solve_sinkhorn(&c, &[1.0], &[1.0], eps).unwrap();
            assert!((p.cost - 4.0).abs() < 1e-14);
        }
        let pts = [0.0, 1.0, 2.5];
        let data: Vec<f64> = pts
            .iter()
            .flat_map(|a| pts.iter().map(move |b| (a - b) * (a - b)))
            .collect();
        let c = CostMatrix::new(3, 3, data).unwrap();
        let w = [0.2, 0.5, 0.3];
        let coarse = solve_sinkhorn(&c, &w, &w, 0.5).unwrap().cost;
        let fine = solve_sinkhorn(&c, &w, &w, 1e-3).unwrap().cost;
        assert!(fine < coarse && fine < 1e-12);
    }
}
