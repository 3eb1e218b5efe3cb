//! Frank–Wolfe over the kernel polytope `{Q ≥ 0 : Σᵢ μᵢ Qᵢⱼ = νⱼ}`.
//!
//! The row sums of `Q` are free, so the linear oracle decouples over columns: column `j`
//! sends all of `νⱼ` to the row minimizing `∂/∂Qᵢⱼ / μᵢ`.

use super::scalar::golden_min;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FwError {
    #[error("oracle failed: {0}")]
    Oracle(String),
    #[error("no row carries positive weight")]
    EmptySupport,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepRule {
    /// `2/(t+2)`.
    Open,
    /// Golden-section search on the segment to the vertex.
    LineSearch,
}

#[derive(Clone, Debug)]
pub struct FwState {
    /// `n × m`; rows with `μᵢ = 0` stay zero.
    pub q: Vec<Vec<f64>>,
    pub gap: f64,
    pub iterations: usize,
    pub value: f64,
}

pub type Grid = Vec<Vec<f64>>;

/// Linear minimization oracle: the vertex minimizing `⟨g, V⟩`.
pub fn fw_vertex(grad: &Grid, mu: &[f64], nu: &[f64]) -> Grid {
    let n = mu.len();
    let m = nu.len();
    let mut v = vec![vec![0.0; m]; n];
    for j in 0..m {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if mu[i] <= 0.0 {
                continue;
            }
            let r = grad[i][j] / mu[i];
            // strict comparison keeps the lowest index on ties
            if best.is_none_or(|(_, b)| r < b) {
                best = Some((i, r));
            }
        }
        if let Some((i, _)) = best {
            v[i][j] = nu[j] / mu[i];
        }
    }
    v
}

fn inner(a: &Grid, b: &Grid) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>()).sum()
}

/// Minimizes a convex differentiable `value` over the kernel polytope.
pub fn fw_minimize<V, G>(
    grad_oracle: G,
    value_oracle: V,
    mu: &[f64],
    nu: &[f64],
    max_iters: usize,
    gap_tol: f64,
    step: StepRule,
) -> Result<FwState, FwError>
where
    V: Fn(&Grid) -> Result<f64, String>,
    G: Fn(&Grid) -> Result<Grid, String>,
{
    let mass: f64 = mu.iter().filter(|w| **w > 0.0).sum();
    if mass <= 0.0 {
        return Err(FwError::EmptySupport);
    }
    let mut q: Grid = mu
        .iter()
        .map(|&w| if w > 0.0 { nu.iter().map(|v| v / mass).collect() } else { vec![0.0; nu.len()] })
        .collect();
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        let g = grad_oracle(&q).map_err(FwError::Oracle)?;
        let v = fw_vertex(&g, mu, nu);
        gap = inner(&g, &q) - inner(&g, &v);
        if gap <= gap_tol {
            break;
        }
        let gamma = match step {
            StepRule::Open => 2.0 / (iterations as f64 + 2.0),
            StepRule::LineSearch => {
                let along = |t: f64| {
                    let p: Grid = q
                        .iter()
                        .zip(&v)
                        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect())
                        .collect();
                    value_oracle(&p).unwrap_or(f64::INFINITY)
                };
                golden_min(along, 0.0, 1.0, 1e-12)
            }
        };
        for (row, vrow) in q.iter_mut().zip(&v) {
            for (x, y) in row.iter_mut().zip(vrow) {
                *x += gamma * (y - *x);
            }
        }
        iterations += 1;
    }
    let value = value_oracle(&q).map_err(FwError::Oracle)?;
    Ok(FwState { q, gap: gap.max(0.0), iterations, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_quadratic_reaches_vertex() {
        // μ = (½, ½), ν = (1): value Σ μᵢ (Qᵢ − tᵢ)² with targets (2, 0)
        // vertex Q = (2, 0) is feasible and the unique minimizer
        let mu = [0.5, 0.5];
        let nu = [1.0];
        let target = [2.0, 0.0];
        let value = |q: &Grid| Ok((0..2).map(|i| mu[i] * (q[i][0] - target[i]).powi(2)).sum());
        let grad = |q: &Grid| Ok((0..2).map(|i| vec![2.0 * mu[i] * (q[i][0] - target[i])]).collect());
        let st = fw_minimize(grad, value, &mu, &nu, 1000, 1e-6, StepRule::LineSearch).unwrap();
        assert!(st.gap < 1e-6);
        assert!((st.q[0][0] - 2.0).abs() < 1e-6 && st.q[1][0].abs() < 1e-6);
    }

    #[test]
    fn constant_value_stops_immediately() {
        let mu = [0.3, 0.7];
        let nu = [0.4, 0.6];
        let st = fw_minimize(|_| Ok(vec![vec![0.0; 2]; 2]), |_| Ok(1.0), &mu, &nu, 10, 0.0, StepRule::Open).unwrap();
        assert_eq!(st.gap, 0.0);
        assert_eq!(st.iterations, 0);
        for j in 0..2 {
            let col: f64 = (0..2).map(|i| mu[i] * st.q[i][j]).sum();
            assert!((col - nu[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn single_row_is_pinned() {
        let mu = [2.0];
        let nu = [0.5, 1.5];
        let grad = |q: &Grid| Ok(vec![q[0].iter().map(|x| 2.0 * x).collect()]);
        let value = |q: &Grid| Ok(q[0].iter().map(|x| x * x).sum());
        let st = fw_minimize(grad, value, &mu, &nu, 1, 1e-12, StepRule::Open).unwrap();
        assert!((st.q[0][0] - 0.25).abs() < 1e-15 && (st.q[0][1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_lowest_row() {
        let v = fw_vertex(&vec![vec![1.0], vec![1.0]], &[1.0, 1.0], &[1.0]);
        assert_eq!(v, vec![vec![1.0], vec![0.0]]);
    }
}
