//! Euclidean projection onto the convex hull of a point set (Wolfe's minimum-norm-point
//! algorithm).

use nalgebra::{DMatrix, DVector};

/// Minimum-norm point of `conv(points)` together with its convex weights.
#[derive(Clone, Debug)]
pub struct MinNormPoint {
    pub point: Vec<f64>,
    pub weights: Vec<f64>,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Affine minimizer of `‖Σ αₖ pₖ‖` with `Σ αₖ = 1` over the corral `set`.
fn affine_min(points: &[Vec<f64>], set: &[usize]) -> Vec<f64> {
    let k = set.len();
    let mut m = DMatrix::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            m[(a, b)] = dot(&points[set[a]], &points[set[b]]);
        }
        m[(a, k)] = 1.0;
        m[(k, a)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = match m.clone().lu().solve(&rhs) {
        Some(s) if s.iter().all(|v| v.is_finite()) => s,
        _ => m.pseudo_inverse(1e-14).map(|p| p * rhs).unwrap_or_else(|_| {
            let mut v = DVector::zeros(k + 1);
            v[0] = 1.0;
            v
        }),
    };
    sol.rows(0, k).iter().copied().collect()
}

/// Wolfe's algorithm on `points` (all of the same dimension, nonempty).
pub fn min_norm_point(points: &[Vec<f64>], tol: f64) -> MinNormPoint {
    assert!(!points.is_empty(), "empty point set");
    let d = points[0].len();
    let scale = points.iter().map(|p| dot(p, p)).fold(0.0, f64::max).max(1e-300);
    let start = (0..points.len())
        .min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b])))
        .unwrap();
    let mut set = vec![start];
    let mut lambda = vec![1.0];
    let mut x = points[start].clone();
    let combine = |set: &[usize], w: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; d];
        for (&k, &wk) in set.iter().zip(w) {
            for t in 0..d {
                out[t] += wk * points[k][t];
            }
        }
        out
    };
    let mut iterations = 0;
    for _ in 0..(50 * points.len() + 100) {
        iterations += 1;
        let j = (0..points.len())
            .min_by(|&a, &b| dot(&x, &points[a]).total_cmp(&dot(&x, &points[b])))
            .unwrap();
        if dot(&x, &x) - dot(&x, &points[j]) <= tol * scale || set.contains(&j) {
            break;
        }
        set.push(j);
        lambda.push(0.0);
        loop {
            let alpha = affine_min(points, &set);
            if alpha.iter().all(|a| *a > 1e-15) {
                lambda = alpha;
                break;
            }
            let mut theta: f64 = 1.0;
            for k in 0..set.len() {
                if alpha[k] <= 1e-15 {
                    let denom = lambda[k] - alpha[k];
                    if denom > 0.0 {
                        theta = theta.min(lambda[k] / denom);
                    }
                }
            }
            for k in 0..set.len() {
                lambda[k] += theta * (alpha[k] - lambda[k]);
            }
            let mut keep = Vec::new();
            let mut kept_w = Vec::new();
            for k in 0..set.len() {
                if lambda[k] > 1e-15 {
                    keep.push(set[k]);
                    kept_w.push(lambda[k]);
                }
            }
            if keep.is_empty() {
                keep.push(set[0]);
                kept_w.push(1.0);
            }
            let s: f64 = kept_w.iter().sum();
            set = keep;
            lambda = kept_w.into_iter().map(|w| w / s).collect();
        }
        x = combine(&set, &lambda);
    }
    let mut weights = vec![0.0; points.len()];
    for (&k, &w) in set.iter().zip(&lambda) {
        weights[k] += w;
    }
    MinNormPoint { point: x, weights, iterations }
}

/// Euclidean projection of `query` onto `conv(points)`.
pub fn project_onto_polytope(points: &[Vec<f64>], query: &[f64], tol: f64) -> Vec<f64> {
    let shifted: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(query).map(|(a, b)| a - b).collect())
        .collect();
    let mn = min_norm_point(&shifted, tol.max(1e-15));
    // rebuild from weights to avoid cancellation in the shift
    let d = query.len();
    let mut out = vec![0.0; d];
    for (p, w) in points.iter().zip(&mn.weights) {
        for t in 0..d {
            out[t] += w * p[t];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn single_point() {
        assert!(close(&project_onto_polytope(&[vec![0.0, 0.0]], &[3.0, 4.0], 1e-12), &[0.0, 0.0], 1e-12));
    }

    #[test]
    fn segment_interior() {
        let p = project_onto_polytope(&[vec![0.0, 0.0], vec![2.0, 0.0]], &[1.0, 5.0], 1e-12);
        assert!(close(&p, &[1.0, 0.0], 1e-12));
    }

    #[test]
    fn triangle_hypotenuse_matches_grid_search() {
        let tri = [vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let p = project_onto_polytope(&tri, &[1.0, 1.0], 1e-12);
        // brute force over a fine barycentric grid
        let steps = 400;
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for a in 0..=steps {
            for b in 0..=(steps - a) {
                let z = [a as f64 / steps as f64, b as f64 / steps as f64];
                let dist = (z[0] - 1.0).powi(2) + (z[1] - 1.0).powi(2);
                if dist < best.0 {
                    best = (dist, z);
                }
            }
        }
        assert!(close(&p, &best.1, 1e-2));
        assert!(close(&p, &[0.5, 0.5], 1e-12));
    }

    #[test]
    fn inside_point_is_fixed() {
        let sq = [vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let p = project_onto_polytope(&sq, &[0.3, 0.6], 1e-14);
        assert!(close(&p, &[0.3, 0.6], 1e-10));
    }

    #[test]
    fn variational_inequality_on_cloud() {
        let pts: Vec<Vec<f64>> = (0..12)
            .map(|k| {
                let t = k as f64 * 0.7;
                vec![t.cos() + 2.0, (1.3 * t).sin() - 0.5, (0.4 * t).cos()]
            })
            .collect();
        let q = [-1.0, 2.0, 0.5];
        let p = project_onto_polytope(&pts, &q, 1e-14);
        for v in &pts {
            let vi: f64 = (0..3).map(|t| (q[t] - p[t]) * (v[t] - p[t])).sum();
            assert!(vi <= 1e-9, "{vi}");
        }
        let again = project_onto_polytope(&pts, &p, 1e-14);
        assert!(close(&again, &p, 1e-8));
    }
}
