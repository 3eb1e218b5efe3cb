//! Log-barrier Newton methods.
//!
//! [`minimize`] handles small dense problems `min g(v)` subject to `Gv ≤ h`, `Av = b` from a
//! strictly feasible start. [`transport_barrier`] exploits the row structure of kernel
//! problems, `min Σᵢ μᵢ hᵢ(qᵢ)` over `q ≥ 0` with `Σᵢ μᵢ qᵢⱼ = νⱼ`: each Newton step costs one
//! small Cholesky per row plus one column-sized Schur system.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BarrierError {
    #[error("starting point is not strictly feasible")]
    InfeasibleStart,
    #[error("objective undefined at the starting point")]
    OutsideDomain,
    #[error("Newton system is singular")]
    Singular,
    #[error("iterates diverged; the problem looks unbounded below")]
    Diverged,
}

/// A convex objective with gradient and Hessian, possibly defined on a subset only.
pub trait SmoothObjective {
    fn dim(&self) -> usize;
    /// `None` outside the domain.
    fn value(&self, v: &[f64]) -> Option<f64>;
    fn gradient(&self, v: &[f64]) -> Vec<f64>;
    fn hessian(&self, v: &[f64]) -> DMatrix<f64>;
}

#[derive(Clone, Copy, Debug)]
pub struct BarrierOptions {
    /// Stop once the duality gap bound drops below `gap_tol · (1 + |value|)`.
    pub gap_tol: f64,
    /// Factor applied to the barrier weight after each centering.
    pub shrink: f64,
    pub max_newton: usize,
    /// Iterates whose max-norm exceeds this are declared divergent.
    pub divergence: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-12,
            shrink: 0.1,
            max_newton: 2000,
            divergence: 1e12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BarrierSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Bound on `value − optimum` certified by the central path.
    pub gap: f64,
    /// Multipliers of `Gv ≤ h` (nonnegative).
    pub ineq_duals: Vec<f64>,
    /// Multipliers of `Av = b` under `L = g + λᵀ(Gv − h) + wᵀ(Av − b)`.
    pub eq_duals: Vec<f64>,
    pub newton_steps: usize,
}

/// Linear constraint data for [`minimize`].
#[derive(Clone, Debug)]
pub struct LinearConstraints {
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl LinearConstraints {
    pub fn new(dim: usize) -> Self {
        Self {
            g: DMatrix::zeros(0, dim),
            h: DVector::zeros(0),
            a: DMatrix::zeros(0, dim),
            b: DVector::zeros(0),
        }
    }

    pub fn push_ineq(&mut self, row: &[f64], rhs: f64) {
        let r = self.g.nrows();
        self.g = self.g.clone().insert_row(r, 0.0);
        for (k, v) in row.iter().enumerate() {
            self.g[(r, k)] = *v;
        }
        self.h = self.h.clone().push(rhs);
    }

    pub fn push_eq(&mut self, row: &[f64], rhs: f64) {
        let r = self.a.nrows();
        self.a = self.a.clone().insert_row(r, 0.0);
        for (k, v) in row.iter().enumerate() {
            self.a[(r, k)] = *v;
        }
        self.b = self.b.clone().push(rhs);
    }
}

fn barrier_value(obj: &dyn SmoothObjective, cons: &LinearConstraints, x: &DVector<f64>, t: f64) -> Option<f64> {
    let s = &cons.h - &cons.g * x;
    if s.iter().any(|v| *v <= 0.0) {
        return None;
    }
    let f = obj.value(x.as_slice())?;
    if !f.is_finite() {
        return None;
    }
    Some(t * f - s.iter().map(|v| v.ln()).sum::<f64>())
}

/// Barrier method for `min g(v)` s.t. `Gv ≤ h`, `Av = b`, started at a strictly feasible `x0`
/// satisfying the equalities.
pub fn minimize(
    obj: &dyn SmoothObjective,
    cons: &LinearConstraints,
    x0: &[f64],
    opts: &BarrierOptions,
) -> Result<BarrierSolution, BarrierError> {
    let n = obj.dim();
    let p = cons.g.nrows();
    let meq = cons.a.nrows();
    let mut x = DVector::from_column_slice(x0);
    if (&cons.h - &cons.g * &x).iter().any(|v| *v <= 0.0) {
        return Err(BarrierError::InfeasibleStart);
    }
    let f0 = obj.value(x.as_slice()).ok_or(BarrierError::OutsideDomain)?;
    let mut t = if p == 0 { 1.0 } else { (p as f64 / (1.0 + f0.abs())).max(1e-3) };
    let mut steps = 0usize;
    let mut w = DVector::zeros(meq);
    loop {
        // centering
        let mut polish = 0;
        for _ in 0..200 {
            if steps >= opts.max_newton {
                break;
            }
            let s = &cons.h - &cons.g * &x;
            let d = s.map(|v| 1.0 / v);
            let grad = DVector::from_vec(obj.gradient(x.as_slice())) * t + cons.g.tr_mul(&d);
            let mut hess = obj.hessian(x.as_slice()) * t;
            if p > 0 {
                let gd = DMatrix::from_fn(p, n, |i, j| cons.g[(i, j)] * d[i]);
                hess += gd.tr_mul(&gd);
            }
            let dim = n + meq;
            let mut kkt = DMatrix::zeros(dim, dim);
            kkt.view_mut((0, 0), (n, n)).copy_from(&hess);
            if meq > 0 {
                kkt.view_mut((n, 0), (meq, n)).copy_from(&cons.a);
                kkt.view_mut((0, n), (n, meq)).copy_from(&cons.a.transpose());
            }
            let mut rhs = DVector::zeros(dim);
            rhs.rows_mut(0, n).copy_from(&(-&grad));
            if meq > 0 {
                let r = &cons.b - &cons.a * &x;
                rhs.rows_mut(n, meq).copy_from(&r);
            }
            let sol = match kkt.clone().lu().solve(&rhs) {
                Some(s) => s,
                None => {
                    // regularise the Hessian block and retry
                    let scale = hess.diagonal().amax().max(1.0);
                    for i in 0..n {
                        kkt[(i, i)] += 1e-12 * scale;
                    }
                    kkt.lu().solve(&rhs).ok_or(BarrierError::Singular)?
                }
            };
            let dx = sol.rows(0, n).into_owned();
            w = sol.rows(n, meq).into_owned() / t;
            steps += 1;
            let dec = -grad.dot(&dx);
            if dec.abs() <= 1e-26 || polish >= 3 {
                break;
            }
            // largest step keeping slacks positive
            let gdx = &cons.g * &dx;
            let mut amax: f64 = 1.0;
            for i in 0..p {
                if gdx[i] > 0.0 {
                    amax = amax.min(0.99 * s[i] / gdx[i]);
                }
            }
            let phi0 = barrier_value(obj, cons, &x, t).ok_or(BarrierError::OutsideDomain)?;
            // inside the quadratic region take pure Newton steps; Armijo tests drown in rounding
            let near = dec <= 1e-9 * (1.0 + phi0.abs());
            if near {
                polish += 1;
            }
            let mut alpha = amax;
            let mut accepted = false;
            while alpha > 1e-16 {
                let xn = &x + &dx * alpha;
                if let Some(phi) = barrier_value(obj, cons, &xn, t) {
                    if near || phi <= phi0 - 0.25 * alpha * dec + 1e-14 * phi0.abs() {
                        x = xn;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
            if x.amax() > opts.divergence {
                return Err(BarrierError::Diverged);
            }
        }
        let value = obj.value(x.as_slice()).ok_or(BarrierError::OutsideDomain)?;
        let gap = p as f64 / t;
        if gap <= opts.gap_tol * (1.0 + value.abs()) || steps >= opts.max_newton {
            let s = &cons.h - &cons.g * &x;
            return Ok(BarrierSolution {
                x: x.as_slice().to_vec(),
                value,
                gap,
                ineq_duals: s.iter().map(|v| 1.0 / (t * v)).collect(),
                eq_duals: w.as_slice().to_vec(),
                newton_steps: steps,
            });
        }
        t /= opts.shrink;
    }
}

/// Per-row objective `hᵢ(qᵢ)` for kernel problems.
pub trait RowObjective {
    fn value(&self, row: usize, q: &[f64]) -> Option<f64>;
    fn gradient(&self, row: usize, q: &[f64]) -> Vec<f64>;
    fn hessian(&self, row: usize, q: &[f64]) -> DMatrix<f64>;
}

#[derive(Clone, Debug)]
pub struct TransportBarrierSolution {
    /// Kernel entries, `rows.len() × cols.len()`, indexed like the inputs.
    pub q: Vec<Vec<f64>>,
    /// Multipliers `fⱼ` of the column constraints with `∂hᵢ/∂qᵢⱼ + fⱼ ≥ 0` at optimality.
    pub column_duals: Vec<f64>,
    pub value: f64,
    pub gap: f64,
    pub newton_steps: usize,
}

/// Barrier method on `min Σᵢ μᵢ hᵢ(qᵢ)` over `q ≥ 0`, `Σᵢ μᵢ qᵢⱼ = νⱼ`.
///
/// `rows` are the indices passed to `obj` (rows with `μᵢ > 0`), `mu`/`nu` the matching
/// weights (all positive). `start`, when given, must be strictly positive.
enum RowFactor {
    Chol(nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl RowFactor {
    fn new(h: &DMatrix<f64>) -> Result<Self, BarrierError> {
        if let Some(c) = h.clone().cholesky() {
            return Ok(Self::Chol(c));
        }
        let mut h = h.clone();
        let scale = h.diagonal().amax().max(1e-300);
        for j in 0..h.nrows() {
            h[(j, j)] += 1e-13 * scale;
        }
        let lu = h.lu();
        if !lu.is_invertible() {
            return Err(BarrierError::Singular);
        }
        Ok(Self::Lu(lu))
    }

    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Chol(c) => c.solve(b),
            Self::Lu(l) => l.solve(b).unwrap_or_else(|| DVector::from_element(b.len(), f64::NAN)),
        }
    }

    fn inverse(&self) -> DMatrix<f64> {
        match self {
            Self::Chol(c) => c.inverse(),
            Self::Lu(l) => l.try_inverse().unwrap_or_else(|| DMatrix::from_element(l.l().nrows(), l.l().nrows(), f64::NAN)),
        }
    }
}

pub fn transport_barrier(
    obj: &dyn RowObjective,
    rows: &[usize],
    mu: &[f64],
    nu: &[f64],
    start: Option<Vec<Vec<f64>>>,
    opts: &BarrierOptions,
) -> Result<TransportBarrierSolution, BarrierError> {
    let n = rows.len();
    let m = nu.len();
    let mass: f64 = mu.iter().sum();
    let mut q: Vec<Vec<f64>> = match start {
        Some(s) => s,
        None => (0..n).map(|_| nu.iter().map(|v| v / mass).collect()).collect(),
    };
    if q.iter().flatten().any(|v| *v <= 0.0) {
        return Err(BarrierError::InfeasibleStart);
    }
    let total = |q: &Vec<Vec<f64>>| -> Option<f64> {
        let mut acc = 0.0;
        for (k, &r) in rows.iter().enumerate() {
            acc += mu[k] * obj.value(r, &q[k])?;
        }
        Some(acc)
    };
    let merit = |q: &Vec<Vec<f64>>, tau: f64| -> Option<f64> {
        let mut acc = 0.0;
        for (k, &r) in rows.iter().enumerate() {
            let v = obj.value(r, &q[k])?;
            if !v.is_finite() {
                return None;
            }
            let logs: f64 = q[k].iter().map(|x| x.ln()).sum();
            acc += mu[k] * (v - tau * logs);
        }
        Some(acc)
    };
    let v0 = total(&q).ok_or(BarrierError::OutsideDomain)?;
    let mut tau = (1.0 + v0.abs()) / m.max(1) as f64;
    let mut steps = 0usize;
    let mut f = DVector::zeros(m);
    loop {
        let mut polish = 0;
        for _ in 0..200 {
            if steps >= opts.max_newton {
                break;
            }
            // per-row factorizations
            let mut hs: Vec<DMatrix<f64>> = Vec::with_capacity(n);
            let mut facs: Vec<RowFactor> = Vec::with_capacity(n);
            let mut grads: Vec<DVector<f64>> = Vec::with_capacity(n);
            for (k, &r) in rows.iter().enumerate() {
                let mut g = DVector::from_vec(obj.gradient(r, &q[k]));
                let mut h = obj.hessian(r, &q[k]);
                for j in 0..m {
                    g[j] -= tau / q[k][j];
                    h[(j, j)] += tau / (q[k][j] * q[k][j]);
                }
                facs.push(RowFactor::new(&h)?);
                hs.push(h);
                grads.push(g);
            }
            let mut schur = DMatrix::zeros(m, m);
            for k in 0..n {
                schur += facs[k].inverse() * mu[k];
            }
            let schur_lu = schur.lu();
            // H_k dq_k + f = r_k,  Σ μ_k dq_k = r_c
            let kkt = |r: &[DVector<f64>], rc: &DVector<f64>| -> Result<(Vec<DVector<f64>>, DVector<f64>), BarrierError> {
                let mut rhs = -rc.clone();
                for k in 0..n {
                    rhs += facs[k].solve(&r[k]) * mu[k];
                }
                let f = schur_lu.solve(&rhs).ok_or(BarrierError::Singular)?;
                let dq = (0..n).map(|k| facs[k].solve(&(&r[k] - &f))).collect();
                Ok((dq, f))
            };
            let r0: Vec<DVector<f64>> = grads.iter().map(|g| -g).collect();
            let rc0 = DVector::from_fn(m, |j, _| nu[j] - (0..n).map(|k| mu[k] * q[k][j]).sum::<f64>());
            let (mut dq, mut fnew) = kkt(&r0, &rc0)?;
            for _ in 0..4 {
                let res: Vec<DVector<f64>> = (0..n).map(|k| &r0[k] - &hs[k] * &dq[k] - &fnew).collect();
                let mut resc = rc0.clone();
                for k in 0..n {
                    resc -= &dq[k] * mu[k];
                }
                let (ddq, df) = kkt(&res, &resc)?;
                for k in 0..n {
                    dq[k] += &ddq[k];
                }
                fnew += df;
            }
            f = fnew;
            steps += 1;
            let dec: f64 = (0..n).map(|k| -mu[k] * grads[k].dot(&dq[k])).sum();
            if dec.abs() <= 1e-28 * (1.0 + v0.abs()) || polish >= 3 {
                break;
            }
            let mut amax: f64 = 1.0;
            for k in 0..n {
                for j in 0..m {
                    if dq[k][j] < 0.0 {
                        amax = amax.min(-0.99 * q[k][j] / dq[k][j]);
                    }
                }
            }
            let phi0 = merit(&q, tau).ok_or(BarrierError::OutsideDomain)?;
            let near = dec <= 1e-9 * (1.0 + phi0.abs());
            if near {
                polish += 1;
            }
            let mut alpha = amax;
            let mut accepted = false;
            while alpha > 1e-16 {
                let qn: Vec<Vec<f64>> = (0..n)
                    .map(|k| (0..m).map(|j| q[k][j] + alpha * dq[k][j]).collect())
                    .collect();
                if let Some(phi) = merit(&qn, tau) {
                    if near || phi <= phi0 - 0.25 * alpha * dec + 1e-14 * phi0.abs() {
                        q = qn;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let value = total(&q).ok_or(BarrierError::OutsideDomain)?;
        let gap = tau * m as f64 * mass;
        if gap <= opts.gap_tol * (1.0 + value.abs()) || steps >= opts.max_newton {
            return Ok(TransportBarrierSolution {
                q,
                column_duals: f.as_slice().to_vec(),
                value,
                gap,
                newton_steps: steps,
            });
        }
        tau *= opts.shrink;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quad {
        center: Vec<f64>,
    }

    impl SmoothObjective for Quad {
        fn dim(&self) -> usize {
            self.center.len()
        }
        fn value(&self, v: &[f64]) -> Option<f64> {
            Some(0.5 * v.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
        }
        fn gradient(&self, v: &[f64]) -> Vec<f64> {
            v.iter().zip(&self.center).map(|(a, b)| a - b).collect()
        }
        fn hessian(&self, v: &[f64]) -> DMatrix<f64> {
            DMatrix::identity(v.len(), v.len())
        }
    }

    #[test]
    fn projects_onto_box_corner() {
        // min ½‖v − (2, −1)‖² over 0 ≤ v ≤ 1 → (1, 0)
        let obj = Quad { center: vec![2.0, -1.0] };
        let mut cons = LinearConstraints::new(2);
        cons.push_ineq(&[1.0, 0.0], 1.0);
        cons.push_ineq(&[0.0, 1.0], 1.0);
        cons.push_ineq(&[-1.0, 0.0], 0.0);
        cons.push_ineq(&[0.0, -1.0], 0.0);
        let sol = minimize(&obj, &cons, &[0.5, 0.5], &BarrierOptions::default()).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-9 && sol.x[1].abs() < 1e-9);
        assert!((sol.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_constrained_quadratic() {
        // min ½‖v‖² s.t. v₁ + v₂ = 2 → (1, 1), multiplier −1
        let obj = Quad { center: vec![0.0, 0.0] };
        let mut cons = LinearConstraints::new(2);
        cons.push_eq(&[1.0, 1.0], 2.0);
        let sol = minimize(&obj, &cons, &[2.0, 0.0], &BarrierOptions::default()).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-9 && (sol.x[1] - 1.0).abs() < 1e-9);
        assert!((sol.eq_duals[0] + 1.0).abs() < 1e-9);
    }

    struct SquaredMass {
        weights: Vec<f64>,
    }

    impl RowObjective for SquaredMass {
        fn value(&self, row: usize, q: &[f64]) -> Option<f64> {
            Some((self.weights[row] * q[0]).powi(2))
        }
        fn gradient(&self, row: usize, q: &[f64]) -> Vec<f64> {
            vec![2.0 * self.weights[row].powi(2) * q[0]]
        }
        fn hessian(&self, row: usize, _q: &[f64]) -> DMatrix<f64> {
            DMatrix::from_element(1, 1, 2.0 * self.weights[row].powi(2))
        }
    }

    #[test]
    fn single_column_matches_cauchy_schwarz() {
        // min Σ μᵢ (wᵢ qᵢ)² s.t. Σ μᵢ qᵢ = 1  →  (Σ μᵢ/wᵢ²)⁻¹
        let weights = vec![1.0, 2.0, 4.0];
        let mu = vec![0.2, 0.3, 0.5];
        let obj = SquaredMass { weights: weights.clone() };
        let sol = transport_barrier(&obj, &[0, 1, 2], &mu, &[1.0], None, &BarrierOptions::default()).unwrap();
        let expect = 1.0 / mu.iter().zip(&weights).map(|(m, w)| m / (w * w)).sum::<f64>();
        assert!((sol.value - expect).abs() < 1e-10, "{} vs {expect}", sol.value);
        // stationarity: 2 w² q + f = 0 on every row
        for (k, w) in weights.iter().enumerate() {
            let r = 2.0 * w * w * sol.q[k][0] + sol.column_duals[0];
            assert!(r.abs() < 1e-8, "row {k}: {r}");
        }
    }
}
