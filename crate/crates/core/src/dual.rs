//! Dual operators and certificates.
//!
//! Sign convention: a potential `f` on the Y-atoms enters the Lagrangian as
//! `Σᵢ μᵢ c(xᵢ, Qᵢ) + Σⱼ fⱼ (Σᵢ μᵢ Qᵢⱼ − νⱼ)`, so optimality reads `∂c/∂Qᵢⱼ + fⱼ ≥ 0` with
//! equality on the support, and the dual value is `Σᵢ μᵢ K_c f(xᵢ) − Σⱼ νⱼ fⱼ`.

use crate::costs::{cost_gradient, eval_cost, CompositeCost, ConicalCost, ConicalF, CostError, CostModel, ScalarG};
use crate::measures::{dot, DiscreteMeasure, Point};
use crate::optim::barrier::{minimize, BarrierOptions, LinearConstraints, SmoothObjective};
use crate::optim::{Bound, LinearProgram, LpSolution, LpStatus, RowKind};
use crate::primal::{solve_primal, KernelPlan, SolveOptions, TransportLp};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualError {
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("potential has {got} entries, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("potential has non-finite entries")]
    NonFinite,
    #[error("LP not solved to optimality ({0:?})")]
    NotOptimal(LpStatus),
    #[error("inner problem failed: {0}")]
    Numerical(String),
}

/// One real per Y-atom.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualPotential {
    pub f: Vec<f64>,
}

/// `φ(z) = maxₖ uₖ·z`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConicalPotential {
    pub directions: Vec<Point>,
}

impl ConicalPotential {
    pub fn eval(&self, z: &[f64]) -> f64 {
        self.directions.iter().map(|u| dot(u, z)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { directions: self.directions.iter().map(|u| u.iter().map(|v| v * s).collect()).collect() }
    }
}

/// `Kantorovich fⱼ = −min_{μᵢ>0} ∂c(xᵢ, Qᵢ)/∂Qᵢⱼ`, tight wherever the plan is stationary.
pub fn kantorovich_from_gradients(cost: &CostModel, mu: &DiscreteMeasure, plan: &KernelPlan) -> Result<DualPotential, CostError> {
    let m = cost.n_y();
    let mut f = vec![f64::NEG_INFINITY; m];
    for i in mu.support() {
        let g = cost_gradient(cost, i, &plan.q[i])?;
        for j in 0..m {
            f[j] = f[j].max(-g[j]);
        }
    }
    Ok(DualPotential { f })
}

fn check_potential(cost: &CostModel, f: &DualPotential) -> Result<(), DualError> {
    if f.f.len() != cost.n_y() {
        return Err(DualError::Length { expected: cost.n_y(), got: f.f.len() });
    }
    if f.f.iter().any(|v| !v.is_finite()) {
        return Err(DualError::NonFinite);
    }
    Ok(())
}

/// `K_c f(xᵢ) = inf_{w ≥ 0} f·w + c(xᵢ, w)`; `−∞` is a legitimate value.
pub fn k_c(cost: &CostModel, f: &DualPotential, x_index: usize) -> Result<f64, DualError> {
    check_potential(cost, f)?;
    if x_index >= cost.n_x() {
        return Err(CostError::IndexOutOfRange(x_index).into());
    }
    if let Some(pieces) = cost.affine_pieces(x_index) {
        return Ok(polyhedral_inf(&f.f, &pieces, None));
    }
    match cost {
        CostModel::Composite(c) => Ok(composite_k_c(c, &f.f, x_index)),
        CostModel::Conical(c) => conical_k_c(c, &f.f, x_index),
        CostModel::AffineSup(_) => unreachable!(),
    }
}

/// `inf_{w ≥ 0} lin·w + maxₖ (bₖ·w + aₖ)`, optionally adding `max_l (dₗ·w)` as a second
/// epigraph (used for `Q_F` of piecewise-linear `F`).
fn polyhedral_inf(lin: &[f64], pieces: &[(f64, Vec<f64>)], extra: Option<&[Vec<f64>]>) -> f64 {
    let m = lin.len();
    let mut lp = LinearProgram::new(m);
    lp.objective.copy_from_slice(lin);
    let t = lp.add_var(1.0, Bound::Free);
    for (a, b) in pieces {
        let mut terms = vec![(t, 1.0)];
        terms.extend(b.iter().enumerate().map(|(j, v)| (j, -v)));
        lp.add_sparse_row(&terms, RowKind::Ge, *a);
    }
    if let Some(ds) = extra {
        let s = lp.add_var(1.0, Bound::Free);
        for d in ds {
            let mut terms = vec![(s, 1.0)];
            terms.extend(d.iter().enumerate().map(|(j, v)| (j, -v)));
            lp.add_sparse_row(&terms, RowKind::Ge, 0.0);
        }
    }
    let sol = lp.solve();
    match sol.status {
        LpStatus::Optimal => sol.objective,
        LpStatus::Unbounded => f64::NEG_INFINITY,
        _ => f64::NAN,
    }
}

/// Closed form: only the cheapest ratio `r = minⱼ fⱼ/Fᵢⱼ` matters, leaving
/// `inf_{U ≥ 0} G(U) + rU`.
fn composite_k_c(c: &CompositeCost, f: &[f64], i: usize) -> f64 {
    let r = f.iter().zip(&c.f[i]).map(|(fj, fij)| fj / fij).fold(f64::INFINITY, f64::min);
    let g = &c.g;
    let phi = |u: f64| g.value(u) + r * u;
    if r >= -g.deriv_at_zero() {
        return g.value(0.0);
    }
    match g.deriv_inverse(-r) {
        // φ(u) ≤ φ(0) at the stationary point, so a non-finite value means the infimum
        // lies below the float range (G nearly linear, e.g. p → 1)
        Some(u) => {
            let v = phi(u);
            if v.is_finite() {
                v
            } else {
                f64::NEG_INFINITY
            }
        }
        None => {
            if -r > g.deriv_at_infinity() {
                return f64::NEG_INFINITY;
            }
            // slope tends to zero from below: the limit may or may not be finite
            let (a, b) = (phi(1e10), phi(1e15));
            if b < a - 1e-9 * (1.0 + a.abs()) {
                f64::NEG_INFINITY
            } else {
                b
            }
        }
    }
}

/// Growth constant `K` with `F(x, Yw) ≥ −(K Σw)^η` for the nonpositive families.
fn nonpositive_growth(c: &ConicalCost, i: usize) -> Option<(f64, f64)> {
    match &c.f {
        ConicalF::Power { eta } => {
            let delta = c.y.iter().map(|y| y[0]).fold(0.0, f64::max);
            Some((c.x[i][0].powf(1.0 / eta) * delta, *eta))
        }
        ConicalF::SigmaNorm { eta, sigma, mats } => {
            let a = &mats[i];
            let k = c
                .y
                .iter()
                .map(|y| {
                    let v = a * nalgebra::DVector::from_column_slice(y);
                    (v.len() as f64).powf(1.0 / sigma - 1.0) * v.iter().map(|t| t.abs()).sum::<f64>()
                })
                .fold(0.0, f64::max);
            Some((k, *eta))
        }
        _ => None,
    }
}

fn conical_k_c(c: &ConicalCost, f: &[f64], i: usize) -> Result<f64, DualError> {
    let zero_y: Vec<bool> = c.y.iter().map(|y| y.iter().all(|t| *t == 0.0)).collect();
    match &c.f {
        ConicalF::PiecewiseLinear(_) => unreachable!(),
        ConicalF::Power { eta } => {
            let x = c.x[i][0];
            if f.iter().any(|v| *v < 0.0) {
                return Ok(f64::NEG_INFINITY);
            }
            if x == 0.0 {
                return Ok(0.0);
            }
            if f.iter().zip(&zero_y).any(|(v, z)| *v == 0.0 && !z) {
                return Ok(f64::NEG_INFINITY);
            }
            let r = f
                .iter()
                .zip(&c.y)
                .filter(|(_, y)| y[0] > 0.0)
                .map(|(v, y)| v / y[0])
                .fold(f64::INFINITY, f64::min);
            if !r.is_finite() {
                return Ok(0.0);
            }
            let z = (x * eta / r).powf(1.0 / (1.0 - eta));
            Ok(r * z - x * z.powf(*eta))
        }
        ConicalF::SigmaNorm { .. } => {
            if f.iter().zip(&zero_y).any(|(v, z)| *v < 0.0 || (*v == 0.0 && !z)) {
                return Ok(f64::NEG_INFINITY);
            }
            let cols: Vec<usize> = (0..f.len()).filter(|&j| !zero_y[j]).collect();
            if cols.is_empty() {
                return Ok(c.f_value(i, &vec![0.0; c.dim()])?);
            }
            // F is η-homogeneous, so K_c f = λ^{η/(1−η)} K_c(λf); with λ = 1/min f the minimiser
            // stays at a moderate scale however close f gets to the boundary.
            let fmin = cols.iter().map(|&j| f[j]).fold(f64::INFINITY, f64::min);
            let (k, eta) = nonpositive_growth(c, i).unwrap();
            let w_cap = 2.0 * k.powf(eta).powf(1.0 / (1.0 - eta)) + 1.0;
            let lin: Vec<f64> = cols.iter().map(|&j| f[j] / fmin).collect();
            let v = smooth_conical_inf(c, i, &cols, &lin, None, w_cap)?;
            Ok(fmin.powf(-eta / (1.0 - eta)) * v)
        }
        ConicalF::Quadratic => {
            if quadratic_recedes(c, f) {
                return Ok(f64::NEG_INFINITY);
            }
            let cols: Vec<usize> = (0..f.len()).collect();
            let scale = 1.0 + crate::measures::norm(&c.x[i]) + f.iter().map(|v| v.abs()).fold(0.0, f64::max);
            smooth_conical_inf(c, i, &cols, f, None, 1e4 * scale)
        }
        ConicalF::Oracle(_) => {
            let cols: Vec<usize> = (0..f.len()).collect();
            let a = smooth_conical_inf(c, i, &cols, f, None, 1e5)?;
            let b = smooth_conical_inf(c, i, &cols, f, None, 1e7)?;
            Ok(if b < a - 1e-6 * (1.0 + a.abs()) { f64::NEG_INFINITY } else { b })
        }
    }
}

/// Whether `f·w + ½‖x − Yw‖²` decreases without bound: some `w ≥ 0` with `Yw = 0`, `f·w < 0`.
fn quadratic_recedes(c: &ConicalCost, f: &[f64]) -> bool {
    let m = f.len();
    let d = c.dim();
    let mut lp = LinearProgram::new(m);
    lp.objective.copy_from_slice(f);
    for t in 0..d {
        let terms: Vec<(usize, f64)> = (0..m).map(|j| (j, c.y[j][t])).collect();
        lp.add_sparse_row(&terms, RowKind::Eq, 0.0);
    }
    lp.add_sparse_row(&(0..m).map(|j| (j, 1.0)).collect::<Vec<_>>(), RowKind::Eq, 1.0);
    let sol = lp.solve();
    sol.is_optimal() && sol.objective < -1e-12 * (1.0 + f.iter().map(|v| v.abs()).fold(0.0, f64::max))
}

/// `lin·w + [φ(Yw)] + F(xᵢ, Yw)` over `w ≥ 0` on `cols`, `Σw ≤ w_cap`.
struct ConicalInner<'a> {
    c: &'a ConicalCost,
    i: usize,
    cols: &'a [usize],
    lin: &'a [f64],
    /// When present the last variable is an epigraph `s ≥ uₖ·Yw`.
    epi: bool,
}

impl ConicalInner<'_> {
    fn z(&self, v: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.c.dim()];
        for (k, &j) in self.cols.iter().enumerate() {
            for t in 0..z.len() {
                z[t] += v[k] * self.c.y[j][t];
            }
        }
        z
    }

    fn ymat(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.c.dim(), self.cols.len(), |t, k| self.c.y[self.cols[k]][t])
    }
}

impl SmoothObjective for ConicalInner<'_> {
    fn dim(&self) -> usize {
        self.cols.len() + usize::from(self.epi)
    }

    fn value(&self, v: &[f64]) -> Option<f64> {
        let z = self.z(v);
        let fv = self.c.f_value(self.i, &z).ok()?;
        let lin: f64 = self.lin.iter().zip(v).map(|(a, b)| a * b).sum();
        let s = if self.epi { v[self.cols.len()] } else { 0.0 };
        let out = lin + s + fv;
        out.is_finite().then_some(out)
    }

    fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let z = self.z(v);
        let gz = self.c.f_gradient(self.i, &z).unwrap_or_else(|_| vec![f64::NAN; z.len()]);
        let mut g: Vec<f64> = self.cols.iter().zip(self.lin).map(|(&j, l)| l + dot(&gz, &self.c.y[j])).collect();
        if self.epi {
            g.push(1.0);
        }
        g
    }

    fn hessian(&self, v: &[f64]) -> DMatrix<f64> {
        let z = self.z(v);
        let n = self.dim();
        let hz = self.c.f_hessian(self.i, &z).unwrap_or_else(|| {
            let d = z.len();
            let mut h = DMatrix::zeros(d, d);
            for a in 0..d {
                let eps = 1e-6 * (1.0 + z[a].abs());
                let mut up = z.clone();
                up[a] += eps;
                let mut dn = z.clone();
                dn[a] -= eps;
                let gu = self.c.f_gradient(self.i, &up).unwrap_or_else(|_| vec![0.0; d]);
                let gd = self.c.f_gradient(self.i, &dn).unwrap_or_else(|_| vec![0.0; d]);
                for b in 0..d {
                    h[(b, a)] = (gu[b] - gd[b]) / (2.0 * eps);
                }
            }
            (&h + h.transpose()) * 0.5
        });
        let y = self.ymat();
        let hw = y.transpose() * hz * &y;
        let mut h = DMatrix::zeros(n, n);
        h.view_mut((0, 0), (self.cols.len(), self.cols.len())).copy_from(&hw);
        h
    }
}

/// Barrier solve of the inner problem; `phi` adds the epigraph of a conical potential.
fn smooth_conical_inf(
    c: &ConicalCost,
    i: usize,
    cols: &[usize],
    lin: &[f64],
    phi: Option<&ConicalPotential>,
    w_cap: f64,
) -> Result<f64, DualError> {
    let k = cols.len();
    let inner = ConicalInner { c, i, cols, lin, epi: phi.is_some() };
    let n = inner.dim();
    let mut cons = LinearConstraints::new(n);
    for j in 0..k {
        let mut row = vec![0.0; n];
        row[j] = -1.0;
        cons.push_ineq(&row, 0.0);
    }
    let mut cap = vec![0.0; n];
    cap[..k].iter_mut().for_each(|v| *v = 1.0);
    cons.push_ineq(&cap, w_cap);
    let mut x0 = vec![w_cap / (2.0 * k.max(1) as f64); n];
    if let Some(p) = phi {
        for u in &p.directions {
            let mut row: Vec<f64> = cols.iter().map(|&j| dot(u, &c.y[j])).collect();
            row.push(-1.0);
            cons.push_ineq(&row, 0.0);
        }
        let z = inner.z(&x0);
        x0[k] = p.eval(&z).abs() + p.eval(&z) + 1.0;
    }
    let sol = minimize(&inner, &cons, &x0, &BarrierOptions { gap_tol: 1e-14, ..BarrierOptions::default() })
        .map_err(|e| DualError::Numerical(e.to_string()))?;
    if phi.is_none() && matches!(c.f, ConicalF::Quadratic) {
        return Ok(polish_on_support(&inner, sol.x, sol.value));
    }
    Ok(sol.value)
}

/// The barrier stops inside the orthant, and on flat directions (`Yw = 0`, `f·w ≈ 0`) it can
/// stop far from the optimum. The objective is quadratic, so an active-set pass finishes the
/// job: along the part of the gradient the face Hessian cannot absorb the objective is linear,
/// so walk that way until a coordinate hits zero; otherwise take the Newton step on the face.
/// Every iterate is feasible, so the smaller value is always a valid upper bound.
fn polish_on_support(inner: &ConicalInner, mut w: Vec<f64>, value: f64) -> f64 {
    let n = w.len();
    for _ in 0..4 * n + 4 {
        let top = w.iter().cloned().fold(0.0, f64::max);
        let supp: Vec<usize> = (0..n).filter(|&k| w[k] > 1e-12 * (1.0 + top)).collect();
        for k in 0..n {
            if !supp.contains(&k) {
                w[k] = 0.0;
            }
        }
        if supp.is_empty() {
            break;
        }
        let g = inner.gradient(&w);
        let h = inner.hessian(&w);
        let gs = DVector::from_iterator(supp.len(), supp.iter().map(|&k| g[k]));
        let hs = DMatrix::from_fn(supp.len(), supp.len(), |a, b| h[(supp[a], supp[b])]);
        let svd = hs.clone().svd(true, true);
        let eps = 1e-12 * svd.singular_values.max().max(1e-300);
        let Ok(newton) = svd.solve(&(-&gs), eps) else { break };
        let resid = &gs + &hs * &newton;
        let flat = resid.norm() > 1e-14 * (1.0 + gs.norm());
        let dir = if flat { -resid } else { newton };
        let mut alpha = if flat { f64::INFINITY } else { 1.0 };
        let mut hit = None;
        for (a, &k) in supp.iter().enumerate() {
            if dir[a] < 0.0 && -w[k] / dir[a] < alpha {
                alpha = -w[k] / dir[a];
                hit = Some(k);
            }
        }
        if !alpha.is_finite() {
            break;
        }
        for (a, &k) in supp.iter().enumerate() {
            w[k] = (w[k] + alpha * dir[a]).max(0.0);
        }
        if let Some(k) = hit {
            w[k] = 0.0;
        } else if !flat {
            break;
        }
    }
    match inner.value(&w) {
        Some(v) if v < value => v,
        _ => value,
    }
}

/// `f̄(z) = min { f·w : w ≥ 0, Σⱼ wⱼ yⱼ = z }`, the largest convex positively 1-homogeneous
/// function below `f` on the atoms.
#[derive(Clone, Debug)]
pub struct Minorant {
    pub f: Vec<f64>,
    pub y: Vec<Point>,
}

pub fn minorant(f: &DualPotential, y: &[Point]) -> Minorant {
    Minorant { f: f.f.clone(), y: y.to_vec() }
}

impl Minorant {
    /// `+∞` off the cone, `−∞` when `f` decreases along a direction with `Yw = 0`.
    pub fn eval(&self, z: &[f64]) -> f64 {
        let m = self.f.len();
        let mut lp = LinearProgram::new(m);
        lp.objective.copy_from_slice(&self.f);
        for t in 0..z.len() {
            let terms: Vec<(usize, f64)> = (0..m).map(|j| (j, self.y[j][t])).collect();
            lp.add_sparse_row(&terms, RowKind::Eq, z[t]);
        }
        let sol = lp.solve();
        match sol.status {
            LpStatus::Optimal => sol.objective,
            LpStatus::Infeasible => f64::INFINITY,
            LpStatus::Unbounded => f64::NEG_INFINITY,
            LpStatus::NumericalFailure => f64::NAN,
        }
    }
}

/// `Q_F φ(xᵢ) = inf_{z ∈ Z} φ(z) + F(xᵢ, z)`.
pub fn q_f(c: &ConicalCost, phi: &ConicalPotential, x_index: usize) -> Result<f64, DualError> {
    let m = c.y.len();
    let zero = vec![0.0; m];
    let dirs: Vec<Vec<f64>> = phi.directions.iter().map(|u| c.y.iter().map(|y| dot(u, y)).collect()).collect();
    match &c.f {
        ConicalF::PiecewiseLinear(p) => {
            let pieces: Vec<(f64, Vec<f64>)> =
                p[x_index].iter().map(|l| (l.a, c.y.iter().map(|y| dot(&l.u, y)).collect())).collect();
            Ok(polyhedral_inf(&zero, &pieces, Some(&dirs)))
        }
        ConicalF::Quadratic => {
            let cols: Vec<usize> = (0..m).collect();
            let scale = 1.0
                + crate::measures::norm(&c.x[x_index])
                + phi.directions.iter().map(|u| crate::measures::norm(u)).fold(0.0, f64::max);
            smooth_conical_inf(c, x_index, &cols, &zero, Some(phi), 1e4 * scale)
        }
        ConicalF::Power { .. } | ConicalF::SigmaNorm { .. } => {
            // φ must grow linearly on co(Y) to beat the sublinear decay of F
            let floor = simplex_min(&dirs);
            let f0 = c.f_value(x_index, &vec![0.0; c.dim()])?;
            let flat = matches!(c.f, ConicalF::Power { .. }) && c.x[x_index][0] == 0.0;
            if flat {
                return Ok(if floor < -1e-14 { f64::NEG_INFINITY } else { f0 });
            }
            if floor <= 1e-14 {
                return Ok(f64::NEG_INFINITY);
            }
            let (k, eta) = nonpositive_growth(c, x_index).unwrap();
            let w_cap = 2.0 * (k.powf(eta) / floor).powf(1.0 / (1.0 - eta)) + 1.0;
            let cols: Vec<usize> = (0..m).collect();
            smooth_conical_inf(c, x_index, &cols, &zero, Some(phi), w_cap)
        }
        ConicalF::Oracle(_) => {
            let cols: Vec<usize> = (0..m).collect();
            smooth_conical_inf(c, x_index, &cols, &zero, Some(phi), 1e6)
        }
    }
}

/// `min over the simplex of maxₖ dₖ·p`.
fn simplex_min(dirs: &[Vec<f64>]) -> f64 {
    let m = dirs.first().map_or(0, |d| d.len());
    let mut lp = LinearProgram::new(m);
    let s = lp.add_var(1.0, Bound::Free);
    for d in dirs {
        let mut terms = vec![(s, 1.0)];
        terms.extend(d.iter().enumerate().map(|(j, v)| (j, -v)));
        lp.add_sparse_row(&terms, RowKind::Ge, 0.0);
    }
    lp.add_sparse_row(&(0..m).map(|j| (j, 1.0)).collect::<Vec<_>>(), RowKind::Eq, 1.0);
    let sol = lp.solve();
    if sol.is_optimal() {
        sol.objective
    } else {
        f64::NAN
    }
}

/// `Σᵢ μᵢ K_c f(xᵢ) − Σⱼ νⱼ fⱼ`, rows evaluated in parallel.
pub fn dual_value(cost: &CostModel, f: &DualPotential, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64, DualError> {
    check_potential(cost, f)?;
    let rows = mu.support();
    let parts: Result<Vec<f64>, DualError> =
        rows.par_iter().map(|&i| k_c(cost, f, i).map(|v| mu.weight(i) * v)).collect();
    let parts = parts?;
    if parts.contains(&f64::NEG_INFINITY) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(parts.iter().sum::<f64>() - dot(&f.f, nu.weights()))
}

/// `Σᵢ μᵢ Q_F φ(xᵢ) − Σⱼ νⱼ φ(yⱼ)`.
pub fn dual_value_conical(
    c: &ConicalCost,
    phi: &ConicalPotential,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<f64, DualError> {
    let rows = mu.support();
    let parts: Result<Vec<f64>, DualError> =
        rows.par_iter().map(|&i| q_f(c, phi, i).map(|v| mu.weight(i) * v)).collect();
    let parts = parts?;
    if parts.contains(&f64::NEG_INFINITY) {
        return Ok(f64::NEG_INFINITY);
    }
    let tail: f64 = (0..nu.len()).map(|j| nu.weight(j) * phi.eval(nu.atom(j))).sum();
    Ok(parts.iter().sum::<f64>() - tail)
}

/// Reads `f` off the marginal rows of a solved kernel LP. The simplex reports multipliers
/// `y` for `L = cᵀx − yᵀ(Ax − b)`, hence `fⱼ = −yⱼ`.
pub fn extract_dual_certificate(sol: &LpSolution, tlp: &TransportLp) -> Result<DualPotential, DualError> {
    if !sol.is_optimal() {
        return Err(DualError::NotOptimal(sol.status));
    }
    Ok(DualPotential { f: tlp.column_rows.iter().map(|&r| -sol.duals[r]).collect() })
}

/// Directions `uᵢ = −∂_z F(xᵢ, Sᵢ)` of the optimal plan. For piecewise-linear `F` the
/// subgradient is the multiplier-weighted mix of the pieces, read from the solved LP.
pub fn conical_potential(
    c: &ConicalCost,
    mu: &DiscreteMeasure,
    plan: &KernelPlan,
    lp: Option<(&TransportLp, &LpSolution)>,
) -> Result<ConicalPotential, DualError> {
    let mut directions = Vec::new();
    for i in mu.support() {
        let u = match (&c.f, lp) {
            (ConicalF::PiecewiseLinear(p), Some((tlp, sol))) => {
                let mut g = vec![0.0; c.dim()];
                for (k, &r) in tlp.epigraph_rows[i].iter().enumerate() {
                    let lam = sol.duals[r] / mu.weight(i);
                    for t in 0..g.len() {
                        g[t] += lam * p[i][k].u[t];
                    }
                }
                g
            }
            _ => c.f_gradient(i, &plan.barycenters[i])?,
        };
        directions.push(u.iter().map(|v| -v).collect());
    }
    Ok(ConicalPotential { directions })
}

/// `M = maxⱼ Σᵢ μᵢ F(xᵢ, λyⱼ)` and the resulting floor `−M/(λ−1)` on the dual supremum.
pub fn dual_bound_conical(c: &ConicalCost, mu: &DiscreteMeasure, lambda: f64) -> Result<(f64, f64), DualError> {
    if !(lambda > 1.0) {
        return Err(CostError::InvalidParameter(format!("lambda = {lambda} must exceed 1")).into());
    }
    let mut big_m = f64::NEG_INFINITY;
    for y in &c.y {
        let z: Vec<f64> = y.iter().map(|t| lambda * t).collect();
        let mut acc = 0.0;
        for i in 0..mu.len() {
            acc += mu.weight(i) * c.f_value(i, &z)?;
        }
        big_m = big_m.max(acc);
    }
    Ok((big_m, -big_m / (lambda - 1.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GfReport {
    pub pass: bool,
    /// Most negative `G'(Uᵢ)Fᵢⱼ + fⱼ`.
    pub worst_inequality: f64,
    /// Largest `|G'(Uᵢ)Fᵢⱼ + fⱼ|` over support entries.
    pub worst_equality: f64,
    /// Rows with `Uᵢ = 0` while `G'(0) = −∞`.
    pub starved_rows: Vec<usize>,
}

/// Checks `G'(Uᵢ)F(xᵢ, yⱼ) + fⱼ ≥ −tol` everywhere and `≈ 0` where `Qᵢⱼ > tol`.
pub fn optimality_conditions_gf(
    plan: &KernelPlan,
    f: &DualPotential,
    cost: &CompositeCost,
    mu: &DiscreteMeasure,
    tol: f64,
) -> GfReport {
    let mut worst_inequality: f64 = 0.0;
    let mut worst_equality: f64 = 0.0;
    let mut starved_rows = Vec::new();
    for i in mu.support() {
        let u = cost.u(i, &plan.q[i]);
        let slope = cost.g.deriv(u);
        if u == 0.0 && cost.g.deriv_at_zero() == f64::NEG_INFINITY {
            starved_rows.push(i);
            continue;
        }
        for j in 0..f.f.len() {
            let r = slope * cost.f[i][j] + f.f[j];
            worst_inequality = worst_inequality.min(r);
            if plan.q[i][j] > tol {
                worst_equality = worst_equality.max(r.abs());
            }
        }
    }
    GfReport {
        pass: starved_rows.is_empty() && worst_inequality >= -tol && worst_equality <= tol,
        worst_inequality,
        worst_equality,
        starved_rows,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonpositiveDualReport {
    pub nonnegative_on_generators: bool,
    /// `min φ(yⱼ/‖yⱼ‖)` over nonzero atoms.
    pub min_unit_value: f64,
    pub dual_value: f64,
    pub primal_value: f64,
    pub gap: f64,
    pub pass: bool,
}

/// For the nonpositive families: `φ̄` must be positive on the cone and attain the primal value.
pub fn check_nonpositive_conical_dual(
    cost: &CostModel,
    phi: &ConicalPotential,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    tol: f64,
) -> Result<NonpositiveDualReport, DualError> {
    let c = cost
        .as_conical()
        .filter(|c| c.is_nonpositive_family())
        .ok_or_else(|| CostError::InvalidParameter("needs a nonpositive conical cost".into()))?;
    let primal = solve_primal(cost, mu, nu, &SolveOptions::default())
        .map_err(|e| DualError::Numerical(e.to_string()))?
        .primal;
    let mut min_unit = f64::INFINITY;
    let mut nonneg = true;
    for y in &c.y {
        let n = crate::measures::norm(y);
        if n == 0.0 {
            continue;
        }
        let v = phi.eval(y);
        nonneg &= v >= -tol;
        min_unit = min_unit.min(v / n);
    }
    let dual = dual_value_conical(c, phi, mu, nu)?;
    let gap = (primal - dual).abs();
    Ok(NonpositiveDualReport {
        nonnegative_on_generators: nonneg,
        min_unit_value: min_unit,
        dual_value: dual,
        primal_value: primal,
        gap,
        pass: nonneg && min_unit > tol && gap <= tol * (1.0 + primal.abs()),
    })
}

/// `c(xᵢ, 0)`, an upper bound for `K_c f(xᵢ)` whatever `f` is.
pub fn k_c_ceiling(cost: &CostModel, x_index: usize) -> Result<f64, CostError> {
    eval_cost(cost, x_index, &vec![0.0; cost.n_y()])
}

/// Convenience for composite costs: `G(0)`.
pub fn composite_ceiling(g: &ScalarG) -> f64 {
    g.value(0.0)
}
