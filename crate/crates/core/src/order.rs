//! The positively 1-homogeneous convex order and the structure results built on it.

use crate::costs::{ConicalCost, ConicalF, CostError, CostModel};
use crate::dual::{q_f, ConicalPotential, DualError};
use crate::measures::{dot, moments, norm, zero_in_convex_hull, ConeModel, DiscreteMeasure, MeasureError, Point};
use crate::optim::barrier::{minimize, BarrierOptions, LinearConstraints, SmoothObjective};
use crate::optim::scalar::monotone_root;
use crate::optim::{Bound, LinearProgram, LpStatus, RowKind};
use crate::primal::{solve_primal, CouplingPlan, KernelPlan, SolveError, SolveOptions};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrderError {
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error("{0}")]
    Precondition(String),
    #[error("invariant breach: {0}")]
    Breach(String),
    #[error("LP failure: {0:?}")]
    Lp(LpStatus),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderVerdict {
    Dominated,
    NotDominated,
    /// Infeasible LP whose Farkas ray did not survive re-validation.
    Uncertified,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhcWitness {
    pub verdict: OrderVerdict,
    /// Rows with `μᵢ = 0` are zero.
    pub kernel: Option<KernelPlan>,
    /// `ν₁ = μQ`.
    pub nu1: Option<Vec<f64>>,
    /// Part of `ν` with zero barycenter; identically zero unless `0 ∈ co(supp ν)`.
    pub nu2: Option<Vec<f64>>,
    pub potential: Option<ConicalPotential>,
    /// `∫φ dμ − ∫φ dν` for the normalised witness.
    pub margin: Option<f64>,
}

fn same_dim(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(), OrderError> {
    if mu.dim() != nu.dim() {
        return Err(OrderError::Dimension(mu.dim(), nu.dim()));
    }
    Ok(())
}

fn support_measure(nu: &DiscreteMeasure) -> ConeModel {
    ConeModel::from_support(nu)
}

/// `∫φ dμ − ∫φ dν`.
pub fn phc_margin(phi: &ConicalPotential, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let a: f64 = (0..mu.len()).map(|i| mu.weight(i) * phi.eval(mu.atom(i))).sum();
    let b: f64 = (0..nu.len()).map(|j| nu.weight(j) * phi.eval(nu.atom(j))).sum();
    a - b
}

/// Decides `μ ≤_phc ν` by LP feasibility of a kernel with `Σⱼ Qᵢⱼ yⱼ = xᵢ`. Infeasibility is
/// certified by the phc function `φ(z) = maxᵢ (αᵢ/μᵢ)·z` read off the Farkas ray.
pub fn check_phc_order(mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> Result<PhcWitness, OrderError> {
    same_dim(mu, nu)?;
    let d = mu.dim();
    let n = mu.len();
    let m = nu.len();
    let cone = support_measure(nu);
    let general = zero_in_convex_hull(&cone, cone.default_tol());
    let rows = mu.support();
    let mut lp = LinearProgram::new(0);
    // hiring nearby atoms first makes the kernel canonical (identity when μ = ν)
    let q_var: Vec<Vec<usize>> = rows
        .iter()
        .map(|&i| {
            (0..m)
                .map(|j| {
                    let dist: Vec<f64> = mu.atom(i).iter().zip(nu.atom(j)).map(|(a, b)| a - b).collect();
                    lp.add_var(mu.weight(i) * norm(&dist), Bound::NonNegative)
                })
                .collect()
        })
        .collect();
    let nu2_var: Vec<usize> = if general { (0..m).map(|_| lp.add_var(0.0, Bound::NonNegative)).collect() } else { vec![] };
    let mut col_rows = Vec::with_capacity(m);
    for j in 0..m {
        let mut terms: Vec<(usize, f64)> = rows.iter().zip(&q_var).map(|(&i, v)| (v[j], mu.weight(i))).collect();
        if general {
            terms.push((nu2_var[j], 1.0));
        }
        col_rows.push(lp.add_sparse_row(&terms, RowKind::Eq, nu.weight(j)));
    }
    let mut bary_rows = Vec::with_capacity(rows.len());
    for (k, &i) in rows.iter().enumerate() {
        let r: Vec<usize> = (0..d)
            .map(|t| {
                let terms: Vec<(usize, f64)> = (0..m).map(|j| (q_var[k][j], nu.atom(j)[t])).collect();
                lp.add_sparse_row(&terms, RowKind::Eq, mu.atom(i)[t])
            })
            .collect();
        bary_rows.push(r);
    }
    let mut null_rows = Vec::new();
    if general {
        for t in 0..d {
            let terms: Vec<(usize, f64)> = (0..m).map(|j| (nu2_var[j], nu.atom(j)[t])).collect();
            null_rows.push(lp.add_sparse_row(&terms, RowKind::Eq, 0.0));
        }
    }
    let sol = lp.solve();
    match sol.status {
        LpStatus::Optimal => {
            let mut q = vec![vec![0.0; m]; n];
            for (k, &i) in rows.iter().enumerate() {
                q[i] = q_var[k].iter().map(|&v| sol.x[v].max(0.0)).collect();
            }
            let kernel = KernelPlan::new(q, nu.atoms());
            let nu1: Vec<f64> = (0..m).map(|j| rows.iter().map(|&i| mu.weight(i) * kernel.q[i][j]).sum()).collect();
            let nu2 = if general { nu2_var.iter().map(|&v| sol.x[v].max(0.0)).collect() } else { vec![0.0; m] };
            Ok(PhcWitness {
                verdict: OrderVerdict::Dominated,
                kernel: Some(kernel),
                nu1: Some(nu1),
                nu2: Some(nu2),
                potential: None,
                margin: None,
            })
        }
        LpStatus::Infeasible => {
            let y = sol.farkas.unwrap_or_default();
            let mut directions: Vec<Point> = rows
                .iter()
                .zip(&bary_rows)
                .map(|(&i, r)| r.iter().map(|&row| y[row] / mu.weight(i)).collect())
                .collect();
            if general {
                directions.push(null_rows.iter().map(|&row| y[row]).collect());
            }
            let scale = directions.iter().map(|u| norm(u)).fold(0.0, f64::max);
            let (potential, margin) = if scale > 0.0 && scale.is_finite() {
                let phi = ConicalPotential { directions }.scaled(1.0 / scale);
                let margin = phc_margin(&phi, mu, nu);
                (Some(phi), Some(margin))
            } else {
                (None, None)
            };
            let certified = margin.is_some_and(|g| g > tol);
            Ok(PhcWitness {
                verdict: if certified { OrderVerdict::NotDominated } else { OrderVerdict::Uncertified },
                kernel: None,
                nu1: None,
                nu2: None,
                potential,
                margin,
            })
        }
        s => Err(OrderError::Lp(s)),
    }
}

/// One-dimensional test: equal means, and positive and negative parts of `ν` dominate.
pub fn phc_order_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> bool {
    let (a, b) = (moments(mu), moments(nu));
    (a.first()[0] - b.first()[0]).abs() <= tol
        && a.positive[0] <= b.positive[0] + tol
        && a.negative[0] <= b.negative[0] + tol
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionReport {
    /// `S_#μ`, equal barycenters merged.
    pub gamma: DiscreteMeasure,
    pub transport_value: f64,
    pub ic_value: f64,
    pub matches: bool,
    pub gamma_dominated: bool,
}

fn conical(cost: &CostModel) -> Result<&ConicalCost, OrderError> {
    cost.as_conical().ok_or_else(|| OrderError::Precondition("needs a conical cost".into()))
}

/// Pushforward `S_#μ` on the rows with `μᵢ > 0`, merging identical barycenters.
pub fn barycenter_image(mu: &DiscreteMeasure, plan: &KernelPlan) -> Result<DiscreteMeasure, MeasureError> {
    let mut atoms: Vec<Point> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for i in mu.support() {
        let s = &plan.barycenters[i];
        match atoms.iter().position(|a| a == s) {
            Some(k) => weights[k] += mu.weight(i),
            None => {
                atoms.push(s.clone());
                weights.push(mu.weight(i));
            }
        }
    }
    DiscreteMeasure::new(atoms, weights)
}

/// Classical transport cost `inf_π Σ π_ik F(xᵢ, z_k)` over couplings of `μ` and `γ`.
pub fn transport_cost_f(c: &ConicalCost, mu: &DiscreteMeasure, gamma: &DiscreteMeasure) -> Result<f64, OrderError> {
    let rows = mu.support();
    let k = gamma.len();
    let mut lp = LinearProgram::new(0);
    let mut vars = Vec::with_capacity(rows.len());
    for &i in &rows {
        let mut r = Vec::with_capacity(k);
        for l in 0..k {
            r.push(lp.add_var(c.f_value(i, gamma.atom(l))?, Bound::NonNegative));
        }
        vars.push(r);
    }
    for (r, &i) in vars.iter().zip(&rows) {
        lp.add_sparse_row(&r.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), RowKind::Eq, mu.weight(i));
    }
    for l in 0..k {
        lp.add_sparse_row(&vars.iter().map(|r| (r[l], 1.0)).collect::<Vec<_>>(), RowKind::Eq, gamma.weight(l));
    }
    let sol = lp.solve();
    if !sol.is_optimal() {
        return Err(OrderError::Lp(sol.status));
    }
    Ok(sol.objective)
}

/// Solves the primal, pushes `μ` forward by the barycenter map and compares `I_c` with the
/// classical transport cost to that image.
pub fn project_phc(cost: &CostModel, mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> Result<ProjectionReport, OrderError> {
    let c = conical(cost)?;
    let cone = support_measure(nu);
    if zero_in_convex_hull(&cone, cone.default_tol()) {
        return Err(OrderError::Precondition("0 lies in the convex hull of supp ν".into()));
    }
    let report = solve_primal(cost, mu, nu, &SolveOptions::default())?;
    let gamma = barycenter_image(mu, &report.plan)?;
    let transport_value = transport_cost_f(c, mu, &gamma)?;
    let w = check_phc_order(&gamma, nu, 1e-9)?;
    if w.verdict != OrderVerdict::Dominated {
        return Err(OrderError::Breach(format!("S_#μ is not dominated by ν ({:?})", w.verdict)));
    }
    Ok(ProjectionReport {
        gamma,
        transport_value,
        ic_value: report.primal,
        matches: (transport_value - report.primal).abs() <= tol,
        gamma_dominated: true,
    })
}

/// `Σ μᵢ F(xᵢ, sᵢ)` in the scalar unknowns `s`.
struct SizeObjective<'a> {
    c: &'a ConicalCost,
    rows: &'a [usize],
    w: &'a [f64],
}

impl SmoothObjective for SizeObjective<'_> {
    fn dim(&self) -> usize {
        self.rows.len()
    }

    fn value(&self, s: &[f64]) -> Option<f64> {
        let mut acc = 0.0;
        for (k, &i) in self.rows.iter().enumerate() {
            acc += self.w[k] * self.c.f_value(i, &[s[k]]).ok()?;
        }
        acc.is_finite().then_some(acc)
    }

    fn gradient(&self, s: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(k, &i)| self.w[k] * self.c.f_gradient(i, &[s[k]]).map_or(f64::NAN, |g| g[0]))
            .collect()
    }

    fn hessian(&self, s: &[f64]) -> DMatrix<f64> {
        let n = self.rows.len();
        let mut h = DMatrix::zeros(n, n);
        for (k, &i) in self.rows.iter().enumerate() {
            let v = match self.c.f_hessian(i, &[s[k]]) {
                Some(m) => m[(0, 0)],
                None => {
                    let e = 1e-6 * (1.0 + s[k].abs());
                    let g = |z: f64| self.c.f_gradient(i, &[z]).map_or(0.0, |g| g[0]);
                    (g(s[k] + e) - g(s[k] - e)) / (2.0 * e)
                }
            };
            h[(k, k)] = self.w[k] * v;
        }
        h
    }
}

/// One-dimensional reduction: pick sizes `s ≥ 0` with `Σ μᵢ sᵢ = m` minimising `Σ μᵢ F(xᵢ, sᵢ)`,
/// then hire `ν` proportionally, `Qᵢⱼ = (sᵢ/m) νⱼ`.
pub fn dim1_reduce(cost: &CostModel, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(KernelPlan, f64), OrderError> {
    let c = conical(cost)?;
    if c.dim() != 1 {
        return Err(OrderError::Dimension(c.dim(), 1));
    }
    if nu.atoms().iter().any(|y| y[0] < 0.0) {
        return Err(OrderError::Precondition("ν must live on [0, ∞)".into()));
    }
    let mean: f64 = (0..nu.len()).map(|j| nu.weight(j) * nu.atom(j)[0]).sum();
    if mean <= 0.0 {
        return Err(OrderError::Precondition(format!("ν has first moment {mean} ≤ 0")));
    }
    let rows = mu.support();
    let w: Vec<f64> = rows.iter().map(|&i| mu.weight(i)).collect();
    let mass: f64 = w.iter().sum();
    let s: Vec<f64> = match &c.f {
        ConicalF::Quadratic => {
            // sᵢ = [xᵢ + λ]₊ with λ fixed by the moment constraint
            let xs: Vec<f64> = rows.iter().map(|&i| c.x[i][0]).collect();
            let moment = |l: f64| xs.iter().zip(&w).map(|(x, wi)| wi * (x + l).max(0.0)).sum::<f64>() - mean;
            let lo = -xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let hi = mean / mass - xs.iter().cloned().fold(f64::INFINITY, f64::min) + 1.0;
            let l = monotone_root(moment, lo, hi, 1e-15);
            xs.iter().map(|x| (x + l).max(0.0)).collect()
        }
        ConicalF::PiecewiseLinear(p) => {
            let mut lp = LinearProgram::new(0);
            let sv: Vec<usize> = rows.iter().map(|_| lp.add_var(0.0, Bound::NonNegative)).collect();
            let tv: Vec<usize> = w.iter().map(|wi| lp.add_var(*wi, Bound::Free)).collect();
            lp.add_sparse_row(&sv.iter().zip(&w).map(|(&v, wi)| (v, *wi)).collect::<Vec<_>>(), RowKind::Eq, mean);
            for (k, &i) in rows.iter().enumerate() {
                for piece in &p[i] {
                    lp.add_sparse_row(&[(tv[k], 1.0), (sv[k], -piece.u[0])], RowKind::Ge, piece.a);
                }
            }
            let sol = lp.solve();
            if !sol.is_optimal() {
                return Err(OrderError::Lp(sol.status));
            }
            sv.iter().map(|&v| sol.x[v].max(0.0)).collect()
        }
        _ => {
            let obj = SizeObjective { c, rows: &rows, w: &w };
            let k = rows.len();
            let mut cons = LinearConstraints::new(k);
            for t in 0..k {
                let mut r = vec![0.0; k];
                r[t] = -1.0;
                cons.push_ineq(&r, 0.0);
            }
            cons.push_eq(&w, mean);
            let x0 = vec![mean / mass; k];
            minimize(&obj, &cons, &x0, &BarrierOptions::default())
                .map_err(|e| OrderError::Solve(SolveError::Numerical(e.to_string())))?
                .x
        }
    };
    let mut q = vec![vec![0.0; nu.len()]; mu.len()];
    let mut value = 0.0;
    for (k, &i) in rows.iter().enumerate() {
        q[i] = (0..nu.len()).map(|j| s[k] / mean * nu.weight(j)).collect();
        value += w[k] * c.f_value(i, &[s[k]])?;
    }
    Ok((KernelPlan::new(q, nu.atoms()), value))
}

#[derive(Clone, Debug, Serialize)]
pub struct BrenierReport {
    pub barycenters: Vec<Point>,
    /// `pᵢ = xᵢ − Sᵢ`.
    pub points: Vec<Point>,
    /// `max_{i,k} (xᵢ − pᵢ)·(p_k − pᵢ)`.
    pub max_violation: f64,
    pub primal: f64,
    pub pass: bool,
}

pub fn brenier_check(mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> Result<BrenierReport, OrderError> {
    brenier_check_with(mu, nu, tol, &SolveOptions::default())
}

/// Quadratic cost: `xᵢ − Sᵢ` must be the projection of `xᵢ` onto a convex set containing
/// every `p_k`, i.e. `(xᵢ − pᵢ)·(p_k − pᵢ) ≤ 0`.
pub fn brenier_check_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    tol: f64,
    opts: &SolveOptions,
) -> Result<BrenierReport, OrderError> {
    same_dim(mu, nu)?;
    let cone = support_measure(nu);
    if zero_in_convex_hull(&cone, cone.default_tol()) {
        return Err(OrderError::Precondition("0 lies in the convex hull of supp ν".into()));
    }
    let cost = CostModel::quadratic(mu, nu)?;
    let rep = solve_primal(&cost, mu, nu, opts)?;
    let rows = mu.support();
    let points: Vec<Point> = rows
        .iter()
        .map(|&i| mu.atom(i).iter().zip(&rep.plan.barycenters[i]).map(|(x, s)| x - s).collect())
        .collect();
    let barycenters: Vec<Point> = rows.iter().map(|&i| rep.plan.barycenters[i].clone()).collect();
    let mut worst = f64::NEG_INFINITY;
    for (a, s) in barycenters.iter().enumerate() {
        for p in &points {
            let diff: Vec<f64> = p.iter().zip(&points[a]).map(|(u, v)| u - v).collect();
            worst = worst.max(dot(s, &diff));
        }
    }
    Ok(BrenierReport { barycenters, points, max_violation: worst, primal: rep.primal, pass: worst <= tol })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum MonotoneSign {
    #[serde(rename = "+")]
    Increasing,
    #[serde(rename = "-")]
    Decreasing,
}

/// Default support threshold: `1e−8 · max Q`.
pub fn default_mass_tol(plan: &KernelPlan) -> f64 {
    1e-8 * plan.q.iter().flatten().cloned().fold(0.0, f64::max)
}

/// For `x_a < x_b` every atom hired by `x_a` lies below (`+`) or above (`−`) every atom hired
/// by `x_b`.
pub fn monotone_support_check(
    plan: &KernelPlan,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    sign: MonotoneSign,
    mass_tol: f64,
) -> bool {
    let mut rows = mu.support();
    rows.sort_by(|&a, &b| mu.atom(a)[0].total_cmp(&mu.atom(b)[0]));
    let spans: Vec<Option<(f64, f64)>> = rows
        .iter()
        .map(|&i| {
            let ys: Vec<f64> = (0..nu.len()).filter(|&j| plan.q[i][j] > mass_tol).map(|j| nu.atom(j)[0]).collect();
            if ys.is_empty() {
                None
            } else {
                Some((ys.iter().cloned().fold(f64::INFINITY, f64::min), ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)))
            }
        })
        .collect();
    let spans: Vec<(f64, f64)> = spans.into_iter().flatten().collect();
    // pairwise ordering of intervals reduces to running extremes
    match sign {
        MonotoneSign::Increasing => {
            let mut hi = f64::NEG_INFINITY;
            spans.iter().all(|&(lo, top)| {
                let ok = hi <= lo;
                hi = hi.max(top);
                ok
            })
        }
        MonotoneSign::Decreasing => {
            let mut lo = f64::INFINITY;
            spans.iter().all(|&(bot, top)| {
                let ok = top <= lo;
                lo = lo.min(bot);
                ok
            })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureBisReport {
    pub ic_value: f64,
    /// `Σ G(xᵢ, T̄ᵢ) η̄ᵢ` plus `Σ_{N̄ᵢ=0} μᵢ F(xᵢ, 0)`.
    pub identity_value: f64,
    pub identity_holds: bool,
    /// Smallest value seen over the random competitors.
    pub min_trial_value: f64,
    pub trials_pass: bool,
    pub pass: bool,
}

/// Random coupling with exact marginals: a convex mix of north-west corner couplings under
/// random row and column orders.
pub fn random_coupling(a: &[f64], b: &[f64], rng: &mut impl Rng, pieces: usize) -> Vec<Vec<f64>> {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![0.0; m]; n];
    let mut lambdas: Vec<f64> = (0..pieces.max(1)).map(|_| rng.gen_range(0.05..1.0)).collect();
    let tot: f64 = lambdas.iter().sum();
    lambdas.iter_mut().for_each(|l| *l /= tot);
    for lam in lambdas {
        let mut ri: Vec<usize> = (0..n).collect();
        let mut ci: Vec<usize> = (0..m).collect();
        ri.shuffle(rng);
        ci.shuffle(rng);
        let mut ra: Vec<f64> = ri.iter().map(|&i| a[i]).collect();
        let mut cb: Vec<f64> = ci.iter().map(|&j| b[j]).collect();
        let (mut p, mut q) = (0, 0);
        while p < n && q < m {
            let t = ra[p].min(cb[q]);
            out[ri[p]][ci[q]] += lam * t;
            ra[p] -= t;
            cb[q] -= t;
            if ra[p] <= cb[q] {
                p += 1;
            } else {
                q += 1;
            }
        }
    }
    out
}

/// Checks the convex-order form of `I_c` on a strong solution `π̄`: the identity at `T̄`, and
/// that `trials` random couplings in `Π(η̄, ν)` never beat it.
pub fn verify_structure_bis(
    c: &ConicalCost,
    pi: &CouplingPlan,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<StructureBisReport, OrderError> {
    let eta = pi.first_marginal();
    let d = c.dim();
    let rows = mu.support();
    let mut ic = 0.0;
    let mut offset = 0.0;
    for &i in &rows {
        let s = c.barycenter(&pi.pi[i].iter().map(|v| v / mu.weight(i)).collect::<Vec<_>>());
        ic += mu.weight(i) * c.f_value(i, &s)?;
        if eta[i] <= 0.0 {
            offset += mu.weight(i) * c.f_value(i, &vec![0.0; d])?;
        }
    }
    let live: Vec<usize> = rows.iter().copied().filter(|&i| eta[i] > 0.0).collect();
    let g_sum = |plan: &[Vec<f64>]| -> Result<f64, CostError> {
        let mut acc = offset;
        for &i in &live {
            let big_n = eta[i] / mu.weight(i);
            let t: Vec<f64> = (0..d).map(|k| (0..nu.len()).map(|j| plan[i][j] * nu.atom(j)[k]).sum::<f64>() / eta[i]).collect();
            let z: Vec<f64> = t.iter().map(|v| v * big_n).collect();
            acc += eta[i] * c.f_value(i, &z)? / big_n;
        }
        Ok(acc)
    };
    let identity_value = g_sum(&pi.pi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = live.iter().map(|&i| eta[i]).collect();
    let mut min_trial = f64::INFINITY;
    for _ in 0..trials {
        let pieces = rng.gen_range(1..4);
        let sub = random_coupling(&a, nu.weights(), &mut rng, pieces);
        let mut full = vec![vec![0.0; nu.len()]; mu.len()];
        for (k, &i) in live.iter().enumerate() {
            full[i] = sub[k].clone();
        }
        min_trial = min_trial.min(g_sum(&full)?);
    }
    let identity_holds = (identity_value - ic).abs() <= tol;
    let trials_pass = trials == 0 || min_trial >= ic - tol;
    Ok(StructureBisReport {
        ic_value: ic,
        identity_value,
        identity_holds,
        min_trial_value: min_trial,
        trials_pass,
        pass: identity_holds && trials_pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ArticulationReport {
    /// `|Q_F φ(xᵢ) − φ(Sᵢ) − F(xᵢ, Sᵢ)|` per row with `μᵢ > 0`.
    pub residuals: Vec<(usize, f64)>,
    pub worst: f64,
    pub pass: bool,
}

/// At an optimal pair the infimum defining `Q_F φ(xᵢ)` is attained at `Sᵢ`.
pub fn articulation_check(
    plan: &KernelPlan,
    phi: &ConicalPotential,
    c: &ConicalCost,
    mu: &DiscreteMeasure,
    tol: f64,
) -> Result<ArticulationReport, OrderError> {
    let mut residuals = Vec::new();
    for i in mu.support() {
        let s = &plan.barycenters[i];
        let r = (q_f(c, phi, i)? - phi.eval(s) - c.f_value(i, s)?).abs();
        residuals.push((i, if r.is_nan() { f64::INFINITY } else { r }));
    }
    let worst = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(ArticulationReport { residuals, worst, pass: worst <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1(a: &[f64], w: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::from_1d(a, w).unwrap()
    }

    #[test]
    fn diagonal_example_is_dominated() {
        let mu = DiscreteMeasure::dirac(vec![1.0, 1.0]).unwrap();
        let nu = DiscreteMeasure::new(vec![vec![2.0, 0.0], vec![0.0, 2.0]], vec![0.5, 0.5]).unwrap();
        let w = check_phc_order(&mu, &nu, 1e-9).unwrap();
        assert_eq!(w.verdict, OrderVerdict::Dominated);
        let q = &w.kernel.unwrap().q[0];
        assert!((q[0] - 0.5).abs() < 1e-12 && (q[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn far_dirac_is_not_dominated() {
        let w = check_phc_order(&m1(&[1.0], &[1.0]), &m1(&[2.0], &[1.0]), 1e-9).unwrap();
        assert_eq!(w.verdict, OrderVerdict::NotDominated);
        let phi = w.potential.unwrap();
        // the witness must be the decreasing linear form
        assert!((phi.eval(&[1.0]) + 1.0).abs() < 1e-12);
        assert!((w.margin.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_measures() {
        let mu = m1(&[1.0, 3.0], &[0.25, 0.75]);
        let w = check_phc_order(&mu, &mu, 1e-9).unwrap();
        assert_eq!(w.verdict, OrderVerdict::Dominated);
        let q = w.kernel.unwrap().q;
        assert!((q[0][0] - 1.0).abs() < 1e-12 && (q[1][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_test() {
        assert!(phc_order_1d(&m1(&[1.0], &[1.0]), &m1(&[0.5, 1.5], &[0.5, 0.5]), 1e-12));
        assert!(!phc_order_1d(&m1(&[1.0], &[1.0]), &m1(&[2.0], &[1.0]), 1e-12));
    }

    #[test]
    fn general_case_uses_null_part() {
        // 0 ∈ co{−1, 1}: ν₂ may absorb a zero-mean pair
        let mu = m1(&[0.5], &[1.0]);
        let nu = m1(&[-1.0, 1.0], &[0.25, 0.75]);
        let w = check_phc_order(&mu, &nu, 1e-9).unwrap();
        assert_eq!(w.verdict, OrderVerdict::Dominated);
        assert!(phc_order_1d(&mu, &nu, 1e-12));
    }

    #[test]
    fn dim1_quadratic_example() {
        let mu = m1(&[0.25, 0.75], &[0.5, 0.5]);
        let nu = m1(&[1.0], &[1.0]);
        let cost = CostModel::quadratic(&mu, &nu).unwrap();
        let (plan, v) = dim1_reduce(&cost, &mu, &nu).unwrap();
        assert!((plan.sizes[0] - 0.75).abs() < 1e-12 && (plan.sizes[1] - 1.25).abs() < 1e-12);
        assert!((v - 0.125).abs() < 1e-12);
    }

    #[test]
    fn brenier_examples() {
        let nu = DiscreteMeasure::dirac(vec![1.0, 0.0]).unwrap();
        let r = brenier_check(&DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap(), &nu, 1e-9).unwrap();
        assert!(r.pass && (r.points[0][0] + 1.0).abs() < 1e-7);
        let mu = DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![2.0, 2.0]]).unwrap();
        let r = brenier_check(&mu, &DiscreteMeasure::dirac(vec![1.0, 1.0]).unwrap(), 1e-6).unwrap();
        assert!(r.pass);
        assert!(r.points.iter().flatten().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn monotone_crossing_fails() {
        let mu = m1(&[0.0, 1.0], &[0.5, 0.5]);
        let nu = m1(&[0.0, 1.0], &[0.5, 0.5]);
        let y = nu.atoms();
        let up = KernelPlan::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], y);
        let down = KernelPlan::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], y);
        assert!(monotone_support_check(&up, &mu, &nu, MonotoneSign::Increasing, 0.0));
        assert!(!monotone_support_check(&up, &mu, &nu, MonotoneSign::Decreasing, 0.0));
        assert!(monotone_support_check(&down, &mu, &nu, MonotoneSign::Decreasing, 0.0));
        assert!(!monotone_support_check(&down, &mu, &nu, MonotoneSign::Increasing, 0.0));
    }

    #[test]
    fn random_coupling_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = [0.2, 0.3, 0.5];
        let b = [0.1, 0.6, 0.1, 0.2];
        let p = random_coupling(&a, &b, &mut rng, 3);
        for i in 0..3 {
            assert!((p[i].iter().sum::<f64>() - a[i]).abs() < 1e-15);
        }
        for j in 0..4 {
            assert!((p.iter().map(|r| r[j]).sum::<f64>() - b[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn single_atom_projection_and_articulation() {
        let mu = m1(&[0.5], &[1.0]);
        let nu = m1(&[1.0, 2.0], &[0.5, 0.5]);
        let cost = CostModel::quadratic(&mu, &nu).unwrap();
        let rep = project_phc(&cost, &mu, &nu, 1e-7).unwrap();
        assert!(rep.matches && rep.gamma.len() == 1);
        let sol = solve_primal(&cost, &mu, &nu, &SolveOptions::default()).unwrap();
        let c = cost.as_conical().unwrap();
        let phi = crate::dual::conical_potential(c, &mu, &sol.plan, None).unwrap();
        assert!(articulation_check(&sol.plan, &phi, c, &mu, 1e-6).unwrap().pass);
        let mut moved = sol.plan.clone();
        moved.barycenters[0][0] += 0.1;
        assert!(!articulation_check(&moved, &phi, c, &mu, 1e-6).unwrap().pass);
    }
}
