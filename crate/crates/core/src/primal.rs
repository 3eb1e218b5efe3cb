//! The primal problem `I_c(μ, ν) = inf { Σᵢ μᵢ c(xᵢ, Qᵢ) : Q ≥ 0, Σᵢ μᵢ Qᵢⱼ = νⱼ }`.

use crate::costs::{cost_gradient, cost_hessian, eval_cost, recession, ConicalF, CostError, CostModel};
use crate::dual::{dual_value, kantorovich_from_gradients, DualPotential};
use crate::measures::{DiscreteMeasure, Point};
use crate::optim::barrier::{transport_barrier, BarrierOptions, RowObjective};
use crate::optim::{fw_minimize, Bound, LinearProgram, LpSolution, LpStatus, RowKind, StepRule};
use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("unbalanced masses: μ has {mu}, ν has {nu}")]
    Unbalanced { mu: f64, nu: f64 },
    #[error("cost is bound to {cost_x}×{cost_y} atoms but the measures have {mu}×{nu}")]
    Shape { cost_x: usize, cost_y: usize, mu: usize, nu: usize },
    #[error("method {method:?} does not apply to this cost: {why}")]
    MethodMismatch { method: Method, why: String },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Nonnegative `n × m` kernel with its sizes `Nᵢ = Σⱼ Qᵢⱼ` and barycenters `Sᵢ = Σⱼ Qᵢⱼ yⱼ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelPlan {
    pub q: Vec<Vec<f64>>,
    pub sizes: Vec<f64>,
    pub barycenters: Vec<Point>,
}

impl KernelPlan {
    pub fn new(q: Vec<Vec<f64>>, y: &[Point]) -> Self {
        let d = y.first().map_or(0, |p| p.len());
        let sizes = q.iter().map(|r| r.iter().sum()).collect();
        let barycenters = q
            .iter()
            .map(|r| {
                let mut s = vec![0.0; d];
                for (w, yj) in r.iter().zip(y) {
                    for t in 0..d {
                        s[t] += w * yj[t];
                    }
                }
                s
            })
            .collect();
        Self { q, sizes, barycenters }
    }

    pub fn zeros(n: usize, y: &[Point]) -> Self {
        Self::new(vec![vec![0.0; y.len()]; n], y)
    }

    pub fn rows(&self) -> usize {
        self.q.len()
    }

    /// `maxⱼ |Σᵢ μᵢ Qᵢⱼ − νⱼ|`, counting only rows with `μᵢ > 0`.
    pub fn marginal_residual(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        (0..nu.len())
            .map(|j| {
                let s: f64 = (0..self.rows()).filter(|&i| mu.weight(i) > 0.0).map(|i| mu.weight(i) * self.q[i][j]).sum();
                (s - nu.weight(j)).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_feasible(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> bool {
        self.q.iter().flatten().all(|v| *v >= 0.0) && self.marginal_residual(mu, nu) <= tol
    }
}

/// A coupling `π` on `Supp(μ) × Y` (entries sum to one).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingPlan {
    pub pi: Vec<Vec<f64>>,
}

impl CouplingPlan {
    pub fn from_kernel(mu: &DiscreteMeasure, plan: &KernelPlan) -> Self {
        let pi = plan
            .q
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().map(|v| mu.weight(i) * v).collect())
            .collect();
        Self { pi }
    }

    pub fn first_marginal(&self) -> Vec<f64> {
        self.pi.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn second_marginal(&self) -> Vec<f64> {
        let m = self.pi.first().map_or(0, |r| r.len());
        (0..m).map(|j| self.pi.iter().map(|r| r[j]).sum()).collect()
    }

    /// First marginal split into the part on rows with `μᵢ > 0` and the part on `μᵢ = 0`.
    pub fn split_first_marginal(&self, mu: &DiscreteMeasure) -> (Vec<f64>, Vec<f64>) {
        let p1 = self.first_marginal();
        let ac = p1.iter().enumerate().map(|(i, v)| if mu.weight(i) > 0.0 { *v } else { 0.0 }).collect();
        let sing = p1.iter().enumerate().map(|(i, v)| if mu.weight(i) > 0.0 { 0.0 } else { *v }).collect();
        (ac, sing)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Auto,
    Lp,
    Fw,
    ClosedForm,
    Barrier,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "auto" => Method::Auto,
            "lp" => Method::Lp,
            "fw" => Method::Fw,
            "closed_form" | "closed-form" => Method::ClosedForm,
            "barrier" => Method::Barrier,
            other => return Err(format!("unknown method {other:?}")),
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub method: Method,
    /// Relative target for the optimality gap.
    pub tol: f64,
    /// Frank–Wolfe iteration budget.
    pub max_iters: usize,
    pub step: StepRule,
    /// Strictly positive starting kernel for the barrier path (entries on inactive rows or
    /// columns are ignored).
    pub start: Option<Vec<Vec<f64>>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { method: Method::Auto, tol: 1e-9, max_iters: 20_000, step: StepRule::LineSearch, start: None }
    }
}

impl SolveOptions {
    pub fn with_method(method: Method) -> Self {
        Self { method, ..Self::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub primal: f64,
    pub plan: KernelPlan,
    pub dual: Option<f64>,
    pub potential: Option<DualPotential>,
    /// `|primal − dual|` when a dual value is available, otherwise the solver's own bound.
    pub gap: f64,
    pub method: Method,
    pub iterations: usize,
}

/// `Σ_{μᵢ>0} μᵢ c(xᵢ, Qᵢ)`.
pub fn primal_objective(cost: &CostModel, mu: &DiscreteMeasure, plan: &KernelPlan) -> Result<f64, CostError> {
    let mut acc = 0.0;
    for i in 0..mu.len() {
        if mu.weight(i) > 0.0 {
            acc += mu.weight(i) * eval_cost(cost, i, &plan.q[i])?;
        }
    }
    Ok(acc)
}

/// The relaxed functional on couplings: absolutely continuous rows pay `c`, rows with
/// `μᵢ = 0` pay the recession cost of their conditional law.
pub fn eval_bar_i(cost: &CostModel, mu: &DiscreteMeasure, pi: &CouplingPlan) -> Result<f64, CostError> {
    let p1 = pi.first_marginal();
    let mut acc = 0.0;
    for i in 0..mu.len() {
        let w = mu.weight(i);
        if w > 0.0 {
            let m: Vec<f64> = pi.pi[i].iter().map(|v| v / w).collect();
            acc += w * eval_cost(cost, i, &m)?;
        } else if p1[i] > 0.0 {
            let px: Vec<f64> = pi.pi[i].iter().map(|v| v / p1[i]).collect();
            let r = recession(cost, i, &px)?;
            if r == f64::INFINITY {
                return Ok(f64::INFINITY);
            }
            acc += p1[i] * r;
        }
    }
    Ok(acc)
}

/// The kernel LP for polyhedral costs: variables `Qᵢⱼ ≥ 0` on rows with `μᵢ > 0`, one free
/// epigraph variable `tᵢ` per such row, objective `Σ μᵢ tᵢ`.
pub struct TransportLp {
    pub lp: LinearProgram,
    /// `q_var[i][j]`, `None` on rows with `μᵢ = 0`.
    pub q_var: Vec<Option<Vec<usize>>>,
    pub t_var: Vec<Option<usize>>,
    /// Row index of the marginal constraint of column `j`.
    pub column_rows: Vec<usize>,
    /// Epigraph rows `tᵢ − bₖ·Qᵢ ≥ aₖ`, per X-atom and piece.
    pub epigraph_rows: Vec<Vec<usize>>,
}

pub fn build_transport_lp(cost: &CostModel, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportLp, SolveError> {
    let n = mu.len();
    let m = nu.len();
    let mut lp = LinearProgram::new(0);
    let mut q_var = vec![None; n];
    let mut t_var = vec![None; n];
    for i in 0..n {
        if mu.weight(i) > 0.0 {
            q_var[i] = Some((0..m).map(|_| lp.add_var(0.0, Bound::NonNegative)).collect::<Vec<_>>());
            t_var[i] = Some(lp.add_var(mu.weight(i), Bound::Free));
        }
    }
    let mut column_rows = Vec::with_capacity(m);
    for j in 0..m {
        let terms: Vec<(usize, f64)> =
            (0..n).filter_map(|i| q_var[i].as_ref().map(|v| (v[j], mu.weight(i)))).collect();
        column_rows.push(lp.add_sparse_row(&terms, RowKind::Eq, nu.weight(j)));
    }
    let mut epigraph_rows = vec![Vec::new(); n];
    for i in 0..n {
        let (Some(qv), Some(t)) = (&q_var[i], t_var[i]) else { continue };
        let pieces = cost.affine_pieces(i).ok_or_else(|| SolveError::MethodMismatch {
            method: Method::Lp,
            why: "cost is not piecewise linear".into(),
        })?;
        for (a, b) in pieces {
            let mut terms = vec![(t, 1.0)];
            terms.extend(qv.iter().zip(&b).map(|(&v, bj)| (v, -bj)));
            epigraph_rows[i].push(lp.add_sparse_row(&terms, RowKind::Ge, a));
        }
    }
    Ok(TransportLp { lp, q_var, t_var, column_rows, epigraph_rows })
}

impl TransportLp {
    pub fn plan(&self, sol: &LpSolution, y: &[Point]) -> KernelPlan {
        let m = y.len();
        let q = self
            .q_var
            .iter()
            .map(|v| match v {
                Some(idx) => idx.iter().map(|&k| sol.x[k].max(0.0)).collect(),
                None => vec![0.0; m],
            })
            .collect();
        KernelPlan::new(q, y)
    }
}

/// Solves the kernel LP, returning the raw solution alongside the problem.
pub fn solve_transport_lp(
    cost: &CostModel,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<(TransportLp, LpSolution), SolveError> {
    let tlp = build_transport_lp(cost, mu, nu)?;
    let sol = tlp.lp.solve();
    match sol.status {
        LpStatus::Optimal => Ok((tlp, sol)),
        LpStatus::Infeasible => Err(SolveError::Infeasible("kernel LP has no feasible point".into())),
        LpStatus::Unbounded => Err(SolveError::Numerical("kernel LP reported unbounded".into())),
        LpStatus::NumericalFailure => Err(SolveError::Numerical("simplex pivot budget exhausted".into())),
    }
}

fn check_instance(cost: &CostModel, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(), SolveError> {
    if cost.n_x() != mu.len() || cost.n_y() != nu.len() {
        return Err(SolveError::Shape { cost_x: cost.n_x(), cost_y: cost.n_y(), mu: mu.len(), nu: nu.len() });
    }
    let (a, b) = (mu.mass(), nu.mass());
    if (a - b).abs() > 1e-9 * a.max(b).max(1.0) {
        return Err(SolveError::Unbalanced { mu: a, nu: b });
    }
    if a <= 0.0 {
        return Err(SolveError::Infeasible("measures carry no mass".into()));
    }
    Ok(())
}

fn resolve(cost: &CostModel, method: Method) -> Result<Method, SolveError> {
    let smooth = match cost {
        CostModel::AffineSup(_) => false,
        CostModel::Composite(_) => true,
        CostModel::Conical(c) => match &c.f {
            ConicalF::PiecewiseLinear(_) => false,
            ConicalF::Oracle(o) => {
                let z = vec![1.0; c.dim()];
                o.hessian(0, &c.x[0], &z).is_some()
            }
            _ => true,
        },
    };
    let power = matches!(cost, CostModel::Conical(c) if matches!(c.f, ConicalF::Power { .. }));
    let mismatch = |why: &str| Err(SolveError::MethodMismatch { method, why: why.into() });
    match method {
        Method::Auto => Ok(if power {
            Method::ClosedForm
        } else if cost.is_polyhedral() {
            Method::Lp
        } else if smooth {
            Method::Barrier
        } else {
            Method::Fw
        }),
        Method::Lp if !cost.is_polyhedral() => mismatch("LP needs a piecewise-linear cost"),
        Method::ClosedForm if !power => mismatch("closed form exists only for the power cost"),
        Method::Fw if power => mismatch("the power cost is not differentiable at 0"),
        Method::Fw if cost.is_polyhedral() => mismatch("Frank–Wolfe needs a differentiable cost"),
        Method::Barrier if !smooth => mismatch("barrier needs second derivatives"),
        _ => Ok(method),
    }
}

pub fn solve_primal(
    cost: &CostModel,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    check_instance(cost, mu, nu)?;
    let method = resolve(cost, opts.method)?;
    let y = nu.atoms();
    let (plan, potential, iterations, fallback_gap) = match method {
        Method::Lp => {
            let (tlp, sol) = solve_transport_lp(cost, mu, nu)?;
            let f = crate::dual::extract_dual_certificate(&sol, &tlp).map_err(|e| SolveError::Numerical(e.to_string()))?;
            (tlp.plan(&sol, y), Some(f), sol.iterations, 0.0)
        }
        Method::ClosedForm => {
            let eta = match cost {
                CostModel::Conical(c) => match c.f {
                    ConicalF::Power { eta } => eta,
                    _ => unreachable!(),
                },
                _ => unreachable!(),
            };
            let (plan, _) = closed_form_power(mu, nu, eta)?;
            let f = power_potential(mu, nu, eta);
            (plan, Some(f), 0, 0.0)
        }
        Method::Barrier => {
            let (plan, f, steps, gap) = solve_barrier(cost, mu, nu, opts)?;
            (plan, Some(f), steps, gap)
        }
        Method::Fw => {
            let (plan, f, its, gap) = solve_fw(cost, mu, nu, opts)?;
            (plan, Some(f), its, gap)
        }
        Method::Auto => unreachable!(),
    };
    let primal = primal_objective(cost, mu, &plan)?;
    let dual = potential.as_ref().map(|f| dual_value(cost, f, mu, nu)).transpose().map_err(|e| SolveError::Numerical(e.to_string()))?;
    let gap = match dual {
        Some(d) if d.is_finite() => (primal - d).abs(),
        _ => fallback_gap,
    };
    Ok(SolveReport { primal, plan, dual, potential, gap, method, iterations })
}

/// Active rows (`μᵢ > 0`) and columns (`νⱼ > 0`).
fn active(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> (Vec<usize>, Vec<usize>) {
    (mu.support(), nu.support())
}

struct RowAdapter<'a> {
    cost: &'a CostModel,
    cols: &'a [usize],
    m: usize,
}

impl RowAdapter<'_> {
    fn expand(&self, q: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.m];
        for (k, &j) in self.cols.iter().enumerate() {
            full[j] = q[k];
        }
        full
    }
}

impl RowObjective for RowAdapter<'_> {
    fn value(&self, row: usize, q: &[f64]) -> Option<f64> {
        eval_cost(self.cost, row, &self.expand(q)).ok().filter(|v| v.is_finite())
    }

    fn gradient(&self, row: usize, q: &[f64]) -> Vec<f64> {
        let g = cost_gradient(self.cost, row, &self.expand(q)).unwrap_or_else(|_| vec![f64::NAN; self.m]);
        self.cols.iter().map(|&j| g[j]).collect()
    }

    fn hessian(&self, row: usize, q: &[f64]) -> DMatrix<f64> {
        let full = self.expand(q);
        let k = self.cols.len();
        match cost_hessian(self.cost, row, &full) {
            Some(h) => DMatrix::from_fn(k, k, |a, b| h[(self.cols[a], self.cols[b])]),
            None => {
                // central differences of the gradient, symmetrized
                let mut h = DMatrix::zeros(k, k);
                for a in 0..k {
                    let eps = 1e-6 * (1.0 + q[a].abs());
                    let mut up = q.to_vec();
                    up[a] += eps;
                    let mut dn = q.to_vec();
                    dn[a] = (dn[a] - eps).max(0.0);
                    let (gu, gd) = (self.gradient(row, &up), self.gradient(row, &dn));
                    for b in 0..k {
                        h[(b, a)] = (gu[b] - gd[b]) / (up[a] - dn[a]);
                    }
                }
                (&h + h.transpose()) * 0.5
            }
        }
    }
}

fn solve_barrier(
    cost: &CostModel,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    opts: &SolveOptions,
) -> Result<(KernelPlan, DualPotential, usize, f64), SolveError> {
    let (rows, cols) = active(mu, nu);
    let adapter = RowAdapter { cost, cols: &cols, m: nu.len() };
    let mu_a: Vec<f64> = rows.iter().map(|&i| mu.weight(i)).collect();
    let nu_a: Vec<f64> = cols.iter().map(|&j| nu.weight(j)).collect();
    let start = opts
        .start
        .as_ref()
        .map(|s| rows.iter().map(|&i| cols.iter().map(|&j| s[i][j]).collect()).collect());
    let bopts = BarrierOptions { gap_tol: (opts.tol * 1e-3).max(1e-15), ..BarrierOptions::default() };
    let sol = transport_barrier(&adapter, &rows, &mu_a, &nu_a, start, &bopts)
        .map_err(|e| SolveError::Numerical(e.to_string()))?;
    let mut q = vec![vec![0.0; nu.len()]; mu.len()];
    for (k, &i) in rows.iter().enumerate() {
        for (l, &j) in cols.iter().enumerate() {
            q[i][j] = sol.q[k][l];
        }
    }
    let plan = KernelPlan::new(q, nu.atoms());
    // multipliers on active columns; inactive ones from the gradients
    let mut f = kantorovich_from_gradients(cost, mu, &plan)?;
    for (l, &j) in cols.iter().enumerate() {
        f.f[j] = sol.column_duals[l];
    }
    Ok((plan, f, sol.newton_steps, sol.gap))
}

fn solve_fw(
    cost: &CostModel,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    opts: &SolveOptions,
) -> Result<(KernelPlan, DualPotential, usize, f64), SolveError> {
    let w = mu.weights();
    let value = |q: &Vec<Vec<f64>>| -> Result<f64, String> {
        let mut acc = 0.0;
        for i in 0..q.len() {
            if w[i] > 0.0 {
                acc += w[i] * eval_cost(cost, i, &q[i]).map_err(|e| e.to_string())?;
            }
        }
        Ok(acc)
    };
    let grad = |q: &Vec<Vec<f64>>| -> Result<Vec<Vec<f64>>, String> {
        (0..q.len())
            .map(|i| {
                if w[i] > 0.0 {
                    cost_gradient(cost, i, &q[i]).map(|g| g.iter().map(|v| w[i] * v).collect()).map_err(|e| e.to_string())
                } else {
                    Ok(vec![0.0; q[i].len()])
                }
            })
            .collect()
    };
    let scale = 1.0 + value(&vec![vec![0.0; nu.len()]; mu.len()]).unwrap_or(0.0).abs();
    let st = fw_minimize(grad, value, w, nu.weights(), opts.max_iters, opts.tol * scale, opts.step)
        .map_err(|e| SolveError::Numerical(e.to_string()))?;
    let plan = KernelPlan::new(st.q, nu.atoms());
    let f = kantorovich_from_gradients(cost, mu, &plan)?;
    Ok((plan, f, st.iterations, st.gap))
}

/// `Q̄ᵢⱼ = (xᵢ^{1/(1−η)}/Z) νⱼ`, value `−Z^{1−η} (Σⱼ yⱼ νⱼ)^η`, `Z = Σᵢ μᵢ xᵢ^{1/(1−η)}`.
pub fn closed_form_power(mu: &DiscreteMeasure, nu: &DiscreteMeasure, eta: f64) -> Result<(KernelPlan, f64), SolveError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(CostError::InvalidParameter(format!("eta = {eta}")).into());
    }
    if mu.dim() != 1 || nu.dim() != 1 || mu.atoms().iter().chain(nu.atoms()).any(|a| a[0] < 0.0) {
        return Err(CostError::OutsideDomain("closed form needs atoms in R₊".into()).into());
    }
    let a0 = 1.0 / (1.0 - eta);
    let z: f64 = (0..mu.len()).map(|i| mu.weight(i) * mu.atom(i)[0].powf(a0)).sum();
    if z <= 0.0 {
        return Err(SolveError::Infeasible("Z = 0: every X-atom with mass sits at 0".into()));
    }
    let q = (0..mu.len())
        .map(|i| {
            let s = mu.atom(i)[0].powf(a0) / z;
            nu.weights().iter().map(|v| s * v).collect()
        })
        .collect();
    let ybar: f64 = (0..nu.len()).map(|j| nu.weight(j) * nu.atom(j)[0]).sum();
    Ok((KernelPlan::new(q, nu.atoms()), -z.powf(1.0 - eta) * ybar.powf(eta)))
}

/// Linear Kantorovich potential `fⱼ = η C^{η−1} yⱼ` of the closed-form solution.
fn power_potential(mu: &DiscreteMeasure, nu: &DiscreteMeasure, eta: f64) -> DualPotential {
    let a0 = 1.0 / (1.0 - eta);
    let z: f64 = (0..mu.len()).map(|i| mu.weight(i) * mu.atom(i)[0].powf(a0)).sum();
    let ybar: f64 = (0..nu.len()).map(|j| nu.weight(j) * nu.atom(j)[0]).sum();
    let c = ybar / z;
    let lam = eta * c.powf(eta - 1.0);
    DualPotential { f: nu.atoms().iter().map(|y| lam * y[0]).collect() }
}

/// The three kernels of the uniform power example, discretized on midpoint grids.
#[derive(Clone, Debug)]
pub struct UniformTriple {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub a0: f64,
    pub c: f64,
    pub a1: f64,
    pub a2: f64,
    pub random_sorting: KernelPlan,
    pub pam: KernelPlan,
    pub nam: KernelPlan,
}

/// Length of `[a, b] ∩ [c, d]`.
fn overlap(a: f64, b: f64, c: f64, d: f64) -> f64 {
    (b.min(d) - a.max(c)).max(0.0)
}

/// Random sorting `N₀(x) = C x^{a₀}` and the assortative matchings `T₁(x) = x^{a₁}`,
/// `T₂(x) = √(1 − x^{a₂})` on `n`-cell grids. Row `i` of a matching sends the image of its
/// cell under `T` to the Y-cells it overlaps, which keeps the ν-marginal exact.
pub fn closed_form_uniform_triple(eta: f64, n: usize) -> Result<UniformTriple, SolveError> {
    if !(eta > 0.0 && eta < 1.0) || n == 0 {
        return Err(CostError::InvalidParameter(format!("eta = {eta}, n = {n}")).into());
    }
    let a0 = 1.0 / (1.0 - eta);
    let c = (2.0 - eta) / (1.0 - eta);
    let (a1, a2) = (c / 2.0, c);
    let grid = DiscreteMeasure::midpoint_grid(n);
    let y = grid.atoms().to_vec();
    let h = 1.0 / n as f64;
    let cell = |i: usize| (i as f64 * h, (i + 1) as f64 * h);
    // cell average of C x^{a₀}
    let rs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let (a, b) = cell(i);
            let size = c * (b.powf(a0 + 1.0) - a.powf(a0 + 1.0)) / ((a0 + 1.0) * h);
            vec![size * h; n]
        })
        .collect();
    let matching = |t: &dyn Fn(f64) -> f64| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let (a, b) = cell(i);
                let (lo, hi) = {
                    let (u, v) = (t(a), t(b));
                    (u.min(v), u.max(v))
                };
                (0..n).map(|j| {
                    let (ya, yb) = cell(j);
                    overlap(lo, hi, ya, yb) / h
                }).collect()
            })
            .collect()
    };
    let pam = matching(&|x: f64| x.powf(a1));
    let nam = matching(&|x: f64| (1.0 - x.powf(a2)).max(0.0).sqrt());
    Ok(UniformTriple {
        mu: grid.clone(),
        nu: grid,
        a0,
        c,
        a1,
        a2,
        random_sorting: KernelPlan::new(rs, &y),
        pam: KernelPlan::new(pam, &y),
        nam: KernelPlan::new(nam, &y),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::AffinePiece;

    fn m1(a: &[f64], w: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::from_1d(a, w).unwrap()
    }

    #[test]
    fn objective_examples() {
        let mu = DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap();
        let nu = DiscreteMeasure::dirac(vec![2.0, 0.0]).unwrap();
        let q = CostModel::quadratic(&mu, &nu).unwrap();
        let plan = KernelPlan::new(vec![vec![1.0]], nu.atoms());
        assert_eq!(primal_objective(&q, &mu, &plan).unwrap(), 2.0);
        let zero = CostModel::affine_sup(vec![AffinePiece { a: vec![0.0], b: vec![vec![5.0]] }]).unwrap();
        let z = KernelPlan::zeros(1, nu.atoms());
        assert_eq!(primal_objective(&zero, &mu, &z).unwrap(), 0.0);
    }

    #[test]
    fn power_closed_form_single_atoms() {
        let d = m1(&[1.0], &[1.0]);
        let (plan, v) = closed_form_power(&d, &d, 0.5).unwrap();
        assert_eq!(plan.q, vec![vec![1.0]]);
        assert_eq!(v, -1.0);
    }

    #[test]
    fn power_optimality_condition() {
        let mu = m1(&[0.2, 0.5, 0.9], &[0.3, 0.3, 0.4]);
        let nu = m1(&[0.1, 0.6], &[0.5, 0.5]);
        let eta = 0.3;
        let (plan, _) = closed_form_power(&mu, &nu, eta).unwrap();
        let a0 = 1.0 / (1.0 - eta);
        let z: f64 = (0..3).map(|i| mu.weight(i) * mu.atom(i)[0].powf(a0)).sum();
        let c = 0.35 / z;
        for i in 0..3 {
            assert!((plan.barycenters[i][0] - c * mu.atom(i)[0].powf(a0)).abs() < 1e-14);
        }
        assert!(plan.is_feasible(&mu, &nu, 1e-14));
    }

    #[test]
    fn triple_exponents_and_marginals() {
        let t = closed_form_uniform_triple(0.5, 50).unwrap();
        assert_eq!((t.a0, t.c, t.a1, t.a2), (2.0, 3.0, 1.5, 3.0));
        for p in [&t.random_sorting, &t.pam, &t.nam] {
            assert!(p.is_feasible(&t.mu, &t.nu, 1e-12), "{}", p.marginal_residual(&t.mu, &t.nu));
        }
    }

    #[test]
    fn lp_on_linear_cost_loads_nearest_atom() {
        // c(x, m) = ∫ |x − y|² dm, grid containing 1, ν = δ₂
        let mu = m1(&[0.0, 0.5, 1.0], &[0.25, 0.25, 0.5]);
        let nu = m1(&[2.0], &[1.0]);
        let cost = CostModel::linear(&mu, &nu, |x, y| (x[0] - y[0]).powi(2));
        let r = solve_primal(&cost, &mu, &nu, &SolveOptions::default()).unwrap();
        assert_eq!(r.method, Method::Lp);
        assert!((r.primal - 1.0).abs() < 1e-12);
        assert!(r.gap < 1e-12);
    }

    #[test]
    fn quadratic_two_atom_barycenter() {
        let mu = DiscreteMeasure::dirac(vec![1.0, 1.0]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let cost = CostModel::quadratic(&mu, &nu).unwrap();
        let r = solve_primal(&cost, &mu, &nu, &SolveOptions::default()).unwrap();
        assert!(r.primal.abs() < 1e-10, "{}", r.primal);
        assert!((r.plan.barycenters[0][0] - 1.0).abs() < 1e-8);
        assert!((r.plan.barycenters[0][1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bar_i_singular_row_uses_recession() {
        let mu = m1(&[0.0, 1.0], &[1.0, 0.0]);
        let nu = m1(&[2.0], &[1.0]);
        let pi = CouplingPlan { pi: vec![vec![0.0], vec![1.0]] };
        let lin = CostModel::linear(&mu, &nu, |x, y| (x[0] - y[0]).powi(2));
        assert_eq!(eval_bar_i(&lin, &mu, &pi).unwrap(), 1.0);
        let quad = CostModel::quadratic(&mu, &nu).unwrap();
        assert_eq!(eval_bar_i(&quad, &mu, &pi).unwrap(), f64::INFINITY);
        let ac = CouplingPlan { pi: vec![vec![1.0], vec![0.0]] };
        let plan = KernelPlan::new(vec![vec![1.0], vec![0.0]], nu.atoms());
        assert_eq!(eval_bar_i(&lin, &mu, &ac).unwrap(), primal_objective(&lin, &mu, &plan).unwrap());
    }

    #[test]
    fn method_mismatch_and_unbalanced() {
        let mu = m1(&[1.0], &[1.0]);
        let nu = m1(&[2.0], &[1.0]);
        let p = CostModel::power(&mu, &nu, 0.5).unwrap();
        assert!(matches!(
            solve_primal(&p, &mu, &nu, &SolveOptions::with_method(Method::Fw)),
            Err(SolveError::MethodMismatch { .. })
        ));
        let heavy = m1(&[2.0], &[2.0]);
        let p2 = CostModel::power(&mu, &heavy, 0.5).unwrap();
        assert!(matches!(solve_primal(&p2, &mu, &heavy, &SolveOptions::default()), Err(SolveError::Unbalanced { .. })));
    }
}
