//! Dense revised simplex.
//!
//! Problems are stated as `min cᵀx` over rows `aᵢᵀx {≤,≥,=} bᵢ` with each variable either
//! nonnegative or free. Internally the problem is brought to standard form, a phase-one
//! problem on artificial variables establishes feasibility, and phase two optimises the
//! original objective. Pricing is Dantzig's rule until a run of degenerate pivots trips a
//! counter, after which Bland's rule is used for the rest of the phase.
//!
//! Dual values follow the Lagrangian `L = cᵀx − yᵀ(Ax − b)`: at an optimum `yᵢ ≤ 0` on `≤`
//! rows, `yᵢ ≥ 0` on `≥` rows, `c − Aᵀy ≥ 0` on nonnegative variables (equality on free
//! ones) and `cᵀx = bᵀy`.

use nalgebra::{DMatrix, DVector};

/// Sign restriction of a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    NonNegative,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub kind: RowKind,
    pub rhs: f64,
}

/// A dense linear program `min cᵀx` subject to the stored rows and variable bounds.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub bounds: Vec<Bound>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Pivot budget exhausted or the basis became singular.
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values, one per original variable (meaningful when optimal).
    pub x: Vec<f64>,
    /// Dual values, one per row (meaningful when optimal).
    pub duals: Vec<f64>,
    pub objective: f64,
    /// Farkas ray when infeasible: `yᵀAⱼ ≤ 0` on nonnegative variables, `= 0` on free ones,
    /// `yᵢ ≤ 0` on `≤` rows, `yᵢ ≥ 0` on `≥` rows and `yᵀb > 0`.
    pub farkas: Option<Vec<f64>>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// `bᵀy` for the stored duals.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        lp.rows.iter().zip(&self.duals).map(|(r, y)| r.rhs * y).sum()
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            bounds: vec![Bound::NonNegative; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Appends a variable and returns its index.
    pub fn add_var(&mut self, cost: f64, bound: Bound) -> usize {
        self.objective.push(cost);
        self.bounds.push(bound);
        for r in &mut self.rows {
            r.coeffs.push(0.0);
        }
        self.objective.len() - 1
    }

    /// Adds a dense row; shorter coefficient vectors are zero-padded.
    pub fn add_row(&mut self, mut coeffs: Vec<f64>, kind: RowKind, rhs: f64) -> usize {
        assert!(coeffs.len() <= self.num_vars(), "row longer than variable count");
        coeffs.resize(self.num_vars(), 0.0);
        self.rows.push(Row { coeffs, kind, rhs });
        self.rows.len() - 1
    }

    /// Adds a row from sparse `(var, coeff)` terms.
    pub fn add_sparse_row(&mut self, terms: &[(usize, f64)], kind: RowKind, rhs: f64) -> usize {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(j, a) in terms {
            coeffs[j] += a;
        }
        self.add_row(coeffs, kind, rhs)
    }

    fn validate(&self) -> bool {
        let n = self.num_vars();
        self.bounds.len() == n
            && self.objective.iter().all(|c| c.is_finite())
            && self.rows.iter().all(|r| {
                r.coeffs.len() == n && r.rhs.is_finite() && r.coeffs.iter().all(|a| a.is_finite())
            })
    }

    pub fn solve(&self) -> LpSolution {
        solve_lp(self)
    }
}

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERACY_LIMIT: usize = 30;
const REFACTOR_EVERY: usize = 64;

#[derive(Clone, Copy, PartialEq)]
enum ColKind {
    Structural { var: usize, sign: f64 },
    Slack,
    Artificial,
}

struct Standard {
    a: DMatrix<f64>,
    b: DVector<f64>,
    cost: Vec<f64>,
    kinds: Vec<ColKind>,
    row_sign: Vec<f64>,
    initial_basis: Vec<usize>,
    pivot_tol: f64,
    cost_tol: f64,
}

fn to_standard(lp: &LinearProgram) -> Standard {
    let m = lp.rows.len();
    let mut cols: Vec<(Vec<f64>, f64, ColKind)> = Vec::new();
    for (j, bound) in lp.bounds.iter().enumerate() {
        let col: Vec<f64> = lp.rows.iter().map(|r| r.coeffs[j]).collect();
        cols.push((col.clone(), lp.objective[j], ColKind::Structural { var: j, sign: 1.0 }));
        if *bound == Bound::Free {
            let neg: Vec<f64> = col.iter().map(|v| -v).collect();
            cols.push((neg, -lp.objective[j], ColKind::Structural { var: j, sign: -1.0 }));
        }
    }
    let row_sign: Vec<f64> = lp.rows.iter().map(|r| if r.rhs < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut basis_slot: Vec<Option<usize>> = vec![None; m];
    for (i, r) in lp.rows.iter().enumerate() {
        let coef = match r.kind {
            RowKind::Le => 1.0,
            RowKind::Ge => -1.0,
            RowKind::Eq => continue,
        };
        let mut col = vec![0.0; m];
        col[i] = coef;
        if coef * row_sign[i] > 0.0 {
            basis_slot[i] = Some(cols.len());
        }
        cols.push((col, 0.0, ColKind::Slack));
    }
    for i in 0..m {
        if basis_slot[i].is_none() {
            let mut col = vec![0.0; m];
            col[i] = row_sign[i];
            basis_slot[i] = Some(cols.len());
            cols.push((col, 0.0, ColKind::Artificial));
        }
    }
    let ntot = cols.len();
    let mut a = DMatrix::zeros(m, ntot);
    let mut scale: f64 = 1.0;
    for (j, (col, _, _)) in cols.iter().enumerate() {
        for i in 0..m {
            let v = col[i] * row_sign[i];
            a[(i, j)] = v;
            scale = scale.max(v.abs());
        }
    }
    let b = DVector::from_iterator(m, lp.rows.iter().zip(&row_sign).map(|(r, s)| r.rhs * s));
    let cscale = lp.objective.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
    Standard {
        a,
        b,
        cost: cols.iter().map(|c| c.1).collect(),
        kinds: cols.iter().map(|c| c.2).collect(),
        row_sign,
        initial_basis: basis_slot.into_iter().map(|s| s.expect("every row has a basic column")).collect(),
        pivot_tol: 1e-9 * scale,
        cost_tol: 1e-9 * cscale,
    }
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
    Failure,
}

struct Tableau<'a> {
    std: &'a Standard,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: DMatrix<f64>,
    xb: DVector<f64>,
    iterations: usize,
    since_refactor: usize,
}

impl<'a> Tableau<'a> {
    fn new(std: &'a Standard) -> Option<Self> {
        let m = std.b.len();
        let basis = std.initial_basis.clone();
        let mut in_basis = vec![false; std.kinds.len()];
        for &j in &basis {
            in_basis[j] = true;
        }
        let mut t = Self {
            std,
            basis,
            in_basis,
            binv: DMatrix::identity(m, m),
            xb: DVector::zeros(m),
            iterations: 0,
            since_refactor: 0,
        };
        t.refactor().then_some(t)
    }

    fn refactor(&mut self) -> bool {
        let m = self.basis.len();
        let mut bmat = DMatrix::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            bmat.set_column(k, &self.std.a.column(j));
        }
        match bmat.lu().try_inverse() {
            Some(inv) => {
                self.binv = inv;
                self.xb = &self.binv * &self.std.b;
                self.since_refactor = 0;
                true
            }
            None => false,
        }
    }

    fn duals(&self, cost: &[f64]) -> DVector<f64> {
        let cb = DVector::from_iterator(self.basis.len(), self.basis.iter().map(|&j| cost[j]));
        self.binv.tr_mul(&cb)
    }

    fn run(&mut self, cost: &[f64], phase_two: bool, max_iters: usize) -> PhaseOutcome {
        let std = self.std;
        let m = self.basis.len();
        let mut bland = false;
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= max_iters {
                return PhaseOutcome::Failure;
            }
            let y = self.duals(cost);
            // pricing
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..std.kinds.len() {
                if self.in_basis[j] || (phase_two && std.kinds[j] == ColKind::Artificial) {
                    continue;
                }
                let d = cost[j] - std.a.column(j).dot(&y);
                if d < -std.cost_tol {
                    match entering {
                        None => entering = Some((j, d)),
                        Some((_, best)) if !bland && d < best => entering = Some((j, d)),
                        _ => {}
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some((q, _)) = entering else {
                return PhaseOutcome::Optimal;
            };
            let alpha = &self.binv * std.a.column(q);
            // ratio test
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a_i = alpha[i];
                let stuck_artificial = phase_two && std.kinds[self.basis[i]] == ColKind::Artificial;
                let ratio = if stuck_artificial && a_i.abs() > std.pivot_tol {
                    0.0
                } else if a_i > std.pivot_tol {
                    self.xb[i].max(0.0) / a_i
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some((r, best)) => {
                        if ratio < best - 1e-12 {
                            true
                        } else if ratio <= best + 1e-12 {
                            if bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                a_i.abs() > alpha[r].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, step)) = leave else {
                return PhaseOutcome::Unbounded;
            };
            if step <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > DEGENERACY_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, q, &alpha);
            self.iterations += 1;
            self.since_refactor += 1;
            if self.since_refactor >= REFACTOR_EVERY && !self.refactor() {
                return PhaseOutcome::Failure;
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &DVector<f64>) {
        let m = self.basis.len();
        let piv = alpha[r];
        let step = self.xb[r] / piv;
        for i in 0..m {
            if i != r {
                self.xb[i] -= alpha[i] * step;
            }
        }
        self.xb[r] = step;
        let row_r = self.binv.row(r) / piv;
        for i in 0..m {
            if i != r && alpha[i] != 0.0 {
                let f = alpha[i];
                for k in 0..m {
                    self.binv[(i, k)] -= f * row_r[k];
                }
            }
        }
        self.binv.set_row(r, &row_r);
        self.in_basis[self.basis[r]] = false;
        self.in_basis[q] = true;
        self.basis[r] = q;
    }

    /// Pivots basic artificials out where a usable structural or slack column exists.
    fn expel_artificials(&mut self) {
        let std = self.std;
        for r in 0..self.basis.len() {
            if std.kinds[self.basis[r]] != ColKind::Artificial {
                continue;
            }
            let row = self.binv.row(r).clone_owned();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..std.kinds.len() {
                if self.in_basis[j] || std.kinds[j] == ColKind::Artificial {
                    continue;
                }
                let v = (&row * std.a.column(j))[0];
                if v.abs() > 1e3 * std.pivot_tol && best.is_none_or(|(_, b)| v.abs() > b) {
                    best = Some((j, v.abs()));
                }
            }
            if let Some((q, _)) = best {
                let alpha = &self.binv * std.a.column(q);
                self.pivot(r, q, &alpha);
            }
        }
    }
}

/// Solves `lp` with the two-phase revised simplex method.
pub fn solve_lp(lp: &LinearProgram) -> LpSolution {
    let n = lp.num_vars();
    let m = lp.rows.len();
    let failure = |status, iterations| LpSolution {
        status,
        x: vec![0.0; n],
        duals: vec![0.0; m],
        objective: f64::NAN,
        farkas: None,
        iterations,
    };
    if !lp.validate() {
        return failure(LpStatus::NumericalFailure, 0);
    }
    if m == 0 {
        // Only sign constraints: optimal at 0 unless some cost can be driven down.
        let unbounded = lp
            .objective
            .iter()
            .zip(&lp.bounds)
            .any(|(c, b)| *c < 0.0 || (*b == Bound::Free && *c != 0.0));
        if unbounded {
            return failure(LpStatus::Unbounded, 0);
        }
        return LpSolution {
            status: LpStatus::Optimal,
            x: vec![0.0; n],
            duals: vec![],
            objective: 0.0,
            farkas: None,
            iterations: 0,
        };
    }
    let std = to_standard(lp);
    let max_iters = 200 * (m + std.kinds.len()) + 1000;
    let Some(mut tab) = Tableau::new(&std) else {
        return failure(LpStatus::NumericalFailure, 0);
    };

    // phase one
    let phase_one_cost: Vec<f64> = std
        .kinds
        .iter()
        .map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 })
        .collect();
    let has_artificial = std.initial_basis.iter().any(|&j| std.kinds[j] == ColKind::Artificial);
    if has_artificial {
        match tab.run(&phase_one_cost, false, max_iters) {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::Unbounded | PhaseOutcome::Failure => {
                return failure(LpStatus::NumericalFailure, tab.iterations)
            }
        }
        if !tab.refactor() {
            return failure(LpStatus::NumericalFailure, tab.iterations);
        }
        let infeasibility: f64 = tab
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &j)| std.kinds[j] == ColKind::Artificial)
            .map(|(i, _)| tab.xb[i].max(0.0))
            .sum();
        let bscale = std.b.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if infeasibility > 1e-9 * bscale {
            let y = tab.duals(&phase_one_cost);
            let farkas: Vec<f64> = (0..m).map(|i| y[i] * std.row_sign[i]).collect();
            return LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                duals: vec![0.0; m],
                objective: f64::NAN,
                farkas: Some(farkas),
                iterations: tab.iterations,
            };
        }
        tab.expel_artificials();
        if !tab.refactor() {
            return failure(LpStatus::NumericalFailure, tab.iterations);
        }
    }

    // phase two
    match tab.run(&std.cost, true, max_iters) {
        PhaseOutcome::Optimal => {}
        PhaseOutcome::Unbounded => return failure(LpStatus::Unbounded, tab.iterations),
        PhaseOutcome::Failure => return failure(LpStatus::NumericalFailure, tab.iterations),
    }
    if !tab.refactor() {
        return failure(LpStatus::NumericalFailure, tab.iterations);
    }
    let mut x = vec![0.0; n];
    for (i, &j) in tab.basis.iter().enumerate() {
        if let ColKind::Structural { var, sign } = std.kinds[j] {
            x[var] += sign * tab.xb[i].max(0.0);
        }
    }
    let y = tab.duals(&std.cost);
    let duals: Vec<f64> = (0..m).map(|i| y[i] * std.row_sign[i]).collect();
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpSolution {
        status: LpStatus::Optimal,
        x,
        duals,
        objective,
        farkas: None,
        iterations: tab.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_lower_bound() {
        let mut lp = LinearProgram::new(1);
        lp.objective[0] = 1.0;
        lp.add_row(vec![1.0], RowKind::Ge, 3.0);
        let sol = lp.solve();
        assert!(sol.is_optimal());
        assert!((sol.objective - 3.0).abs() < 1e-12);
        assert!((sol.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_system_yields_farkas_ray() {
        let mut lp = LinearProgram::new(2);
        lp.add_row(vec![1.0, 1.0], RowKind::Eq, 1.0);
        lp.add_row(vec![1.0, -1.0], RowKind::Eq, 3.0);
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Infeasible);
        let y = sol.farkas.unwrap();
        for j in 0..2 {
            let ya: f64 = lp.rows.iter().zip(&y).map(|(r, yi)| r.coeffs[j] * yi).sum();
            assert!(ya <= 1e-12, "column {j}: {ya}");
        }
        let yb: f64 = lp.rows.iter().zip(&y).map(|(r, yi)| r.rhs * yi).sum();
        assert!(yb > 0.0);
    }

    #[test]
    fn two_by_two_transport_prefers_diagonal() {
        // vertices of {x11+x12 = .5, x21+x22 = .5, x11+x21 = .5, x12+x22 = .5}:
        // t·diag + (1−t)·anti, t ∈ {0,1}; costs 0 on the diagonal, 1 off it
        let mut lp = LinearProgram::new(4);
        lp.objective = vec![0.0, 1.0, 1.0, 0.0];
        lp.add_row(vec![1.0, 1.0, 0.0, 0.0], RowKind::Eq, 0.5);
        lp.add_row(vec![0.0, 0.0, 1.0, 1.0], RowKind::Eq, 0.5);
        lp.add_row(vec![1.0, 0.0, 1.0, 0.0], RowKind::Eq, 0.5);
        lp.add_row(vec![0.0, 1.0, 0.0, 1.0], RowKind::Eq, 0.5);
        let sol = lp.solve();
        assert!(sol.is_optimal());
        assert!(sol.objective.abs() < 1e-12);
        assert!((sol.x[0] - 0.5).abs() < 1e-12 && (sol.x[3] - 0.5).abs() < 1e-12);
        assert!((sol.dual_objective(&lp) - sol.objective).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, 0.0];
        lp.add_row(vec![1.0, -1.0], RowKind::Le, 1.0);
        assert_eq!(lp.solve().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variable_and_negative_rhs() {
        // min x s.t. x ≥ −2, x free
        let mut lp = LinearProgram::new(1);
        lp.bounds[0] = Bound::Free;
        lp.objective[0] = 1.0;
        lp.add_row(vec![1.0], RowKind::Ge, -2.0);
        let sol = lp.solve();
        assert!(sol.is_optimal());
        assert!((sol.x[0] + 2.0).abs() < 1e-12);
        assert!((sol.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.add_row(vec![1.0, 1.0], RowKind::Eq, 1.0);
        lp.add_row(vec![2.0, 2.0], RowKind::Eq, 2.0);
        let sol = lp.solve();
        assert!(sol.is_optimal());
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert!((sol.dual_objective(&lp) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling instance
        let mut lp = LinearProgram::new(4);
        lp.objective = vec![-0.75, 150.0, -0.02, 6.0];
        lp.add_row(vec![0.25, -60.0, -0.04, 9.0], RowKind::Le, 0.0);
        lp.add_row(vec![0.5, -90.0, -0.02, 3.0], RowKind::Le, 0.0);
        lp.add_row(vec![0.0, 0.0, 1.0, 0.0], RowKind::Le, 1.0);
        let sol = lp.solve();
        assert!(sol.is_optimal());
        assert!((sol.objective + 0.05).abs() < 1e-9);
    }
}
