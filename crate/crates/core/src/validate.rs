//! Golden and property suites, plus the random instance generators they share with the tests.

use crate::costs::{check_conditions, eval_cost, recession, AffinePiece, CostModel, LinearPiece, ScalarG, Verdict};
use crate::dual::{dual_value, k_c, DualPotential};
use crate::measures::{zero_in_convex_hull, ConeModel, DiscreteMeasure, Point};
use crate::order::{
    brenier_check_with, check_phc_order, default_mass_tol, dim1_reduce, monotone_support_check, phc_margin,
    phc_order_1d, project_phc, random_coupling, MonotoneSign, OrderVerdict,
};
use crate::primal::{
    closed_form_uniform_triple, eval_bar_i, primal_objective, solve_primal, CouplingPlan, KernelPlan, Method,
    SolveOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::time::Instant;

pub mod gen {
    use super::*;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Positive weights summing to one.
    pub fn weights(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    }

    pub fn points(rng: &mut impl Rng, n: usize, d: usize, lo: f64, hi: f64) -> Vec<Point> {
        (0..n).map(|_| (0..d).map(|_| rng.gen_range(lo..hi)).collect()).collect()
    }

    /// Sorted, distinct 1-d atoms.
    pub fn sorted_line(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        // jittered grid keeps atoms apart
        let h = (hi - lo) / n as f64;
        (0..n).map(|k| lo + h * (k as f64 + rng.gen_range(0.1..0.9))).collect()
    }

    pub fn measure(rng: &mut impl Rng, n: usize, d: usize, lo: f64, hi: f64) -> DiscreteMeasure {
        let p = points(rng, n, d, lo, hi);
        DiscreteMeasure::new(p, weights(rng, n)).expect("continuous draws are distinct")
    }

    /// Target measure whose support stays in `[0.2, 2]^d`, away from the origin.
    pub fn target(rng: &mut impl Rng, m: usize, d: usize) -> DiscreteMeasure {
        measure(rng, m, d, 0.2, 2.0)
    }

    pub fn pl_pieces(rng: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<LinearPiece>> {
        (0..n)
            .map(|_| {
                let k = rng.gen_range(1..=3);
                (0..k)
                    .map(|_| LinearPiece { u: (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect(), a: rng.gen_range(-1.0..1.0) })
                    .collect()
            })
            .collect()
    }

    pub fn pl_conical(rng: &mut impl Rng, n: usize, m: usize, d: usize) -> (DiscreteMeasure, DiscreteMeasure, CostModel) {
        let mu = measure(rng, n, d, 0.0, 1.0);
        let nu = target(rng, m, d);
        let pcs = pl_pieces(rng, n, d);
        let cost = CostModel::piecewise_linear(&mu, &nu, pcs).expect("valid pieces");
        (mu, nu, cost)
    }

    pub fn affine_sup(rng: &mut impl Rng, n: usize, m: usize) -> (DiscreteMeasure, DiscreteMeasure, CostModel) {
        let mu = measure(rng, n, 1, 0.0, 1.0);
        let nu = target(rng, m, 1);
        let k = rng.gen_range(1..=3);
        let pieces = (0..k)
            .map(|_| AffinePiece {
                a: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                b: (0..n).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
            })
            .collect();
        (mu, nu, CostModel::affine_sup(pieces).expect("valid pieces"))
    }

    /// `μ ≤_phc ν` by construction: `xᵢ = Σⱼ πᵢⱼ yⱼ / μᵢ` for a coupling `π` with second marginal `ν`.
    pub fn dominated(rng: &mut impl Rng, nu: &DiscreteMeasure, n: usize) -> DiscreteMeasure {
        let eta = weights(rng, n);
        let pieces = rng.gen_range(1..4);
        let pi = random_coupling(&eta, nu.weights(), rng, pieces);
        let w = weights(rng, n);
        let d = nu.dim();
        let atoms: Vec<Point> = (0..n)
            .map(|i| (0..d).map(|t| (0..nu.len()).map(|j| pi[i][j] * nu.atom(j)[t]).sum::<f64>() / w[i]).collect())
            .collect();
        DiscreteMeasure::new(atoms, w).expect("distinct barycenters")
    }

    /// Random kernel with exact ν-marginal.
    pub fn feasible_plan(rng: &mut impl Rng, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> KernelPlan {
        let pieces = rng.gen_range(1..4);
        let pi = random_coupling(mu.weights(), nu.weights(), rng, pieces);
        let q = pi.iter().enumerate().map(|(i, r)| r.iter().map(|v| v / mu.weight(i)).collect()).collect();
        KernelPlan::new(q, nu.atoms())
    }

    /// One cost from every family, on small random instances.
    pub fn any_cost(rng: &mut impl Rng, family: usize) -> (DiscreteMeasure, DiscreteMeasure, CostModel) {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=4);
        match family % 6 {
            0 => affine_sup(rng, n, m),
            1 => {
                let d = rng.gen_range(1..=2);
                pl_conical(rng, n, m, d)
            }
            2 => {
                let d = rng.gen_range(1..=2);
                let mu = measure(rng, n, d, -1.0, 2.0);
                let nu = target(rng, m, d);
                let c = CostModel::quadratic(&mu, &nu).unwrap();
                (mu, nu, c)
            }
            3 => {
                let mu = measure(rng, n, 1, 0.0, 1.0);
                let nu = target(rng, m, 1);
                let eta = rng.gen_range(0.1..0.9);
                let c = CostModel::power(&mu, &nu, eta).unwrap();
                (mu, nu, c)
            }
            4 => {
                let mu = measure(rng, n, 1, 0.0, 1.0);
                let nu = target(rng, m, 1);
                let g = match rng.gen_range(0..3) {
                    0 => ScalarG::Power { coef: rng.gen_range(0.5..2.0), p: rng.gen_range(1.0..3.0) },
                    1 => ScalarG::Exp { coef: rng.gen_range(0.5..2.0), rate: rng.gen_range(0.2..1.5) },
                    _ => ScalarG::NegPower { coef: rng.gen_range(0.5..2.0), p: rng.gen_range(0.2..0.9) },
                };
                let c = CostModel::composite_from(&mu, &nu, |x, y| (y[0] - x[0]).abs() + 0.1, g).unwrap();
                (mu, nu, c)
            }
            _ => {
                let d = 2;
                let mu = measure(rng, n, d, 0.0, 1.0);
                let nu = target(rng, m, d);
                let mats = (0..n)
                    .map(|_| nalgebra::DMatrix::from_fn(2, 2, |_, _| rng.gen_range(0.1..1.0)))
                    .collect();
                let c = CostModel::sigma_norm(&mu, &nu, rng.gen_range(0.2..0.8), rng.gen_range(0.3..1.0), mats).unwrap();
                (mu, nu, c)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    /// Wall clock; not part of the deterministic content.
    #[serde(skip)]
    pub seconds: f64,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String, start: Instant) -> Self {
        Self { name: name.into(), pass, detail, seconds: start.elapsed().as_secs_f64() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Golden,
    Properties,
    All,
}

/// `tol` unless overridden.
fn pick(tol: f64, over: Option<f64>) -> f64 {
    over.unwrap_or(tol)
}

pub fn run(suite: Suite, seed: u64, tol_override: Option<f64>) -> Vec<Check> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Golden | Suite::All) {
        out.extend(golden(seed, tol_override));
    }
    if matches!(suite, Suite::Properties | Suite::All) {
        out.extend(properties(seed, 1000, tol_override));
    }
    out
}

pub fn golden(seed: u64, over: Option<f64>) -> Vec<Check> {
    vec![
        power_closed_form(over),
        cauchy_schwarz(over),
        no_strong_solution(over),
        lp_duality(seed, 50, over),
        strassen(seed, 200, over),
        projection_identity(seed, 50, over),
        brenier(seed, 50, over),
        monotonicity(seed, 20, over),
    ]
}

/// Power cost on the uniform grid: numerical 1-d reduction against the closed form, and
/// the three explicit optimal kernels against each other.
pub fn power_closed_form(over: Option<f64>) -> Check {
    let t0 = Instant::now();
    let tol = pick(5e-3, over);
    let (n, eta) = (200, 0.5);
    let grid = DiscreteMeasure::midpoint_grid(n);
    let cost = CostModel::power(&grid, &grid, eta).unwrap();
    let z: f64 = grid.atoms().iter().map(|x| x[0].powf(1.0 / (1.0 - eta))).sum::<f64>() / n as f64;
    let ybar: f64 = grid.atoms().iter().map(|y| y[0]).sum::<f64>() / n as f64;
    let formula = -z.powf(1.0 - eta) * ybar.powf(eta);
    let solved = dim1_reduce(&cost, &grid, &grid).map(|r| r.1);
    let triple = closed_form_uniform_triple(eta, n).unwrap();
    let objs: Vec<f64> = [&triple.random_sorting, &triple.pam, &triple.nam]
        .iter()
        .map(|p| primal_objective(&cost, &grid, p).unwrap_or(f64::NAN))
        .collect();
    let spread = objs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - objs.iter().cloned().fold(f64::INFINITY, f64::min);
    let secs = t0.elapsed().as_secs_f64();
    match solved {
        Ok(v) => {
            let pass = (v - formula).abs() <= tol && spread <= tol && secs < 5.0;
            Check::new(
                "power closed form",
                pass,
                format!("solver {v:.10} formula {formula:.10} triple {objs:?} spread {spread:.3e}"),
                t0,
            )
        }
        Err(e) => Check::new("power closed form", false, e.to_string(), t0),
    }
}

/// Squared first-moment cost towards `δ₂`: the discrete Cauchy–Schwarz bound is attained.
pub fn cauchy_schwarz(over: Option<f64>) -> Check {
    let t0 = Instant::now();
    let n = 100;
    let mu = DiscreteMeasure::midpoint_grid(n);
    let nu = DiscreteMeasure::dirac(vec![2.0]).unwrap();
    let cost = CostModel::composite_from(&mu, &nu, |x, y| (y[0] - x[0]).abs(), ScalarG::Power { coef: 1.0, p: 2.0 }).unwrap();
    let rep = match solve_primal(&cost, &mu, &nu, &SolveOptions::default()) {
        Ok(r) => r,
        Err(e) => return Check::new("cauchy-schwarz example", false, e.to_string(), t0),
    };
    let inv: Vec<f64> = mu.atoms().iter().map(|x| (2.0 - x[0]).powi(-2)).collect();
    let s: f64 = inv.iter().zip(mu.weights()).map(|(a, w)| a * w).sum();
    let exact = 1.0 / s;
    let mut worst_rel: f64 = 0.0;
    for (i, a) in inv.iter().enumerate() {
        let expect = a / s;
        worst_rel = worst_rel.max((rep.plan.sizes[i] - expect).abs() / expect);
    }
    let pass = (rep.primal - exact).abs() <= pick(1e-8, over)
        && (rep.primal - 2.0).abs() <= pick(0.01, over)
        && worst_rel <= pick(1e-6, over);
    Check::new(
        "cauchy-schwarz example",
        pass,
        format!("value {:.12} exact {exact:.12} size rel err {worst_rel:.3e}", rep.primal),
        t0,
    )
}

/// Linear quadratic-distance cost towards `δ₂`: the LP loads everything on `x = 1`, and the
/// relaxed functional charges the singular coupling `δ₁ ⊗ δ₂` through the recession cost.
pub fn no_strong_solution(over: Option<f64>) -> Check {
    let t0 = Instant::now();
    let nu = DiscreteMeasure::dirac(vec![2.0]).unwrap();
    let sq = |x: &[f64], y: &[f64]| (x[0] - y[0]).powi(2);
    let grid = DiscreteMeasure::from_1d(&[0.0, 0.25, 0.5, 0.75, 1.0], &[0.2; 5]).unwrap();
    let cost = CostModel::linear(&grid, &nu, sq);
    let v = solve_primal(&cost, &grid, &nu, &SolveOptions::default()).map(|r| r.primal);
    let modeled = DiscreteMeasure::from_1d(&[0.0, 0.5, 1.0], &[0.5, 0.5, 0.0]).unwrap();
    let cost2 = CostModel::linear(&modeled, &nu, sq);
    let pi = CouplingPlan { pi: vec![vec![0.0], vec![0.0], vec![1.0]] };
    let bar = eval_bar_i(&cost2, &modeled, &pi);
    match (v, bar) {
        (Ok(v), Ok(b)) => {
            let pass = (v - 1.0).abs() <= pick(1e-8, over) && (b - 1.0).abs() <= pick(0.0, over);
            Check::new("weak solution example", pass, format!("value {v:.12} bar-I {b}"), t0)
        }
        (a, b) => Check::new("weak solution example", false, format!("{a:?} {b:?}"), t0),
    }
}

/// LP primal value against the value of the extracted dual potential.
pub fn lp_duality(seed: u64, count: usize, over: Option<f64>) -> Check {
    let t0 = Instant::now();
    let tol = pick(1e-8, over);
    let mut r = gen::rng(seed ^ 0x4c50);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for k in 0..count {
        let n = r.gen_range(1..=10);
        let m = r.gen_range(1..=10);
        let (mu, nu, cost) = if k % 2 == 0 {
            let d = r.gen_range(1..=2);
            gen::pl_conical(&mut r, n, m, d)
        } else {
            gen::affine_sup(&mut r, n, m)
        };
        let res = solve_primal(&cost, &mu, &nu, &SolveOptions::with_method(Method::Lp)).and_then(|rep| {
            let f = rep.potential.clone().unwrap();
            dual_value(&cost, &f, &mu, &nu)
                .map(|d| (rep.primal, d))
                .map_err(|e| crate::primal::SolveError::Numerical(e.to_string()))
        });
        match res {
            Ok((p, d)) => {
                let rel = (p - d).abs() / p.abs().max(1.0);
                worst = worst.max(rel);
                if rel > tol {
                    failures.push(k);
                }
            }
            Err(_) => failures.push(k),
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    Check::new(
        "finite duality",
        failures.is_empty() && secs < 10.0,
        format!("{count} instances, worst relative gap {worst:.3e}, failures {failures:?}"),
        t0,
    )
}

/// Order oracle against the 1-d test, and self-consistency of its certificates in 2-d.
pub fn strassen(seed: u64, count: usize, over: Option<f64>) -> Check {
    let t0 = Instant::now();
    let bary_tol = pick(1e-8, over);
    let margin_tol = pick(1e-9, over);
    let mut r = gen::rng(seed ^ 0x5354);
    let mut failures = Vec::new();
    let (mut dom, mut not) = (0, 0);
    for k in 0..count {
        let d = 1 + k % 2;
        let m = r.gen_range(2..=6);
        let n = r.gen_range(1..=5);
        let nu = gen::target(&mut r, m, d);
        let mu = if r.gen_bool(0.5) { gen::dominated(&mut r, &nu, n) } else { gen::measure(&mut r, n, d, 0.0, 2.5) };
        let w = match check_phc_order(&mu, &nu, margin_tol) {
            Ok(w) => w,
            Err(_) => {
                failures.push(k);
                continue;
            }
        };
        let ok = match w.verdict {
            OrderVerdict::Dominated => {
                dom += 1;
                let plan = w.kernel.as_ref().unwrap();
                let bary = mu.support().iter().all(|&i| {
                    (0..d).all(|t| {
                        let s: f64 = (0..m).map(|j| plan.q[i][j] * nu.atom(j)[t]).sum();
                        (s - mu.atom(i)[t]).abs() <= bary_tol
                    })
                });
                bary && plan.q.iter().flatten().all(|v| *v >= 0.0) && plan.marginal_residual(&mu, &nu) <= bary_tol
                    && (d == 2 || phc_order_1d(&mu, &nu, 1e-9))
            }
            OrderVerdict::NotDominated => {
                not += 1;
                let phi = w.potential.as_ref().unwrap();
                phc_margin(phi, &mu, &nu) > margin_tol && (d == 2 || !phc_order_1d(&mu, &nu, 1e-9))
            }
            OrderVerdict::Uncertified => false,
        };
        if !ok {
            failures.push(k);
        }
    }
    Check::new(
        "phc order oracle",
        failures.is_empty(),
        format!("{count} instances ({dom} dominated, {not} not), failures {failures:?}"),
        t0,
    )
}

pub fn projection_identity(seed: u64, count: usize, over: Option<f64>) -> Check {
    let t0 = Instant::now();
    let tol = pick(1e-7, over);
    let mut r = gen::rng(seed ^ 0x5052);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for k in 0..count {
        let n = r.gen_range(1..=6);
        let m = r.gen_range(1..=6);
        let d = r.gen_range(1..=2);
        let (mu, nu, cost) = gen::pl_conical(&mut r, n, m, d);
        match project_phc(&cost, &mu, &nu, tol) {
            Ok(rep) => {
                worst = worst.max((rep.transport_value - rep.ic_value).abs());
                if !(rep.matches && rep.gamma_dominated) {
                    failures.push(k);
                }
            }
            Err(_) => failures.push(k),
        }
    }
    Check::new(
        "projection identity",
        failures.is_empty(),
        format!("{count} instances, worst |I_c − T_F| {worst:.3e}, failures {failures:?}"),
        t0,
    )
}

pub fn brenier(seed: u64, count: usize, over: Option<f64>) -> Check {
    let t0 = Instant::now();
    let tol = pick(1e-6, over);
    let mut r = gen::rng(seed ^ 0x4252);
    let (mut worst_vi, mut worst_s): (f64, f64) = (f64::NEG_INFINITY, 0.0);
    let mut failures = Vec::new();
    for k in 0..count {
        let n = r.gen_range(1..=8);
        let m = r.gen_range(1..=6);
        let mu = gen::measure(&mut r, n, 2, -1.0, 2.0);
        let nu = gen::target(&mut r, m, 2);
        let first = brenier_check_with(&mu, &nu, tol, &SolveOptions::default());
        // second run: reversed rows and a random interior start
        let perm: Vec<usize> = (0..n).rev().collect();
        let mu2 = DiscreteMeasure::new(perm.iter().map(|&i| mu.atom(i).to_vec()).collect(), perm.iter().map(|&i| mu.weight(i)).collect()).unwrap();
        let start: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| r.gen_range(0.1..2.0)).collect()).collect();
        let opts = SolveOptions { start: Some(start), ..SolveOptions::default() };
        let second = brenier_check_with(&mu2, &nu, tol, &opts);
        match (first, second) {
            (Ok(a), Ok(b)) => {
                worst_vi = worst_vi.max(a.max_violation).max(b.max_violation);
                let ds = (0..n)
                    .map(|i| {
                        let s1 = &a.barycenters[i];
                        let s2 = &b.barycenters[n - 1 - i];
                        s1.iter().zip(s2).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
                    })
                    .fold(0.0, f64::max);
                worst_s = worst_s.max(ds);
                if !(a.pass && b.pass && ds <= tol) {
                    failures.push(k);
                }
            }
            _ => failures.push(k),
        }
    }
    Check::new(
        "brenier form",
        failures.is_empty(),
        format!("{count} instances, worst violation {worst_vi:.3e}, worst S difference {worst_s:.3e}, failures {failures:?}"),
        t0,
    )
}

pub fn monotonicity(seed: u64, count: usize, over: Option<f64>) -> Check {
    let t0 = Instant::now();
    let mut r = gen::rng(seed ^ 0x4d4f);
    let mut failures = Vec::new();
    let g = ScalarG::Power { coef: 1.0, p: 2.0 };
    for k in 0..count {
        let n = r.gen_range(2..=30);
        let m = r.gen_range(2..=30);
        let xs = gen::sorted_line(&mut r, n, 0.0, 1.0);
        let ys = gen::sorted_line(&mut r, m, 0.1, 2.0);
        let mu = DiscreteMeasure::from_1d(&xs, &gen::weights(&mut r, n)).unwrap();
        let nu = DiscreteMeasure::from_1d(&ys, &gen::weights(&mut r, m)).unwrap();
        let mut ok = true;
        for (sign, flip) in [(MonotoneSign::Increasing, -1.0), (MonotoneSign::Decreasing, 1.0)] {
            let cost = CostModel::composite_from(&mu, &nu, |x, y| (flip * x[0] * y[0]).exp(), g.clone()).unwrap();
            ok &= match solve_primal(&cost, &mu, &nu, &SolveOptions::default()) {
                Ok(rep) => {
                    let tol = over.unwrap_or_else(|| default_mass_tol(&rep.plan));
                    monotone_support_check(&rep.plan, &mu, &nu, sign, tol)
                }
                Err(_) => false,
            };
        }
        if !ok {
            failures.push(k);
        }
    }
    Check::new("monotone supports", failures.is_empty(), format!("{count} instances, failures {failures:?}"), t0)
}

/// Randomized inequalities: convexity, subadditivity, the growth bound, weak duality and the
/// order properties of `K_c`, `count` draws each.
pub fn properties(seed: u64, count: usize, over: Option<f64>) -> Vec<Check> {
    let tol = pick(1e-9, over);
    let mut out = Vec::new();
    let mut r = gen::rng(seed ^ 0x5052_4f50);

    let t0 = Instant::now();
    let mut bad = 0;
    for k in 0..count {
        let (mu, nu, cost) = gen::any_cost(&mut r, k);
        let i = r.gen_range(0..mu.len());
        let m1: Vec<f64> = (0..nu.len()).map(|_| r.gen_range(0.0..2.0)).collect();
        let m2: Vec<f64> = (0..nu.len()).map(|_| r.gen_range(0.0..2.0)).collect();
        let t: f64 = r.gen_range(0.0..1.0);
        let mix: Vec<f64> = m1.iter().zip(&m2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let (a, b, c) = (eval_cost(&cost, i, &m1), eval_cost(&cost, i, &m2), eval_cost(&cost, i, &mix));
        let ok = matches!((a, b, c), (Ok(a), Ok(b), Ok(c)) if c <= t * a + (1.0 - t) * b + tol * (1.0 + a.abs() + b.abs()));
        bad += usize::from(!ok);
    }
    out.push(Check::new("cost convexity", bad == 0, format!("{count} draws, {bad} violations"), t0));

    let t0 = Instant::now();
    let mut bad = 0;
    for k in 0..count {
        let (mu, nu, cost) = gen::any_cost(&mut r, k);
        let i = r.gen_range(0..mu.len());
        let m1: Vec<f64> = (0..nu.len()).map(|_| r.gen_range(0.0..2.0)).collect();
        let m2: Vec<f64> = (0..nu.len()).map(|_| r.gen_range(0.0..2.0)).collect();
        let sum: Vec<f64> = m1.iter().zip(&m2).map(|(a, b)| a + b).collect();
        let ok = match (eval_cost(&cost, i, &sum), eval_cost(&cost, i, &m1), recession(&cost, i, &m2)) {
            (Ok(s), Ok(a), Ok(rc)) => !rc.is_finite() || s <= a + rc + tol * (1.0 + s.abs() + a.abs()),
            _ => false,
        };
        bad += usize::from(!ok);
    }
    out.push(Check::new("subadditivity", bad == 0, format!("{count} draws, {bad} violations"), t0));

    let t0 = Instant::now();
    let (mut bad, mut applicable) = (0, 0);
    for k in 0..count {
        let (mu, nu, cost) = gen::any_cost(&mut r, k);
        let rep = check_conditions(&cost, 64);
        let (Verdict::Yes, Some(a), Some(b)) = (rep.holds_c, rep.recession_bound, rep.intercept) else { continue };
        applicable += 1;
        let i = r.gen_range(0..mu.len());
        let scale = r.gen_range(0.0..10.0);
        let m: Vec<f64> = (0..nu.len()).map(|_| scale * r.gen_range(0.0..1.0)).collect();
        let mass: f64 = m.iter().sum();
        let ok = matches!(eval_cost(&cost, i, &m), Ok(v) if v <= b + a * mass + tol * (1.0 + v.abs()));
        bad += usize::from(!ok);
    }
    out.push(Check::new(
        "growth bound",
        bad == 0 && applicable > 0,
        format!("{count} draws, {applicable} with bounded recession, {bad} violations"),
        t0,
    ));

    let t0 = Instant::now();
    let mut bad = 0;
    for k in 0..count {
        let (mu, nu, cost) = gen::any_cost(&mut r, k);
        let plan = gen::feasible_plan(&mut r, &mu, &nu);
        let f = DualPotential { f: (0..nu.len()).map(|_| r.gen_range(-1.0..2.0)).collect() };
        let ok = match (primal_objective(&cost, &mu, &plan), dual_value(&cost, &f, &mu, &nu)) {
            (Ok(p), Ok(d)) => d <= p + 1e2 * tol * (1.0 + p.abs()),
            _ => false,
        };
        bad += usize::from(!ok);
    }
    out.push(Check::new("weak duality", bad == 0, format!("{count} draws, {bad} violations"), t0));

    let t0 = Instant::now();
    let mut bad = 0;
    for k in 0..count {
        let (mu, nu, cost) = gen::any_cost(&mut r, k);
        let i = r.gen_range(0..mu.len());
        let f: Vec<f64> = (0..nu.len()).map(|_| r.gen_range(-0.5..2.0)).collect();
        let g: Vec<f64> = f.iter().map(|v| v + r.gen_range(0.0..1.0)).collect();
        let t: f64 = r.gen_range(0.0..1.0);
        let mix: Vec<f64> = f.iter().zip(&g).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let kf = k_c(&cost, &DualPotential { f }, i);
        let kg = k_c(&cost, &DualPotential { f: g }, i);
        let km = k_c(&cost, &DualPotential { f: mix }, i);
        let ok = match (kf, kg, km) {
            (Ok(a), Ok(b), Ok(c)) => {
                let slack = 1e2 * tol * (1.0 + a.abs().min(1e12) + b.abs().min(1e12));
                let mono = a <= b + slack;
                let concave = if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
                    true
                } else {
                    c >= t * a + (1.0 - t) * b - slack
                };
                mono && concave
            }
            _ => false,
        };
        bad += usize::from(!ok);
    }
    out.push(Check::new("K_c monotone and concave", bad == 0, format!("{count} draws, {bad} violations"), t0));
    out
}

/// Whether `0` lies in the convex hull of the support of `nu`.
pub fn origin_in_hull(nu: &DiscreteMeasure) -> bool {
    let cone = ConeModel::from_support(nu);
    zero_in_convex_hull(&cone, cone.default_tol())
}
