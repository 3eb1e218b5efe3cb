//! Property tests over randomly drawn instances. Each case draws a seed and builds its
//! instance from it, so shrinking acts on the seed and failures replay exactly.

use proptest::prelude::*;
use rand::Rng;
use uwot::costs::{check_conditions, eval_cost, recession, CostModel, LinearPiece, Verdict};
use uwot::dual::{dual_value, k_c, DualPotential, Minorant};
use uwot::io::{kernel_csv, parse_kernel_csv};
use uwot::measures::{cone_contains, moments, norm, zero_in_convex_hull, ConeModel, DiscreteMeasure};
use uwot::order::{check_phc_order, OrderVerdict};
use uwot::primal::{primal_objective, solve_primal, Method, SolveOptions};
use uwot::validate::gen;

const TOL: f64 = 1e-9;

fn vec_in(r: &mut impl Rng, m: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..m).map(|_| r.gen_range(lo..hi)).collect()
}

fn lp() -> SolveOptions {
    SolveOptions::with_method(Method::Lp)
}

fn dominated(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> bool {
    check_phc_order(mu, nu, TOL).unwrap().verdict == OrderVerdict::Dominated
}

/// `F(x, z) = ‖z − x‖₁` as a maximum of `2^d` linear pieces.
fn l1_pieces(mu: &DiscreteMeasure) -> Vec<Vec<LinearPiece>> {
    let d = mu.dim();
    mu.atoms()
        .iter()
        .map(|x| {
            (0..1usize << d)
                .map(|mask| {
                    let u: Vec<f64> = (0..d).map(|t| if mask >> t & 1 == 1 { -1.0 } else { 1.0 }).collect();
                    let a = -u.iter().zip(x).map(|(s, v)| s * v).sum::<f64>();
                    LinearPiece { u, a }
                })
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cost_is_convex(seed in any::<u64>(), family in 0usize..6) {
        let mut r = gen::rng(seed);
        let (mu, nu, cost) = gen::any_cost(&mut r, family);
        let i = r.gen_range(0..mu.len());
        let (m1, m2) = (vec_in(&mut r, nu.len(), 0.0, 2.0), vec_in(&mut r, nu.len(), 0.0, 2.0));
        let t: f64 = r.gen_range(0.0..1.0);
        let mix: Vec<f64> = m1.iter().zip(&m2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let (a, b, c) = (eval_cost(&cost, i, &m1).unwrap(), eval_cost(&cost, i, &m2).unwrap(), eval_cost(&cost, i, &mix).unwrap());
        prop_assert!(c <= t * a + (1.0 - t) * b + TOL * (1.0 + a.abs() + b.abs()), "{c} vs {a}, {b} at t = {t}");
    }

    #[test]
    fn cost_is_subadditive_with_recession(seed in any::<u64>(), family in 0usize..6) {
        let mut r = gen::rng(seed);
        let (mu, nu, cost) = gen::any_cost(&mut r, family);
        let i = r.gen_range(0..mu.len());
        let (m1, m2) = (vec_in(&mut r, nu.len(), 0.0, 2.0), vec_in(&mut r, nu.len(), 0.0, 2.0));
        let sum: Vec<f64> = m1.iter().zip(&m2).map(|(a, b)| a + b).collect();
        let s = eval_cost(&cost, i, &sum).unwrap();
        let a = eval_cost(&cost, i, &m1).unwrap();
        let rc = recession(&cost, i, &m2).unwrap();
        prop_assert!(!rc.is_finite() || s <= a + rc + TOL * (1.0 + s.abs() + a.abs()), "{s} > {a} + {rc}");
    }

    #[test]
    fn growth_bound_when_recession_is_bounded(seed in any::<u64>(), family in 0usize..6) {
        let mut r = gen::rng(seed);
        let (mu, nu, cost) = gen::any_cost(&mut r, family);
        let rep = check_conditions(&cost, 64);
        if let (Verdict::Yes, Some(a), Some(b)) = (rep.holds_c, rep.recession_bound, rep.intercept) {
            let i = r.gen_range(0..mu.len());
            let scale = r.gen_range(0.0..10.0);
            let m: Vec<f64> = (0..nu.len()).map(|_| scale * r.gen_range(0.0..1.0)).collect();
            let v = eval_cost(&cost, i, &m).unwrap();
            prop_assert!(v <= b + a * m.iter().sum::<f64>() + TOL * (1.0 + v.abs()));
        }
    }

    #[test]
    fn recession_is_positively_homogeneous(seed in any::<u64>(), family in 0usize..6, lambda in 0.01f64..50.0) {
        let mut r = gen::rng(seed);
        let (mu, nu, cost) = gen::any_cost(&mut r, family);
        let i = r.gen_range(0..mu.len());
        let m = vec_in(&mut r, nu.len(), 0.0, 2.0);
        let scaled: Vec<f64> = m.iter().map(|v| lambda * v).collect();
        let (a, b) = (recession(&cost, i, &m).unwrap(), recession(&cost, i, &scaled).unwrap());
        if a.is_finite() {
            prop_assert!((b - lambda * a).abs() <= 1e-8 * (1.0 + b.abs()), "{b} vs {lambda}·{a}");
        } else {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn difference_quotient_is_nondecreasing(seed in any::<u64>(), family in 0usize..6) {
        let mut r = gen::rng(seed);
        let (mu, nu, cost) = gen::any_cost(&mut r, family);
        let i = r.gen_range(0..mu.len());
        let m = vec_in(&mut r, nu.len(), 0.0, 2.0);
        let l1: f64 = r.gen_range(0.05..5.0);
        let l2 = l1 * r.gen_range(1.0..4.0);
        let c0 = eval_cost(&cost, i, &vec![0.0; nu.len()]).unwrap();
        let q = |l: f64| (eval_cost(&cost, i, &m.iter().map(|v| l * v).collect::<Vec<_>>()).unwrap() - c0) / l;
        let (a, b) = (q(l1), q(l2));
        prop_assert!(a <= b + 1e-8 * (1.0 + a.abs() + b.abs()), "quotient {a} at {l1} > {b} at {l2}");
    }

    #[test]
    fn weak_duality(seed in any::<u64>(), family in 0usize..6) {
        let mut r = gen::rng(seed);
        let (mu, nu, cost) = gen::any_cost(&mut r, family);
        let plan = gen::feasible_plan(&mut r, &mu, &nu);
        let f = DualPotential { f: vec_in(&mut r, nu.len(), -1.0, 2.0) };
        let p = primal_objective(&cost, &mu, &plan).unwrap();
        let d = dual_value(&cost, &f, &mu, &nu).unwrap();
        prop_assert!(d <= p + 1e-7 * (1.0 + p.abs()), "dual {d} above primal {p}");
    }

    #[test]
    fn k_c_is_monotone_and_concave(seed in any::<u64>(), family in 0usize..6) {
        let mut r = gen::rng(seed);
        let (mu, nu, cost) = gen::any_cost(&mut r, family);
        let i = r.gen_range(0..mu.len());
        let f = vec_in(&mut r, nu.len(), -0.5, 2.0);
        let g: Vec<f64> = f.iter().map(|v| v + r.gen_range(0.0..1.0)).collect();
        let t: f64 = r.gen_range(0.0..1.0);
        let mix: Vec<f64> = f.iter().zip(&g).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let a = k_c(&cost, &DualPotential { f }, i).unwrap();
        let b = k_c(&cost, &DualPotential { f: g }, i).unwrap();
        let c = k_c(&cost, &DualPotential { f: mix }, i).unwrap();
        let slack = 1e-7 * (1.0 + a.abs().min(1e12) + b.abs().min(1e12));
        prop_assert!(a <= b + slack, "K_c f = {a} > K_c g = {b}");
        if a > f64::NEG_INFINITY && b > f64::NEG_INFINITY {
            prop_assert!(c >= t * a + (1.0 - t) * b - slack, "midpoint {c} below {a}, {b}");
        }
        // K_c f ≤ c(x, 0)
        let c0 = eval_cost(&cost, i, &vec![0.0; nu.len()]).unwrap();
        prop_assert!(b <= c0 + slack);
    }

    #[test]
    fn composite_k_c_below_g_at_zero(seed in any::<u64>()) {
        let mut r = gen::rng(seed);
        let (mu, nu, cost) = gen::any_cost(&mut r, 4);
        let CostModel::Composite(c) = &cost else { unreachable!() };
        let f = DualPotential { f: vec_in(&mut r, nu.len(), -2.0, 2.0) };
        for i in 0..mu.len() {
            prop_assert!(k_c(&cost, &f, i).unwrap() <= c.g.value(0.0) + 1e-12);
        }
    }

    #[test]
    fn minorant_is_a_fixed_point(seed in any::<u64>(), d in 1usize..=2) {
        let mut r = gen::rng(seed);
        let m = r.gen_range(1..=6);
        let nu = gen::target(&mut r, m, d);
        let bar = Minorant { f: vec_in(&mut r, m, -1.0, 2.0), y: nu.atoms().to_vec() };
        let again = Minorant { f: nu.atoms().iter().map(|y| bar.eval(y)).collect(), y: nu.atoms().to_vec() };
        for (j, y) in nu.atoms().iter().enumerate() {
            prop_assert!(bar.eval(y) <= bar.f[j] + 1e-12);
        }
        let w = vec_in(&mut r, m, 0.0, 2.0);
        let z: Vec<f64> = (0..d).map(|t| (0..m).map(|j| w[j] * nu.atom(j)[t]).sum()).collect();
        let (a, b) = (bar.eval(&z), again.eval(&z));
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
        // positive homogeneity
        let s = r.gen_range(0.1..10.0);
        let sz: Vec<f64> = z.iter().map(|v| s * v).collect();
        prop_assert!((bar.eval(&sz) - s * a).abs() <= 1e-9 * (1.0 + s * a.abs()));
    }

    #[test]
    fn moments_are_linear_in_weights(seed in any::<u64>(), s in 0.1f64..10.0) {
        let mut r = gen::rng(seed);
        let n = r.gen_range(1..=6);
        let a = gen::measure(&mut r, n, 2, -2.0, 2.0);
        let w2 = vec_in(&mut r, n, 0.0, 1.0);
        let b = a.reweighted(w2.clone()).unwrap();
        let sum = a.reweighted(a.weights().iter().zip(&w2).map(|(u, v)| s * u + v).collect()).unwrap();
        let (ma, mb, ms) = (moments(&a), moments(&b), moments(&sum));
        for t in 0..2 {
            prop_assert!((ms.first()[t] - s * ma.first()[t] - mb.first()[t]).abs() <= 1e-12);
            prop_assert!((ms.positive[t] - s * ma.positive[t] - mb.positive[t]).abs() <= 1e-12);
            prop_assert!((ms.negative[t] - s * ma.negative[t] - mb.negative[t]).abs() <= 1e-12);
        }
    }

    #[test]
    fn cone_membership_is_scale_and_order_invariant(seed in any::<u64>(), s in 0.01f64..100.0) {
        let mut r = gen::rng(seed);
        let m = r.gen_range(1..=5);
        let gens = gen::points(&mut r, m, 2, -1.0, 2.0);
        let z = gen::points(&mut r, 1, 2, -2.0, 2.0).remove(0);
        let cone = ConeModel::new(gens.clone()).unwrap();
        let mut rev = gens.clone();
        rev.reverse();
        let cone_rev = ConeModel::new(rev).unwrap();
        let tol = cone.default_tol();
        let inside = cone_contains(&cone, &z, tol).unwrap();
        prop_assert_eq!(inside, cone_contains(&cone_rev, &z, tol).unwrap());
        if inside {
            let sz: Vec<f64> = z.iter().map(|v| s * v).collect();
            prop_assert!(cone_contains(&cone, &sz, tol * (1.0 + s)).unwrap());
        }
        if !zero_in_convex_hull(&cone, tol) {
            let alpha = cone.hull_distance();
            prop_assert!(alpha > 0.0);
            prop_assert!(gens.iter().all(|g| norm(g) >= alpha - 1e-12));
        }
    }

    #[test]
    fn kernel_csv_round_trip_keeps_the_objective(seed in any::<u64>(), family in 0usize..6) {
        let mut r = gen::rng(seed);
        let (mu, nu, cost) = gen::any_cost(&mut r, family);
        let plan = gen::feasible_plan(&mut r, &mu, &nu);
        let back = parse_kernel_csv(&kernel_csv(&mu, &plan), "k.csv", nu.atoms()).unwrap();
        prop_assert_eq!(&back.q, &plan.q);
        prop_assert_eq!(primal_objective(&cost, &mu, &back).unwrap(), primal_objective(&cost, &mu, &plan).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ic_is_jointly_convex(seed in any::<u64>(), t in prop::sample::select(vec![0.25, 0.5, 0.75])) {
        let mut r = gen::rng(seed);
        let (n, m, d) = (r.gen_range(1..=5), r.gen_range(1..=5), r.gen_range(1..=2));
        let (mu0, nu0, cost) = gen::pl_conical(&mut r, n, m, d);
        let mu1 = mu0.reweighted(gen::weights(&mut r, n)).unwrap();
        let nu1 = nu0.reweighted(gen::weights(&mut r, m)).unwrap();
        let mix = |a: &DiscreteMeasure, b: &DiscreteMeasure| {
            a.reweighted(a.weights().iter().zip(b.weights()).map(|(u, v)| (1.0 - t) * u + t * v).collect()).unwrap()
        };
        let (mut_, nut) = (mix(&mu0, &mu1), mix(&nu0, &nu1));
        let ic = |mu: &DiscreteMeasure, nu: &DiscreteMeasure| solve_primal(&cost, mu, nu, &lp()).unwrap().primal;
        let (a, b, c) = (ic(&mu0, &nu0), ic(&mu1, &nu1), ic(&mut_, &nut));
        prop_assert!(c <= (1.0 - t) * a + t * b + 1e-8 * (1.0 + a.abs() + b.abs()), "{c} above {a}, {b}");
    }

    #[test]
    fn lp_value_matches_dual_value(seed in any::<u64>(), affine in any::<bool>()) {
        let mut r = gen::rng(seed);
        let (n, m) = (r.gen_range(1..=8), r.gen_range(1..=8));
        let (mu, nu, cost) = if affine { gen::affine_sup(&mut r, n, m) } else { gen::pl_conical(&mut r, n, m, 2) };
        let rep = solve_primal(&cost, &mu, &nu, &lp()).unwrap();
        let d = dual_value(&cost, rep.potential.as_ref().unwrap(), &mu, &nu).unwrap();
        prop_assert!((rep.primal - d).abs() <= 1e-8 * rep.primal.abs().max(1.0));
    }

    #[test]
    fn phc_order_is_transitive(seed in any::<u64>(), d in 1usize..=2) {
        let mut r = gen::rng(seed);
        let (k, l, n) = (r.gen_range(2..=5), r.gen_range(1..=4), r.gen_range(1..=4));
        let rho = gen::target(&mut r, k, d);
        let nu = gen::dominated(&mut r, &rho, l);
        let mu = gen::dominated(&mut r, &nu, n);
        prop_assert!(dominated(&nu, &rho));
        prop_assert!(dominated(&mu, &nu));
        prop_assert!(dominated(&mu, &rho));
    }

    #[test]
    fn zero_cost_exactly_on_the_order(seed in any::<u64>(), d in 1usize..=2, make_dominated in any::<bool>()) {
        let mut r = gen::rng(seed);
        let (m, n) = (r.gen_range(1..=5), r.gen_range(1..=4));
        let nu = gen::target(&mut r, m, d);
        let mu = if make_dominated { gen::dominated(&mut r, &nu, n) } else { gen::measure(&mut r, n, d, 0.0, 2.5) };
        let cost = CostModel::piecewise_linear(&mu, &nu, l1_pieces(&mu)).unwrap();
        let ic = solve_primal(&cost, &mu, &nu, &lp()).unwrap().primal;
        prop_assert!(ic >= -1e-12);
        prop_assert_eq!(ic <= 1e-9, dominated(&mu, &nu), "I_c = {}", ic);
    }
}
