//! For conical costs the optimal coupling π̄ re-solves the classical transport problem
//! between its own marginals with the reduced cost `F(x, y)`; random couplings with the same
//! marginals never do better.

use uwot::costs::{CostModel, LinearPiece};
use uwot::measures::DiscreteMeasure;
use uwot::order::verify_structure_bis;
use uwot::primal::{solve_primal, CouplingPlan, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mu = DiscreteMeasure::from_1d(&[0.0, 1.0, 2.0, 3.0], &[0.25; 4])?;
    let nu = DiscreteMeasure::from_1d(&[0.5, 2.0, 4.0], &[0.3, 0.4, 0.3])?;
    let pieces = mu
        .atoms()
        .iter()
        .map(|x| vec![LinearPiece { u: vec![1.0], a: -x[0] }, LinearPiece { u: vec![-2.0], a: 2.0 * x[0] }])
        .collect();
    let cost = CostModel::piecewise_linear(&mu, &nu, pieces)?;
    let rep = solve_primal(&cost, &mu, &nu, &SolveOptions::default())?;
    let pi = CouplingPlan::from_kernel(&mu, &rep.plan);
    let r = verify_structure_bis(cost.as_conical().unwrap(), &pi, &mu, &nu, 500, 7, 1e-8)?;
    println!("I_c = {:.12}, cost of π̄ under F = {:.12}", r.ic_value, r.identity_value);
    println!("cheapest of 500 random couplings {:.12}", r.min_trial_value);
    println!("identity {}, trials {}, pass {}", r.identity_holds, r.trials_pass, r.pass);
    Ok(())
}
