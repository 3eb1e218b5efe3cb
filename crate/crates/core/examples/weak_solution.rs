//! Linear cost `c(x, m) = Σⱼ (x − yⱼ)² mⱼ` towards δ₂. The kernel problem piles all mass on
//! the atom nearest to 2; once that atom carries no μ-mass only a singular coupling attains
//! the infimum, and the relaxed functional prices it through the recession cost.

use uwot::costs::CostModel;
use uwot::measures::DiscreteMeasure;
use uwot::primal::{eval_bar_i, solve_primal, CouplingPlan, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let nu = DiscreteMeasure::dirac(vec![2.0])?;
    let sq = |x: &[f64], y: &[f64]| (x[0] - y[0]).powi(2);

    let grid = DiscreteMeasure::from_1d(&[0.0, 0.25, 0.5, 0.75, 1.0], &[0.2; 5])?;
    let rep = solve_primal(&CostModel::linear(&grid, &nu, sq), &grid, &nu, &SolveOptions::default())?;
    println!("I_c = {:.12}, sizes {:.6?}", rep.primal, rep.plan.sizes);

    // μ puts no mass on x = 1, so δ₁ ⊗ δ₂ is not a kernel coupling
    let mu = DiscreteMeasure::from_1d(&[0.0, 0.5, 1.0], &[0.5, 0.5, 0.0])?;
    let cost = CostModel::linear(&mu, &nu, sq);
    let pi = CouplingPlan { pi: vec![vec![0.0], vec![0.0], vec![1.0]] };
    println!("relaxed value of δ₁ ⊗ δ₂: {}", eval_bar_i(&cost, &mu, &pi)?);
    Ok(())
}
