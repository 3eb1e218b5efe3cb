//! Conical costs on the half-line: every row can use the same profile ν/m, so the problem
//! collapses to choosing the barycenters sᵢ with Σ μᵢ sᵢ = m. The reduced value is compared with the full solver.

use uwot::costs::{CostModel, LinearPiece};
use uwot::measures::DiscreteMeasure;
use uwot::order::dim1_reduce;
use uwot::primal::{solve_primal, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let nu = DiscreteMeasure::from_1d(&[0.5, 1.0, 2.0, 3.0], &[0.1, 0.4, 0.3, 0.2])?;
    let grid = DiscreteMeasure::midpoint_grid(50);

    let cases: Vec<(&str, DiscreteMeasure, CostModel)> = vec![
        ("quadratic", grid.clone(), CostModel::quadratic(&grid, &nu)?),
        ("power η = 0.3", grid.clone(), CostModel::power(&grid, &nu, 0.3)?),
        (
            "F(x, s) = max(s − 2x, x − s)",
            grid.clone(),
            CostModel::piecewise_linear(
                &grid,
                &nu,
                grid.atoms().iter().map(|x| vec![LinearPiece { u: vec![1.0], a: -2.0 * x[0] }, LinearPiece { u: vec![-1.0], a: x[0] }]).collect(),
            )?,
        ),
    ];
    for (name, mu, cost) in cases {
        let (plan, v) = dim1_reduce(&cost, &mu, &nu)?;
        let full = solve_primal(&cost, &mu, &nu, &SolveOptions::default())?;
        println!(
            "{name:>28}: reduced {v:.10}, full {:.10}, residual {:.1e}",
            full.primal,
            plan.marginal_residual(&mu, &nu)
        );
    }
    Ok(())
}
