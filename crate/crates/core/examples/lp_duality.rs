//! Piecewise-linear conical cost solved as an LP. The Kantorovich potential comes from the
//! column multipliers and the conical potential φ from the epigraph multipliers; both dual
//! values match the primal.

use uwot::costs::{CostModel, LinearPiece};
use uwot::dual::{conical_potential, dual_value, dual_value_conical, extract_dual_certificate, q_f};
use uwot::measures::DiscreteMeasure;
use uwot::primal::solve_transport_lp;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mu = DiscreteMeasure::new(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 0.0]], vec![0.2, 0.5, 0.3])?;
    let nu = DiscreteMeasure::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 2.0], vec![2.0, 1.0]], vec![0.25; 4])?;
    // F(x, z) = max(‖z − x‖₁-like pieces)
    let pieces = mu
        .atoms()
        .iter()
        .map(|x| {
            vec![
                LinearPiece { u: vec![1.0, 0.0], a: -x[0] },
                LinearPiece { u: vec![-1.0, 0.0], a: x[0] },
                LinearPiece { u: vec![0.0, 1.0], a: -x[1] },
                LinearPiece { u: vec![0.0, -1.0], a: x[1] },
            ]
        })
        .collect();
    let cost = CostModel::piecewise_linear(&mu, &nu, pieces)?;
    let (tlp, sol) = solve_transport_lp(&cost, &mu, &nu)?;
    let plan = tlp.plan(&sol, nu.atoms());
    println!("LP value {:.12}", sol.objective);

    let f = extract_dual_certificate(&sol, &tlp)?;
    println!("potential f = {:.6?}", f.f);
    println!("Kantorovich dual {:.12}", dual_value(&cost, &f, &mu, &nu)?);

    let c = cost.as_conical().unwrap();
    let phi = conical_potential(c, &mu, &plan, Some((&tlp, &sol)))?;
    println!("φ directions {:.6?}", phi.directions);
    println!("conical dual     {:.12}", dual_value_conical(c, &phi, &mu, &nu)?);
    for i in 0..mu.len() {
        println!("  Q_F φ(x{i}) = {:.6}", q_f(c, &phi, i)?);
    }
    Ok(())
}
