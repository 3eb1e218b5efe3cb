//! At optimality the conical potential φ touches `F(x, ·)` along each barycenter: the
//! residual `F(x, S(x)) − Q_F φ(x) − φ(S(x))` vanishes on the support of μ.

use uwot::costs::{CostModel, LinearPiece};
use uwot::dual::conical_potential;
use uwot::measures::DiscreteMeasure;
use uwot::order::articulation_check;
use uwot::primal::solve_transport_lp;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mu = DiscreteMeasure::from_1d(&[0.0, 1.0, 2.0], &[0.3, 0.4, 0.3])?;
    let nu = DiscreteMeasure::from_1d(&[0.5, 1.5, 2.5], &[0.2, 0.5, 0.3])?;
    let pieces = mu
        .atoms()
        .iter()
        .map(|x| vec![LinearPiece { u: vec![1.0], a: -x[0] }, LinearPiece { u: vec![-1.0], a: x[0] }])
        .collect();
    let cost = CostModel::piecewise_linear(&mu, &nu, pieces)?;
    let (tlp, sol) = solve_transport_lp(&cost, &mu, &nu)?;
    let plan = tlp.plan(&sol, nu.atoms());
    let c = cost.as_conical().unwrap();
    let phi = conical_potential(c, &mu, &plan, Some((&tlp, &sol)))?;
    let r = articulation_check(&plan, &phi, c, &mu, 1e-8)?;
    for (i, res) in &r.residuals {
        println!("x = {}: residual {res:.2e}", mu.atom(*i)[0]);
    }
    println!("worst {:.2e}, pass {}", r.worst, r.pass);
    Ok(())
}
