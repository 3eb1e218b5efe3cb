//! For conical costs `I_c(μ, ν)` equals the classical transport cost from μ to the
//! barycenter image γ of an optimal kernel, and γ is dominated by ν.

use uwot::costs::{CostModel, LinearPiece};
use uwot::measures::DiscreteMeasure;
use uwot::order::project_phc;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mu = DiscreteMeasure::from_1d(&[0.0, 1.0, 2.5], &[0.3, 0.3, 0.4])?;
    let nu = DiscreteMeasure::from_1d(&[0.5, 1.5, 3.0], &[0.2, 0.5, 0.3])?;
    // F(x, z) = |z − x|
    let pieces = mu
        .atoms()
        .iter()
        .map(|x| vec![LinearPiece { u: vec![1.0], a: -x[0] }, LinearPiece { u: vec![-1.0], a: x[0] }])
        .collect();
    let cost = CostModel::piecewise_linear(&mu, &nu, pieces)?;
    let r = project_phc(&cost, &mu, &nu, 1e-7)?;
    println!("γ atoms {:.6?}", r.gamma.atoms());
    println!("γ weights {:.6?}", r.gamma.weights());
    println!("I_c = {:.12}, T_F(μ, γ) = {:.12}, match {}", r.ic_value, r.transport_value, r.matches);
    println!("γ dominated by ν: {}", r.gamma_dominated);
    Ok(())
}
