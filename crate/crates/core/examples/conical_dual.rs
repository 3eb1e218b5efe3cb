//! Nonpositive conical families (here the power cost): the dual is attained by a φ that is
//! nonnegative on the generators of ν, and `I_c` is bounded below by the cone-dilation bound.

use uwot::costs::CostModel;
use uwot::dual::{check_nonpositive_conical_dual, conical_potential, dual_bound_conical};
use uwot::measures::DiscreteMeasure;
use uwot::primal::{solve_primal, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mu = DiscreteMeasure::from_1d(&[0.2, 0.5, 1.0], &[0.3, 0.3, 0.4])?;
    let nu = DiscreteMeasure::from_1d(&[0.5, 1.0, 2.0], &[0.2, 0.5, 0.3])?;
    let cost = CostModel::power(&mu, &nu, 0.5)?;
    let rep = solve_primal(&cost, &mu, &nu, &SolveOptions::default())?;
    let c = cost.as_conical().unwrap();
    let phi = conical_potential(c, &mu, &rep.plan, None)?;
    let r = check_nonpositive_conical_dual(&cost, &phi, &mu, &nu, 1e-6)?;
    println!("primal {:.10}, conical dual {:.10}, gap {:.2e}", r.primal_value, r.dual_value, r.gap);
    println!("φ ≥ 0 on generators: {} (min on unit generators {:.4})", r.nonnegative_on_generators, r.min_unit_value);
    for lambda in [1.5, 2.0, 4.0] {
        let (m, bound) = dual_bound_conical(c, &mu, lambda)?;
        println!("λ = {lambda}: M = {m:.6}, lower bound {bound:.6}");
    }
    Ok(())
}
