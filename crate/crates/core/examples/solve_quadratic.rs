//! Quadratic cost `½‖x − Σⱼ Qᵢⱼ yⱼ‖²` in the plane, solved by the default method, with the
//! dual potential checked against the primal value.

use uwot::costs::CostModel;
use uwot::dual::dual_value;
use uwot::measures::DiscreteMeasure;
use uwot::primal::{solve_primal, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mu = DiscreteMeasure::new(vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![-0.5, 1.0]], vec![0.3, 0.5, 0.2])?;
    let nu = DiscreteMeasure::new(vec![vec![1.0, 1.0], vec![2.0, 0.5], vec![0.5, 2.0]], vec![0.4, 0.4, 0.2])?;
    let cost = CostModel::quadratic(&mu, &nu)?;

    let rep = solve_primal(&cost, &mu, &nu, &SolveOptions::default())?;
    println!("method {:?}, {} iterations", rep.method, rep.iterations);
    println!("I_c = {:.12}", rep.primal);
    for i in 0..mu.len() {
        println!("  x = {:?}: N = {:.6}, S = {:.6?}", mu.atom(i), rep.plan.sizes[i], rep.plan.barycenters[i]);
    }
    let f = rep.potential.as_ref().expect("barrier returns a potential");
    let d = dual_value(&cost, f, &mu, &nu)?;
    println!("dual value {d:.12}, gap {:.2e}", (rep.primal - d).abs());
    println!("marginal residual {:.2e}", rep.plan.marginal_residual(&mu, &nu));
    Ok(())
}
