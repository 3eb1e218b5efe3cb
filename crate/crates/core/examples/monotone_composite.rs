//! `c(x, m) = (Σⱼ F(x, yⱼ) mⱼ)²` on the line. With `F = e^{−xy}` the support of the optimal
//! coupling is increasing, with `F = e^{xy}` decreasing.

use uwot::costs::{CostModel, ScalarG};
use uwot::measures::DiscreteMeasure;
use uwot::order::{default_mass_tol, monotone_support_check, MonotoneSign};
use uwot::primal::{solve_primal, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mu = DiscreteMeasure::from_1d(&[0.1, 0.3, 0.5, 0.7, 0.9], &[0.2; 5])?;
    let nu = DiscreteMeasure::from_1d(&[0.5, 1.0, 1.5, 2.0], &[0.25; 4])?;
    for (sign, flip) in [(MonotoneSign::Increasing, -1.0), (MonotoneSign::Decreasing, 1.0)] {
        let cost = CostModel::composite_from(&mu, &nu, |x, y| (flip * x[0] * y[0]).exp(), ScalarG::Power { coef: 1.0, p: 2.0 })?;
        let rep = solve_primal(&cost, &mu, &nu, &SolveOptions::default())?;
        let tol = default_mass_tol(&rep.plan);
        println!("F = e^({flip}·xy): I_c = {:.10}", rep.primal);
        for (i, row) in rep.plan.q.iter().enumerate() {
            let support: Vec<usize> = (0..row.len()).filter(|&j| row[j] > tol).collect();
            println!("  x = {:.1}: support {support:?}", mu.atom(i)[0]);
        }
        println!("  {sign:?} support: {}", monotone_support_check(&rep.plan, &mu, &nu, sign, tol));
    }
    Ok(())
}
