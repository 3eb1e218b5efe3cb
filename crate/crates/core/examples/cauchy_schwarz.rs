//! `c(x, m) = (Σⱼ |yⱼ − x| mⱼ)²` towards ν = δ₂ with μ uniform on [0, 1]. The optimal sizes
//! are proportional to `(2 − x)⁻²` and the value is `1 / ∫ (2 − x)⁻² dμ`.

use uwot::costs::{CostModel, ScalarG};
use uwot::measures::DiscreteMeasure;
use uwot::primal::{solve_primal, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mu = DiscreteMeasure::midpoint_grid(100);
    let nu = DiscreteMeasure::dirac(vec![2.0])?;
    let cost = CostModel::composite_from(&mu, &nu, |x, y| (y[0] - x[0]).abs(), ScalarG::Power { coef: 1.0, p: 2.0 })?;
    let rep = solve_primal(&cost, &mu, &nu, &SolveOptions::default())?;

    let s: f64 = mu.atoms().iter().zip(mu.weights()).map(|(x, w)| w * (2.0 - x[0]).powi(-2)).sum();
    println!("I_c = {:.12}, closed form {:.12} (continuum limit 2)", rep.primal, 1.0 / s);
    for i in [0, 49, 99] {
        let x = mu.atom(i)[0];
        println!("  N({x:.3}) = {:.8}, expected {:.8}", rep.plan.sizes[i], (2.0 - x).powi(-2) / s);
    }
    Ok(())
}
