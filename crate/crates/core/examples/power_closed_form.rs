//! Power cost `−x‖Σⱼ Qᵢⱼ yⱼ‖^η` with μ = ν uniform on [0, 1]: the numerical 1-d reduction, the
//! closed-form value and three explicit optimal kernels (random sorting, positive and
//! negative assortative matching). The matchings are written as kernel CSVs.

use uwot::costs::CostModel;
use uwot::io::kernel_csv;
use uwot::order::dim1_reduce;
use uwot::primal::{closed_form_power, closed_form_uniform_triple, primal_objective};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, eta) = (200, 0.5);
    let t = closed_form_uniform_triple(eta, n)?;
    let cost = CostModel::power(&t.mu, &t.nu, eta)?;

    let (_, reduced) = dim1_reduce(&cost, &t.mu, &t.nu)?;
    let (_, closed) = closed_form_power(&t.mu, &t.nu, eta)?;
    println!("1-d reduction {reduced:.10}");
    println!("closed form   {closed:.10}");
    println!("sizes N₀(x) = {:.4} x^{:.4}, matchings x^{:.4} and √(1 − x^{:.4})", t.c, t.a0, t.a1, t.a2);
    for (name, plan) in [("random sorting", &t.random_sorting), ("PAM", &t.pam), ("NAM", &t.nam)] {
        let v = primal_objective(&cost, &t.mu, plan)?;
        println!("{name:>15}: {v:.10} (marginal residual {:.1e})", plan.marginal_residual(&t.mu, &t.nu));
    }

    let dir = std::env::temp_dir();
    for (name, plan) in [("pam", &t.pam), ("nam", &t.nam)] {
        let path = dir.join(format!("uwot_{name}_kernel.csv"));
        std::fs::write(&path, kernel_csv(&t.mu, plan))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
