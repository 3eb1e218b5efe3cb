//! Problem files and tables: parse a JSON problem, solve it, write the kernel and the plot
//! table, and read the kernel back.

use uwot::io::{kernel_csv, parse_kernel_csv, parse_problem, plot_csv};
use uwot::primal::solve_primal;

const PROBLEM: &str = r#"{
  "version": 1,
  "mu": { "midpoint_grid": 8 },
  "nu": { "atoms": [[0.5], [1.0], [2.0]], "weights": [0.3, 0.4, 0.3] },
  "cost": { "kind": "composite", "kernel": "exp_neg_product", "g": { "kind": "power", "coef": 1.0, "p": 2.0 } },
  "solver": { "method": "auto", "tol": 1e-10 }
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = parse_problem(PROBLEM, "inline")?.build()?;
    let rep = solve_primal(&p.cost, &p.mu, &p.nu, &p.spec.options())?;
    println!("I_c = {:.12} ({:?})", rep.primal, rep.method);
    let csv = kernel_csv(&p.mu, &rep.plan);
    let back = parse_kernel_csv(&csv, "kernel.csv", p.nu.atoms())?;
    println!("kernel CSV round trip exact: {}", back == rep.plan);
    print!("{}", plot_csv(&p.mu, &rep.plan));
    println!("{}", p.spec.to_json());
    Ok(())
}
