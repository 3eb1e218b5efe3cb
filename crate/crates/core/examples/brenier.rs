//! Quadratic cost: the barycenter map S is optimal, and x − S(x) is the projection of x
//! onto a closed convex set (checked through the variational inequality).

use uwot::measures::DiscreteMeasure;
use uwot::order::brenier_check;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mu = DiscreteMeasure::new(
        vec![vec![-1.0, 0.0], vec![0.0, 1.5], vec![1.0, 1.0], vec![2.0, -0.5], vec![0.5, 0.5]],
        vec![0.2, 0.2, 0.2, 0.2, 0.2],
    )?;
    let nu = DiscreteMeasure::new(vec![vec![1.0, 1.0], vec![2.0, 0.5], vec![0.5, 1.8]], vec![0.3, 0.4, 0.3])?;
    let r = brenier_check(&mu, &nu, 1e-6)?;
    println!("I_c = {:.12}", r.primal);
    for i in 0..mu.len() {
        println!("  x = {:?}: S = {:.6?}, x − S = {:.6?}", mu.atom(i), r.barycenters[i], r.points[i]);
    }
    println!("worst variational-inequality violation {:.2e}, pass {}", r.max_violation, r.pass);
    Ok(())
}
