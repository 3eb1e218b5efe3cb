//! Order between measures for positively 1-homogeneous convex test functions. Dominated
//! pairs come with a kernel whose barycenters reproduce μ; the others with a separating φ.

use uwot::measures::DiscreteMeasure;
use uwot::order::{check_phc_order, phc_margin, phc_order_1d, OrderVerdict};

fn report(name: &str, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(), Box<dyn std::error::Error>> {
    let w = check_phc_order(mu, nu, 1e-9)?;
    println!("{name}: {:?}", w.verdict);
    match w.verdict {
        OrderVerdict::Dominated => {
            let k = w.kernel.as_ref().unwrap();
            for i in 0..mu.len() {
                println!("  S({:?}) = {:.6?}, N = {:.6}", mu.atom(i), k.barycenters[i], k.sizes[i]);
            }
        }
        OrderVerdict::NotDominated => {
            let phi = w.potential.as_ref().unwrap();
            println!("  φ = max of {:.4?}, ∫φ dμ − ∫φ dν = {:.3e}", phi.directions, phc_margin(phi, mu, nu));
        }
        OrderVerdict::Uncertified => println!("  no certificate"),
    }
    if mu.dim() == 1 {
        println!("  1-d test agrees: {}", phc_order_1d(mu, nu, 1e-9) == (w.verdict == OrderVerdict::Dominated));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let nu = DiscreteMeasure::from_1d(&[1.0, 3.0], &[0.5, 0.5])?;
    report("δ₂ vs ν", &DiscreteMeasure::from_1d(&[2.0], &[1.0])?, &nu)?;
    report("½δ₁.₅ + ½δ₂.₅ vs ν", &DiscreteMeasure::from_1d(&[1.5, 2.5], &[0.5, 0.5])?, &nu)?;
    // 0 ∉ co(supp ν): the order fixes the mean
    report("δ₁ vs ν", &DiscreteMeasure::from_1d(&[1.0], &[1.0])?, &nu)?;
    report("δ₄ vs ν", &DiscreteMeasure::from_1d(&[4.0], &[1.0])?, &nu)?;
    // 0 ∈ co(supp ν): part of ν with barycenter 0 may be left over
    let wide = DiscreteMeasure::from_1d(&[-1.0, 2.0], &[0.5, 0.5])?;
    report("δ₀.₅ vs ½δ₋₁ + ½δ₂", &DiscreteMeasure::from_1d(&[0.5], &[1.0])?, &wide)?;

    let nu2 = DiscreteMeasure::uniform(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]])?;
    report("plane, mean of ν", &DiscreteMeasure::new(vec![vec![2.0 / 3.0, 2.0 / 3.0]], vec![1.0])?, &nu2)?;
    report("plane, off the mean", &DiscreteMeasure::new(vec![vec![0.5, 0.5]], vec![1.0])?, &nu2)?;
    report("plane, outside", &DiscreteMeasure::new(vec![vec![2.0, -0.5]], vec![1.0])?, &nu2)?;
    Ok(())
}
