//! The scaled Vandermonde system behind the constant coefficients, solved by
//! Cramer's rule with Laplace-expanded minors and by Gaussian elimination.

use pidelay::vandermonde::{laplace_minor, solve_cramer, solve_elimination, vandermonde_determinant, VandermondeSystem};
use pidelay::Result;

pub struct Outcome {
    pub cramer: Vec<f64>,
    pub elimination: Vec<f64>,
}

pub fn run_example() -> Result<Outcome> {
    let nodes = vec![-3.0, -1.0, 0.0, 2.0];
    let scales = vec![1.0, 0.5, 2.0, 1.0];
    let system = VandermondeSystem::new(nodes.clone(), scales.clone(), vec![1.0, -2.0, 0.5, 3.0])?;
    println!("det = {:.6}", vandermonde_determinant(&nodes, &scales));
    for row in 1..=4 {
        let minor = laplace_minor(&nodes, &scales, row, 1);
        println!("U[{row},1] = {:+.6}  ({} column subsets)", minor.value, minor.subsets);
    }
    let outcome = Outcome { cramer: solve_cramer(&system)?, elimination: solve_elimination(&system)? };
    for (p, (c, e)) in outcome.cramer.iter().zip(&outcome.elimination).enumerate() {
        println!("x{} = {c:+.15}  (elimination {e:+.15})", p + 1);
    }
    Ok(outcome)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
