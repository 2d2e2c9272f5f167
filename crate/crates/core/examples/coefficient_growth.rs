//! How the coefficient table of a first-order PID loop grows: each interval
//! raises the polynomial degree attached to every root by one.

use pidelay::prelude::*;

pub fn run_example() -> Result<Vec<usize>> {
    let system = build_closed_loop(&PidParams::new(0.5, 0.4, 0.1)?, &PlantModel::first_order(1.0, 0.8)?)?;
    let forcing = ForcingTerm::steps(0.0, &[(0.0, 1.0)])?;
    let sol = solve(&system, &InitialCondition::steady(0.0), &forcing, 5)?;
    let mut counts = Vec::new();
    for n in 1..=5 {
        let rows = sol.coefficient_rows(n, 1).expect("solved");
        let nonzero: Vec<_> = rows.iter().filter(|r| r.value != 0.0).collect();
        counts.push(nonzero.len());
        println!("interval {n}: {} coefficients", nonzero.len());
        for row in nonzero {
            println!("  p={} root={:+.4} i={} G={:+.10e}", row.p, row.root, row.i, row.value);
        }
    }
    Ok(counts)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
