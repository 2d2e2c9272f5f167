//! Building the delay equation of a PID loop and its characteristic roots.

use pidelay::closed_loop::poly_mul;
use pidelay::prelude::*;

pub fn run_example() -> Result<DdeSystem> {
    // 1.2 / ((1 + 2s)(1 + 0.5s)) with delay 0.8, in physical time
    let plant = PlantModel::new(vec![1.2], poly_mul(&[1.0, 2.0], &[1.0, 0.5]))?.normalized(0.8)?;
    let pid = PidParams::new(0.9, 0.4, 0.2)?.normalized(0.8)?;
    let system = build_closed_loop(&pid, &plant)?;
    println!("a (undelayed) = {:?}", system.a());
    println!("b (delayed)   = {:?}", system.b());
    println!("neutral       = {}", system.is_neutral());
    for (p, r) in system.roots().iter().enumerate() {
        println!("root {} = {r:+.12}   P(r) = {:+.1e}", p + 1, system.characteristic(*r));
    }
    Ok(system)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
