//! Overshoot, settling time, integral of absolute error and decay ratio of
//! an oscillatory step response, computed from the exact segments.

use pidelay::prelude::*;

pub fn run_example() -> Result<ResponseMetrics> {
    let system = build_closed_loop(&PidParams::new(0.3, 0.6, 0.0)?, &PlantModel::first_order(1.0, 1.0)?)?;
    let forcing = ForcingTerm::steps(0.0, &[(0.0, 1.0)])?;
    let sol = solve(&system, &InitialCondition::steady(0.0), &forcing, 30)?;
    let m = compute_metrics(&sol, 1.0, 30.0, 0.05)?;
    println!("overshoot     {:.4}", m.overshoot);
    println!("settling time {:?}", m.settling_time);
    println!("iae           {:.6}", m.iae);
    println!("decay ratio   {:?}", m.decay_ratio);
    println!("peaks at      {:?}", m.peak_times);
    Ok(m)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
