//! Driving a simulation from a TOML scenario, the same path the `pidelay`
//! binary takes.

use pidelay::cli::{cmd_coeffs, cmd_simulate, format_metrics, ScenarioConfig};
use pidelay::Result;

pub const SCENARIO: &str = include_str!("scenarios/integral_first_order.toml");

pub fn run_example() -> Result<String> {
    let cfg = ScenarioConfig::from_toml_str(SCENARIO)?;
    let sim = cmd_simulate(&cfg)?;
    println!("{} samples, first rows:", sim.csv.lines().count() - 1);
    for line in sim.csv.lines().take(4) {
        println!("  {line}");
    }
    print!("{}", format_metrics(&sim.metrics));
    let table = cmd_coeffs(&cfg, 2, 1)?;
    print!("{table}");
    Ok(table)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
