//! Self-check suites behind the `verify` subcommand.
//!
//! Each suite exercises one building block against an independent route and
//! reports a single pass/fail line. Randomized suites draw from a seeded
//! ChaCha stream, so a given seed always yields the same report.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::closed_loop::{build_closed_loop, DdeSystem, PidParams, PlantModel};
use crate::error::Result;
use crate::exp_poly::ExpPoly;
use crate::oracle;
use crate::series_identities::{enumerate_original, enumerate_shifted, multiset, terms_grid, SeriesKind};
use crate::stepper::{solve, ForcingTerm, InitialCondition};
use crate::vandermonde::{laplace_minor, solve_cramer, solve_elimination, VandermondeSystem};

pub const DEFAULT_SEED: u64 = 0x5EED_2007;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    fn pick(self, quick: usize, full: usize) -> usize {
        match self {
            Level::Quick => quick,
            Level::Full => full,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub level: Level,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {} level {:?}", self.seed, self.level)?;
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{mark} {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Cramer-route solver under test; swapped out only to prove a fault is caught.
pub type CramerSolver = fn(&VandermondeSystem) -> Result<Vec<f64>>;

pub fn run(level: Level, seed: u64) -> VerifyReport {
    run_with(level, seed, solve_cramer)
}

pub fn run_with(level: Level, seed: u64, cramer: CramerSolver) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = vec![
        series_suite(level),
        vandermonde_suite(level, &mut rng, cramer),
        derivative_suite(level, &mut rng),
        oracle_suite(level, &mut rng),
    ];
    VerifyReport { seed, level, checks }
}

fn series_suite(level: Level) -> CheckResult {
    let max = level.pick(6, 8);
    let mut failures = Vec::new();
    for m in 1..=max {
        if multiset(&enumerate_original(SeriesKind::S1, m, 0)) != multiset(&enumerate_shifted(SeriesKind::S1, m, 0)) {
            failures.push(format!("S1({m})"));
        }
        let grid = terms_grid(&enumerate_shifted(SeriesKind::S1, m, 0), m);
        if (0..m).any(|i| (0..m).any(|j| grid.contains(i, j) != (j <= i))) {
            failures.push(format!("grid S1({m})"));
        }
        for z in 1..=max {
            if multiset(&enumerate_original(SeriesKind::S2, m, z)) != multiset(&enumerate_shifted(SeriesKind::S2, m, z)) {
                failures.push(format!("S2({m},{z})"));
            }
        }
    }
    CheckResult {
        name: "series identities",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("m, z <= {max} exhaustive")
        } else {
            format!("mismatch in {}", failures.join(", "))
        },
    }
}

fn separated_nodes(rng: &mut ChaCha8Rng, m: usize, gap: f64) -> Vec<f64> {
    loop {
        let mut nodes: Vec<f64> = (0..m).map(|_| rng.gen_range(-4.0..4.0)).collect();
        nodes.sort_by(f64::total_cmp);
        if nodes.windows(2).all(|w| w[1] - w[0] >= gap) {
            return nodes;
        }
    }
}

fn vandermonde_suite(level: Level, rng: &mut ChaCha8Rng, cramer: CramerSolver) -> CheckResult {
    let trials = level.pick(200, 1000);
    let mut worst: f64 = 0.0;
    let mut errors = 0;
    for _ in 0..trials {
        let m = rng.gen_range(1..=6);
        let nodes = separated_nodes(rng, m, 0.2);
        let scales = (0..m)
            .map(|_| rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let rhs = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let Ok(sys) = VandermondeSystem::new(nodes, scales, rhs) else {
            errors += 1;
            continue;
        };
        match (cramer(&sys), solve_elimination(&sys)) {
            (Ok(a), Ok(b)) => {
                let norm = b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1e-300);
                for (x, y) in a.iter().zip(&b) {
                    worst = worst.max((x - y).abs() / norm);
                }
            }
            _ => errors += 1,
        }
    }
    let nodes: Vec<f64> = (0..8).map(|v| v as f64 - 3.5).collect();
    let scales = [1.0; 8];
    let mut count_ok = true;
    for m in 1..=8 {
        for i in 1..=m {
            let n = laplace_minor(&nodes[..m], &scales[..m], i, 1).subsets;
            let expected = binomial_count(m - 1, i - 1);
            count_ok &= n == expected;
        }
    }
    CheckResult {
        name: "vandermonde cramer vs elimination",
        passed: errors == 0 && worst < 1e-10 && count_ok,
        detail: format!("{trials} systems, worst relative gap {worst:.2e}, solver errors {errors}, minor counts {}", if count_ok { "ok" } else { "wrong" }),
    }
}

fn binomial_count(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn derivative_suite(level: Level, rng: &mut ChaCha8Rng) -> CheckResult {
    let trials = level.pick(100, 500);
    let (mut worst_fd, mut worst_rep): (f64, f64) = (0.0, 0.0);
    for _ in 0..trials {
        let r = rng.gen_range(-3.0..3.0);
        let i = rng.gen_range(0..=6);
        let h = rng.gen_range(1..=4);
        let t = rng.gen_range(-2.0..2.0);
        let mut coeffs = vec![0.0; i + 1];
        coeffs[i] = 1.0;
        let f = ExpPoly::term(r, coeffs);
        let exact = f.derivative(h).unwrap();
        let mut repeated = f.clone();
        for _ in 0..h {
            repeated = repeated.derivative(1).unwrap();
        }
        let scale = exact.evaluate(t).abs().max(1.0);
        worst_rep = worst_rep.max((exact.evaluate(t) - repeated.evaluate(t)).abs() / scale);
        // central difference of the (h-1)-th derivative
        let lower = if h == 1 { f.clone() } else { f.derivative(h - 1).unwrap() };
        let step = 1e-4;
        let fd = (lower.evaluate(t - 2.0 * step) - 8.0 * lower.evaluate(t - step) + 8.0 * lower.evaluate(t + step)
            - lower.evaluate(t + 2.0 * step))
            / (12.0 * step);
        worst_fd = worst_fd.max((exact.evaluate(t) - fd).abs() / scale);
    }
    CheckResult {
        name: "exp-poly derivative",
        passed: worst_fd < 1e-5 && worst_rep < 1e-12,
        detail: format!("{trials} draws, finite-difference gap {worst_fd:.2e}, repeated-derivative gap {worst_rep:.2e}"),
    }
}

/// A random stable loop whose delay-free roots are real, simple and in
/// `[-5, -0.1]`.
///
/// Gains follow the SIMC tuning rules for a unit delay with a closed-loop time
/// constant drawn from `[1, 3]` delays: PI on first-order plants (plus a small
/// derivative term, keeping the neutral coefficient below 0.3) and series PID
/// cancelling the faster pole on second-order plants. Arbitrary gains can make
/// the exact mode coefficients grow by orders of magnitude per interval, which
/// no double-precision method of steps survives.
pub fn random_loop(rng: &mut ChaCha8Rng) -> Result<DdeSystem> {
    let gain = rng.gen_range(0.5..2.0);
    let closed = rng.gen_range(1.0..3.0) + 1.0;
    if rng.gen_bool(0.5) {
        let poles = separated_nodes_in(rng, 2, 0.1, 5.0, 0.2);
        // poles ascend, so poles[1] is the slower one
        let (slow, fast) = (-1.0 / poles[1], -1.0 / poles[0]);
        let kc = slow / (gain * closed);
        let ti = slow.min(4.0 * closed);
        let pid = PidParams::new(kc * (1.0 + fast / ti), kc / ti, kc * fast)?;
        let den = crate::closed_loop::poly_mul(&[1.0, slow], &[1.0, fast]);
        build_closed_loop(&pid, &PlantModel::new(vec![gain], den)?)
    } else {
        let tp = 1.0 / rng.gen_range(0.1..5.0);
        let kc = tp / (gain * closed);
        let ti = tp.min(4.0 * closed);
        let k_d = rng.gen_range(0.0..0.3) * tp / gain;
        build_closed_loop(&PidParams::new(kc, kc / ti, k_d)?, &PlantModel::first_order(gain, tp)?)
    }
}

fn separated_nodes_in(rng: &mut ChaCha8Rng, m: usize, lo: f64, hi: f64, gap: f64) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..m).map(|_| -rng.gen_range(lo..hi)).collect();
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[1] - w[0] >= gap) {
            return v;
        }
    }
}

fn oracle_suite(level: Level, rng: &mut ChaCha8Rng) -> CheckResult {
    let systems = level.pick(5, 50);
    let horizon = 10;
    let (mut worst_dev, mut worst_gap, mut worst_res): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut errors = Vec::new();
    for idx in 0..systems {
        let outcome = (|| -> Result<(f64, f64, f64)> {
            let sys = random_loop(rng)?;
            let start = rng.gen_range(-1.0..1.0);
            let step_at = 0.05 * rng.gen_range(0..40) as f64;
            let init = InitialCondition::steady(start);
            let forcing = ForcingTerm::steps(start, &[(step_at, start + rng.gen_range(0.5..1.5))])?;
            let sol = solve(&sys, &init, &forcing, horizon)?;
            let trajectory = oracle::integrate(&sys, &init, &forcing, horizon, oracle::DEFAULT_STEP)?;
            let dev = trajectory.max_deviation(&sol, horizon as f64);
            let gap = sol.junction_defects()?.iter().fold(0.0_f64, |a, d| a.max(d.gap));
            let mut res: f64 = 0.0;
            for piece in sol.pieces().collect::<Vec<_>>() {
                let lo = piece.start - piece.origin;
                let hi = piece.end - piece.origin;
                for s in 0..5 {
                    let x = lo + (hi - lo) * (s as f64 + 0.5) / 5.0;
                    let (l, r, scale) = sol.equation_sides(&sys, piece.n, piece.k, x)?;
                    res = res.max((l - r).abs() / scale.max(1e-300));
                }
            }
            Ok((dev, gap, res))
        })();
        match outcome {
            Ok((d, g, r)) => {
                worst_dev = worst_dev.max(d);
                worst_gap = worst_gap.max(g);
                worst_res = worst_res.max(r);
            }
            Err(e) => errors.push(format!("#{idx}: {e}")),
        }
    }
    CheckResult {
        name: "analytic vs rk4 oracle",
        passed: errors.is_empty() && worst_dev < 1e-6 && worst_gap < 1e-9 && worst_res < 1e-8,
        detail: format!(
            "{systems} loops over [0, {horizon}]: max deviation {worst_dev:.2e}, junction gap {worst_gap:.2e}, residual {worst_res:.2e}{}",
            if errors.is_empty() { String::new() } else { format!(", errors: {}", errors.join("; ")) }
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vandermonde::solve_cramer_with_sign_fault;

    #[test]
    fn quick_suite_passes_and_is_deterministic() {
        let a = run(Level::Quick, DEFAULT_SEED);
        assert!(a.passed(), "{a}");
        let b = run(Level::Quick, DEFAULT_SEED);
        assert_eq!(a.to_string(), b.to_string());
    }

    #[test]
    fn injected_sign_fault_is_caught() {
        let report = run_with(Level::Quick, DEFAULT_SEED, solve_cramer_with_sign_fault);
        let cramer = report.checks.iter().find(|c| c.name.starts_with("vandermonde")).unwrap();
        assert!(!cramer.passed);
        assert!(!report.passed());
    }
}
