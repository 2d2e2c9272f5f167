//! Acceptance criteria. Each prints one PASS/FAIL line; the test fails if any
//! criterion fails. Run with `--nocapture` to see the report.

use std::collections::BTreeSet;
use std::time::Instant;

use pidelay::closed_loop::poly_mul;
use pidelay::exp_poly::{binomial, ExpPoly};
use pidelay::prelude::*;
use pidelay::series_identities::{enumerate_original, enumerate_shifted, multiset, terms_grid, SeriesKind};
use pidelay::vandermonde::{laplace_minor, solve_cramer, solve_elimination, VandermondeSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    passed: bool,
    detail: String,
}

/// Runs one criterion; `limit_s` is its time budget, `None` when it is
/// measured as part of another criterion's run.
fn report(id: usize, title: &str, limit_s: Option<f64>, run: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let verdict = run();
    let secs = start.elapsed().as_secs_f64();
    let passed = verdict.passed && limit_s.is_none_or(|limit| secs < limit);
    let timing = match limit_s {
        Some(limit) => format!("{secs:.2} s of {limit} s"),
        None => "timed with criterion 3".to_string(),
    };
    println!("{} criterion {id} ({title}): {}; {timing}", if passed { "PASS" } else { "FAIL" }, verdict.detail);
    passed
}

// ---------------------------------------------------------------- criterion 1

fn flat_first_interval() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut shape_ok = true;
    for _ in 0..100 {
        let tp = rng.gen_range(0.1..10.0);
        let pid = PidParams::new(rng.gen_range(0.0..3.0), rng.gen_range(0.01..2.0), rng.gen_range(0.0..1.0)).unwrap();
        let system = build_closed_loop(&pid, &PlantModel::first_order(rng.gen_range(0.2..3.0), tp).unwrap()).unwrap();
        let forcing = ForcingTerm::steps(1.0, &[(0.0, 0.0)]).unwrap();
        let sol = solve(&system, &InitialCondition::steady(1.0), &forcing, 1).unwrap();
        let rows: Vec<_> = sol.coefficient_rows(1, 1).unwrap().into_iter().filter(|r| r.value != 0.0).collect();
        shape_ok &= rows.len() == 1 && rows[0].p == 1 && rows[0].i == 0 && rows[0].root == 0.0;
        if let Some(r) = rows.first() {
            worst = worst.max((r.value - 1.0).abs());
        }
    }
    Verdict {
        passed: shape_ok && worst < 1e-12,
        detail: format!("100 draws, single entry G=1 everywhere: {shape_ok}, worst |G - 1| {worst:.1e}"),
    }
}

// ---------------------------------------------------------------- criterion 2

/// Coefficients of one first-order segment: the null-root polynomial and the
/// polynomial multiplying `e^{-t/tp}`.
#[derive(Clone, Debug)]
struct Segment {
    null: Vec<f64>,
    fast: Vec<f64>,
}

impl Segment {
    fn at(&self, tp: f64, t: f64) -> (f64, f64) {
        let poly = |c: &[f64]| -> (f64, f64) {
            let v = c.iter().rev().fold(0.0, |acc, g| acc * t + g);
            let d = c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (i, g)| acc * t + i as f64 * g);
            (v, d)
        };
        let (p, dp) = poly(&self.null);
        let (q, dq) = poly(&self.fast);
        let e = (-t / tp).exp();
        (p + e * q, dp + e * (dq - q / tp))
    }
}

fn get(c: &[f64], i: usize) -> f64 {
    c.get(i).copied().unwrap_or(0.0)
}

/// Coefficients with `i > 0` from the first-order recursions; the constant is
/// left at zero.
fn upper_coefficients(tp: f64, b: [f64; 3], prev: &Segment) -> Segment {
    let [b0, b1, b2] = b;
    let b3 = b0 - b1 / tp + b2 / (tp * tp);
    let b4 = b1 - 2.0 * b2 / tp;
    let b5 = b2;
    let h = &prev.null;
    let top = h.len();
    let mut null = vec![0.0; top + 1];
    for i in (1..=top).rev() {
        let fi = i as f64;
        null[i] = if i == top {
            -b0 / fi * get(h, i - 1)
        } else if i + 1 == top {
            -b0 / fi * get(h, i - 1) - b1 * get(h, i) - tp * (fi + 1.0) * null[i + 1]
        } else {
            -b0 / fi * get(h, i - 1) - b1 * get(h, i) - b2 * (fi + 1.0) * get(h, i + 1) - tp * (fi + 1.0) * null[i + 1]
        };
    }
    let h = &prev.fast;
    let top = h.len();
    let mut fast = vec![0.0; top + 1];
    for i in (1..=top).rev() {
        let fi = i as f64;
        fast[i] = if i == top {
            b3 / fi * get(h, i - 1)
        } else if i + 1 == top {
            b3 / fi * get(h, i - 1) + b4 * get(h, i) + tp * (fi + 1.0) * fast[i + 1]
        } else {
            b3 / fi * get(h, i - 1) + b4 * get(h, i) + b5 * (fi + 1.0) * get(h, i + 1) + tp * (fi + 1.0) * fast[i + 1]
        };
    }
    Segment { null, fast }
}

/// Constants for the first sub-interval from the end of the previous interval.
fn constants_first(tp: f64, seg: &mut Segment, y: f64, dy: f64) {
    let g11 = get(&seg.null, 1);
    let g21 = get(&seg.fast, 1);
    seg.null[0] = y + tp * dy - tp * g11 - tp * g21;
    seg.fast[0] = -tp * dy + tp * g11 + tp * g21;
}

/// Constants for a later sub-interval starting at `tau`.
fn constants_later(tp: f64, seg: &mut Segment, y: f64, dy: f64, tau: f64) {
    let e_plus = (tau / tp).exp();
    let mut null0 = y + tp * dy;
    let mut fast0 = -tp * e_plus * dy;
    for h in 1..seg.null.len() {
        let fh = h as f64;
        null0 -= (tau + tp * fh) * tau.powi(h as i32 - 1) * seg.null[h];
        fast0 += e_plus * tp * fh * tau.powi(h as i32 - 1) * seg.null[h];
    }
    for h in 1..seg.fast.len() {
        let fh = h as f64;
        null0 -= (-tau / tp).exp() * tp * fh * tau.powi(h as i32 - 1) * seg.fast[h];
        fast0 += (-tau + tp * fh) * tau.powi(h as i32 - 1) * seg.fast[h];
    }
    seg.null[0] = null0;
    seg.fast[0] = fast0;
}

fn first_order_recursions() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let tp = rng.gen_range(0.2..5.0);
        let b = [rng.gen_range(0.05..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-0.9..0.9) * tp];
        let system = DdeSystem::new(vec![1.0, tp], b.to_vec()).unwrap();
        let fast_root = -1.0 / tp;

        // history with q > 1 sub-intervals, no setpoint
        let q = rng.gen_range(2..=4);
        let mut cuts: Vec<f64> = (1..q).map(|_| rng.gen_range(0.05..0.95)).collect();
        cuts.sort_by(f64::total_cmp);
        if cuts.windows(2).any(|w| w[1] - w[0] < 0.02) {
            continue;
        }
        let mut knots = vec![0.0];
        knots.extend(&cuts);
        knots.push(1.0);
        let history: Vec<Segment> = (0..q)
            .map(|_| Segment {
                null: (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                fast: (0..rng.gen_range(0..=3)).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            })
            .collect();
        let init = InitialCondition::new(
            knots.clone(),
            history
                .iter()
                .map(|s| ExpPoly::from_terms([(0.0, s.null.clone()), (fast_root, s.fast.clone())]))
                .collect(),
        )
        .unwrap();
        let sol = solve(&system, &init, &ForcingTerm::zero(), 5).unwrap();

        let mut prev = history;
        for n in 1..=5 {
            let mut row: Vec<Segment> = Vec::with_capacity(q);
            for k in 0..q {
                let mut seg = upper_coefficients(tp, b, &prev[k]);
                if k == 0 {
                    let (y, dy) = prev[q - 1].at(tp, 1.0);
                    constants_first(tp, &mut seg, y, dy);
                } else {
                    let (y, dy) = row[k - 1].at(tp, knots[k]);
                    constants_later(tp, &mut seg, y, dy, knots[k]);
                }
                let solved = sol.segment(n, k + 1).unwrap();
                for (mine, root) in [(&seg.null, 0.0), (&seg.fast, fast_root)] {
                    let theirs = solved.coeffs_at(root);
                    let scale = mine.iter().chain(theirs).fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
                    for i in 0..mine.len().max(theirs.len()) {
                        worst = worst.max((get(mine, i) - get(theirs, i)).abs() / scale);
                    }
                }
                row.push(seg);
            }
            prev = row;
        }
    }
    Verdict { passed: worst < 1e-10, detail: format!("100 draws, n <= 5, worst relative gap {worst:.2e}") }
}

// ------------------------------------------------------------ criteria 3, 4, 8

struct Trajectory {
    deviation: f64,
    junction_gap: f64,
    residual: f64,
}

/// Stable loop tuned by the SIMC rules (closed-loop time constant `lambda`
/// delays): PI or PI with a small derivative on first-order plants, series PID
/// on second-order plants.
fn tuned_loop(rng: &mut ChaCha8Rng) -> DdeSystem {
    let gain: f64 = rng.gen_range(0.3..3.0);
    let lambda: f64 = rng.gen_range(1.0..3.0);
    let pole = |rng: &mut ChaCha8Rng| -> f64 { rng.gen_range(0.1..5.0) };
    if rng.gen_bool(0.5) {
        let tp = 1.0 / pole(rng);
        let kc = tp / (gain * (lambda + 1.0));
        let ti = tp.min(4.0 * (lambda + 1.0));
        let kd = rng.gen_range(0.0..0.25) * tp / gain;
        build_closed_loop(&PidParams::new(kc, kc / ti, kd).unwrap(), &PlantModel::first_order(gain, tp).unwrap()).unwrap()
    } else {
        let (mut p1, mut p2) = (pole(rng), pole(rng));
        while (p1 - p2).abs() < 0.2 {
            p2 = pole(rng);
        }
        if p1 > p2 {
            std::mem::swap(&mut p1, &mut p2);
        }
        let (t1, t2) = (1.0 / p1, 1.0 / p2);
        let kc = t1 / (gain * (lambda + 1.0));
        let ti = t1.min(4.0 * (lambda + 1.0));
        let pid = PidParams::new(kc * (1.0 + t2 / ti), kc / ti, kc * t2).unwrap();
        let plant = PlantModel::new(vec![gain], poly_mul(&[1.0, t1], &[1.0, t2])).unwrap();
        build_closed_loop(&pid, &plant).unwrap()
    }
}

fn loop_trajectories() -> Vec<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let horizon = 10;
    (0..50)
        .map(|_| {
            let system = tuned_loop(&mut rng);
            let roots = system.roots();
            assert!(roots[0] == 0.0 && roots[1..].iter().all(|r| (-5.0..=-0.1).contains(r)));
            let start = rng.gen_range(-1.0..1.0);
            let step_at = 0.1 * rng.gen_range(0..20) as f64;
            let init = InitialCondition::steady(start);
            let forcing = ForcingTerm::steps(start, &[(step_at, start + rng.gen_range(-2.0..2.0))]).unwrap();
            let sol = solve(&system, &init, &forcing, horizon).unwrap();
            let rk4 = integrate(&system, &init, &forcing, horizon, 1e-3).unwrap();
            let deviation = rk4
                .times()
                .iter()
                .zip(rk4.values())
                .map(|(t, y)| (sol.value(*t).unwrap() - y).abs())
                .fold(0.0, f64::max);
            let junction_gap = sol.junction_defects().unwrap().iter().fold(0.0_f64, |a, d| a.max(d.gap));
            let mut residual: f64 = 0.0;
            for piece in sol.pieces() {
                let width = piece.end - piece.start;
                let share = ((20.0 * width).ceil() as usize).max(1);
                for _ in 0..share {
                    let s = piece.start - piece.origin + rng.gen_range(0.0..width);
                    let (lhs, rhs, scale) = sol.equation_sides(&system, piece.n, piece.k, s).unwrap();
                    residual = residual.max((lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE));
                }
            }
            Trajectory { deviation, junction_gap, residual }
        })
        .collect()
}

// ---------------------------------------------------------------- criterion 5

fn series_identities() -> Verdict {
    let mut mismatches = 0;
    for kind in [SeriesKind::S1, SeriesKind::S2] {
        for m in 1..=8 {
            for z in 1..=8 {
                if multiset(&enumerate_original(kind, m, z)) != multiset(&enumerate_shifted(kind, m, z)) {
                    mismatches += 1;
                }
            }
        }
    }
    let mut grid_ok = true;
    for m in 1..=8 {
        for h in 1..=m {
            let expect: BTreeSet<(usize, usize)> = (0..h).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
            for triples in [enumerate_original(SeriesKind::S1, m, 0), enumerate_shifted(SeriesKind::S1, m, 0)] {
                let got: BTreeSet<(usize, usize)> = terms_grid(&triples, h).cells().collect();
                grid_ok &= got == expect;
            }
        }
    }
    Verdict {
        passed: mismatches == 0 && grid_ok,
        detail: format!("m, z <= 8 for both series: {mismatches} mismatches; lower-triangular grid: {grid_ok}"),
    }
}

// ---------------------------------------------------------------- criterion 6

fn vandermonde_routes() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut systems = 0;
    while systems < 1000 {
        let m = rng.gen_range(1..=6);
        let mut nodes: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..1.0)).collect();
        nodes.sort_by(f64::total_cmp);
        if nodes.windows(2).any(|w| w[1] - w[0] < 0.2) {
            continue;
        }
        let scales: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let rhs: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let sys = VandermondeSystem::new(nodes, scales, rhs).unwrap();
        let a = solve_cramer(&sys).unwrap();
        let b = solve_elimination(&sys).unwrap();
        let scale = b.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        for (u, v) in a.iter().zip(&b) {
            worst = worst.max((u - v).abs() / scale);
        }
        systems += 1;
    }
    let mut counts_ok = true;
    for m in 1..=8 {
        let nodes: Vec<f64> = (0..m).map(|j| -0.7 * j as f64).collect();
        let scales = vec![1.0; m];
        for i in 1..=m {
            for col in 1..=m {
                let want = binomial(m - 1, i - 1) as usize;
                counts_ok &= laplace_minor(&nodes, &scales, i, col).subsets == want;
            }
        }
    }
    Verdict {
        passed: worst < 1e-10 && counts_ok,
        detail: format!("1000 systems, worst relative gap {worst:.2e}; minor counts up to (8, 8): {counts_ok}"),
    }
}

// ---------------------------------------------------------------- criterion 7

fn derivative_formula() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_fd, mut worst_rep): (f64, f64) = (0.0, 0.0);
    for _ in 0..500 {
        let r = rng.gen_range(-3.0..1.0);
        let i = rng.gen_range(0..=6);
        let h = rng.gen_range(1..=4);
        let t = rng.gen_range(-1.0..1.5);
        let mut coeffs = vec![0.0; i + 1];
        coeffs[i] = 1.0;
        let f = ExpPoly::term(r, coeffs);
        let exact = f.derivative_at(h, t).unwrap();
        let mut repeated = f.clone();
        for _ in 0..h {
            repeated = repeated.derivative(1).unwrap();
        }
        let scale = exact.abs().max(1.0);
        worst_rep = worst_rep.max((repeated.evaluate(t) - exact).abs() / scale);
        // central difference of the (h-1)-th derivative from the product rule
        let lower = |x: f64| product_rule(r, i, h - 1, x);
        let d = 1e-3;
        let fd = (lower(t - 2.0 * d) - 8.0 * lower(t - d) + 8.0 * lower(t + d) - lower(t + 2.0 * d)) / (12.0 * d);
        worst_fd = worst_fd.max((fd - exact).abs() / scale);
    }
    Verdict {
        passed: worst_fd < 1e-5 && worst_rep < 1e-12,
        detail: format!("500 draws, finite-difference gap {worst_fd:.2e}, repeated-derivative gap {worst_rep:.2e}"),
    }
}

/// `d^h/dt^h (e^{rt} t^i)` by Leibniz: `Σ_k C(h,k) r^{h-k} (t^i)^{(k)} e^{rt}`.
fn product_rule(r: f64, i: usize, h: usize, t: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..=h.min(i) {
        let falling: f64 = (0..k).map(|l| (i - l) as f64).product();
        acc += binomial(h, k) * r.powi((h - k) as i32) * falling * t.powi((i - k) as i32);
    }
    acc * (r * t).exp()
}

#[test]
fn acceptance() {
    let mut all = true;
    all &= report(1, "flat first interval after a setpoint drop", Some(1.0), flat_first_interval);
    all &= report(2, "first-order recursions", Some(5.0), first_order_recursions);

    let mut runs = Vec::new();
    all &= report(3, "agreement with RK4", Some(60.0), || {
        runs = loop_trajectories();
        let dev = runs.iter().map(|r| r.deviation).fold(0.0, f64::max);
        Verdict { passed: dev < 1e-6, detail: format!("50 tuned loops on [0, 10], max deviation {dev:.2e}") }
    });
    let gap = runs.iter().map(|r| r.junction_gap).fold(0.0, f64::max);
    all &= report(4, "continuity at junctions", None, || Verdict {
        passed: gap < 1e-9,
        detail: format!("largest gap over y and derivatives {gap:.2e}"),
    });
    all &= report(5, "series reindexing", Some(5.0), series_identities);
    all &= report(6, "Cramer against elimination", Some(30.0), vandermonde_routes);
    all &= report(7, "closed-form derivative", Some(5.0), derivative_formula);
    let res = runs.iter().map(|r| r.residual).fold(0.0, f64::max);
    all &= report(8, "equation residual", None, || Verdict {
        passed: res < 1e-8,
        detail: format!("largest relative residual {res:.2e}"),
    });
    assert!(all, "at least one acceptance criterion failed");
}
