//! Fixed-step RK4 reference integration of the closed-loop delay equation,
//! used to cross-check the analytic solution.
//!
//! The integrator never looks at the analytic solution. Interval `n` is an
//! ordinary equation in the state `(y, y', …, y^{(m_a-1)})` whose forcing
//! needs the delayed `y^{(h)}`, `h <= m_b`, at grid and half-grid points.
//! The history interval is exact; later intervals use the oracle's own
//! samples, with the highest derivative recovered from the equation itself
//! and half-grid values from six-point Lagrange interpolation inside the
//! sub-interval (derivatives may jump at knots).

use crate::closed_loop::DdeSystem;
use crate::error::{Error, Result};
use crate::exp_poly::ExpPoly;
use crate::stepper::{merge_knots, ForcingTerm, InitialCondition, PiecewiseSolution};

/// Default RK4 step in delay units.
pub const DEFAULT_STEP: f64 = 1e-3;

const ALIGN_TOL: f64 = 1e-6;

/// Samples of `y` and its first `m_a - 1` derivatives on a uniform grid over `[0, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTrajectory {
    dt: f64,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
}

impl OracleTrajectory {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `states()[s][h]` is `y^{(h)}` at `times()[s]`.
    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s[0])
    }

    /// Largest `|y_oracle - y_analytic|` over the samples with `t <= horizon`.
    pub fn max_deviation(&self, sol: &PiecewiseSolution, horizon: f64) -> f64 {
        self.times
            .iter()
            .zip(self.values())
            .filter(|(t, _)| **t <= horizon + 1e-12)
            .map(|(t, y)| sol.value(*t).map_or(f64::INFINITY, |v| (v - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Samples of one sub-interval: `values[j][h]` is `y^{(h)}` for `h = 0..=m_a`.
struct SegmentSamples {
    values: Vec<Vec<f64>>,
}

impl SegmentSamples {
    fn at(&self, j: usize, h: usize) -> f64 {
        self.values[j][h]
    }

    /// Value of derivative `h` halfway between samples `j` and `j + 1`.
    fn midpoint(&self, j: usize, h: usize) -> f64 {
        let len = self.values.len();
        let width = len.min(6);
        let start = (j as i64 - 2).clamp(0, (len - width) as i64) as usize;
        let x = j as f64 + 0.5;
        let mut acc = 0.0;
        for a in start..start + width {
            let mut w = 1.0;
            for b in start..start + width {
                if a != b {
                    w *= (x - b as f64) / (a as f64 - b as f64);
                }
            }
            acc += w * self.values[a][h];
        }
        acc
    }
}

enum Delayed {
    Exact(Vec<Vec<ExpPoly>>),
    Sampled(Vec<SegmentSamples>),
}

fn derivative_table(seg: &ExpPoly, up_to: usize) -> Result<Vec<ExpPoly>> {
    let mut out = vec![seg.clone()];
    for h in 1..=up_to {
        out.push(seg.derivative(h)?);
    }
    Ok(out)
}

/// Integrates `n_intervals` delay intervals with RK4 step `dt`.
///
/// `1/dt` and every knot gap must be whole multiples of `dt`.
pub fn integrate(
    system: &DdeSystem,
    init: &InitialCondition,
    forcing: &ForcingTerm,
    n_intervals: usize,
    dt: f64,
) -> Result<OracleTrajectory> {
    if !(dt.is_finite() && dt > 0.0) || n_intervals == 0 {
        return Err(Error::InvalidArgument("dt must be positive and N at least 1".into()));
    }
    let steps = (1.0 / dt).round();
    if (steps * dt - 1.0).abs() > ALIGN_TOL || steps < 1.0 {
        return Err(Error::StepMisaligned { dt });
    }
    let steps = steps as usize;
    let knots = merge_knots(init.knots(), forcing.knots());
    let mut grid = Vec::with_capacity(knots.len());
    for &tau in &knots {
        let idx = (tau * steps as f64).round();
        if (idx - tau * steps as f64).abs() > ALIGN_TOL * steps as f64 {
            return Err(Error::StepMisaligned { dt });
        }
        grid.push(idx as usize);
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::StepMisaligned { dt });
    }
    let init = init.refine(&knots)?;
    let forcing = forcing.refine(&knots)?;
    let q = knots.len() - 1;

    let m = system.order();
    let mb = system.delayed_order();
    let a = system.a();
    let (b, c) = (system.b(), system.c());
    let lead = a[m];

    let mut delayed = Delayed::Exact(
        init.segments()
            .iter()
            .map(|s| derivative_table(s, mb))
            .collect::<Result<_>>()?,
    );
    let last = &init.segments()[q - 1];
    let mut state: Vec<f64> = (0..m).map(|h| last.derivative_at(h, 1.0)).collect::<Result<_>>()?;

    let mut times = vec![0.0];
    let mut states = vec![state.clone()];

    for n in 1..=n_intervals {
        let f_tables: Vec<Vec<ExpPoly>> = forcing
            .interval(n - 1)
            .iter()
            .map(|s| derivative_table(s, mb))
            .collect::<Result<_>>()?;
        let mut recorded = Vec::with_capacity(q);
        for k in 0..q {
            let (g0, g1) = (grid[k], grid[k + 1]);
            // Delayed right side at local grid offset j (+ half step when `half`).
            let forcing_at = |j: usize, half: bool| -> f64 {
                let s = (g0 + j) as f64 * dt + if half { 0.5 * dt } else { 0.0 };
                let mut r = 0.0;
                for h in 0..=mb {
                    let yh = match &delayed {
                        Delayed::Exact(tables) => tables[k][h].evaluate(s),
                        Delayed::Sampled(segs) if half => segs[k].midpoint(j, h),
                        Delayed::Sampled(segs) => segs[k].at(j, h),
                    };
                    r += -b[h] * yh + c[h] * f_tables[k][h].evaluate(s);
                }
                r
            };
            let field = |x: &[f64], r: f64| -> Vec<f64> {
                let mut dx = Vec::with_capacity(m);
                dx.extend_from_slice(&x[1..]);
                let lower: f64 = (1..m).map(|h| a[h] * x[h]).sum();
                dx.push((r - lower) / lead);
                dx
            };
            let highest = |x: &[f64], r: f64| -> f64 {
                let lower: f64 = (1..m).map(|h| a[h] * x[h]).sum();
                (r - lower) / lead
            };
            let sample = |x: &[f64], r: f64| -> Vec<f64> {
                let mut v = x.to_vec();
                v.push(highest(x, r));
                v
            };

            let mut samples = Vec::with_capacity(g1 - g0 + 1);
            let mut r_now = forcing_at(0, false);
            samples.push(sample(&state, r_now));
            for j in 0..g1 - g0 {
                let r_mid = forcing_at(j, true);
                let r_next = forcing_at(j + 1, false);
                let k1 = field(&state, r_now);
                let x2: Vec<f64> = state.iter().zip(&k1).map(|(x, d)| x + 0.5 * dt * d).collect();
                let k2 = field(&x2, r_mid);
                let x3: Vec<f64> = state.iter().zip(&k2).map(|(x, d)| x + 0.5 * dt * d).collect();
                let k3 = field(&x3, r_mid);
                let x4: Vec<f64> = state.iter().zip(&k3).map(|(x, d)| x + dt * d).collect();
                let k4 = field(&x4, r_next);
                for (i, x) in state.iter_mut().enumerate() {
                    *x += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                r_now = r_next;
                samples.push(sample(&state, r_now));
                times.push((n - 1) as f64 + (g0 + j + 1) as f64 * dt);
                states.push(state.clone());
            }
            recorded.push(SegmentSamples { values: samples });
        }
        delayed = Delayed::Sampled(recorded);
    }
    Ok(OracleTrajectory { dt, times, states })
}
