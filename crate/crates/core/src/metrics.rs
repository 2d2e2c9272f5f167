//! Step-response figures of merit computed from the analytic solution.
//!
//! All quantities come from the exponential-polynomial segments: zero
//! crossings, extrema and band exits are bracketed on a per-segment sampling
//! grid and refined by bisection, and the absolute-error integral is summed
//! from exact integrals between sign changes.

use crate::error::{Error, Result};
use crate::exp_poly::ExpPoly;
use crate::stepper::PiecewiseSolution;

/// Bracketing samples per solved piece when no hint is given.
pub const DEFAULT_SAMPLES_PER_PIECE: usize = 64;

const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMetrics {
    /// Largest excursion past the setpoint, as a fraction of the step size
    /// (absolute when the step size is zero).
    pub overshoot: f64,
    /// Time after which `|y - setpoint|` stays inside the band; `None` when the
    /// response is still outside at the horizon.
    pub settling_time: Option<f64>,
    pub band: f64,
    /// `∫_0^horizon |y - setpoint| dt`.
    pub iae: f64,
    /// Ratio of the second to the first peak of `|y - setpoint|`.
    pub decay_ratio: Option<f64>,
    /// Times of the interior local maxima of `|y - setpoint|`.
    pub peak_times: Vec<f64>,
    /// Settled with no overshoot beyond the band.
    pub deadbeat: bool,
}

/// A piece of the error `y - setpoint` restricted to `[0, horizon]`, in local time.
struct ErrorPiece {
    origin: f64,
    lo: f64,
    hi: f64,
    error: ExpPoly,
    slope: ExpPoly,
}

impl ErrorPiece {
    fn global(&self, s: f64) -> f64 {
        self.origin + s
    }
}

/// Roots of `f` on `[lo, hi]` bracketed on `samples` sub-intervals.
fn bracketed_roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let step = (hi - lo) / samples as f64;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=samples {
        let b = if i == samples { hi } else { lo + i as f64 * step };
        let fb = f(b);
        if fa == 0.0 {
            if out.last().is_none_or(|&r: &f64| (r - a).abs() > BISECTION_TOL) {
                out.push(a);
            }
        } else if fa * fb < 0.0 {
            let (mut x0, mut x1, mut f0) = (a, b, fa);
            while x1 - x0 > BISECTION_TOL {
                let mid = 0.5 * (x0 + x1);
                let fm = f(mid);
                if fm == 0.0 {
                    x0 = mid;
                    x1 = mid;
                    break;
                }
                if f0 * fm < 0.0 {
                    x1 = mid;
                } else {
                    x0 = mid;
                    f0 = fm;
                }
            }
            out.push(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    if fa == 0.0 && out.last().is_none_or(|&r| (r - hi).abs() > BISECTION_TOL) {
        out.push(hi);
    }
    out
}

/// Metrics with the default bracketing density.
pub fn compute_metrics(
    sol: &PiecewiseSolution,
    setpoint: f64,
    horizon: f64,
    band: f64,
) -> Result<ResponseMetrics> {
    compute_metrics_with(sol, setpoint, horizon, band, DEFAULT_SAMPLES_PER_PIECE)
}

/// Metrics over `[0, horizon]`, bracketing roots on `samples_per_piece` points
/// per solved piece.
pub fn compute_metrics_with(
    sol: &PiecewiseSolution,
    setpoint: f64,
    horizon: f64,
    band: f64,
    samples_per_piece: usize,
) -> Result<ResponseMetrics> {
    if !(band > 0.0 && band < 0.5) {
        return Err(Error::InvalidArgument(format!("band must lie in (0, 0.5), got {band}")));
    }
    if !(horizon > 0.0) || samples_per_piece == 0 {
        return Err(Error::InvalidArgument("horizon and sampling must be positive".into()));
    }
    if horizon > sol.n_intervals() as f64 {
        return Err(Error::HorizonExceedsSolution { horizon, solved: sol.n_intervals() });
    }
    let target = ExpPoly::constant(setpoint);
    let mut pieces = Vec::new();
    for p in sol.pieces().take_while(|p| p.start < horizon) {
        let error = p.segment - &target;
        let slope = if error.is_zero() { ExpPoly::zero() } else { error.derivative(1)? };
        pieces.push(ErrorPiece {
            origin: p.origin,
            lo: p.start - p.origin,
            hi: p.end.min(horizon) - p.origin,
            error,
            slope,
        });
    }
    let e_at = |t: f64| sol.value(t).unwrap() - setpoint;

    let y0 = sol.value(0.0).unwrap();
    let magnitude = (setpoint - y0).abs();
    let direction = (setpoint - y0).signum();
    let tol = if magnitude > 0.0 { band * magnitude } else { band };

    // Integral of |e| between sign changes.
    let mut iae = 0.0;
    for piece in &pieces {
        let mut cuts = vec![piece.lo];
        cuts.extend(bracketed_roots(|s| piece.error.evaluate(s), piece.lo, piece.hi, samples_per_piece));
        cuts.push(piece.hi);
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                iae += piece.error.integrate(w[0], w[1])?.abs();
            }
        }
    }

    // Critical points of e: slope roots inside pieces, plus junctions where the
    // slope changes sign.
    let mut critical = Vec::new();
    for (idx, piece) in pieces.iter().enumerate() {
        for s in bracketed_roots(|s| piece.slope.evaluate(s), piece.lo, piece.hi, samples_per_piece) {
            critical.push(piece.global(s));
        }
        if let Some(next) = pieces.get(idx + 1) {
            let left = piece.slope.evaluate(piece.hi);
            let right = next.slope.evaluate(next.lo);
            if left * right < 0.0 {
                critical.push(piece.global(piece.hi));
            }
        }
    }
    critical.sort_by(f64::total_cmp);
    critical.dedup_by(|a, b| (*a - *b).abs() <= 1e3 * BISECTION_TOL);

    let mut overshoot_abs: f64 = 0.0;
    for &t in critical.iter().chain([0.0, horizon].iter()) {
        let e = e_at(t);
        let beyond = if magnitude > 0.0 { direction * e } else { e.abs() };
        overshoot_abs = overshoot_abs.max(beyond);
    }
    let overshoot = if magnitude > 0.0 { overshoot_abs / magnitude } else { overshoot_abs };

    // |e| peaks where sign(e) * slope turns from positive to negative. Slopes
    // are probed rather than values: near a flat peak the value change over
    // the probe is below the rounding of the segment sums.
    let probe = 1e-4;
    let slope_at = |t: f64| sol.derivative_value(t, 1).unwrap();
    let peak_times: Vec<f64> = critical
        .iter()
        .copied()
        .filter(|&t| t > probe && t < horizon - probe)
        .filter(|&t| {
            let sign = e_at(t).signum();
            sign != 0.0 && sign * slope_at(t - probe) > 0.0 && sign * slope_at(t + probe) < 0.0
        })
        .collect();
    let decay_ratio = match peak_times.as_slice() {
        [first, second, ..] => Some(e_at(*second).abs() / e_at(*first).abs()),
        _ => None,
    };

    let settling_time = if e_at(horizon).abs() > tol {
        None
    } else {
        let mut last_exit: f64 = if e_at(0.0).abs() > tol { 0.0 } else { -1.0 };
        for piece in &pieces {
            for offset in [tol, -tol] {
                let exits = bracketed_roots(|s| piece.error.evaluate(s) - offset, piece.lo, piece.hi, samples_per_piece);
                if let Some(&s) = exits.last() {
                    last_exit = last_exit.max(piece.global(s));
                }
            }
        }
        Some(last_exit.max(0.0))
    };
    let deadbeat = settling_time.is_some() && overshoot <= band;

    Ok(ResponseMetrics {
        overshoot,
        settling_time,
        band,
        iae,
        decay_ratio,
        peak_times,
        deadbeat,
    })
}
