//! Method of steps for the closed-loop delay equation.
//!
//! Time is split into unit intervals `n` (global `t = n - 1 + t_n`,
//! `t_n ∈ [0, 1]`) and each interval into `q` sub-intervals at the knots
//! `0 = τ_0 < … < τ_q = 1`. On sub-interval `k` of interval `n` the delayed
//! terms are the already-known segment `y_{n-1,k}` and forcing `f_{n-1,k}` at
//! the same local time, so the segment `y_{n,k}` solves an ordinary linear
//! equation whose right side is an exponential polynomial over the
//! characteristic roots. Its solution keeps that form with every polynomial
//! degree raised by one:
//!
//! * coefficients of `t^i`, `i >= 1`, follow from equating powers of `t` for
//!   each root; the system is upper triangular with bandwidth `m_a`
//!   ([`advance_polynomial_part`]);
//! * the `m_a` constants `G_{p,0}` follow from continuity of `y` and its first
//!   `m_a - 1` derivatives at the junction, a column-scaled Vandermonde
//!   system ([`advance_constant_part`]).

use crate::closed_loop::DdeSystem;
use crate::error::{Error, Result};
use crate::exp_poly::{derivative_weight, pow0, ExpPoly, MAX_DEGREE};
use crate::series_identities::{enumerate_shifted, SeriesKind};
use crate::vandermonde::{solve_elimination, VandermondeSystem};

/// Junction mismatch accepted by [`PiecewiseSolution::check_continuity`].
pub const CONTINUITY_TOL: f64 = 1e-9;

const KNOT_MERGE_TOL: f64 = 1e-12;
const LEADING_TOL: f64 = 1e-12;

fn validate_knots(knots: &[f64]) -> Result<()> {
    if knots.len() < 2 {
        return Err(Error::InvalidKnots("need at least the two end knots 0 and 1".into()));
    }
    if knots[0] != 0.0 || knots[knots.len() - 1] != 1.0 {
        return Err(Error::InvalidKnots(format!(
            "knots must run from 0 to 1, got {} .. {}",
            knots[0],
            knots[knots.len() - 1]
        )));
    }
    if knots.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidKnots("knots must be strictly increasing".into()));
    }
    Ok(())
}

/// Sorted union of two knot sets, merging knots closer than `1e-12`.
pub fn merge_knots(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|x, y| (*x - *y).abs() <= KNOT_MERGE_TOL);
    all
}

/// Index of the segment of `knots` that owns local time `s` (left-closed,
/// the last segment also owns `s = 1`).
fn segment_index(knots: &[f64], s: f64) -> usize {
    let q = knots.len() - 1;
    (1..q).take_while(|&k| s >= knots[k]).count()
}

/// Re-expresses per-segment data on a finer knot set.
fn refine_segments(knots: &[f64], segments: &[ExpPoly], finer: &[f64]) -> Vec<ExpPoly> {
    finer
        .windows(2)
        .map(|w| segments[segment_index(knots, 0.5 * (w[0] + w[1]))].clone())
        .collect()
}

/// History `y_{0,k}` on `[-1, 0]`, one exponential polynomial per sub-interval,
/// each in local time `t_0 = t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    knots: Vec<f64>,
    segments: Vec<ExpPoly>,
    degree_offsets: Option<Vec<Vec<i64>>>,
}

impl InitialCondition {
    pub fn new(knots: Vec<f64>, segments: Vec<ExpPoly>) -> Result<Self> {
        validate_knots(&knots)?;
        if segments.len() != knots.len() - 1 {
            return Err(Error::InvalidInitialCondition(format!(
                "{} segments for {} knot intervals",
                segments.len(),
                knots.len() - 1
            )));
        }
        Ok(Self { knots, segments, degree_offsets: None })
    }

    /// Constant history `y ≡ value`.
    pub fn steady(value: f64) -> Self {
        Self {
            knots: vec![0.0, 1.0],
            segments: vec![ExpPoly::constant(value)],
            degree_offsets: None,
        }
    }

    /// Like [`Self::new`] but with segments written in global time `t ∈ [-1, 0]`.
    pub fn from_global(knots: Vec<f64>, segments: Vec<ExpPoly>) -> Result<Self> {
        let local = segments.iter().map(|s| s.shift_origin(-1.0)).collect();
        Self::new(knots, local)
    }

    /// Declares the degree offsets `v_{k,p}` (indexed `[k][p]` over the system
    /// roots). Without this the offsets are the actual degrees of the segments.
    pub fn with_degree_offsets(mut self, offsets: Vec<Vec<i64>>) -> Self {
        self.degree_offsets = Some(offsets);
        self
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn segments(&self) -> &[ExpPoly] {
        &self.segments
    }

    /// `v_{k,p}`: declared offsets, or the segment degree at each root (`-1` when absent).
    pub fn degree_offsets(&self, system: &DdeSystem) -> Vec<Vec<i64>> {
        if let Some(v) = &self.degree_offsets {
            return v.clone();
        }
        self.segments
            .iter()
            .map(|seg| {
                system
                    .roots()
                    .iter()
                    .map(|&r| seg.degree_at(r).map_or(-1, |d| d as i64))
                    .collect()
            })
            .collect()
    }

    /// Same history on a finer knot set.
    pub fn refine(&self, knots: &[f64]) -> Result<Self> {
        validate_knots(knots)?;
        Ok(Self {
            knots: knots.to_vec(),
            segments: refine_segments(&self.knots, &self.segments, knots),
            degree_offsets: self.degree_offsets.as_ref().map(|v| {
                knots
                    .windows(2)
                    .map(|w| v[segment_index(&self.knots, 0.5 * (w[0] + w[1]))].clone())
                    .collect()
            }),
        })
    }
}

/// Degree bound `v_{k,p} + n` of every segment of interval `n`, indexed `[k][p]`.
/// Negative entries mean the mode is absent.
pub fn degrees(init: &InitialCondition, system: &DdeSystem, n: usize) -> Vec<Vec<i64>> {
    init.degree_offsets(system)
        .into_iter()
        .map(|row| row.into_iter().map(|v| v + n as i64).collect())
        .collect()
}

/// Setpoint `f_{n,k}` per interval `n = 0, 1, …` and sub-interval `k`, in local
/// time. Intervals beyond the last stored one repeat it.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingTerm {
    knots: Vec<f64>,
    intervals: Vec<Vec<ExpPoly>>,
}

impl ForcingTerm {
    pub fn new(knots: Vec<f64>, intervals: Vec<Vec<ExpPoly>>) -> Result<Self> {
        validate_knots(&knots)?;
        if intervals.is_empty() {
            return Err(Error::InvalidForcing("no intervals given".into()));
        }
        if let Some(n) = intervals.iter().position(|row| row.len() != knots.len() - 1) {
            return Err(Error::InvalidForcing(format!(
                "interval {n} has {} segments for {} knot intervals",
                intervals[n].len(),
                knots.len() - 1
            )));
        }
        Ok(Self { knots, intervals })
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(value: f64) -> Self {
        Self {
            knots: vec![0.0, 1.0],
            intervals: vec![vec![ExpPoly::constant(value)]],
        }
    }

    /// Piecewise-constant setpoint: `initial` for `t` before the first step, then
    /// the value of each `(time, value)` step from its time on. Step times must be
    /// non-negative; fractional step times become knots.
    pub fn steps(initial: f64, steps: &[(f64, f64)]) -> Result<Self> {
        let mut steps = steps.to_vec();
        if steps.iter().any(|(t, v)| !(t.is_finite() && *t >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidForcing("step times must be finite and non-negative".into()));
        }
        steps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut knots = vec![0.0, 1.0];
        for (t, _) in &steps {
            let frac = t - t.floor();
            if frac > KNOT_MERGE_TOL && frac < 1.0 - KNOT_MERGE_TOL {
                knots = merge_knots(&knots, &[frac]);
            }
        }
        let value_at = |t: f64| {
            steps
                .iter()
                .take_while(|(ts, _)| *ts <= t)
                .last()
                .map_or(initial, |(_, v)| *v)
        };
        // f_n covers global [n-1, n]; everything after the last step is constant.
        let last_interval = steps.last().map_or(0, |(t, _)| t.floor() as usize + 2);
        let intervals = (0..=last_interval)
            .map(|n| {
                knots
                    .windows(2)
                    .map(|w| ExpPoly::constant(value_at(n as f64 - 1.0 + 0.5 * (w[0] + w[1]))))
                    .collect()
            })
            .collect();
        Ok(Self { knots, intervals })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Segments of `f_n`.
    pub fn interval(&self, n: usize) -> &[ExpPoly] {
        &self.intervals[n.min(self.intervals.len() - 1)]
    }

    pub fn refine(&self, knots: &[f64]) -> Result<Self> {
        validate_knots(knots)?;
        Ok(Self {
            knots: knots.to_vec(),
            intervals: self
                .intervals
                .iter()
                .map(|row| refine_segments(&self.knots, row, knots))
                .collect(),
        })
    }
}

/// Coefficients `Σ_h coeffs[h] d^h/dt^h (e^{rt} Σ_i g_i t^i)`, with `e^{rt}`
/// factored out, by powers of `t`. The derivative terms are gathered from the
/// `S1`/`S2` index enumerations in output-power-first order.
pub fn apply_operator(coeffs: &[f64], r: f64, g: &[f64]) -> Vec<f64> {
    if g.is_empty() || coeffs.is_empty() {
        return Vec::new();
    }
    let z = g.len() - 1;
    let mut out = vec![0.0; g.len()];
    for (j, gj) in g.iter().enumerate() {
        out[j] += coeffs[0] * gj;
    }
    let m = coeffs.len() - 1;
    if m == 0 {
        return out;
    }
    let s1 = enumerate_shifted(SeriesKind::S1, m, z);
    let s2 = enumerate_shifted(SeriesKind::S2, m, z);
    for t in s1.iter().chain(&s2) {
        if t.i > z || g[t.i] == 0.0 {
            continue;
        }
        out[t.j] += coeffs[t.h] * pow0(r, t.h + t.j - t.i) * derivative_weight(t.h, t.i, t.j) * g[t.i];
    }
    out
}

/// Band of the triangular system for one root and solution degree `degree`:
/// row `j` (`0..degree`) holds the weights of `G_i` (`i = 0..=degree`) in the
/// coefficient of `t^j` of `Σ_h a_h d^h/dt^h`. The diagonal, which carries the
/// characteristic polynomial at the root, is left at zero.
pub fn triangular_band(system: &DdeSystem, root: f64, degree: usize) -> Vec<Vec<f64>> {
    let a = system.a();
    let m = system.order();
    let mut band = vec![vec![0.0; degree + 1]; degree];
    let s1 = enumerate_shifted(SeriesKind::S1, m, degree);
    let s2 = enumerate_shifted(SeriesKind::S2, m, degree);
    for t in s1.iter().chain(&s2) {
        if t.i > degree || t.i == t.j {
            continue;
        }
        band[t.j][t.i] += a[t.h] * pow0(root, t.h + t.j - t.i) * derivative_weight(t.h, t.i, t.j);
    }
    band
}

/// Coefficients `G_{p,i}` for `i >= 1` of one new segment, per system root;
/// entry `0` of each row is a placeholder for the yet unknown constant.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPart {
    roots: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

impl PolynomialPart {
    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    /// Row per root; `coeffs()[p][i]` is `G_{p,i}`, with `coeffs()[p][0] = 0`.
    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    /// Number of coefficient-matching equations, `Σ_p degree_p`; it equals the
    /// number of unknowns with `i >= 1`.
    pub fn equation_count(&self) -> usize {
        self.coeffs.iter().map(|c| c.len() - 1).sum()
    }

    pub fn to_exp_poly(&self) -> ExpPoly {
        ExpPoly::from_terms(self.roots.iter().copied().zip(self.coeffs.iter().cloned()))
    }
}

fn check_roots(system: &DdeSystem, f: &ExpPoly) -> Result<()> {
    match f.roots().find(|r| system.root_index(*r).is_none()) {
        Some(root) => Err(Error::RootNotInSystem { root }),
        None => Ok(()),
    }
}

/// Solves the coefficient-matching equations of one segment for `G_{p,i}`, `i >= 1`.
///
/// `prev_y` and `prev_f` are the delayed solution and setpoint segments in the
/// same local time as the new segment.
pub fn advance_polynomial_part(
    system: &DdeSystem,
    prev_y: &ExpPoly,
    prev_f: &ExpPoly,
) -> Result<PolynomialPart> {
    check_roots(system, prev_y)?;
    check_roots(system, prev_f)?;
    let a = system.a();
    let mut coeffs = Vec::with_capacity(system.order());
    for &r in system.roots() {
        let y_rhs = apply_operator(system.b(), r, prev_y.coeffs_at(r));
        let f_rhs = apply_operator(system.c(), r, prev_f.coeffs_at(r));
        let mut rhs = vec![0.0; y_rhs.len().max(f_rhs.len())];
        for (j, v) in y_rhs.iter().enumerate() {
            rhs[j] -= v;
        }
        for (j, v) in f_rhs.iter().enumerate() {
            rhs[j] += v;
        }
        while rhs.last() == Some(&0.0) {
            rhs.pop();
        }
        let degree = rhs.len();
        if degree >= MAX_DEGREE {
            return Err(Error::DegreeOutOfRange { degree, max: MAX_DEGREE - 1 });
        }
        let mut g = vec![0.0; degree + 1];
        if degree > 0 {
            let slope: f64 = (1..a.len()).map(|h| h as f64 * a[h] * pow0(r, h - 1)).sum();
            if slope.abs() < LEADING_TOL {
                return Err(Error::DegenerateLeadingCoefficient { root: r, value: slope });
            }
            let band = triangular_band(system, r, degree);
            for j in (0..degree).rev() {
                let known: f64 = (j + 2..=degree).map(|i| band[j][i] * g[i]).sum();
                g[j + 1] = (rhs[j] - known) / band[j][j + 1];
            }
        }
        coeffs.push(g);
    }
    Ok(PolynomialPart { roots: system.roots().to_vec(), coeffs })
}

/// Fixes the constants `G_{p,0}` so that the new segment and its first
/// `m_a - 1` derivatives match `boundary` at local time `knot`.
pub fn advance_constant_part(
    system: &DdeSystem,
    partial: &PolynomialPart,
    boundary: &[f64],
    knot: f64,
) -> Result<ExpPoly> {
    let m = system.order();
    if boundary.len() != m {
        return Err(Error::InvalidArgument(format!(
            "expected {m} boundary values, got {}",
            boundary.len()
        )));
    }
    let poly = partial.to_exp_poly();
    let mut rhs = Vec::with_capacity(m);
    for (h, target) in boundary.iter().enumerate() {
        rhs.push(target - poly.derivative_at(h, knot)?);
    }
    let roots = system.roots().to_vec();
    let scales = roots.iter().map(|r| (r * knot).exp()).collect();
    let constants = solve_elimination(&VandermondeSystem::new(roots.clone(), scales, rhs)?)?;
    Ok(ExpPoly::from_terms(
        roots
            .into_iter()
            .zip(partial.coeffs.iter().zip(constants))
            .map(|(r, (g, g0))| {
                let mut g = g.clone();
                g[0] = g0;
                (r, g)
            }),
    ))
}

fn boundary_values(seg: &ExpPoly, order: usize, at: f64) -> Result<Vec<f64>> {
    (0..order).map(|h| seg.derivative_at(h, at)).collect()
}

/// Solution on `[-1, N]`: the history and `N` solved intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSolution {
    knots: Vec<f64>,
    roots: Vec<f64>,
    order: usize,
    initial: Vec<ExpPoly>,
    intervals: Vec<Vec<ExpPoly>>,
    forcing: Vec<Vec<ExpPoly>>,
}

/// One `(p, i, G_{n,k,p,i})` entry of a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientRow {
    /// 1-based root index in [`DdeSystem::roots`] order.
    pub p: usize,
    pub root: f64,
    pub i: usize,
    pub value: f64,
}

/// A solved piece with its global time span.
#[derive(Debug, Clone, Copy)]
pub struct Piece<'a> {
    pub n: usize,
    pub k: usize,
    pub start: f64,
    pub end: f64,
    /// Local-time origin: global `t = origin + t_n`.
    pub origin: f64,
    pub segment: &'a ExpPoly,
}

/// Largest junction mismatch over `y` and its first `m_a - 1` derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionDefect {
    pub n: usize,
    pub k: usize,
    pub t: f64,
    pub gap: f64,
}

impl PiecewiseSolution {
    /// Assembles a solution from explicit segments. Used to analyse trajectories
    /// obtained elsewhere; no equation is checked.
    pub fn from_segments(
        system: &DdeSystem,
        knots: Vec<f64>,
        initial: Vec<ExpPoly>,
        intervals: Vec<Vec<ExpPoly>>,
    ) -> Result<Self> {
        validate_knots(&knots)?;
        let q = knots.len() - 1;
        if initial.len() != q || intervals.iter().any(|row| row.len() != q) || intervals.is_empty() {
            return Err(Error::InvalidArgument("segment counts do not match knots".into()));
        }
        let forcing = vec![vec![ExpPoly::zero(); q]; intervals.len()];
        Ok(Self {
            knots,
            roots: system.roots().to_vec(),
            order: system.order(),
            initial,
            intervals,
            forcing,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    /// Number of solved intervals `N`.
    pub fn n_intervals(&self) -> usize {
        self.intervals.len()
    }

    /// `y_{n,k}` in local time; `n = 0` is the history. `k` is 1-based.
    pub fn segment(&self, n: usize, k: usize) -> Option<&ExpPoly> {
        let row = if n == 0 { Some(&self.initial) } else { self.intervals.get(n - 1) }?;
        row.get(k.checked_sub(1)?)
    }

    /// Setpoint segment `f_{n,k}` that drove interval `n + 1`.
    pub fn forcing_segment(&self, n: usize, k: usize) -> Option<&ExpPoly> {
        self.forcing.get(n)?.get(k.checked_sub(1)?)
    }

    /// Every solved piece of intervals `1..=N`, in time order.
    pub fn pieces(&self) -> impl Iterator<Item = Piece<'_>> {
        self.intervals.iter().enumerate().flat_map(move |(n0, row)| {
            let origin = n0 as f64;
            row.iter().enumerate().map(move |(k0, segment)| Piece {
                n: n0 + 1,
                k: k0 + 1,
                start: origin + self.knots[k0],
                end: origin + self.knots[k0 + 1],
                origin,
                segment,
            })
        })
    }

    fn locate(&self, t: f64) -> Option<(usize, usize, f64)> {
        let n_max = self.n_intervals();
        if !(t >= -1.0 && t <= n_max as f64) {
            return None;
        }
        let n = ((t.floor() + 1.0) as usize).min(n_max);
        let local = t - (n as f64 - 1.0);
        Some((n, segment_index(&self.knots, local) + 1, local))
    }

    /// `y(t)` for `t ∈ [-1, N]`; `None` outside.
    pub fn value(&self, t: f64) -> Option<f64> {
        let (n, k, s) = self.locate(t)?;
        Some(self.segment(n, k)?.evaluate(s))
    }

    /// `y^{(h)}(t)`, right-sided at junctions except at `t = N`.
    pub fn derivative_value(&self, t: f64, h: usize) -> Option<f64> {
        let (n, k, s) = self.locate(t)?;
        self.segment(n, k)?.derivative_at(h, s).ok()
    }

    /// Coefficient table of `y_{n,k}`, one row per stored `(p, i)`.
    pub fn coefficient_rows(&self, n: usize, k: usize) -> Option<Vec<CoefficientRow>> {
        let seg = self.segment(n, k)?;
        let mut rows = Vec::new();
        for (p0, &root) in self.roots.iter().enumerate() {
            for (i, &value) in seg.coeffs_at(root).iter().enumerate() {
                rows.push(CoefficientRow { p: p0 + 1, root, i, value });
            }
        }
        Some(rows)
    }

    /// Mismatch at every junction: between consecutive sub-intervals and between
    /// the end of one interval and the start of the next (including the history).
    pub fn junction_defects(&self) -> Result<Vec<JunctionDefect>> {
        let q = self.knots.len() - 1;
        let mut out = Vec::new();
        for n in 1..=self.n_intervals() {
            for k in 1..=q {
                let (left, at_left) = if k == 1 {
                    (self.segment(n - 1, q).unwrap(), 1.0)
                } else {
                    (self.segment(n, k - 1).unwrap(), self.knots[k - 1])
                };
                let right = self.segment(n, k).unwrap();
                let at_right = self.knots[k - 1];
                let mut gap: f64 = 0.0;
                for h in 0..self.order {
                    gap = gap.max((left.derivative_at(h, at_left)? - right.derivative_at(h, at_right)?).abs());
                }
                out.push(JunctionDefect { n, k, t: n as f64 - 1.0 + at_right, gap });
            }
        }
        Ok(out)
    }

    /// Worst junction mismatch; fails when it exceeds [`CONTINUITY_TOL`].
    pub fn check_continuity(&self) -> Result<f64> {
        let worst = self
            .junction_defects()?
            .into_iter()
            .max_by(|a, b| a.gap.total_cmp(&b.gap));
        match worst {
            Some(d) if d.gap > CONTINUITY_TOL => Err(Error::InvalidArgument(format!(
                "continuity broken at t = {} (n = {}, k = {}): gap {:e}",
                d.t, d.n, d.k, d.gap
            ))),
            Some(d) => Ok(d.gap),
            None => Ok(0.0),
        }
    }

    /// Left and right sides of the delay equation for segment `(n, k)` at local
    /// time `s`, plus the sum of magnitudes of all their terms.
    pub fn equation_sides(&self, system: &DdeSystem, n: usize, k: usize, s: f64) -> Result<(f64, f64, f64)> {
        let seg = self
            .segment(n, k)
            .filter(|_| n >= 1)
            .ok_or_else(|| Error::InvalidArgument(format!("no solved segment ({n}, {k})")))?;
        let prev = self.segment(n - 1, k).unwrap();
        let f = self.forcing_segment(n - 1, k).unwrap();
        let (mut lhs, mut rhs, mut scale) = (0.0, 0.0, 0.0);
        for (h, a) in system.a().iter().enumerate().skip(1) {
            let v = a * seg.derivative_at(h, s)?;
            lhs += v;
            scale += v.abs();
        }
        for (h, (b, c)) in system.b().iter().zip(system.c()).enumerate() {
            let vy = -b * prev.derivative_at(h, s)?;
            let vf = c * f.derivative_at(h, s)?;
            rhs += vy + vf;
            scale += vy.abs() + vf.abs();
        }
        Ok((lhs, rhs, scale))
    }
}

/// Runs the method of steps over `n_intervals` delay intervals.
///
/// The knot sets of `init` and `forcing` are merged; interval `n` uses the
/// history (for `n = 1`) or the previous interval as delayed solution, and
/// `f_{n-1}` as delayed setpoint.
pub fn solve(
    system: &DdeSystem,
    init: &InitialCondition,
    forcing: &ForcingTerm,
    n_intervals: usize,
) -> Result<PiecewiseSolution> {
    if n_intervals == 0 {
        return Err(Error::InvalidArgument("at least one interval is required".into()));
    }
    let knots = merge_knots(init.knots(), forcing.knots());
    let init = init.refine(&knots)?;
    let forcing = forcing.refine(&knots)?;
    let q = knots.len() - 1;

    let mut start_degree = 0;
    for seg in init.segments() {
        check_roots(system, seg)?;
        start_degree = start_degree.max(seg.max_degree().unwrap_or(0));
    }
    for n in 0..n_intervals {
        for seg in forcing.interval(n) {
            check_roots(system, seg).map_err(|e| Error::InvalidForcing(e.to_string()))?;
            start_degree = start_degree.max(seg.max_degree().unwrap_or(0));
        }
    }
    if start_degree + n_intervals >= MAX_DEGREE {
        return Err(Error::DegreeOutOfRange {
            degree: start_degree + n_intervals,
            max: MAX_DEGREE - 1,
        });
    }

    let m = system.order();
    let mut intervals: Vec<Vec<ExpPoly>> = Vec::with_capacity(n_intervals);
    let mut used_forcing = Vec::with_capacity(n_intervals);
    for n in 1..=n_intervals {
        let prev = if n == 1 { init.segments() } else { &intervals[n - 2][..] };
        let f_prev = forcing.interval(n - 1);
        let mut row: Vec<ExpPoly> = Vec::with_capacity(q);
        for k in 0..q {
            let partial = advance_polynomial_part(system, &prev[k], &f_prev[k])?;
            let boundary = if k == 0 {
                boundary_values(&prev[q - 1], m, 1.0)?
            } else {
                boundary_values(&row[k - 1], m, knots[k])?
            };
            row.push(advance_constant_part(system, &partial, &boundary, knots[k])?);
        }
        used_forcing.push(f_prev.to_vec());
        intervals.push(row);
    }
    Ok(PiecewiseSolution {
        knots,
        roots: system.roots().to_vec(),
        order: m,
        initial: init.segments().to_vec(),
        intervals,
        forcing: used_forcing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_loop::{build_closed_loop, PidParams, PlantModel};
    use approx::assert_relative_eq;

    fn first_order_loop(tp: f64, k: f64, ki: f64, kd: f64) -> DdeSystem {
        let pid = PidParams::new(k, ki, kd).unwrap();
        build_closed_loop(&pid, &PlantModel::first_order(1.0, tp).unwrap()).unwrap()
    }

    #[test]
    fn first_interval_of_setpoint_change_is_flat() {
        let sys = first_order_loop(1.0, 0.0, 0.5, 0.0);
        let sol = solve(&sys, &InitialCondition::steady(1.0), &ForcingTerm::steps(1.0, &[(0.0, 0.0)]).unwrap(), 1).unwrap();
        assert_eq!(sol.segment(1, 1).unwrap(), &ExpPoly::constant(1.0));
    }

    #[test]
    fn second_interval_closed_form() {
        let sys = first_order_loop(1.0, 0.0, 0.5, 0.0);
        let sol = solve(&sys, &InitialCondition::steady(1.0), &ForcingTerm::steps(1.0, &[(0.0, 0.0)]).unwrap(), 2).unwrap();
        let seg = sol.segment(2, 1).unwrap();
        assert_relative_eq!(seg.coeffs_at(0.0)[0], 1.5, epsilon = 1e-14);
        assert_relative_eq!(seg.coeffs_at(0.0)[1], -0.5, epsilon = 1e-14);
        assert_eq!(seg.coeffs_at(-1.0).len(), 1);
        assert_relative_eq!(seg.coeffs_at(-1.0)[0], -0.5, epsilon = 1e-14);
    }

    #[test]
    fn polynomial_part_top_coefficient_at_null_root() {
        let (tp, b0) = (0.8, 0.3);
        let sys = DdeSystem::new(vec![1.0, tp], vec![b0, 0.2, 0.1]).unwrap();
        let prev = ExpPoly::term(0.0, vec![0.4, -1.1, 0.7]);
        let part = advance_polynomial_part(&sys, &prev, &ExpPoly::zero()).unwrap();
        let g = &part.coeffs()[0];
        assert_eq!(g.len(), 4);
        assert_relative_eq!(g[3], -b0 / 3.0 * 0.7, max_relative = 1e-14);
    }

    #[test]
    fn homogeneous_right_side_gives_no_polynomial_part() {
        let sys = first_order_loop(2.0, 1.0, 0.4, 0.0);
        let part = advance_polynomial_part(&sys, &ExpPoly::zero(), &ExpPoly::zero()).unwrap();
        assert!(part.coeffs().iter().all(|g| g == &vec![0.0]));
        assert_eq!(part.equation_count(), 0);
        let seg = advance_constant_part(&sys, &part, &[0.0, 0.0], 0.0).unwrap();
        assert!(seg.is_zero());
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let sys = DdeSystem::new(vec![1.0, 3.0, 2.0], vec![0.5, 0.2]).unwrap();
        let sol = solve(&sys, &InitialCondition::steady(0.0), &ForcingTerm::zero(), 4).unwrap();
        assert!(sol.pieces().all(|p| p.segment.is_zero()));
    }

    #[test]
    fn band_is_upper_triangular_with_bandwidth_order() {
        let sys = DdeSystem::new(vec![1.0, 3.0, 2.0], vec![0.5]).unwrap();
        for &r in sys.roots() {
            let band = triangular_band(&sys, r, 6);
            for (j, row) in band.iter().enumerate() {
                for (i, v) in row.iter().enumerate() {
                    if i <= j || i > j + sys.order() {
                        assert_eq!(*v, 0.0, "j={j} i={i}");
                    }
                }
                assert!(row[j + 1] != 0.0);
            }
        }
    }

    #[test]
    fn foreign_roots_are_rejected() {
        let sys = first_order_loop(1.0, 0.0, 0.5, 0.0);
        let bad = ExpPoly::term(-3.0, vec![1.0]);
        assert!(matches!(
            advance_polynomial_part(&sys, &bad, &ExpPoly::zero()),
            Err(Error::RootNotInSystem { .. })
        ));
    }

    #[test]
    fn degree_bookkeeping() {
        let sys = first_order_loop(1.0, 0.0, 0.5, 0.0);
        let init = InitialCondition::steady(1.0).with_degree_offsets(vec![vec![-1, -2]]);
        assert_eq!(degrees(&init, &sys, 1), vec![vec![0, -1]]);
        let plain = InitialCondition::steady(1.0);
        assert_eq!(degrees(&plain, &sys, 3), vec![vec![3, 2]]);
    }

    #[test]
    fn knots_are_validated_and_merged() {
        assert!(InitialCondition::new(vec![0.0, 0.5], vec![ExpPoly::zero()]).is_err());
        assert!(InitialCondition::new(vec![0.0, 0.5, 0.5, 1.0], vec![ExpPoly::zero(); 3]).is_err());
        assert_eq!(merge_knots(&[0.0, 0.5, 1.0], &[0.0, 0.25, 0.5, 1.0]), vec![0.0, 0.25, 0.5, 1.0]);
    }

    #[test]
    fn fractional_setpoint_steps_become_knots() {
        let f = ForcingTerm::steps(0.0, &[(0.5, 1.0), (2.25, -1.0)]).unwrap();
        assert_eq!(f.knots(), &[0.0, 0.25, 0.5, 1.0]);
        // f_1 covers [0, 1]: zero before 0.5, one after.
        let row = f.interval(1);
        assert_eq!(row[1], ExpPoly::zero());
        assert_eq!(row[2], ExpPoly::constant(1.0));
        // f_3 covers [2, 3]
        assert_eq!(f.interval(3)[0], ExpPoly::constant(1.0));
        assert_eq!(f.interval(3)[1], ExpPoly::constant(-1.0));
        assert_eq!(f.interval(40)[0], ExpPoly::constant(-1.0));
    }

    #[test]
    fn solution_lookup_by_global_time() {
        let sys = first_order_loop(1.0, 0.0, 0.5, 0.0);
        let sol = solve(&sys, &InitialCondition::steady(1.0), &ForcingTerm::steps(1.0, &[(0.0, 0.0)]).unwrap(), 3).unwrap();
        assert_eq!(sol.value(-0.5), Some(1.0));
        assert_eq!(sol.value(0.5), Some(1.0));
        let expected = 1.5 - 0.25 - 0.5 * (-0.5f64).exp();
        assert_relative_eq!(sol.value(1.5).unwrap(), expected, epsilon = 1e-14);
        assert!(sol.value(3.0).is_some());
        assert!(sol.value(3.1).is_none());
        assert!(sol.check_continuity().unwrap() < CONTINUITY_TOL);
    }
}
