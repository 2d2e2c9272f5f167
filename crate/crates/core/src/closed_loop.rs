//! Closed loop of an ideal parallel PID controller `k + k_i/s + k_d s` around a
//! plant `e^{-s} E(s)/A(s)`, with time normalized to the transport delay.
//!
//! Clearing denominators gives the neutral delay equation
//!
//! ```text
//! Σ_{h=1}^{m_a} a_h y^{(h)}(t) = -Σ_{h=0}^{m_b} b_h y^{(h)}(t-1) + Σ_{h=0}^{m_b} c_h f^{(h)}(t-1)
//! ```
//!
//! with `a(s) = s A(s)`, `b(s) = c(s) = (k_i + k s + k_d s^2) E(s)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exp_poly::ROOT_DISTINCT_TOL;

/// Highest supported characteristic order `m_a`.
pub const MAX_ORDER: usize = 12;

const IMAG_TOL: f64 = 1e-9;

/// Gains of `k + k_i/s + k_d s` in delay-normalized time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidParams {
    pub k: f64,
    pub k_i: f64,
    pub k_d: f64,
}

impl PidParams {
    pub fn new(k: f64, k_i: f64, k_d: f64) -> Result<Self> {
        if ![k, k_i, k_d].iter().all(|g| g.is_finite()) {
            return Err(Error::InvalidGains("gains must be finite".into()));
        }
        if k == 0.0 && k_i == 0.0 && k_d == 0.0 {
            return Err(Error::InvalidGains("at least one gain must be nonzero".into()));
        }
        Ok(Self { k, k_i, k_d })
    }

    /// Converts gains tuned against physical time with transport delay `delay`
    /// into delay-normalized gains (`k_i ← k_i·L`, `k_d ← k_d/L`).
    pub fn normalized(self, delay: f64) -> Result<Self> {
        if !(delay.is_finite() && delay > 0.0) {
            return Err(Error::InvalidArgument(format!("delay must be positive, got {delay}")));
        }
        Self::new(self.k, self.k_i * delay, self.k_d / delay)
    }

    /// Controller numerator `k_i + k s + k_d s^2`, ascending powers.
    pub fn numerator(&self) -> [f64; 3] {
        [self.k_i, self.k, self.k_d]
    }
}

/// Delay-free part `E(s)/A(s)` of the plant; the delay itself is fixed to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    numerator: Vec<f64>,
    denominator: Vec<f64>,
}

impl PlantModel {
    /// Coefficients in ascending powers of `s`.
    pub fn new(numerator: Vec<f64>, denominator: Vec<f64>) -> Result<Self> {
        if numerator.iter().chain(&denominator).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("plant coefficients must be finite".into()));
        }
        let numerator = trim(numerator);
        if numerator.is_empty() {
            return Err(Error::ZeroPolynomial { what: "plant numerator" });
        }
        match denominator.last() {
            None => return Err(Error::ZeroPolynomial { what: "plant denominator" }),
            Some(0.0) => {
                return Err(Error::InvalidArgument(
                    "leading plant denominator coefficient must be nonzero".into(),
                ))
            }
            _ => {}
        }
        if numerator.len() > denominator.len() {
            return Err(Error::InvalidArgument(format!(
                "plant numerator degree {} exceeds denominator degree {}",
                numerator.len() - 1,
                denominator.len() - 1
            )));
        }
        Ok(Self { numerator, denominator })
    }

    /// First-order lag `1 / (1 + t_p s)` scaled by `gain`.
    pub fn first_order(gain: f64, time_constant: f64) -> Result<Self> {
        Self::new(vec![gain], vec![1.0, time_constant])
    }

    /// Rescales physical-time coefficients to delay-normalized time (`s = s'/L`).
    pub fn normalized(&self, delay: f64) -> Result<Self> {
        if !(delay.is_finite() && delay > 0.0) {
            return Err(Error::InvalidArgument(format!("delay must be positive, got {delay}")));
        }
        let rescale = |p: &[f64]| -> Vec<f64> {
            p.iter().enumerate().map(|(h, v)| v / delay.powi(h as i32)).collect()
        };
        Self::new(rescale(&self.numerator), rescale(&self.denominator))
    }

    pub fn numerator(&self) -> &[f64] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[f64] {
        &self.denominator
    }
}

fn trim(mut p: Vec<f64>) -> Vec<f64> {
    while p.last() == Some(&0.0) {
        p.pop();
    }
    p
}

/// Coefficient convolution, ascending powers.
pub fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    if p.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Horner evaluation, ascending powers.
pub fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// The neutral delay equation of the closed loop together with its
/// characteristic roots.
#[derive(Debug, Clone, PartialEq)]
pub struct DdeSystem {
    /// `a_h` indexed by `h`; `a[0]` is always zero.
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    roots: Vec<f64>,
}

impl DdeSystem {
    /// `a` lists `a_1..a_{m_a}`; `b` lists `b_0..b_{m_b}`; `c` is taken equal to `b`.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let a = trim(a);
        let b = trim(b);
        if a.is_empty() {
            return Err(Error::ZeroPolynomial { what: "characteristic polynomial" });
        }
        if b.is_empty() {
            return Err(Error::ZeroPolynomial { what: "delayed polynomial" });
        }
        if a.len() > MAX_ORDER {
            return Err(Error::OrderOverflow { order: a.len(), max: MAX_ORDER });
        }
        if b.len() - 1 > a.len() {
            return Err(Error::AdvancedType { delayed: b.len() - 1, order: a.len() });
        }
        let mut roots = characteristic_roots(&a)?;
        // Null root first, the rest ascending.
        let zero = roots.iter().position(|r| *r == 0.0).expect("null root is always present");
        let z = roots.remove(zero);
        roots.insert(0, z);
        let mut full = Vec::with_capacity(a.len() + 1);
        full.push(0.0);
        full.extend(a);
        Ok(Self { a: full, c: b.clone(), b, roots })
    }

    /// `m_a`.
    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    /// `m_b` (= `m_c`).
    pub fn delayed_order(&self) -> usize {
        self.b.len() - 1
    }

    /// `a_h` indexed by `h = 0..=m_a`, with `a_0 = 0`.
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Characteristic roots, null root first and the remainder ascending.
    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    /// Index of `root` in [`Self::roots`], within [`ROOT_DISTINCT_TOL`].
    pub fn root_index(&self, root: f64) -> Option<usize> {
        self.roots.iter().position(|r| (r - root).abs() <= ROOT_DISTINCT_TOL)
    }

    /// `Σ_h a_h r^h`.
    pub fn characteristic(&self, r: f64) -> f64 {
        poly_eval(&self.a, r)
    }

    /// Whether the highest derivative also appears delayed (`m_b = m_a`).
    pub fn is_neutral(&self) -> bool {
        self.delayed_order() == self.order()
    }
}

/// Closed loop of `pid` around `plant`.
pub fn build_closed_loop(pid: &PidParams, plant: &PlantModel) -> Result<DdeSystem> {
    let b = trim(poly_mul(&pid.numerator(), plant.numerator()));
    if b.is_empty() {
        return Err(Error::ZeroPolynomial { what: "loop numerator" });
    }
    DdeSystem::new(plant.denominator().to_vec(), b)
}

/// All roots of `Σ_{h=1}^{m_a} a_h r^h` (`a` lists `a_1..a_{m_a}`), ascending.
///
/// The null root is factored out exactly; the deflated polynomial is solved in
/// closed form up to degree two and through companion-matrix eigenvalues
/// beyond, followed by one Newton step on the full polynomial.
pub fn characteristic_roots(a: &[f64]) -> Result<Vec<f64>> {
    let a = trim(a.to_vec());
    if a.is_empty() {
        return Err(Error::ZeroPolynomial { what: "characteristic polynomial" });
    }
    if a.len() > MAX_ORDER {
        return Err(Error::OrderOverflow { order: a.len(), max: MAX_ORDER });
    }
    if a[0] == 0.0 {
        return Err(Error::RootsNotRealSimple {
            reason: "the null root is multiple (a_1 = 0)".into(),
        });
    }
    // a now holds the deflated polynomial q(r) = Σ a_{h} r^{h-1}.
    let q = &a;
    let mut roots = match q.len() - 1 {
        0 => Vec::new(),
        1 => vec![-q[0] / q[1]],
        2 => quadratic_roots(q[0], q[1], q[2])?,
        _ => companion_roots(q)?,
    };
    let mut full = vec![0.0];
    full.extend_from_slice(q);
    let deriv: Vec<f64> = full.iter().enumerate().skip(1).map(|(h, c)| h as f64 * c).collect();
    for r in roots.iter_mut() {
        let d = poly_eval(&deriv, *r);
        if d != 0.0 {
            *r -= poly_eval(&full, *r) / d;
        }
    }
    roots.push(0.0);
    roots.sort_by(f64::total_cmp);
    if let Some(w) = roots.windows(2).find(|w| (w[1] - w[0]).abs() <= ROOT_DISTINCT_TOL) {
        return Err(Error::RootsNotRealSimple {
            reason: format!("roots {} and {} coincide", w[0], w[1]),
        });
    }
    Ok(roots)
}

fn quadratic_roots(c0: f64, c1: f64, c2: f64) -> Result<Vec<f64>> {
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        let imag = (-disc).sqrt() / (2.0 * c2.abs());
        if imag > IMAG_TOL {
            return Err(Error::RootsNotRealSimple {
                reason: format!("complex pair with imaginary part {imag:e}"),
            });
        }
    }
    let sq = disc.max(0.0).sqrt();
    let s = -0.5 * (c1 + c1.signum() * sq);
    let s = if s == 0.0 { -0.5 * sq } else { s };
    Ok(vec![s / c2, c0 / s])
}

fn companion_roots(q: &[f64]) -> Result<Vec<f64>> {
    let n = q.len() - 1;
    let lead = q[n];
    let companion = DMatrix::from_fn(n, n, |i, j| {
        if i == 0 {
            -q[n - 1 - j] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| {
            if z.im.abs() > IMAG_TOL * z.re.abs().max(1.0) {
                Err(Error::RootsNotRealSimple {
                    reason: format!("complex root {} {:+}i", z.re, z.im),
                })
            } else {
                Ok(z.re)
            }
        })
        .collect()
}
