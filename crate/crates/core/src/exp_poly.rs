//! Exponential polynomials `Σ_p e^{r_p t} Σ_i g_{p,i} t^i`.
//!
//! Every solution segment, initial history and forcing term in this crate is
//! held in this form. The family is closed under differentiation, time shifts
//! and integration, and all three are carried out exactly on the coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Two roots closer than this (absolute) are the same root.
pub const ROOT_DISTINCT_TOL: f64 = 1e-9;

/// Largest polynomial degree (and derivative order) whose factorials fit in an `f64`.
pub const MAX_DEGREE: usize = 170;

fn factorial_table() -> &'static [f64; MAX_DEGREE + 1] {
    static TABLE: OnceLock<[f64; MAX_DEGREE + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [1.0; MAX_DEGREE + 1];
        for n in 1..=MAX_DEGREE {
            t[n] = t[n - 1] * n as f64;
        }
        t
    })
}

/// `n!` from the precomputed table. Panics when `n > MAX_DEGREE`.
pub fn factorial(n: usize) -> f64 {
    factorial_table()[n]
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let f = factorial_table();
    f[n] / (f[k] * f[n - k])
}

/// Weight of `e^{rt} t^j` in the `h`-th derivative of `e^{rt} t^i`, without the
/// power of `r`: `i! h! / (j! (i-j)! (h-i+j)!)`. Zero outside `max(0, i-h) <= j <= i`.
pub fn derivative_weight(h: usize, i: usize, j: usize) -> f64 {
    if j > i || h + j < i {
        return 0.0;
    }
    let f = factorial_table();
    (f[i] / f[j]) * (f[h] / (f[i - j] * f[h + j - i]))
}

/// `r^e` with `0^0 = 1`.
#[inline]
pub(crate) fn pow0(r: f64, e: usize) -> f64 {
    r.powi(e as i32)
}

/// One exponential mode `e^{rt} Σ_i g_i t^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpTerm {
    root: f64,
    coeffs: Vec<f64>,
}

impl ExpTerm {
    pub fn root(&self) -> f64 {
        self.root
    }

    /// Coefficients by ascending power. Never empty and never ends in an explicit zero.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn eval_poly(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &g| acc * t + g)
    }
}

/// A finite sum of polynomial-weighted exponentials in canonical form: terms sorted
/// by root, roots pairwise separated by more than [`ROOT_DISTINCT_TOL`], no
/// trailing zero coefficients, no empty terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpPoly {
    terms: Vec<ExpTerm>,
}

impl ExpPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        Self::term(0.0, vec![value])
    }

    /// The single mode `e^{root t} Σ_i coeffs[i] t^i`.
    pub fn term(root: f64, coeffs: Vec<f64>) -> Self {
        Self::from_terms([(root, coeffs)])
    }

    /// Builds a canonical value from arbitrary `(root, coeffs)` pairs, merging
    /// roots that lie within [`ROOT_DISTINCT_TOL`] of each other.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (f64, Vec<f64>)>,
    {
        let mut raw: Vec<(f64, Vec<f64>)> = terms.into_iter().collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, Vec<f64>)> = Vec::with_capacity(raw.len());
        for (root, coeffs) in raw {
            match merged.last_mut() {
                Some((r, acc)) if (root - *r).abs() <= ROOT_DISTINCT_TOL => {
                    if acc.len() < coeffs.len() {
                        acc.resize(coeffs.len(), 0.0);
                    }
                    for (a, c) in acc.iter_mut().zip(coeffs) {
                        *a += c;
                    }
                }
                _ => merged.push((root, coeffs)),
            }
        }
        let terms = merged
            .into_iter()
            .filter_map(|(root, mut coeffs)| {
                while coeffs.last() == Some(&0.0) {
                    coeffs.pop();
                }
                (!coeffs.is_empty()).then_some(ExpTerm { root, coeffs })
            })
            .collect();
        Self { terms }
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn roots(&self) -> impl Iterator<Item = f64> + '_ {
        self.terms.iter().map(|t| t.root)
    }

    fn find(&self, root: f64) -> Option<&ExpTerm> {
        self.terms
            .iter()
            .find(|t| (t.root - root).abs() <= ROOT_DISTINCT_TOL)
    }

    /// Coefficients attached to `root`, or an empty slice when the mode is absent.
    pub fn coeffs_at(&self, root: f64) -> &[f64] {
        self.find(root).map(|t| t.coeffs.as_slice()).unwrap_or(&[])
    }

    /// Polynomial degree attached to `root`; `None` when the mode is absent.
    pub fn degree_at(&self, root: f64) -> Option<usize> {
        self.find(root).map(ExpTerm::degree)
    }

    /// Largest polynomial degree over all modes.
    pub fn max_degree(&self) -> Option<usize> {
        self.terms.iter().map(ExpTerm::degree).max()
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| (term.root * t).exp() * term.eval_poly(t))
            .sum()
    }

    /// Exact `h`-th derivative, coefficient by coefficient:
    /// `d^h/dt^h e^{rt} t^i = e^{rt} Σ_j i! h! / (j! (i-j)! (h-i+j)!) r^{h-i+j} t^j`.
    pub fn derivative(&self, h: usize) -> Result<ExpPoly> {
        if h == 0 {
            return Err(Error::ZeroDerivativeOrder);
        }
        if h > MAX_DEGREE {
            return Err(Error::DegreeOutOfRange {
                degree: h,
                max: MAX_DEGREE,
            });
        }
        self.check_degree()?;
        let terms = self.terms.iter().map(|term| {
            let r = term.root;
            let mut out = vec![0.0; term.coeffs.len()];
            for (i, &g) in term.coeffs.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                for j in i.saturating_sub(h)..=i {
                    out[j] += derivative_weight(h, i, j) * pow0(r, h + j - i) * g;
                }
            }
            (r, out)
        });
        Ok(Self::from_terms(terms))
    }

    /// Value of the `h`-th derivative at `t`; `h = 0` is the value itself.
    pub fn derivative_at(&self, h: usize, t: f64) -> Result<f64> {
        if h == 0 {
            Ok(self.evaluate(t))
        } else {
            Ok(self.derivative(h)?.evaluate(t))
        }
    }

    pub fn scale(&self, s: f64) -> ExpPoly {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| (t.root, t.coeffs.iter().map(|g| g * s).collect())),
        )
    }

    /// Returns `g` with `g(t) = f(t + delta)`.
    pub fn shift_origin(&self, delta: f64) -> ExpPoly {
        let terms = self.terms.iter().map(|term| {
            let gain = (term.root * delta).exp();
            let n = term.coeffs.len();
            let mut out = vec![0.0; n];
            for (i, &g) in term.coeffs.iter().enumerate() {
                let mut dpow = 1.0;
                for j in (0..=i).rev() {
                    out[j] += g * binomial(i, j) * dpow * gain;
                    dpow *= delta;
                }
            }
            (term.root, out)
        });
        Self::from_terms(terms)
    }

    /// An antiderivative (no added constant).
    pub fn antiderivative(&self) -> Result<ExpPoly> {
        self.check_degree()?;
        let terms = self.terms.iter().map(|term| {
            let r = term.root;
            let g = &term.coeffs;
            if r.abs() <= ROOT_DISTINCT_TOL {
                let mut out = vec![0.0; g.len() + 1];
                for (i, &c) in g.iter().enumerate() {
                    out[i + 1] = c / (i + 1) as f64;
                }
                (r, out)
            } else {
                // ∫ e^{rt} p = e^{rt} Σ_k (-1)^k p^{(k)} / r^{k+1}
                let mut out = vec![0.0; g.len()];
                for (i, &c) in g.iter().enumerate() {
                    for k in 0..=i {
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        out[i - k] += sign * c * factorial(i) / factorial(i - k) / r.powi(k as i32 + 1);
                    }
                }
                (r, out)
            }
        });
        Ok(Self::from_terms(terms))
    }

    /// `∫_a^b f(t) dt`.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        let anti = self.antiderivative()?;
        Ok(anti.evaluate(b) - anti.evaluate(a))
    }

    fn check_degree(&self) -> Result<()> {
        match self.max_degree() {
            Some(d) if d >= MAX_DEGREE => Err(Error::DegreeOutOfRange {
                degree: d,
                max: MAX_DEGREE - 1,
            }),
            _ => Ok(()),
        }
    }
}

impl Add for &ExpPoly {
    type Output = ExpPoly;

    fn add(self, rhs: &ExpPoly) -> ExpPoly {
        ExpPoly::from_terms(
            self.terms
                .iter()
                .chain(rhs.terms.iter())
                .map(|t| (t.root, t.coeffs.clone())),
        )
    }
}

impl Add for ExpPoly {
    type Output = ExpPoly;

    fn add(self, rhs: ExpPoly) -> ExpPoly {
        &self + &rhs
    }
}

impl Neg for &ExpPoly {
    type Output = ExpPoly;

    fn neg(self) -> ExpPoly {
        self.scale(-1.0)
    }
}

impl Sub for &ExpPoly {
    type Output = ExpPoly;

    fn sub(self, rhs: &ExpPoly) -> ExpPoly {
        self + &(-rhs)
    }
}

impl Mul<f64> for &ExpPoly {
    type Output = ExpPoly;

    fn mul(self, s: f64) -> ExpPoly {
        self.scale(s)
    }
}

impl fmt::Display for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, term) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            if term.root != 0.0 {
                write!(f, "e^({}t)", term.root)?;
            }
            write!(f, "[")?;
            for (i, g) in term.coeffs.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{g}")?;
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}
