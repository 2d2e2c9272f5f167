//! Column-scaled Vandermonde systems `Σ_j d_j r_j^{i-1} x_j = Z_i`, `i = 1..m`.
//!
//! Two independent solvers are provided. [`solve_cramer`] applies Cramer's rule
//! with every minor expanded by Laplace along the split between the rows above
//! and below the deleted one, so each minor becomes a signed sum of products of
//! two smaller Vandermonde determinants. [`solve_elimination`] is plain
//! partial-pivoted Gaussian elimination on the explicit matrix.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::exp_poly::{pow0, ROOT_DISTINCT_TOL};

/// Largest order handled by [`solve_cramer`]; the subset enumeration grows combinatorially.
pub const CRAMER_MAX_ORDER: usize = 8;


#[derive(Debug, Clone, PartialEq)]
pub struct VandermondeSystem {
    nodes: Vec<f64>,
    scales: Vec<f64>,
    rhs: Vec<f64>,
}

impl VandermondeSystem {
    pub fn new(nodes: Vec<f64>, scales: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        let m = nodes.len();
        if m == 0 || scales.len() != m || rhs.len() != m {
            return Err(Error::InvalidArgument(format!(
                "vandermonde system needs equal non-zero lengths, got nodes={m} scales={} rhs={}",
                scales.len(),
                rhs.len()
            )));
        }
        if nodes.iter().chain(&scales).chain(&rhs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite vandermonde entry".into()));
        }
        if let Some((a, b)) = nodes
            .iter()
            .tuple_combinations()
            .find(|(a, b)| (*a - *b).abs() <= ROOT_DISTINCT_TOL)
        {
            return Err(Error::SingularSystem(format!("nodes {a} and {b} coincide")));
        }
        if let Some(j) = scales.iter().position(|d| *d == 0.0) {
            return Err(Error::SingularSystem(format!("column scale d_{} is zero", j + 1)));
        }
        Ok(Self { nodes, scales, rhs })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Explicit matrix, `[row][col] = d_col * r_col^row` (rows from power 0).
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.order())
            .map(|row| {
                self.nodes
                    .iter()
                    .zip(&self.scales)
                    .map(|(r, d)| d * pow0(*r, row))
                    .collect()
            })
            .collect()
    }
}

/// `Π_{a>b} (r_a - r_b) Π_j d_j`.
pub fn vandermonde_determinant(nodes: &[f64], scales: &[f64]) -> f64 {
    let diffs: f64 = nodes
        .iter()
        .enumerate()
        .flat_map(|(a, ra)| nodes[..a].iter().map(move |rb| ra - rb))
        .product();
    diffs * scales.iter().product::<f64>()
}

/// Minor of the deleted (row, column) pair, expanded by Laplace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceMinor {
    pub value: f64,
    /// Number of column subsets visited, `(m-1)! / ((i-1)! (m-i)!)`.
    pub subsets: usize,
}

type SignRule = fn(row: usize, upper_cols: &[usize]) -> i64;

fn laplace_sign(row: usize, upper_cols: &[usize]) -> i64 {
    let rows: usize = (1..row).sum();
    let cols: usize = upper_cols.iter().sum();
    (rows + cols) as i64
}

/// `U_{row,col}` (1-based) of the scaled Vandermonde matrix with `nodes`/`scales`.
///
/// The minor's upper block keeps rows `1..row-1` and the lower block rows
/// `row+1..m`. For every choice of `row-1` columns (numbered inside the minor)
/// the upper block is a plain scaled Vandermonde determinant and the lower
/// block one whose columns carry an extra `r^row`.
pub fn laplace_minor(nodes: &[f64], scales: &[f64], row: usize, col: usize) -> LaplaceMinor {
    laplace_minor_with(nodes, scales, row, col, laplace_sign)
}

fn laplace_minor_with(
    nodes: &[f64],
    scales: &[f64],
    row: usize,
    col: usize,
    sign: SignRule,
) -> LaplaceMinor {
    let m = nodes.len();
    assert!((1..=m).contains(&row) && (1..=m).contains(&col));
    // Original column indices kept in the minor, in order.
    let kept: Vec<usize> = (0..m).filter(|&c| c != col - 1).collect();
    let mut value = 0.0;
    let mut subsets = 0;
    for upper in (1..=m - 1).combinations(row - 1) {
        subsets += 1;
        let lower: Vec<usize> = (1..=m - 1).filter(|p| !upper.contains(p)).collect();
        let pick = |positions: &[usize]| -> (Vec<f64>, Vec<f64>) {
            positions
                .iter()
                .map(|&p| (nodes[kept[p - 1]], scales[kept[p - 1]]))
                .unzip()
        };
        let (ru, du) = pick(&upper);
        let (rl, dl) = pick(&lower);
        let dl: Vec<f64> = dl.iter().zip(&rl).map(|(d, r)| d * pow0(*r, row)).collect();
        let w = vandermonde_determinant(&ru, &du) * vandermonde_determinant(&rl, &dl);
        if sign(row, &upper) % 2 == 0 {
            value += w;
        } else {
            value -= w;
        }
    }
    LaplaceMinor { value, subsets }
}

/// Cramer's rule with Laplace-expanded minors. Orders above [`CRAMER_MAX_ORDER`]
/// are refused.
pub fn solve_cramer(sys: &VandermondeSystem) -> Result<Vec<f64>> {
    cramer_with(sys, laplace_sign)
}

/// [`solve_cramer`] with a deliberately wrong Laplace sign (row parity dropped).
/// Exists only so verification suites can prove they catch such a fault.
#[doc(hidden)]
pub fn solve_cramer_with_sign_fault(sys: &VandermondeSystem) -> Result<Vec<f64>> {
    cramer_with(sys, |_, upper| upper.iter().sum::<usize>() as i64)
}

fn cramer_with(sys: &VandermondeSystem, sign: SignRule) -> Result<Vec<f64>> {
    let m = sys.order();
    if m > CRAMER_MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "cramer route supports order <= {CRAMER_MAX_ORDER}, got {m}"
        )));
    }
    let det = vandermonde_determinant(&sys.nodes, &sys.scales);
    // Node separation and nonzero scales are checked on construction, so only
    // underflow or overflow can make the determinant unusable here.
    if det == 0.0 || !det.is_finite() {
        return Err(Error::SingularSystem(format!("determinant {det:e} is negligible")));
    }
    let x = (1..=m)
        .map(|col| {
            let num: f64 = (1..=m)
                .map(|row| {
                    let minor = laplace_minor_with(&sys.nodes, &sys.scales, row, col, sign).value;
                    let s = if (row + col) % 2 == 0 { 1.0 } else { -1.0 };
                    s * minor * sys.rhs[row - 1]
                })
                .sum();
            num / det
        })
        .collect();
    Ok(x)
}

/// Partial-pivoted Gaussian elimination on the explicit matrix.
pub fn solve_elimination(sys: &VandermondeSystem) -> Result<Vec<f64>> {
    let m = sys.order();
    let mut a = sys.matrix();
    let mut b = sys.rhs.clone();
    let max_abs = a
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    for col in 0..m {
        let pivot_row = (col..m)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        let pivot = a[pivot_row][col];
        if pivot.abs() <= f64::EPSILON * f64::EPSILON * max_abs || !pivot.is_finite() {
            return Err(Error::SingularSystem(format!(
                "pivot {pivot:e} in column {} is negligible",
                col + 1
            )));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..m {
            let factor = a[row][col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in col..m {
                a[row][c] -= factor * a[col][c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let tail: f64 = (row + 1..m).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}
