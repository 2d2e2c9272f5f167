//! Index sets of the triple sums that appear when a constant-coefficient
//! differential operator acts on `e^{rt} Σ_i g_i t^i`.
//!
//! A term `(h, i, j)` stands for the contribution of `g_i` through the `h`-th
//! derivative to the coefficient of `t^j`. Two families cover every such term:
//!
//! * `S1(m)`: `1 <= h <= m`, `0 <= i <= h-1`, `0 <= j <= i`
//! * `S2(m, z)`: `1 <= h <= m`, `h <= i <= z`, `i-h <= j <= i`
//!
//! Collecting coefficients of `t^j` needs the sums re-nested with `j`
//! outermost. [`enumerate_shifted`] produces that order from the closed-form
//! bounds and [`enumerate_original`] the natural one; the two must agree as
//! multisets, which the tests check exhaustively.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeriesKind {
    S1,
    S2,
}

/// `(h, i, j)`: derivative order, source power, output power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexTriple {
    pub h: usize,
    pub i: usize,
    pub j: usize,
}

impl IndexTriple {
    pub fn new(h: usize, i: usize, j: usize) -> Self {
        Self { h, i, j }
    }
}

fn range(lo: i64, hi: i64) -> impl Iterator<Item = i64> {
    lo..=hi
}

fn triple(h: i64, i: i64, j: i64) -> IndexTriple {
    debug_assert!(h >= 0 && i >= 0 && j >= 0);
    IndexTriple::new(h as usize, i as usize, j as usize)
}

/// All triples in the natural `h, i, j` nesting. `z` is ignored for `S1`.
pub fn enumerate_original(kind: SeriesKind, m: usize, z: usize) -> Vec<IndexTriple> {
    let (m, z) = (m as i64, z as i64);
    let mut out = Vec::new();
    for h in range(1, m) {
        let (ilo, ihi) = match kind {
            SeriesKind::S1 => (0, h - 1),
            SeriesKind::S2 => (h, z),
        };
        for i in range(ilo, ihi) {
            let jlo = match kind {
                SeriesKind::S1 => 0,
                SeriesKind::S2 => i - h,
            };
            for j in range(jlo, i) {
                out.push(triple(h, i, j));
            }
        }
    }
    out
}

/// All triples with `j` as the outermost index. `z` is ignored for `S1`.
///
/// `S2` is split at `H = floor(z/2)` into six pieces. In the three pieces
/// with `h <= H` the derivative order is additionally capped at `m`; without
/// the cap those pieces overrun `h <= m` whenever `m < floor(z/2)`.
pub fn enumerate_shifted(kind: SeriesKind, m: usize, z: usize) -> Vec<IndexTriple> {
    match kind {
        SeriesKind::S1 => shifted_s1(m as i64),
        SeriesKind::S2 => shifted_s2(m as i64, z as i64, true),
    }
}

fn shifted_s1(m: i64) -> Vec<IndexTriple> {
    let mut out = Vec::new();
    for j in range(0, m - 1) {
        for h in range(j + 1, m) {
            for i in range(j, h - 1) {
                out.push(triple(h, i, j));
            }
        }
    }
    out
}

fn shifted_s2(m: i64, z: i64, cap_low_h: bool) -> Vec<IndexTriple> {
    let half = z / 2;
    let cap = |h: i64| if cap_low_h { h.min(m) } else { h };
    let mut out = Vec::new();
    let mut piece = |js: std::ops::RangeInclusive<i64>,
                     hs: &dyn Fn(i64) -> (i64, i64),
                     is: &dyn Fn(i64, i64) -> (i64, i64)| {
        for j in js {
            let (hlo, hhi) = hs(j);
            for h in range(hlo, hhi) {
                let (ilo, ihi) = is(j, h);
                for i in range(ilo, ihi) {
                    out.push(triple(h, i, j));
                }
            }
        }
    };

    // S21
    piece(0..=half - 1, &|j| (j + 1, cap(half)), &|j, h| (h, h + j));
    // S22
    piece(1..=half, &|j| (1, cap(j)), &|j, h| (j, h + j));
    piece(half + 1..=z - 1, &|j| (1, cap(z - j)), &|j, h| (j, h + j));
    // S23
    piece(z + 1 - half..=z, &|j| (z - j + 1, cap(half)), &|j, _| (j, z));
    // S24
    piece(0..=z - 1 - m, &|_| (half + 1, m), &|j, h| (h, h + j));
    piece(z - m..=z - 2 - half, &|j| (half + 1, z - 1 - j), &|j, h| (h, h + j));
    // S25
    piece(z - m..=z - half - 1, &|j| (z - j, m), &|_, h| (h, z));
    piece(z - half..=half, &|_| (half + 1, m), &|_, h| (h, z));
    piece(half + 1..=m, &|j| (j, m), &|_, h| (h, z));
    // S26
    piece(half + 2..=m + 1, &|j| (half + 1, j - 1), &|j, _| (j, z));
    piece(m + 2..=z, &|_| (half + 1, m), &|j, _| (j, z));
    out
}

/// Groups triples by output power `j`, preserving enumeration order inside each group.
pub fn group_by_output_power(triples: &[IndexTriple]) -> BTreeMap<usize, Vec<IndexTriple>> {
    let mut groups: BTreeMap<usize, Vec<IndexTriple>> = BTreeMap::new();
    for t in triples {
        groups.entry(t.j).or_default().push(*t);
    }
    groups
}

/// Multiset view used to compare enumerations.
pub fn multiset(triples: &[IndexTriple]) -> BTreeMap<IndexTriple, usize> {
    let mut counts = BTreeMap::new();
    for t in triples {
        *counts.entry(*t).or_insert(0) += 1;
    }
    counts
}

/// `|S1(m)| = Σ_{h=1}^{m} h(h+1)/2`.
pub fn s1_cardinality(m: usize) -> usize {
    (1..=m).map(|h| h * (h + 1) / 2).sum()
}

/// Occupancy of the `(i, j)` plane for one derivative order `h`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TermsGrid {
    pub h: usize,
    cells: BTreeSet<(usize, usize)>,
}

impl TermsGrid {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.cells.contains(&(i, j))
    }

    /// Occupied `(i, j)` cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells.iter().copied()
    }

    pub fn max_i(&self) -> Option<usize> {
        self.cells.iter().map(|c| c.0).max()
    }

    pub fn max_j(&self) -> Option<usize> {
        self.cells.iter().map(|c| c.1).max()
    }
}

/// Grid of the triples whose derivative order equals `h`.
pub fn terms_grid(triples: &[IndexTriple], h: usize) -> TermsGrid {
    TermsGrid {
        h,
        cells: triples
            .iter()
            .filter(|t| t.h == h)
            .map(|t| (t.i, t.j))
            .collect(),
    }
}

impl fmt::Display for TermsGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (Some(imax), Some(jmax)) = (self.max_i(), self.max_j()) else {
            return writeln!(f, "(empty)");
        };
        write!(f, "i\\j")?;
        for j in 0..=jmax {
            write!(f, " {j:>2}")?;
        }
        writeln!(f)?;
        for i in 0..=imax {
            write!(f, "{i:>3}")?;
            for j in 0..=jmax {
                let mark = if self.contains(i, j) { "x" } else { "." };
                write!(f, " {mark:>2}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
