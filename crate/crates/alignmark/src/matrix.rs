//! Binary matrix representation, symmetry group operations, canonical forms,
//! pixel expansion and connectedness tests.
//!
//! Rows are stored as bit words (bit `j` of row `i` holds the pixel at row
//! `i`, column `j`), which is what the correlation kernels and the search
//! engine operate on directly.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum supported pixels per side. A row always fits one machine word
/// with headroom for shifted correlation lookups.
pub const MAX_SIDE: usize = 16;

/// Two-level M-by-N pattern with rows stored as bit words.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinaryMatrix {
    m: usize,
    n: usize,
    rows: Vec<u32>,
}

/// Reverse the low `n` bits of a row word.
#[inline]
pub fn flip_row_word(word: u32, n: usize) -> u32 {
    debug_assert!(n >= 1 && n <= MAX_SIDE);
    word.reverse_bits() >> (32 - n)
}

impl BinaryMatrix {
    /// Build a matrix from row words. Bits at or beyond column `n` must be zero.
    pub fn new(m: usize, n: usize, rows: Vec<u32>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument(
                "matrix dimensions must be at least 1x1".into(),
            ));
        }
        if m > MAX_SIDE || n > MAX_SIDE {
            return Err(Error::DimensionLimit(m, n));
        }
        if rows.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "expected {m} row words, got {}",
                rows.len()
            )));
        }
        let mask = row_mask(n);
        if let Some(bad) = rows.iter().position(|&r| r & !mask != 0) {
            return Err(Error::InvalidArgument(format!(
                "row {bad} has bits set beyond column {}",
                n - 1
            )));
        }
        Ok(Self { m, n, rows })
    }

    /// Build from nested 0/1 cell values; rows must all have the same length.
    pub fn from_cells(cells: &[Vec<u8>]) -> Result<Self> {
        let m = cells.len();
        let n = cells.first().map_or(0, |r| r.len());
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument("empty cell grid".into()));
        }
        let mut rows = Vec::with_capacity(m);
        for (i, row) in cells.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} cells, expected {n}",
                    row.len()
                )));
            }
            let mut word = 0u32;
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => word |= 1 << j,
                    _ => {
                        return Err(Error::InvalidArgument(format!(
                            "cell ({i},{j}) is {v}, expected 0 or 1"
                        )))
                    }
                }
            }
            rows.push(word);
        }
        Self::new(m, n, rows)
    }

    pub fn row_count(&self) -> usize {
        self.m
    }

    pub fn col_count(&self) -> usize {
        self.n
    }

    pub fn is_square(&self) -> bool {
        self.m == self.n
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> u32 {
        self.rows[i]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        ((self.rows[i] >> j) & 1) as u8
    }

    /// Number of ones; equals the autocorrelation peak.
    pub fn popcount(&self) -> u32 {
        self.rows.iter().map(|r| r.count_ones()).sum()
    }

    /// Mirror left-right.
    pub fn h_flip(&self) -> Self {
        let rows = self.rows.iter().map(|&r| flip_row_word(r, self.n)).collect();
        Self { m: self.m, n: self.n, rows }
    }

    /// Mirror top-bottom.
    pub fn v_flip(&self) -> Self {
        let mut rows = self.rows.clone();
        rows.reverse();
        Self { m: self.m, n: self.n, rows }
    }

    pub fn rotate180(&self) -> Self {
        self.h_flip().v_flip()
    }

    /// Transpose; shape becomes N-by-M.
    pub fn transpose(&self) -> Self {
        let mut rows = vec![0u32; self.n];
        for i in 0..self.m {
            for j in 0..self.n {
                if self.get(i, j) == 1 {
                    rows[j] |= 1 << i;
                }
            }
        }
        Self { m: self.n, n: self.m, rows }
    }

    /// Clockwise quarter turn (square matrices only by callers' convention,
    /// but defined for any shape).
    pub fn rotate90(&self) -> Self {
        self.transpose().h_flip()
    }

    pub fn is_diagonally_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    /// All distinct images under the shape-preserving symmetry group:
    /// the 8 dihedral operations for squares, 4 otherwise.
    pub fn symmetry_orbit(&self) -> Vec<BinaryMatrix> {
        let mut orbit = BTreeSet::new();
        orbit.insert(self.clone());
        orbit.insert(self.h_flip());
        orbit.insert(self.v_flip());
        orbit.insert(self.rotate180());
        if self.is_square() {
            let t = self.transpose();
            orbit.insert(t.h_flip());
            orbit.insert(t.v_flip());
            orbit.insert(t.rotate180());
            orbit.insert(t);
        }
        orbit.into_iter().collect()
    }

    /// The orbit element minimal under row-major lexicographic comparison of
    /// bit words. Idempotent; equal for all orbit members.
    pub fn canonical_form(&self) -> BinaryMatrix {
        self.symmetry_orbit().into_iter().next().expect("orbit is never empty")
    }

    /// Replace each pixel by a k-by-k block of identical values.
    pub fn expand(&self, k: usize) -> Result<BinaryMatrix> {
        if k == 0 {
            return Err(Error::InvalidArgument("expansion factor must be >= 1".into()));
        }
        if self.m * k > MAX_SIDE || self.n * k > MAX_SIDE {
            return Err(Error::DimensionLimit(self.m * k, self.n * k));
        }
        let mut rows = Vec::with_capacity(self.m * k);
        for i in 0..self.m {
            let mut word = 0u32;
            for j in 0..self.n {
                if self.get(i, j) == 1 {
                    word |= row_mask(k) << (j * k);
                }
            }
            for _ in 0..k {
                rows.push(word);
            }
        }
        BinaryMatrix::new(self.m * k, self.n * k, rows)
    }

    /// True iff all pixels of the given level form a single 8-connected
    /// component. An empty level is vacuously connected.
    pub fn is_connected(&self, level: u8) -> bool {
        let total: usize = (0..self.m)
            .map(|i| (0..self.n).filter(|&j| self.get(i, j) == level).count())
            .sum();
        if total == 0 {
            return true;
        }
        let start = (0..self.m)
            .flat_map(|i| (0..self.n).map(move |j| (i, j)))
            .find(|&(i, j)| self.get(i, j) == level)
            .unwrap();
        let mut seen = vec![false; self.m * self.n];
        let mut stack = vec![start];
        seen[start.0 * self.n + start.1] = true;
        let mut reached = 0usize;
        while let Some((i, j)) = stack.pop() {
            reached += 1;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= self.m as i64 || nj >= self.n as i64 {
                        continue;
                    }
                    let (ni, nj) = (ni as usize, nj as usize);
                    if !seen[ni * self.n + nj] && self.get(ni, nj) == level {
                        seen[ni * self.n + nj] = true;
                        stack.push((ni, nj));
                    }
                }
            }
        }
        reached == total
    }
}

#[inline]
pub(crate) fn row_mask(n: usize) -> u32 {
    (1u32 << n) - 1
}

/// Text format: M lines of N characters from {0,1}, newline-terminated.
impl FromStr for BinaryMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut rows: Vec<u32> = Vec::new();
        let mut n = 0usize;
        for (li, line) in s.lines().enumerate() {
            if line.is_empty() {
                return Err(Error::Parse {
                    line: li + 1,
                    column: 1,
                    message: "empty row".into(),
                });
            }
            if li == 0 {
                n = line.chars().count();
                if n > MAX_SIDE {
                    return Err(Error::Parse {
                        line: 1,
                        column: MAX_SIDE + 1,
                        message: format!("row wider than the supported maximum of {MAX_SIDE}"),
                    });
                }
            } else if line.chars().count() != n {
                return Err(Error::Parse {
                    line: li + 1,
                    column: line.chars().count() + 1,
                    message: format!("ragged row: expected {n} characters"),
                });
            }
            let mut word = 0u32;
            for (ci, c) in line.chars().enumerate() {
                match c {
                    '0' => {}
                    '1' => word |= 1 << ci,
                    other => {
                        return Err(Error::Parse {
                            line: li + 1,
                            column: ci + 1,
                            message: format!("unexpected character {other:?}, expected '0' or '1'"),
                        })
                    }
                }
            }
            rows.push(word);
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "empty matrix".into(),
            });
        }
        let m = rows.len();
        if m > MAX_SIDE {
            return Err(Error::Parse {
                line: MAX_SIDE + 1,
                column: 1,
                message: format!("more than {MAX_SIDE} rows"),
            });
        }
        BinaryMatrix::new(m, n, rows)
    }
}

impl fmt::Display for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.m {
            for j in 0..self.n {
                f.write_str(if self.get(i, j) == 1 { "1" } else { "0" })?;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryMatrix({}x{})\n{}", self.m, self.n, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> BinaryMatrix {
        s.parse().unwrap()
    }

    #[test]
    fn orbit_of_single_pixel_is_a_fixed_point() {
        let m = parse("1\n");
        assert_eq!(m.symmetry_orbit(), vec![m]);
    }

    #[test]
    fn orbit_of_top_row_has_four_members() {
        let m = parse("11\n00\n");
        let orbit = m.symmetry_orbit();
        assert_eq!(orbit.len(), 4);
        // top row, bottom row, left column, right column
        assert!(orbit.contains(&parse("00\n11\n")));
        assert!(orbit.contains(&parse("10\n10\n")));
        assert!(orbit.contains(&parse("01\n01\n")));
    }

    #[test]
    fn orbit_of_diagonal_has_two_members() {
        let m = parse("10\n01\n");
        let orbit = m.symmetry_orbit();
        assert_eq!(orbit.len(), 2);
        assert!(orbit.contains(&parse("01\n10\n")));
    }

    #[test]
    fn orbit_size_divides_group_order() {
        for bits in 0u32..512 {
            let rows = vec![bits & 7, (bits >> 3) & 7, (bits >> 6) & 7];
            let m = BinaryMatrix::new(3, 3, rows).unwrap();
            assert_eq!(8 % m.symmetry_orbit().len(), 0);
        }
    }

    #[test]
    fn canonical_form_identifies_orbits() {
        let a = parse("00\n11\n");
        let b = parse("11\n00\n");
        assert_eq!(a.canonical_form(), b.canonical_form());
        let c = parse("10\n01\n");
        assert_eq!(c.canonical_form(), c.h_flip().canonical_form());
        let ones = parse("111\n111\n111\n");
        assert_eq!(ones.canonical_form(), ones);
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let m = parse("101\n010\n110\n");
        let c = m.canonical_form();
        assert_eq!(c.canonical_form(), c);
    }

    #[test]
    fn non_square_orbit_preserves_shape() {
        let m = parse("110\n001\n");
        for g in m.symmetry_orbit() {
            assert_eq!((g.row_count(), g.col_count()), (2, 3));
        }
    }

    #[test]
    fn expand_single_pixel() {
        let m = parse("1\n");
        assert_eq!(m.expand(3).unwrap(), parse("111\n111\n111\n"));
    }

    #[test]
    fn expand_identity_blocks() {
        let m = parse("10\n01\n");
        assert_eq!(m.expand(2).unwrap(), parse("1100\n1100\n0011\n0011\n"));
    }

    #[test]
    fn expand_rejects_zero() {
        assert!(parse("1\n").expand(0).is_err());
    }

    #[test]
    fn expand_composes_and_scales_popcount() {
        let m = parse("101\n010\n");
        assert_eq!(
            m.expand(2).unwrap().expand(2).unwrap(),
            m.expand(4).unwrap()
        );
        assert_eq!(m.expand(2).unwrap().popcount(), 4 * m.popcount());
    }

    #[test]
    fn connectedness_examples() {
        let cross = parse("010\n111\n010\n");
        assert!(cross.is_connected(1));
        let checker = parse("101\n010\n101\n");
        assert!(checker.is_connected(1));
        let apart = parse("100\n000\n001\n");
        assert!(!apart.is_connected(1));
        // empty level is vacuously connected
        assert!(parse("111\n111\n").is_connected(0));
    }

    #[test]
    fn parser_rejects_ragged_and_foreign() {
        let err = "11\n0\n".parse::<BinaryMatrix>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = "1x\n".parse::<BinaryMatrix>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, column: 2, .. }));
    }

    #[test]
    fn text_round_trip() {
        let m = parse("10110\n01001\n11111\n");
        assert_eq!(m.to_string().parse::<BinaryMatrix>().unwrap(), m);
    }
}
