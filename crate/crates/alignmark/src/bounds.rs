//! Analytic bounds on s_min(p) / d1_max(p), the explicit region I/II/III
//! matrix construction, and a brute-force oracle for small sizes.
//!
//! Region I fills a checkerboard (no two ones at a first-neighbor
//! displacement), region II adds ones of the opposite parity along the two
//! boundary columns (one new horizontal adjacency each), region III fills the
//! remaining interior cells (two new horizontal adjacencies each). The
//! piecewise formula is evaluated in exact integer arithmetic.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::BinaryMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundRow {
    pub p: i64,
    pub s_lower_i: i64,
    pub s_lower_ii: i64,
    pub d1_upper_i: i64,
    pub d1_upper_ii: i64,
}

/// Per-p bound values for an M by N matrix, with the region breakpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundTable {
    pub m: usize,
    pub n: usize,
    pub n1: i64,
    pub n2: i64,
    pub rows: Vec<BoundRow>,
}

/// Region breakpoints N1, N2 for normalized dimensions (M <= N).
fn breakpoints(m: usize, n: usize) -> (i64, i64) {
    let mn = (m * n) as i64;
    if mn % 2 == 0 {
        (mn / 2, mn / 2 + m as i64)
    } else {
        ((mn + 1) / 2, (mn + 1) / 2 + m as i64 - 1)
    }
}

fn normalize(m: usize, n: usize) -> (usize, usize) {
    if m <= n {
        (m, n)
    } else {
        (n, m)
    }
}

/// Piecewise upper bound on d1_max(p) from the region construction.
pub fn d1_upper_i(m: usize, n: usize, p: i64) -> i64 {
    let (m, n) = normalize(m, n);
    let (n1, n2) = breakpoints(m, n);
    if p <= n1 {
        p
    } else if p <= n2 {
        n1
    } else {
        (m * (n + 1)) as i64 - p
    }
}

/// Uniform-displacement lower bound on s_min(p):
/// ceil(p(p-1) / (4NM - 2N - 2M)).
pub fn s_lower_ii(m: usize, n: usize, p: i64) -> i64 {
    let denom = (4 * n * m) as i64 - 2 * n as i64 - 2 * m as i64;
    if denom <= 0 {
        // 1x1: no non-zero displacement classes exist
        return 0;
    }
    let num = p * (p - 1);
    (num + denom - 1) / denom
}

/// Complete bound table for all p in [0, MN]. Inputs with M > N are
/// transposed internally; the table values are identical either way.
pub fn bound_table(m: usize, n: usize) -> Result<BoundTable> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("dimensions must be >= 1".into()));
    }
    let (lo, hi) = normalize(m, n);
    let (n1, n2) = breakpoints(lo, hi);
    let rows = (0..=(m * n) as i64)
        .map(|p| {
            let d1_i = d1_upper_i(lo, hi, p);
            let s_ii = s_lower_ii(lo, hi, p);
            BoundRow {
                p,
                s_lower_i: p - d1_i,
                s_lower_ii: s_ii,
                d1_upper_i: d1_i,
                d1_upper_ii: p - s_ii,
            }
        })
        .collect();
    Ok(BoundTable { m, n, n1, n2, rows })
}

impl BoundTable {
    pub fn row(&self, p: i64) -> &BoundRow {
        &self.rows[p as usize]
    }

    /// The stronger of the two s_min lower bounds at p.
    pub fn s_lower(&self, p: i64) -> i64 {
        let r = self.row(p);
        r.s_lower_i.max(r.s_lower_ii)
    }

    /// CSV export, directly plottable against a search's s_min(p) curve.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "p,s_lower_I,s_lower_II,d1_upper_I,d1_upper_II")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.p, r.s_lower_i, r.s_lower_ii, r.d1_upper_i, r.d1_upper_ii
            )?;
        }
        Ok(())
    }

    /// The p-interval where the two d1 upper bounds cross: upper II is the
    /// tighter bound at small p and upper I at large p; returns the inclusive
    /// range between the last p where II < I and the first p where I < II
    /// swap order.
    pub fn crossing_interval(&self) -> (i64, i64) {
        let lo = self
            .rows
            .iter()
            .rev()
            .find(|r| r.d1_upper_ii < r.d1_upper_i)
            .map_or(0, |r| r.p);
        let hi = self
            .rows
            .iter()
            .find(|r| r.d1_upper_i < r.d1_upper_ii)
            .map_or((self.m * self.n) as i64, |r| r.p);
        (lo.min(hi), lo.max(hi))
    }
}

/// Deterministic matrix with exactly p ones built by the region filling
/// order. Attains A(0,1) = p - d1_upper_I(p) exactly at every p
/// (the bound tracks the horizontal first-neighbor sidelobe).
pub fn construct_bound_matrix(m: usize, n: usize, p: i64) -> Result<BinaryMatrix> {
    if p < 0 || p > (m * n) as i64 {
        return Err(Error::InvalidArgument(format!(
            "p = {p} out of range [0, {}]",
            m * n
        )));
    }
    if m > n {
        return Ok(construct_bound_matrix(n, m, p)?.transpose());
    }
    let mut cells: Vec<(usize, usize)> = Vec::with_capacity(m * n);
    // region I: checkerboard parity class that includes the corners
    for i in 0..m {
        for j in 0..n {
            if (i + j) % 2 == 0 {
                cells.push((i, j));
            }
        }
    }
    // region II: opposite parity along the two boundary columns
    for i in 0..m {
        for j in [0, n - 1] {
            if n == 1 && j > 0 {
                continue;
            }
            if (i + j) % 2 == 1 {
                cells.push((i, j));
            }
        }
    }
    // region III: remaining interior cells
    for i in 0..m {
        for j in 1..n.saturating_sub(1) {
            if (i + j) % 2 == 1 {
                cells.push((i, j));
            }
        }
    }
    debug_assert_eq!(cells.len(), m * n);
    let mut grid = vec![vec![0u8; n]; m];
    for &(i, j) in cells.iter().take(p as usize) {
        grid[i][j] = 1;
    }
    BinaryMatrix::from_cells(&grid)
}

/// Exhaustive oracle: min over all M by N matrices with p ones of
/// max(A(1,0), A(0,1)). Guarded to MN <= 20.
pub fn brute_force_first_neighbor_min(m: usize, n: usize, p: i64) -> Result<i64> {
    let cells = m * n;
    if cells > 20 {
        return Err(Error::InvalidArgument(format!(
            "brute force limited to MN <= 20, got {cells}"
        )));
    }
    if p < 0 || p > cells as i64 {
        return Err(Error::InvalidArgument(format!(
            "p = {p} out of range [0, {cells}]"
        )));
    }
    if p == 0 {
        return Ok(0);
    }
    // grid packed row-major into one word; masks select valid neighbor pairs
    let mut h_mask = 0u32;
    let mut v_mask = 0u32;
    for i in 0..m {
        for j in 0..n {
            let bit = 1u32 << (i * n + j);
            if j + 1 < n {
                h_mask |= bit;
            }
            if i + 1 < m {
                v_mask |= bit;
            }
        }
    }
    let mut best = i64::MAX;
    // Gosper's hack over all C(MN, p) placements
    let mut mask: u32 = (1u32 << p) - 1;
    let limit: u64 = 1u64 << cells;
    while (mask as u64) < limit {
        let v = (mask & (mask >> n) & v_mask).count_ones() as i64;
        let h = (mask & (mask >> 1) & h_mask).count_ones() as i64;
        best = best.min(v.max(h));
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        if r == 0 {
            break;
        }
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    Ok(best)
}
