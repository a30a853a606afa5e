//! Exact integer 2D aperiodic autocorrelation and crosscorrelation kernels.
//!
//! Correlations are computed by direct summation with bitwise row kernels.
//! Everything is exact: matrices are zero-padded outside their support and
//! all shifts of the full (2M-1) by (2N-1) domain are enumerated.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::BinaryMatrix;

/// Integer correlation grid over shifts tau1 in [-(M-1), M-1],
/// tau2 in [-(N-1), N-1], with (0,0) at the grid center.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelationMap {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    /// Row-major (2M-1) x (2N-1).
    values: Vec<i64>,
}

impl CorrelationMap {
    pub fn source_rows(&self) -> usize {
        self.m
    }

    pub fn source_cols(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, tau1: i64, tau2: i64) -> i64 {
        let (h, w) = (2 * self.m - 1, 2 * self.n - 1);
        let (r, c) = (tau1 + self.m as i64 - 1, tau2 + self.n as i64 - 1);
        assert!(r >= 0 && (r as usize) < h && c >= 0 && (c as usize) < w);
        self.values[r as usize * w + c as usize]
    }

    /// Value at zero shift.
    pub fn peak(&self) -> i64 {
        self.get(0, 0)
    }

    /// Maximum over all non-zero shifts (the highest sidelobe s);
    /// 0 when the map has no sidelobe cells (1x1 source).
    pub fn max_sidelobe(&self) -> i64 {
        self.shift_iter()
            .filter(|&(t1, t2, _)| (t1, t2) != (0, 0))
            .map(|(_, _, v)| v)
            .max()
            .unwrap_or(0)
    }

    /// Iterate (tau1, tau2, value) over the whole shift domain.
    pub fn shift_iter(&self) -> impl Iterator<Item = (i64, i64, i64)> + '_ {
        let (m, n) = (self.m as i64, self.n as i64);
        let w = 2 * self.n - 1;
        self.values.iter().enumerate().map(move |(idx, &v)| {
            let (r, c) = (idx / w, idx % w);
            (r as i64 - (m - 1), c as i64 - (n - 1), v)
        })
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// CSV with columns tau1, tau2, value.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "tau1,tau2,value")?;
        for (t1, t2, v) in self.shift_iter() {
            writeln!(out, "{t1},{t2},{v}")?;
        }
        Ok(())
    }
}

/// Per-shift overlap counts of two row words: for each tau2 in
/// [-(N-1), N-1], popcount(a AND shift(b, tau2)), indexed tau2 + N - 1.
pub fn row_correlation_table(row_a: u32, row_b: u32, n: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(2 * n - 1);
    for tau2 in -(n as i64 - 1)..=(n as i64 - 1) {
        out.push(row_overlap(row_a, row_b, tau2));
    }
    out
}

#[inline]
pub(crate) fn row_overlap(row_a: u32, row_b: u32, tau2: i64) -> u32 {
    let shifted = if tau2 >= 0 { row_b >> tau2 } else { row_b << (-tau2) };
    (row_a & shifted).count_ones()
}

/// Exact aperiodic autocorrelation of a binary matrix (Eq. 1 kernel).
pub fn autocorrelate(matrix: &BinaryMatrix) -> CorrelationMap {
    let (m, n) = (matrix.row_count(), matrix.col_count());
    let w = 2 * n - 1;
    let mut values = vec![0i64; (2 * m - 1) * w];
    for tau1 in 0..m as i64 {
        for tau2 in -(n as i64 - 1)..=(n as i64 - 1) {
            let mut acc = 0i64;
            for i in 0..(m as i64 - tau1) {
                acc += row_overlap(matrix.row(i as usize), matrix.row((i + tau1) as usize), tau2)
                    as i64;
            }
            let r = (tau1 + m as i64 - 1) as usize;
            let c = (tau2 + n as i64 - 1) as usize;
            values[r * w + c] = acc;
            // inversion symmetry: A(-tau1,-tau2) = A(tau1,tau2)
            let r2 = (-tau1 + m as i64 - 1) as usize;
            let c2 = (-tau2 + n as i64 - 1) as usize;
            values[r2 * w + c2] = acc;
        }
    }
    CorrelationMap { m, n, values }
}

/// Real-valued data image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl RealImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidArgument("empty data image".into()));
        }
        if pixels.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "expected {} pixels, got {}",
                height * width,
                pixels.len()
            )));
        }
        Ok(Self { height, width, pixels })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![0.0; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pixels[i * self.width + j]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.pixels[i * self.width + j]
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    /// Elementwise c*x + d.
    pub fn affine(&self, c: f64, d: f64) -> Self {
        let pixels = self.pixels.iter().map(|&x| c * x + d).collect();
        Self { height: self.height, width: self.width, pixels }
    }
}

/// Crosscorrelation of a binary reference against a real image over every
/// placement of the reference fully or partially overlapping the data.
/// Shifts run tau1 in [-(M-1), H-1], tau2 in [-(N-1), W-1].
#[derive(Debug, Clone, PartialEq)]
pub struct RealCorrelationMap {
    ref_rows: usize,
    ref_cols: usize,
    data_height: usize,
    data_width: usize,
    /// Row-major (H+M-1) x (W+N-1).
    values: Vec<f64>,
}

impl RealCorrelationMap {
    pub fn tau1_range(&self) -> std::ops::RangeInclusive<i64> {
        -(self.ref_rows as i64 - 1)..=(self.data_height as i64 - 1)
    }

    pub fn tau2_range(&self) -> std::ops::RangeInclusive<i64> {
        -(self.ref_cols as i64 - 1)..=(self.data_width as i64 - 1)
    }

    #[inline]
    pub fn get(&self, tau1: i64, tau2: i64) -> f64 {
        let w = self.data_width + self.ref_cols - 1;
        let r = (tau1 + self.ref_rows as i64 - 1) as usize;
        let c = (tau2 + self.ref_cols as i64 - 1) as usize;
        self.values[r * w + c]
    }

    pub fn shift_iter(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        let w = self.data_width + self.ref_cols - 1;
        let (m0, n0) = (self.ref_rows as i64 - 1, self.ref_cols as i64 - 1);
        self.values.iter().enumerate().map(move |(idx, &v)| {
            ((idx / w) as i64 - m0, (idx % w) as i64 - n0, v)
        })
    }

    /// All shifts attaining the global maximum. Tie policy is the caller's.
    pub fn argmax_locations(&self) -> Vec<(i64, i64)> {
        let max = self
            .values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        self.shift_iter()
            .filter(|&(_, _, v)| v == max)
            .map(|(t1, t2, _)| (t1, t2))
            .collect()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Eq. 2 kernel: C(tau1,tau2) = sum_ij R_ij D_{i+tau1, j+tau2}, zero-padded.
pub fn crosscorrelate(reference: &BinaryMatrix, data: &RealImage) -> Result<RealCorrelationMap> {
    let (m, n) = (reference.row_count(), reference.col_count());
    let (h, w) = (data.height(), data.width());
    if h < m || w < n {
        return Err(Error::DimensionMismatch(format!(
            "data image {h}x{w} smaller than reference {m}x{n}"
        )));
    }
    let out_w = w + n - 1;
    let mut values = vec![0.0f64; (h + m - 1) * out_w];
    for (r, t1) in (-(m as i64 - 1)..=(h as i64 - 1)).enumerate() {
        for (c, t2) in (-(n as i64 - 1)..=(w as i64 - 1)).enumerate() {
            let mut acc = 0.0;
            for i in 0..m as i64 {
                let di = i + t1;
                if di < 0 || di >= h as i64 {
                    continue;
                }
                for j in 0..n as i64 {
                    let dj = j + t2;
                    if dj < 0 || dj >= w as i64 {
                        continue;
                    }
                    if reference.get(i as usize, j as usize) == 1 {
                        acc += data.get(di as usize, dj as usize);
                    }
                }
            }
            values[r * out_w + c] = acc;
        }
    }
    Ok(RealCorrelationMap {
        ref_rows: m,
        ref_cols: n,
        data_height: h,
        data_width: w,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> BinaryMatrix {
        s.parse().unwrap()
    }

    #[test]
    fn autocorrelation_of_top_row() {
        let a = autocorrelate(&parse("11\n00\n"));
        assert_eq!(a.peak(), 2);
        assert_eq!(a.get(0, 1), 1);
        assert_eq!(a.get(0, -1), 1);
        let zeros = a
            .shift_iter()
            .filter(|&(t1, t2, _)| !(t1 == 0 && t2.abs() <= 1))
            .filter(|&(_, _, v)| v == 0)
            .count();
        assert_eq!(zeros, 6);
    }

    #[test]
    fn autocorrelation_of_diagonal() {
        let a = autocorrelate(&parse("10\n01\n"));
        assert_eq!(a.peak(), 2);
        assert_eq!(a.get(1, 1), 1);
        assert_eq!(a.get(-1, -1), 1);
        assert_eq!(a.get(1, -1), 0);
        assert_eq!(a.get(-1, 1), 0);
        assert_eq!(a.get(0, 1), 0);
    }

    #[test]
    fn single_one_has_no_sidelobes() {
        for text in ["100\n000\n", "000\n010\n"] {
            let a = autocorrelate(&parse(text));
            assert_eq!(a.peak(), 1);
            assert_eq!(a.max_sidelobe(), 0);
        }
    }

    #[test]
    fn row_table_examples() {
        assert_eq!(row_correlation_table(0b11, 0b11, 2), vec![1, 2, 1]);
        // rows written as text "10" and "01": bit 0 is column 0
        let a = parse("10\n").row(0);
        let b = parse("01\n").row(0);
        assert_eq!(row_correlation_table(a, b, 2), vec![0, 0, 1]);
    }

    #[test]
    fn row_table_sums_to_popcount_product() {
        let mut x = 0x2545F4914F6CDD1Du64;
        for _ in 0..200 {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            let a = (x & 0xff) as u32;
            let b = ((x >> 8) & 0xff) as u32;
            let total: u32 = row_correlation_table(a, b, 8).iter().sum();
            assert_eq!(total, a.count_ones() * b.count_ones());
        }
    }

    #[test]
    fn cross_of_noise_free_data_peaks_at_zero() {
        let r = parse("110\n011\n010\n");
        let mut img = RealImage::zeros(3, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                *img.get_mut(i, j) = r.get(i, j) as f64;
            }
        }
        let c = crosscorrelate(&r, &img).unwrap();
        assert_eq!(c.argmax_locations(), vec![(0, 0)]);
        assert_eq!(c.get(0, 0), r.popcount() as f64);
    }

    #[test]
    fn single_pixel_template_copies_data() {
        let r = parse("1\n");
        let img = RealImage::new(1, 2, vec![0.2, 0.9]).unwrap();
        let c = crosscorrelate(&r, &img).unwrap();
        assert_eq!(c.get(0, 0), 0.2);
        assert_eq!(c.get(0, 1), 0.9);
        assert_eq!(c.argmax_locations(), vec![(0, 1)]);
    }

    #[test]
    fn rejects_data_smaller_than_reference() {
        let r = parse("11\n11\n");
        let img = RealImage::new(1, 2, vec![1.0, 1.0]).unwrap();
        assert!(crosscorrelate(&r, &img).is_err());
    }

    #[test]
    fn correlation_map_json_round_trip() {
        let a = autocorrelate(&parse("101\n010\n"));
        let json = serde_json::to_string(&a).unwrap();
        assert!(json.contains("\"M\":2"));
        let back: CorrelationMap = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }
}
