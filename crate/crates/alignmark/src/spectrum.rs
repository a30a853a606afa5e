//! Peak-sidelobe distance spectra, the dictionary-order ranking criterion,
//! and sharpness.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::correlation::{autocorrelate, CorrelationMap};
use crate::error::{Error, Result};
use crate::matrix::BinaryMatrix;

/// Histogram {d1 | n1, n2, ..., n_{s+1}} of sidelobe cells keyed by their
/// distance from the peak. `counts[i]` is the number of cells at distance
/// d1 + i; distances are enumerated densely from d1 to p inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DistanceSpectrum {
    pub p: i64,
    pub s: i64,
    pub d1: i64,
    pub counts: Vec<u64>,
}

impl DistanceSpectrum {
    pub fn total_cells(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Human-readable form "{d1 | n1, n2, ...}".
impl fmt::Display for DistanceSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{} | ", self.d1)?;
        for (i, n) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str("}")
    }
}

/// Histogram of an integer autocorrelation map. Rejects maps whose center is
/// not the maximum (not an autocorrelation).
pub fn spectrum_of(map: &CorrelationMap) -> Result<DistanceSpectrum> {
    let p = map.peak();
    if map.values().iter().any(|&v| v > p) {
        return Err(Error::NotAutocorrelation(
            "peak at zero shift is not the maximum value".into(),
        ));
    }
    if map.values().iter().any(|&v| v < 0) {
        return Err(Error::NotAutocorrelation("negative correlation value".into()));
    }
    let s = map.max_sidelobe();
    let d1 = p - s;
    // bins for distances d1 ..= p, i.e. s+1 of them (empty for a 1x1 map)
    let bins = (p - d1 + 1).max(0) as usize;
    let mut counts = vec![0u64; bins];
    for (t1, t2, v) in map.shift_iter() {
        if (t1, t2) == (0, 0) {
            continue;
        }
        counts[(p - v - d1) as usize] += 1;
    }
    Ok(DistanceSpectrum { p, s, d1, counts })
}

/// Dictionary-order ranking: maximize d1, then minimize n1, n2, ...
/// sequentially. `Ordering::Greater` means `a` ranks above `b`.
/// Count vectors of unequal length are compared with implicit zero padding.
pub fn compare(a: &DistanceSpectrum, b: &DistanceSpectrum) -> Ordering {
    match a.d1.cmp(&b.d1) {
        Ordering::Equal => {}
        other => return other,
    }
    let len = a.counts.len().max(b.counts.len());
    for i in 0..len {
        let na = a.counts.get(i).copied().unwrap_or(0);
        let nb = b.counts.get(i).copied().unwrap_or(0);
        match na.cmp(&nb) {
            Ordering::Equal => {}
            // smaller count ranks above
            Ordering::Less => return Ordering::Greater,
            Ordering::Greater => return Ordering::Less,
        }
    }
    Ordering::Equal
}

/// Sharpness d1/N of a square matrix, as an exact rational.
pub fn sharpness(matrix: &BinaryMatrix) -> Result<Ratio<i64>> {
    if !matrix.is_square() {
        return Err(Error::NonSquare(matrix.row_count(), matrix.col_count()));
    }
    let spec = spectrum_of(&autocorrelate(matrix))?;
    Ok(Ratio::new(spec.d1, matrix.col_count() as i64))
}
