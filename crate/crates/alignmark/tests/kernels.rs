//! Property tests of the correlation kernels against a naive
//! quadruple-loop oracle, plus exact structural identities.

use alignmark::correlation::{autocorrelate, crosscorrelate, RealImage};
use alignmark::matrix::BinaryMatrix;
use alignmark::spectrum::spectrum_of;
use proptest::prelude::*;

/// Direct sum over all cell pairs, no bit tricks.
fn naive_autocorrelate(m: &BinaryMatrix, tau1: i64, tau2: i64) -> i64 {
    let (rows, cols) = (m.row_count() as i64, m.col_count() as i64);
    let mut acc = 0i64;
    for i in 0..rows {
        for j in 0..cols {
            let (i2, j2) = (i + tau1, j + tau2);
            if i2 < 0 || i2 >= rows || j2 < 0 || j2 >= cols {
                continue;
            }
            acc += (m.get(i as usize, j as usize) * m.get(i2 as usize, j2 as usize)) as i64;
        }
    }
    acc
}

fn arb_matrix(max_side: usize) -> impl Strategy<Value = BinaryMatrix> {
    (1..=max_side, 1..=max_side)
        .prop_flat_map(|(m, n)| {
            prop::collection::vec(0u32..(1u32 << n), m)
                .prop_map(move |rows| {
                    let cells: Vec<Vec<u8>> = (0..m)
                        .map(|i| (0..n).map(|j| ((rows[i] >> j) & 1) as u8).collect())
                        .collect();
                    BinaryMatrix::from_cells(&cells).unwrap()
                })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn autocorrelation_matches_naive_oracle(m in arb_matrix(8)) {
        let a = autocorrelate(&m);
        for (t1, t2, v) in a.shift_iter() {
            prop_assert_eq!(v, naive_autocorrelate(&m, t1, t2), "shift ({}, {})", t1, t2);
        }
    }

    #[test]
    fn autocorrelation_total_is_p_squared(m in arb_matrix(8)) {
        let a = autocorrelate(&m);
        let p = m.popcount() as i64;
        prop_assert_eq!(a.values().iter().sum::<i64>(), p * p);
        prop_assert_eq!(a.peak(), p);
    }

    #[test]
    fn autocorrelation_inversion_symmetry(m in arb_matrix(8)) {
        let a = autocorrelate(&m);
        for (t1, t2, v) in a.shift_iter() {
            prop_assert_eq!(v, a.get(-t1, -t2));
        }
    }

    #[test]
    fn histogram_is_complete_and_consistent(m in arb_matrix(8)) {
        let sp = spectrum_of(&autocorrelate(&m)).unwrap();
        let cells = (2 * m.row_count() as u64 - 1) * (2 * m.col_count() as u64 - 1) - 1;
        prop_assert_eq!(sp.total_cells(), cells);
        prop_assert_eq!(sp.d1 + sp.s, sp.p);
        // the first bin holds the cells at the highest sidelobe value
        prop_assert!(sp.counts.first().map_or(true, |&n| n > 0 || sp.s == 0));
    }

    #[test]
    fn spectrum_invariant_under_symmetry_orbit(m in arb_matrix(6)) {
        let sp = spectrum_of(&autocorrelate(&m)).unwrap();
        for image in m.symmetry_orbit() {
            prop_assert_eq!(&spectrum_of(&autocorrelate(&image)).unwrap(), &sp);
        }
    }

    // integer data and integer scale keep the identity exact in f64
    #[test]
    fn crosscorrelation_affine_invariance(
        reference in arb_matrix(5),
        data_vals in prop::collection::vec(-50i64..=50, 64),
        c in 1i64..=9,
        d in -9i64..=9,
    ) {
        let img = RealImage::new(8, 8, data_vals.iter().map(|&v| v as f64).collect()).unwrap();
        prop_assume!(reference.row_count() <= 8 && reference.col_count() <= 8);
        let base = crosscorrelate(&reference, &img).unwrap();
        let scaled = crosscorrelate(&reference, &img.affine(c as f64, d as f64)).unwrap();
        let p = reference.popcount() as f64;
        // partial overlaps scale with the overlap size, not p
        let (m, n) = (reference.row_count() as i64, reference.col_count() as i64);
        for (t1, t2, v) in base.shift_iter() {
            let fully_inside =
                t1 >= 0 && t1 + m <= 8 && t2 >= 0 && t2 + n <= 8;
            if fully_inside {
                prop_assert_eq!(scaled.get(t1, t2), c as f64 * v + d as f64 * p);
            }
        }
    }

    #[test]
    fn expansion_scales_autocorrelation_quadratically(m in arb_matrix(5), k in 1usize..=3) {
        let big = m.expand(k).unwrap();
        let a = autocorrelate(&m);
        let ak = autocorrelate(&big);
        for (t1, t2, v) in a.shift_iter() {
            prop_assert_eq!(ak.get(k as i64 * t1, k as i64 * t2), k as i64 * k as i64 * v);
        }
    }

    #[test]
    fn canonical_form_is_orbit_invariant(m in arb_matrix(6)) {
        let canon = m.canonical_form();
        for image in m.symmetry_orbit() {
            prop_assert_eq!(&image.canonical_form(), &canon);
        }
    }
}
