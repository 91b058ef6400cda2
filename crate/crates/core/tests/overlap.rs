mod common;

use std::f64::consts::PI;

use common::*;
use hft_core::*;
use proptest::prelude::*;

fn off(u1: f64, u2: f64) -> Offset64 {
    NormalizedFrequencyOffset::new(u1, u2).unwrap()
}

fn sinc_ref(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        (PI * u).sin() / (PI * u)
    }
}

#[test]
fn closed_form_values() {
    assert_eq!(inner_product(off(0.0, 0.0)), 1.0);
    assert_eq!(inner_product(off(1.0, 0.0)), 0.0);
    assert_eq!(inner_product(off(2.0, 3.0)), 0.0);
    assert!((inner_product(off(0.5, 0.5)) - 0.405_284_734_569_351).abs() < 1e-12);
}

#[test]
fn general_form_agrees_with_quadrature() {
    for &(u1, u2, w1, w2) in &[(0.5, 0.0, 0.0, 0.0), (0.3, -1.7, -0.2, 0.4), (2.25, 0.1, -0.5, -0.5), (0.0, 0.0, 0.7, 0.1)] {
        let p = inner_product_general(off(u1, u2), w1, w2);
        let q = overlap_quadrature(u1, u2, w1, w2, 2000);
        assert!((p - q).norm() < 1e-8, "({u1},{u2},{w1},{w2}): {p} vs {q}");
    }
}

#[test]
fn corner_window_half_offset() {
    let p = inner_product_general(off(0.5, 0.0), 0.0, 0.0);
    assert!((p.norm() - 2.0 / PI).abs() < 1e-12);
    assert!((p.arg() - PI / 2.0).abs() < 1e-12);
}

#[test]
fn coeff_ratio_matches_direct_sinc_differences() {
    let k = 1.0 / 20.0;
    for r in [2usize, 4, 8, 16, 20, 32, 64] {
        let kp = k + 1.0 / r as f64;
        let want = (sinc_ref(kp) - sinc_ref(k)) / (sinc_ref(kp + 1.0) - sinc_ref(k + 1.0));
        let got = coeff_ratio(k, r, 0, -1).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.abs(), "r={r}: {got} vs {want}");
    }
}

#[test]
fn coeff_ratio_falls_with_denser_sampling() {
    // The neighbour-to-next-neighbour ratio shrinks toward the derivative ratio
    // as the step 1/r goes to zero.
    let qs: Vec<f64> = [2usize, 4, 8, 16, 32, 64].iter().map(|&r| coeff_ratio(1.0 / 20.0, r, 0, -1).unwrap()).collect();
    assert!(qs.windows(2).all(|w| w[1] < w[0]), "{qs:?}");
    let k = 1.0 / 20.0;
    let d = |u: f64| (PI * u * (PI * u).cos() - (PI * u).sin()) / (PI * u * u);
    let limit = d(k) / d(k + 1.0);
    assert!(qs[5] > limit);
    let far = coeff_ratio(k, 1 << 20, 0, -1).unwrap();
    assert!((far - limit).abs() < 1e-4 * limit, "{far} vs {limit}");
}

#[test]
fn coeff_ratio_same_index_is_one() {
    assert_eq!(coeff_ratio(0.13, 5, 2, 2).unwrap(), 1.0);
}

#[test]
fn coeff_ratio_reports_degenerate_offsets() {
    // k and k + 1/r both integers relative to j2 makes the denominator vanish.
    assert!(matches!(coeff_ratio(0.0, 1, 0, -3), Err(Error::DegenerateOffset(_))));
}

proptest! {
    #[test]
    fn modulus_is_bounded(u1 in -40.0f64..40.0, u2 in -40.0f64..40.0) {
        prop_assert!(inner_product(off(u1, u2)).abs() <= 1.0);
    }

    #[test]
    fn general_modulus_is_window_independent(u1 in -8.0f64..8.0, u2 in -8.0f64..8.0, w1 in -2.0f64..2.0, w2 in -2.0f64..2.0) {
        let p = inner_product_general(off(u1, u2), w1, w2);
        prop_assert!((p.norm() - inner_product(off(u1, u2)).abs()).abs() <= 1e-12);
    }

    #[test]
    fn integer_offsets_vanish(n in 1i32..50, u in -5.0f64..5.0) {
        prop_assert_eq!(inner_product(off(n as f64, u)), 0.0);
        prop_assert_eq!(inner_product(off(u, -n as f64)), 0.0);
    }
}
