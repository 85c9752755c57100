//! Property suite for the interval layer: containment fuzzing, monotonicity,
//! and reference-value checks.

use proptest::prelude::*;
use rigor_core::{CInterval, Interval};

fn small_interval() -> impl Strategy<Value = Interval> {
    (-50.0f64..50.0, 0.0f64..3.0).prop_map(|(m, r)| Interval::with_rad(m, r))
}

/// A point guaranteed to lie inside the interval.
fn point_in(iv: Interval, t: f64) -> f64 {
    let x = iv.lo + t * (iv.hi - iv.lo);
    x.clamp(iv.lo, iv.hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn containment_binary_ops(a in small_interval(), b in small_interval(),
                              ta in 0.0f64..1.0, tb in 0.0f64..1.0) {
        let x = point_in(a, ta);
        let y = point_in(b, tb);
        prop_assert!((a + b).contains(x + y));
        prop_assert!((a - b).contains(x - y));
        prop_assert!((a * b).contains(x * y));
        if !b.contains_zero() {
            prop_assert!((a / b).contains(x / y));
        }
    }

    #[test]
    fn containment_unary_ops(a in small_interval(), ta in 0.0f64..1.0, n in 1i32..6) {
        let x = point_in(a, ta);
        prop_assert!(a.exp().contains(x.exp()));
        prop_assert!(a.sin().contains(x.sin()));
        prop_assert!(a.cos().contains(x.cos()));
        prop_assert!(a.abs().contains(x.abs()));
        prop_assert!(a.powi(n).contains(x.powi(n)));
        let zeta_ref = if x == 0.0 { 1.0 } else { x.exp_m1() / x };
        prop_assert!(a.expm1_over_x().contains(zeta_ref));
        if a.lo >= 0.0 {
            prop_assert!(a.sqrt().contains(x.sqrt()));
        }
    }

    #[test]
    fn monotonicity(a in small_interval(), b in small_interval(), grow in 0.0f64..2.0) {
        let a_wide = Interval::new(a.lo - grow, a.hi + grow);
        prop_assert!(a_wide.contains_interval(a));
        let pairs = [
            (a + b, a_wide + b),
            (a - b, a_wide - b),
            (a * b, a_wide * b),
        ];
        for (narrow, wide) in pairs {
            prop_assert!(wide.contains_interval(narrow));
        }
        prop_assert!(a_wide.exp().contains_interval(a.exp()));
        prop_assert!(a_wide.cos().contains_interval(a.cos()));
        prop_assert!(a_wide.sin().contains_interval(a.sin()));
    }

    #[test]
    fn complex_containment(ar in small_interval(), ai in small_interval(),
                           br in small_interval(), bi in small_interval(),
                           t in 0.0f64..1.0, s in 0.0f64..1.0) {
        let a = CInterval::new(ar, ai);
        let b = CInterval::new(br, bi);
        let x = rigor_core::Cplx::new(point_in(ar, t), point_in(ai, s));
        let y = rigor_core::Cplx::new(point_in(br, s), point_in(bi, t));
        prop_assert!((a + b).contains(x + y));
        prop_assert!((a - b).contains(x - y));
        prop_assert!((a * b).contains(x * y));
        prop_assert!(a.abs().contains(x.norm()));
        // exp on a bounded box
        let asm = CInterval::new(
            Interval::new(ar.lo.clamp(-5.0, 5.0), ar.hi.clamp(-5.0, 5.0)),
            ai,
        );
        let xs = rigor_core::Cplx::new(point_in(asm.re, t), point_in(asm.im, s));
        prop_assert!(asm.exp().contains(xs.exp()));
    }
}

#[test]
fn endpoint_examples() {
    let a = Interval::new(1.0, 2.0) + Interval::new(3.0, 4.0);
    assert!(a.contains_interval(Interval::new(4.0, 6.0)));
    assert!(a.width() < 6.0 - 4.0 + 1e-12);

    let m = Interval::new(-1.0, 2.0) * Interval::new(3.0, 4.0);
    assert!(m.contains_interval(Interval::new(-4.0, 8.0)));
    assert!(m.lo > -4.0 - 1e-12 && m.hi < 8.0 + 1e-12);

    let e = Interval::point(1.0).exp();
    assert!(e.contains(std::f64::consts::E));
    assert!(e.width() < 1e-13);
}

#[test]
fn zeta_examples() {
    assert_eq!(Interval::ZERO.expm1_over_x(), Interval::ONE);
    let z = Interval::new(-1e-30, 1e-30).expm1_over_x();
    assert!(z.contains(1.0));
    assert!(z.width() < 1e-12);
    // zeta(2) = (e^2-1)/2
    let z2 = Interval::point(2.0).expm1_over_x();
    assert!(z2.contains((2.0f64.exp() - 1.0) / 2.0));
}

#[test]
fn trig_ranges() {
    let pi = std::f64::consts::PI;
    let c = Interval::new(0.0, pi).cos();
    assert!(c.contains(1.0) && c.contains(-1.0));
    let c2 = Interval::new(pi / 4.0, pi / 3.0).cos();
    assert!(c2.lo > 0.49 && c2.hi < 0.7072);
    let s = Interval::new(0.0, pi).sin();
    assert!(s.contains(1.0) && s.contains(0.0));
    assert!(s.lo >= -1e-10);
    // wide interval saturates
    let w = Interval::new(-100.0, 100.0).cos();
    assert_eq!((w.lo, w.hi), (-1.0, 1.0));
}

#[test]
fn division_by_zero_enclosure_rejected() {
    let err = Interval::new(1.0, 2.0).checked_div(Interval::new(-1.0, 1.0));
    assert!(err.is_err());
    let ok = Interval::new(1.0, 2.0).checked_div(Interval::new(0.5, 1.0));
    assert!(ok.unwrap().contains(2.0));
}

#[test]
fn powi_negative_and_even() {
    let a = Interval::new(-2.0, 3.0).powi(2);
    assert!(a.contains(0.0) && a.contains(9.0) && !a.contains(-0.1) && a.hi < 9.0 + 1e-12);
    let b = Interval::new(2.0, 4.0).powi(-2);
    assert!(b.contains(1.0 / 16.0) && b.contains(1.0 / 4.0));
}
