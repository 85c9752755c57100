//! Chebyshev machinery tests: interpolation identities against closed-form
//! oracles, norm bounds, interpolation-error constants, and dominance of the
//! error bounds over densely sampled true errors.

use rand::{Rng, SeedableRng};
use rigor_core::{CInterval, Cplx, Interval};
use rigor_pde::cheb::*;

fn pt(x: f64) -> Interval {
    Interval::point(x)
}

#[test]
fn nodes_examples() {
    let n = cheb_nodes(2);
    assert_eq!(n[0], Interval::ONE);
    assert!(n[1] == Interval::ZERO);
    assert_eq!(n[2], -Interval::ONE);

    let n4 = cheb_nodes(4);
    assert!(n4[1].contains(std::f64::consts::FRAC_1_SQRT_2));
    assert!(n4[1].width() < 1e-14);
    assert_eq!(n4[0], Interval::ONE);
    assert_eq!(n4[4], -Interval::ONE);
}

#[test]
fn interpolate_examples() {
    // Constant data.
    let vals = vec![CInterval::point(Cplx::new(3.5, -1.0)); 5];
    let p = interpolate(&vals).unwrap();
    assert!(p.coeffs[0].contains(Cplx::new(3.5, -1.0)));
    for c in &p.coeffs[1..] {
        assert!(c.contains(Cplx::new(0.0, 0.0)) && c.width() < 1e-14);
    }

    // Identity data: P_1 = 1/2 in the doubled convention.
    for k in [1usize, 2, 5] {
        let nodes = cheb_nodes(k);
        let vals: Vec<CInterval> = nodes.iter().map(|t| CInterval::real(*t)).collect();
        let p = interpolate(&vals).unwrap();
        assert!(p.coeffs[1].re.contains(0.5), "K={k}: {:?}", p.coeffs[1]);
        assert!(p.coeffs[0].abs().hi < 1e-13);
    }

    // T_2 sampled at the K=2 nodes {1,-1,1} gives coefficients (0,0,1/2).
    let vals = vec![
        CInterval::point(Cplx::new(1.0, 0.0)),
        CInterval::point(Cplx::new(-1.0, 0.0)),
        CInterval::point(Cplx::new(1.0, 0.0)),
    ];
    let p = interpolate(&vals).unwrap();
    assert!(p.coeffs[0].abs().hi < 1e-14);
    assert!(p.coeffs[1].abs().hi < 1e-14);
    assert!(p.coeffs[2].re.contains(0.5) && p.coeffs[2].re.width() < 1e-13);
}

#[test]
fn interpolation_is_projection_on_polynomials() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    for k in [1usize, 3, 7, 12] {
        for _ in 0..20 {
            let coeffs: Vec<CInterval> = (0..=k)
                .map(|_| {
                    CInterval::point(Cplx::new(
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                    ))
                })
                .collect();
            let p = ChebPoly::new(coeffs.clone());
            let vals: Vec<CInterval> = cheb_nodes(k).into_iter().map(|t| p.eval(t)).collect();
            let q = interpolate(&vals).unwrap();
            for j in 0..=k {
                assert!(
                    q.coeffs[j].contains_interval(CInterval::point(coeffs[j].mid()))
                        || q.coeffs[j].contains(coeffs[j].mid()),
                    "K={k} coeff {j} not recovered"
                );
            }
        }
    }
}

#[test]
fn eval_reproduces_node_data() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    for k in [2usize, 6] {
        let vals: Vec<CInterval> = (0..=k)
            .map(|_| CInterval::point(Cplx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        let p = interpolate(&vals).unwrap();
        for (j, t) in cheb_nodes(k).into_iter().enumerate() {
            let e = p.eval(t);
            assert!(
                (e - vals[j]).abs().hi < 1e-12,
                "K={k} node {j}: {:?} vs {:?}",
                e,
                vals[j]
            );
        }
    }
}

#[test]
fn derivative_oracle() {
    // T_3' = 3 T_0 + 6 T_2, i.e. stored coefficients (3, 0, 3).
    let vals: Vec<CInterval> = cheb_nodes(3)
        .into_iter()
        .map(|t| {
            let t3 = t.powi(3).scale(4.0) - t.scale(3.0);
            CInterval::real(t3)
        })
        .collect();
    let p = interpolate(&vals).unwrap();
    let d = p.derivative();
    assert!(d.coeffs[0].re.contains(3.0));
    assert!(d.coeffs[1].abs().hi < 1e-12);
    assert!(d.coeffs[2].re.contains(3.0));

    // Derivative of a constant is zero.
    let c = ChebPoly::constant(CInterval::ONE);
    assert!(cheb_norm_bound(&c.derivative(), 1.0).hi == 0.0);
}

#[test]
fn norm_bound_examples() {
    // P = T_1 is stored as (0, 1/2).
    let t1 = ChebPoly::new(vec![
        CInterval::ZERO,
        CInterval::real(pt(0.5)),
    ]);
    let c0 = cheb_norm_bound(&t1, 1.0);
    assert!(c0.contains(1.0) && c0.width() < 1e-14);
    let e2 = cheb_norm_bound(&t1, 2.0);
    assert!(e2.contains(1.25) && e2.width() < 1e-13);
    assert!(cheb_norm_bound(&ChebPoly::zeros(4), 3.0).hi == 0.0);
}

#[test]
fn product_oracle() {
    // T_1 * T_1 = (T_0 + T_2)/2, stored ((1/2), 0, (1/4)).
    let t1 = ChebPoly::new(vec![CInterval::ZERO, CInterval::real(pt(0.5))]);
    let p = t1.mul(&t1);
    assert!(p.coeffs[0].re.contains(0.5));
    assert!(p.coeffs[1].abs().hi < 1e-14);
    assert!(p.coeffs[2].re.contains(0.25));

    // Random check: (p*q)(t) = p(t) q(t) at sample points.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mk = |rng: &mut rand_chacha::ChaCha8Rng, k: usize| {
        ChebPoly::new(
            (0..=k)
                .map(|_| {
                    CInterval::point(Cplx::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ))
                })
                .collect(),
        )
    };
    let p = mk(&mut rng, 4);
    let q = mk(&mut rng, 3);
    let r = p.mul(&q);
    for i in 0..9 {
        let t = pt(-1.0 + 0.25 * i as f64);
        let want = p.eval(t) * q.eval(t);
        let got = r.eval(t);
        assert!((want - got).abs().lo < 1e-12);
    }
}

#[test]
fn error_vanishes_at_endpoints() {
    // f - P_K f = 0 at t = +-1 because both endpoints are nodes.
    let k = 5;
    let f = |t: Interval| CInterval::real(t.scale(2.0).sin() + t.powi(2));
    let vals: Vec<CInterval> = cheb_nodes(k).into_iter().map(f).collect();
    let p = interpolate(&vals).unwrap();
    for t in [Interval::ONE, -Interval::ONE] {
        let d = f(t) - p.eval(t);
        assert!(d.abs().hi < 1e-12);
    }
}

#[test]
fn lebesgue_constants_certified() {
    // Classical exact values for small K.
    assert!((lebesgue_bnb_upper(1) - 1.0).abs() < 2e-5);
    assert!((lebesgue_bnb_upper(2) - 1.25).abs() < 2e-5);
    assert!((lebesgue_bnb_upper(3) - 5.0 / 3.0).abs() < 2e-5);
    // The fixed constants used by sigma_formula dominate the certified
    // branch-and-bound upper bound, hence dominate the true constant.
    assert!(lebesgue_bnb_upper(4) <= 1.7988);
    assert!(lebesgue_bnb_upper(5) <= 1.9889);
    assert!(lebesgue_bnb_upper(6) <= 2.1044);
    // The logarithmic fallback dominates the true constant for larger K.
    for k in 7..=12 {
        let log_bound = 2.0 / std::f64::consts::PI * ((k + 1) as f64).ln() + 1.0;
        assert!(lebesgue_bnb_upper(k) <= log_bound, "K={k}");
    }
}

#[test]
fn sigma_formula_examples() {
    // K=2, l=2: 1/(2 * 3!) = 1/12.
    let s = sigma_formula(2, 2).unwrap();
    assert!(s.contains(1.0 / 12.0) && s.width() < 1e-15);
    // Reference values for l=0.
    for (k, want) in [(2usize, 1.0), (3, 1.0), (4, 0.8793), (5, 0.7825), (6, 0.6966)] {
        let s = sigma_formula(k, 0).unwrap();
        assert!(
            (s.hi - want).abs() < 1e-4,
            "K={k}: sigma={} want {want}",
            s.hi
        );
    }
    assert!(sigma_formula(3, 4).is_err());
    assert!(sigma_formula(0, 0).is_err());
}

#[test]
fn sigma_formula_dominates_sampled_error() {
    // f(t) = sin(a t + b): all derivative norms bounded by |a|^m.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let k = rng.gen_range(1..=8usize);
        let l = rng.gen_range(0..=k);
        let a: f64 = rng.gen_range(0.3..3.0);
        let b: f64 = rng.gen_range(-3.0..3.0);
        let f = |t: Interval| CInterval::real((t.scale(a) + pt(b)).sin());
        let vals: Vec<CInterval> = cheb_nodes(k).into_iter().map(f).collect();
        let p = interpolate(&vals).unwrap();
        let mut max_err: f64 = 0.0;
        for i in 0..=400 {
            let t = pt(-1.0 + i as f64 / 200.0);
            max_err = max_err.max((f(t) - p.eval(t)).abs().lo);
        }
        let deriv_norm = a.powi(l as i32 + 1);
        let bound = sigma_formula(k, l).unwrap().hi * deriv_norm;
        assert!(
            max_err <= bound + 1e-12,
            "K={k} l={l} a={a}: err {max_err} > bound {bound}"
        );
    }
}

#[test]
fn sigma_optimal_small_k() {
    let s2 = sigma_optimal(2).unwrap();
    let exact = (14.0 * 7f64.sqrt() - 20.0) / 27.0;
    assert!(s2.contains(exact), "{s2:?} vs {exact}");
    assert!(s2.lo <= 0.6312 && s2.hi >= 0.6311, "{s2:?}");
    assert!(s2.hi <= sigma_formula(2, 0).unwrap().hi);

    let s3 = sigma_optimal(3).unwrap();
    assert!(s3.lo <= 0.6667 && s3.hi >= 0.6666, "{s3:?}");
    assert!(s3.hi <= sigma_formula(3, 0).unwrap().hi);

    assert!(sigma_optimal(7).is_err());
}

#[test]
fn sigma_optimal_is_valid_constant() {
    // The optimizer output must still dominate sampled interpolation errors
    // of C^1 functions.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
    let k = 2;
    let s = sigma_optimal(k).unwrap().hi;
    for _ in 0..20 {
        let a: f64 = rng.gen_range(0.3..4.0);
        let b: f64 = rng.gen_range(-3.0..3.0);
        let f = |t: Interval| CInterval::real((t.scale(a) + pt(b)).sin());
        let vals: Vec<CInterval> = cheb_nodes(k).into_iter().map(f).collect();
        let p = interpolate(&vals).unwrap();
        let mut max_err: f64 = 0.0;
        for i in 0..=400 {
            let t = pt(-1.0 + i as f64 / 200.0);
            max_err = max_err.max((f(t) - p.eval(t)).abs().lo);
        }
        assert!(max_err <= s * a + 1e-12, "a={a}: {max_err} > {}", s * a);
    }
}

#[test]
fn interp_error_exp_examples() {
    // lambda = 0: bound is exactly 4 rho^-K / (rho - 1).
    let b = interp_error_exp(CInterval::ZERO, 1.0, 3, 2.0).unwrap();
    assert!(b.contains(4.0 / 8.0) && b.width() < 1e-13);

    // lambda = i, tau = 1, rho = 2, K = 4: (4/16) e^{3/4}.
    let b = interp_error_exp(CInterval::point(Cplx::new(0.0, 1.0)), 1.0, 4, 2.0).unwrap();
    let want = 0.25 * (0.75f64).exp();
    assert!(b.contains(want), "{b:?} vs {want}");

    assert!(interp_error_exp(CInterval::ZERO, 1.0, 3, 1.0).is_err());
}

fn sampled_exp_interp_error(lambda: Cplx, tau: f64, k: usize) -> f64 {
    let g = |t: Interval| CInterval::point(lambda).mul_real((t + Interval::ONE).scale(tau)).exp();
    let vals: Vec<CInterval> = cheb_nodes(k).into_iter().map(g).collect();
    let p = interpolate(&vals).unwrap();
    let mut max_err: f64 = 0.0;
    for i in 0..=1000 {
        let t = pt(-1.0 + i as f64 / 500.0);
        max_err = max_err.max((g(t) - p.eval(t)).abs().lo);
    }
    max_err
}

#[test]
fn interp_error_exp_dominates_sampled() {
    for (re, im, tau, k) in [
        (-5.0, 0.0, 1.0, 6usize),
        (-1.0, 3.0, 0.5, 4),
        (0.3, -2.0, 0.25, 5),
        (-40.0, 10.0, 1.0, 3),
    ] {
        let lam = CInterval::point(Cplx::new(re, im));
        let bound = interp_error_exp_best(lam, tau, k).unwrap().hi;
        let true_err = sampled_exp_interp_error(Cplx::new(re, im), tau, k);
        assert!(
            true_err <= bound + 1e-12,
            "lambda={re}+{im}i tau={tau} K={k}: {true_err} > {bound}"
        );
    }
}

#[test]
fn interp_error_integral_examples() {
    let table = SigmaTable::formula_only(8).unwrap();
    // phi = 0 gives 0 in both branches.
    let z = ChebPoly::zeros(3);
    let lam = CInterval::point(Cplx::new(-1.0, 0.0));
    let s = interp_error_integral(lam, 1.0, 4, &z, IntegralErrorMode::Smooth { q: 0 }, &table)
        .unwrap();
    assert!(s.hi == 0.0);
    let a = interp_error_integral(
        lam,
        1.0,
        4,
        &z,
        IntegralErrorMode::Analytic { rho: 2.0 },
        &table,
    )
    .unwrap();
    assert!(a.hi == 0.0);

    // zeta is evaluated continuously through 0: lambda purely imaginary.
    let lam_im = CInterval::point(Cplx::new(0.0, 2.0));
    let one = ChebPoly::constant(CInterval::ONE);
    let s = interp_error_integral(
        lam_im,
        1.0,
        4,
        &one,
        IntegralErrorMode::Smooth { q: 0 },
        &table,
    )
    .unwrap();
    assert!(s.hi.is_finite() && s.lo >= 0.0);
}

#[test]
fn interp_error_integral_dominates_sampled() {
    // F(t) = tau int_{-1}^t e^{tau (t-s) lambda} ds with tau=1, lambda=-1:
    // F(t) = 1 - e^{-(t+1)}.
    let table = SigmaTable::formula_only(8).unwrap();
    let k = 4;
    let f = |t: Interval| CInterval::real(Interval::ONE - (-(t + Interval::ONE)).exp());
    let vals: Vec<CInterval> = cheb_nodes(k).into_iter().map(f).collect();
    let p = interpolate(&vals).unwrap();
    let mut true_err: f64 = 0.0;
    for i in 0..=1000 {
        let t = pt(-1.0 + i as f64 / 500.0);
        true_err = true_err.max((f(t) - p.eval(t)).abs().lo);
    }
    let lam = CInterval::point(Cplx::new(-1.0, 0.0));
    let one = ChebPoly::constant(CInterval::ONE);
    let smooth =
        interp_error_integral(lam, 1.0, k, &one, IntegralErrorMode::Smooth { q: 0 }, &table)
            .unwrap()
            .hi;
    let analytic = interp_error_integral(
        lam,
        1.0,
        k,
        &one,
        IntegralErrorMode::Analytic { rho: 3.0 },
        &table,
    )
    .unwrap()
    .hi;
    assert!(true_err <= smooth + 1e-12, "{true_err} > {smooth}");
    assert!(true_err <= analytic + 1e-12, "{true_err} > {analytic}");
}

#[test]
fn refinement_examples() {
    // Degree-<=K data: the polynomial part vanishes, only the tail remains.
    let g = |t: Interval| CInterval::real(t.scale(0.5) + pt(0.25));
    let tail = pt(1e-3);
    let r = refine_with_k0(g, 2, 10, tail).unwrap();
    assert!(r.hi < 1e-3 + 1e-10, "{r:?}");

    // K0 = K reduces to the tail bound alone.
    let g2 = |t: Interval| CInterval::real((t.scale(2.0)).sin());
    let r = refine_with_k0(g2, 3, 3, pt(0.125)).unwrap();
    assert!((r.hi - 0.125).abs() < 1e-10);

    // Exponential family: refined bound sharper than direct, above truth.
    let lam = Cplx::new(-3.0, 0.0);
    let lam_i = CInterval::point(lam);
    let direct = interp_error_exp_best(lam_i, 1.0, 2).unwrap().hi;
    let refined = refine_exp_error(lam_i, 1.0, 2, 20).unwrap().hi;
    let true_err = sampled_exp_interp_error(lam, 1.0, 2);
    assert!(refined <= direct + 1e-15);
    assert!(refined <= 0.5 * direct, "refinement gained nothing: {refined} vs {direct}");
    assert!(true_err <= refined + 1e-12, "{true_err} > {refined}");
}

#[test]
fn sigma_table_round_trip() {
    let t = SigmaTable::formula_only(6).unwrap();
    let text = t.to_text();
    let u = SigmaTable::from_text(&text).unwrap();
    assert_eq!(t.k_max, u.k_max);
    for k in 1..=6 {
        for l in 0..=k {
            assert_eq!(t.sigma(k, l).lo, u.sigma(k, l).lo);
            assert_eq!(t.sigma(k, l).hi, u.sigma(k, l).hi);
        }
    }
    assert!(SigmaTable::from_text("nonsense").is_err());
}
