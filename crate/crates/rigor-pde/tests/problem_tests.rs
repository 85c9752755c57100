//! Tests for the problem layer: rescaling, the Fourier x Chebyshev algebra,
//! residual evaluation, derivative consistency, and orbit generation.

use rigor_core::{CInterval, Cplx, Interval};
use rigor_pde::cheb::ChebPoly;
use rigor_pde::linop::LinearizedOperator;
use rigor_pde::problem::*;
use rigor_pde::seqspace::SeqL1;

struct Lcg(u64);

impl Lcg {
    fn unit(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64)
    }

    fn signed(&mut self) -> f64 {
        2.0 * self.unit() - 1.0
    }
}

fn heat_problem(l_x: f64, t_end: f64, f: SeqL1, nu: f64) -> PdeProblem {
    PdeProblem::new(1, vec![vec![0.0], vec![0.0]], l_x, t_end, f, nu).unwrap()
}

fn fisher_problem(l_x: f64, t_end: f64, f: SeqL1, nu: f64) -> PdeProblem {
    // u_t = u_xx + u - u^2: g^(0)(u) = u - u^2, g^(1) = 0.
    PdeProblem::new(1, vec![vec![0.0, 1.0, -1.0], vec![0.0]], l_x, t_end, f, nu).unwrap()
}

fn random_fun(rng: &mut Lcg, n_max: i64, k: usize, nu: f64) -> FourierChebFun {
    let mut u = FourierChebFun::zeros(n_max, k, nu);
    for n in -n_max..=n_max {
        let mut p = ChebPoly::zeros(k);
        for c in p.coeffs.iter_mut() {
            *c = CInterval::point(Cplx::new(rng.signed(), rng.signed()));
        }
        u.set(n, p);
    }
    u
}

#[test]
fn rescaling_examples() {
    let f = SeqL1::delta(0, 1.0);
    // Period 4 pi halves the wavenumber: mu = 1/4, c_0 = 1.
    let p = fisher_problem(4.0 * std::f64::consts::PI, 4.0, f.clone(), 1.0);
    assert!((p.mu - 0.25).abs() < 1e-15);
    assert!((p.cj[0] - 1.0).abs() < 1e-15);
    assert!((p.cj[1] - 0.5).abs() < 1e-15);

    // Period 2 pi leaves everything unscaled.
    let p = heat_problem(2.0 * std::f64::consts::PI, 1.0, f.clone(), 1.0);
    assert!((p.mu - 1.0).abs() < 1e-15);
    assert!((p.cj[0] - 1.0).abs() < 1e-15);

    // Fourth-order problem on period 6 pi: q = 1/3, mu = q^4 = 1/81.
    let p4 = PdeProblem::new(
        2,
        vec![vec![0.0], vec![0.0], vec![0.0], vec![0.0]],
        6.0 * std::f64::consts::PI,
        1.0,
        f,
        1.0,
    )
    .unwrap();
    assert!((p4.mu - 1.0 / 81.0).abs() < 1e-15);
    assert!((p4.cj[2] - 1.0 / 9.0).abs() < 1e-15);

    // Invalid parameter combinations are rejected.
    assert!(PdeProblem::new(0, vec![], 1.0, 1.0, SeqL1::delta(0, 1.0), 1.0).is_err());
    assert!(PdeProblem::new(
        1,
        vec![vec![0.0], vec![0.0]],
        1.0,
        1.0,
        SeqL1::delta(0, 1.0),
        0.5
    )
    .is_err());
}

#[test]
fn endpoint_evaluation_exact() {
    // P(t) = 1 + 2*(0.5)T_1 + 2*(-0.25)T_2: P(1) = 1 + 1 - 0.5 = 1.5,
    // P(-1) = 1 - 1 - 0.5 = -0.5.
    let mut u = FourierChebFun::zeros(0, 2, 1.0);
    let mut p = ChebPoly::zeros(2);
    p.coeffs[0] = CInterval::point(Cplx::new(1.0, 0.0));
    p.coeffs[1] = CInterval::point(Cplx::new(0.5, 0.0));
    p.coeffs[2] = CInterval::point(Cplx::new(-0.25, 0.0));
    u.set(0, p);
    let at1 = u.eval_one();
    assert!(at1.get(0).re.contains(1.5));
    let atm1 = u.eval_minus_one();
    assert!(atm1.get(0).re.contains(-0.5));
}

#[test]
fn norm_dominates_pointwise_values() {
    // sup_t ||u(t)||_l1nu <= ||u||, sampled on a dense t grid.
    let mut rng = Lcg(0x1234_5678_9abc_def0);
    for _ in 0..20 {
        let u = random_fun(&mut rng, 3, 4, 1.25);
        let norm = u.norm_xkn();
        for i in 0..=40 {
            let t = Interval::point(-1.0 + 2.0 * (i as f64) / 40.0);
            let v = u.eval_t(t).l1nu_norm();
            assert!(
                v.lo <= norm.hi * (1.0 + 1e-12),
                "pointwise {} exceeds norm {}",
                v.lo,
                norm.hi
            );
        }
    }
}

#[test]
fn product_matches_pointwise_product() {
    let mut rng = Lcg(0xfeed_beef_0000_0001);
    let a = random_fun(&mut rng, 2, 3, 1.0);
    let b = random_fun(&mut rng, 2, 2, 1.0);
    let ab = a.mul(&b);
    // Check on a (t, x) grid: Fourier sums of the product match products of
    // Fourier sums.
    for it in 0..5 {
        let t = Interval::point(-1.0 + 2.0 * (it as f64) / 4.0);
        for ix in 0..7 {
            let x = 2.0 * std::f64::consts::PI * (ix as f64) / 7.0;
            let eval = |u: &FourierChebFun| -> Cplx {
                u.mode_iter()
                    .map(|(n, p)| p.eval(t).mid() * Cplx::new(0.0, n as f64 * x).exp())
                    .sum()
            };
            let lhs = eval(&ab);
            let rhs = eval(&a) * eval(&b);
            assert!((lhs - rhs).norm() < 1e-10, "t={t:?} x={x}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn apply_poly_scalar_example() {
    // u = 0.5 constant on mode 0, g(u) = u - u^2: g(0.5) = 0.25.
    let mut u = FourierChebFun::zeros(0, 0, 1.0);
    u.set(0, ChebPoly::constant(CInterval::point(Cplx::new(0.5, 0.0))));
    let g = u.apply_poly(&[
        Interval::ZERO,
        Interval::ONE,
        Interval::point(-1.0),
    ]);
    assert!(g.get(0).coeffs[0].re.contains(0.25));
}

#[test]
fn gamma_vanishes_on_exact_linear_cancellation() {
    // Pure heat with ubar = 0: gamma(0) = 0 (finite part cancels because
    // L_tilde equals the diagonal symbol exactly and R_N is enclosed near 0).
    let f = SeqL1::delta(0, 1.0);
    let problem = heat_problem(2.0 * std::f64::consts::PI, 1.0, f, 1.0);
    let big_n = 3i64;
    let seg = FourierChebFun::zeros(big_n, 2, 1.0);
    let op = LinearizedOperator::from_segment(&problem, &seg, 0.5, big_n).unwrap();
    let gam = gamma_eval(&seg, &problem, &op);
    for (_, p) in gam.mode_iter() {
        for c in &p.coeffs {
            assert!(c.re.contains(0.0) && c.im.contains(0.0));
            assert!(c.abs().hi < 1e-12);
        }
    }
}

#[test]
fn gamma_scalar_mode_oracle() {
    // ubar = 1/2 constant on mode 0 for the logistic nonlinearity on period
    // 2 pi. With vbar = g'(1/2) = 0, the operator on mode 0 is lambda_0 = 0,
    // so gamma_0 = g(1/2) - 0 = 1/4.
    let f = SeqL1::delta(0, 1.0);
    let problem = fisher_problem(2.0 * std::f64::consts::PI, 1.0, f, 1.0);
    let big_n = 2i64;
    let mut seg = FourierChebFun::zeros(big_n, 1, 1.0);
    seg.set(0, ChebPoly::constant(CInterval::point(Cplx::new(0.5, 0.0))).resized(1));
    let op = LinearizedOperator::from_segment(&problem, &seg, 0.5, big_n).unwrap();
    assert!(op.vbar[0].get(0).abs().hi < 1e-14, "g'(1/2) = 0");
    let gam = gamma_eval(&seg, &problem, &op);
    let g0 = gam.get(0);
    assert!(g0.coeffs[0].re.contains(0.25));
    assert!(g0.coeffs[0].abs().hi - 0.25 < 1e-10);
}

#[test]
fn residual_zero_for_zero_data() {
    // f = 0, ubar = 0, g(0) = 0: F = 0.
    let f = SeqL1::zeros(2, 1.0);
    let problem = fisher_problem(2.0 * std::f64::consts::PI, 1.0, f, 1.0);
    let big_n = 2i64;
    let k = 2usize;
    let seg = FourierChebFun::zeros(big_n, k, 1.0);
    let op = LinearizedOperator::from_segment(&problem, &seg, 0.5, big_n).unwrap();
    let boundary = vec![CInterval::ZERO; op.dim()];
    let fv = evaluate_f_segment(&problem, &op, &seg, &boundary, k, 1e-12).unwrap();
    for row in &fv {
        for v in row {
            assert!(v.re.contains(0.0) && v.im.contains(0.0));
            assert!(v.abs().hi < 1e-10);
        }
    }
}

#[test]
fn residual_contains_zero_for_exact_linear_solution() {
    // Pure heat, f = cos(x): exact mode evolution u_n(t) = e^{tau (t+1)
    // lambda_n} f_n. Interpolating the exact solution at high order K makes
    // the K-truncated residual tiny; the enclosure must reflect it.
    let big_n = 2i64;
    let k = 12usize;
    let tau = 0.25;
    let mut f = SeqL1::zeros(big_n, 1.0);
    f.set(1, CInterval::point(Cplx::new(0.5, 0.0)));
    f.set(-1, CInterval::point(Cplx::new(0.5, 0.0)));
    let problem = heat_problem(2.0 * std::f64::consts::PI, 2.0 * tau, f.clone(), 1.0);
    // Build the exact-solution interpolant.
    let nodes = rigor_pde::cheb::cheb_nodes(k);
    let mut seg = FourierChebFun::zeros(big_n, k, 1.0);
    for n in -big_n..=big_n {
        let lam = -(n * n) as f64;
        let vals: Vec<CInterval> = nodes
            .iter()
            .map(|t| {
                let z = (tau * (t.mid() + 1.0) * lam).exp();
                CInterval::point(f.get(n).mid() * z)
            })
            .collect();
        seg.set(n, rigor_pde::cheb::interpolate(&vals).unwrap());
    }
    let op = LinearizedOperator::from_segment(&problem, &seg, tau, big_n).unwrap();
    let boundary: Vec<CInterval> = (-big_n..=big_n).map(|n| f.get(n)).collect();
    let fv = evaluate_f_segment(&problem, &op, &seg, &boundary, k, 1e-12).unwrap();
    for row in &fv {
        for v in row {
            assert!(
                v.abs().hi < 1e-8,
                "residual {} too large for exact solution",
                v.abs().hi
            );
        }
    }
}

#[test]
fn derivative_matches_finite_differences() {
    // Directional finite differences of the residual match the assembled
    // derivative block on a small logistic instance.
    let big_n = 2i64;
    let k = 2usize;
    let tau = 0.3;
    let mut f = SeqL1::zeros(big_n, 1.0);
    f.set(0, CInterval::point(Cplx::new(0.4, 0.0)));
    f.set(1, CInterval::point(Cplx::new(0.1, 0.05)));
    f.set(-1, CInterval::point(Cplx::new(0.1, -0.05)));
    let problem = fisher_problem(2.0 * std::f64::consts::PI, 2.0 * tau, f.clone(), 1.0);
    let mut rng = Lcg(0xabcdef01_2345_6789);
    let seg = {
        let mut s = random_fun(&mut rng, big_n, k, 1.0);
        s = s.scale(0.3);
        s
    };
    let op = LinearizedOperator::from_segment(&problem, &seg, tau, big_n).unwrap();
    let sd = assemble_segment_derivative(&problem, &op, &seg, k, 1e-12).unwrap();
    let boundary: Vec<CInterval> = (-big_n..=big_n).map(|n| f.get(n)).collect();

    let h = random_fun(&mut rng, big_n, k, 1.0);
    let eps = 1e-6;
    let plus = seg.add(&h.scale(eps));
    let minus = seg.add(&h.scale(-eps));
    let fp = evaluate_f_segment(&problem, &op, &plus, &boundary, k, 1e-12).unwrap();
    let fm = evaluate_f_segment(&problem, &op, &minus, &boundary, k, 1e-12).unwrap();

    // Flatten h in the mode-major layout used by the derivative block.
    let dim = op.dim();
    let mut hflat = vec![CInterval::ZERO; dim * (k + 1)];
    for mode in 0..dim {
        let p = h.get(mode as i64 - big_n);
        for kk in 0..=k {
            hflat[mode * (k + 1) + kk] = p.coeff(kk);
        }
    }
    let dfh = sd.df_diag.matvec(&hflat);
    for mode in 0..dim {
        for kk in 0..=k {
            let fd = (fp[kk][mode].mid() - fm[kk][mode].mid()) / (2.0 * eps);
            let an = dfh[mode * (k + 1) + kk].mid();
            assert!(
                (fd - an).norm() < 1e-7,
                "mode {mode} node {kk}: fd={fd} analytic={an}"
            );
        }
    }
}

#[test]
fn heat_orbit_matches_closed_form() {
    let big_n = 3i64;
    let mut f = SeqL1::zeros(big_n, 1.0);
    f.set(1, CInterval::point(Cplx::new(0.5, 0.0)));
    f.set(-1, CInterval::point(Cplx::new(0.5, 0.0)));
    let t_end = 0.5;
    let problem = heat_problem(2.0 * std::f64::consts::PI, t_end, f, 1.0);
    let taus = equal_taus(t_end, 1);
    let orbit = approximate_orbit(&problem, big_n, 6, &taus).unwrap();
    let end = orbit.segments[0].eval_one();
    let expect = 0.5 * (-t_end).exp();
    let got = end.get(1).mid().re;
    assert!(
        (got - expect).abs() < 0.01 * expect,
        "mode decay {got} vs {expect}"
    );
}

#[test]
fn logistic_orbit_approaches_equilibrium() {
    let big_n = 1i64;
    let mut f = SeqL1::zeros(big_n, 1.0);
    f.set(0, CInterval::point(Cplx::new(0.5, 0.0)));
    let t_end = 4.0;
    let problem = fisher_problem(2.0 * std::f64::consts::PI, t_end, f, 1.0);
    let orbit = approximate_orbit(&problem, big_n, 4, &equal_taus(t_end, 4)).unwrap();
    let end = orbit.segments[3].eval_one();
    let expect = 1.0 / (1.0 + (-t_end).exp());
    let got = end.get(0).mid().re;
    assert!(
        (got - expect).abs() < 0.01 * expect,
        "logistic endpoint {got} vs {expect}"
    );
}

#[test]
fn newton_sweep_reduces_residual() {
    let big_n = 2i64;
    let k = 4usize;
    let mut f = SeqL1::zeros(big_n, 1.0);
    f.set(0, CInterval::point(Cplx::new(0.4, 0.0)));
    f.set(1, CInterval::point(Cplx::new(0.1, 0.0)));
    f.set(-1, CInterval::point(Cplx::new(0.1, 0.0)));
    let t_end = 0.5;
    let problem = fisher_problem(2.0 * std::f64::consts::PI, t_end, f, 1.0);
    let mut orbit = approximate_orbit(&problem, big_n, k, &equal_taus(t_end, 2)).unwrap();
    let r0 = newton_sweep(&problem, &mut orbit, big_n, k).unwrap();
    let r1 = newton_sweep(&problem, &mut orbit, big_n, k).unwrap();
    let r2 = newton_sweep(&problem, &mut orbit, big_n, k).unwrap();
    assert!(r1 < r0 || r0 < 1e-10, "first sweep: {r0} -> {r1}");
    assert!(r2 < 1e-8, "converged residual {r2}");
}

#[test]
fn orbit_text_roundtrip() {
    let big_n = 2i64;
    let mut f = SeqL1::zeros(big_n, 1.0);
    f.set(0, CInterval::point(Cplx::new(0.3, 0.0)));
    let problem = fisher_problem(2.0 * std::f64::consts::PI, 0.4, f, 1.0);
    let orbit = approximate_orbit(&problem, big_n, 3, &equal_taus(0.4, 2)).unwrap();
    let text = orbit_to_text(&orbit);
    let back = orbit_from_text(&text).unwrap();
    assert_eq!(back.segments.len(), orbit.segments.len());
    for (a, b) in orbit.segments.iter().zip(back.segments.iter()) {
        for n in -big_n..=big_n {
            let pa = a.get(n);
            let pb = b.get(n);
            for kk in 0..=a.k_order() {
                assert_eq!(pa.coeff(kk).mid(), pb.coeff(kk).mid());
            }
        }
    }
    // Corrupted headers are rejected.
    assert!(orbit_from_text("garbage").is_err());
}
