//! Tests for the Y / Z / W validation estimates: trivial collapses on linear
//! problems, dominance against independently evaluated oracles (dense
//! sampling, full block-matrix assembly, direct quadrature in deviation
//! directions), and monotonicity under widening.

use rigor_core::{CIMat, CInterval, CMat, Cplx, Interval};
use rigor_pde::bounds::*;
use rigor_pde::cheb::{cheb_nodes, ChebPoly, SigmaTable};
use rigor_pde::linop::{chi_bound, LinearizedOperator};
use rigor_pde::problem::{
    approximate_orbit, e1_matrix, equal_taus, newton_sweep, FourierChebFun, PdeProblem,
    PiecewiseOrbit,
};
use rigor_pde::quadrature::exp_kernel_integral_tol;
use rigor_pde::seqspace::{SeqL1, Weights};

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

fn heat_problem(t_end: f64, f: SeqL1, nu: f64) -> PdeProblem {
    PdeProblem::new(
        1,
        vec![vec![0.0], vec![0.0]],
        2.0 * std::f64::consts::PI,
        t_end,
        f,
        nu,
    )
    .unwrap()
}

fn fisher_problem(t_end: f64, f: SeqL1, nu: f64) -> PdeProblem {
    PdeProblem::new(
        1,
        vec![vec![0.0, 1.0, -1.0], vec![0.0]],
        2.0 * std::f64::consts::PI,
        t_end,
        f,
        nu,
    )
    .unwrap()
}

fn refined_orbit(problem: &PdeProblem, big_n: i64, k: usize, m: usize) -> PiecewiseOrbit {
    let taus = equal_taus(problem.t_end, m);
    let mut orbit = approximate_orbit(problem, big_n, k, &taus).unwrap();
    for _ in 0..4 {
        newton_sweep(problem, &mut orbit, big_n, k).unwrap();
    }
    orbit
}

fn test_cfg() -> BoundsConfig {
    BoundsConfig {
        k0: 12,
        quad_tol: 1e-12,
        r_star: 0.1,
        naive_linearization: false,
    }
}

fn sigma_table() -> SigmaTable {
    SigmaTable::formula_only(12).unwrap()
}

fn zero_vbar_operator(mu: f64, tau: f64, big_n: i64, nu: f64) -> LinearizedOperator {
    let vbar = vec![SeqL1::zeros(big_n, nu); 2];
    LinearizedOperator::build(vbar, 1, mu, vec![0.0, 0.0], tau, big_n).unwrap()
}

/// X^KN norm of a flat (mode-major) coefficient vector.
fn xkn_norm(v: &[CInterval], big_n: i64, k: usize, nu: f64) -> Interval {
    let mut acc = Interval::ZERO;
    let nu_i = Interval::point(nu);
    let kp1 = k + 1;
    for (c, x) in v.iter().enumerate() {
        let n = (c / kp1) as i64 - big_n;
        let kk = c % kp1;
        let w = nu_i.powi(n.unsigned_abs() as i32);
        acc = acc + x.abs() * if kk == 0 { w } else { w.scale(2.0) };
    }
    acc
}

#[test]
fn g_interp_bound_first_subdomain_is_zero() {
    let op = zero_vbar_operator(1.0, 0.25, 2, 1.0);
    let wbar = vec![CInterval::point(Cplx::new(0.7, -0.2)); 5];
    let b = g_interp_bound(&op, 2, 12, 1.0, &wbar, 0).unwrap();
    assert_eq!(b, Interval::ZERO);
    // Zero endpoint data gives zero for any subdomain index.
    let b1 = g_interp_bound(&op, 2, 12, 1.0, &vec![CInterval::ZERO; 5], 1).unwrap();
    assert!(b1.hi < 1e-300);
}

#[test]
fn g_interp_bound_dominates_dense_sampling() {
    // Diagonal operator, lambda_n = -10 n^2, so the interpolation error of
    // each mode's boundary kernel can be sampled directly.
    let big_n = 1i64;
    let tau = 0.1;
    let nu = 1.1;
    let k = 2usize;
    let op = zero_vbar_operator(10.0, tau, big_n, nu);
    let mut rng = Lcg(7);
    let wbar: Vec<CInterval> = (0..3)
        .map(|_| CInterval::point(Cplx::new(rng.signed(), rng.signed())))
        .collect();
    let bound = g_interp_bound(&op, k, 20, nu, &wbar, 1).unwrap();

    let nodes: Vec<f64> = cheb_nodes(k).iter().map(|t| t.mid()).collect();
    let mut oracle = 0.0f64;
    for (idx, n) in (-big_n..=big_n).enumerate() {
        let lam = -10.0 * (n * n) as f64;
        let g = |t: f64| (tau * (t + 1.0) * lam).exp();
        // Lagrange interpolant through the K+1 nodes.
        let mut err: f64 = 0.0;
        for s in 0..=400 {
            let t = -1.0 + 2.0 * s as f64 / 400.0;
            let mut p = 0.0;
            for (a, &ta) in nodes.iter().enumerate() {
                let mut l = g(ta);
                for (b, &tb) in nodes.iter().enumerate() {
                    if a != b {
                        l *= (t - tb) / (ta - tb);
                    }
                }
                p += l;
            }
            err = err.max((g(t) - p).abs());
        }
        oracle += nu.powi(n.unsigned_abs() as i32) * err * wbar[idx].mid().norm();
    }
    assert!(
        bound.hi >= oracle * 0.999,
        "bound {} vs sampled {}",
        bound.hi,
        oracle
    );
    // And it should not be wildly loose for this diagonal case.
    assert!(bound.hi <= oracle * 10.0 + 1e-12);
}

#[test]
fn ginv_tail_coeffs_examples() {
    // Single subdomain: just the identity.
    let op = zero_vbar_operator(1.0, 0.5, 2, 1.0);
    let tails = vec![op.tail_poly()];
    let c = ginv_tail_coeffs(&tails, &[0.5], 2).unwrap();
    assert_eq!(c, vec![vec![1.0]]);

    // Two heat subdomains: the tail law is strictly dissipative, so the
    // positive part vanishes and the transfer coefficient is exactly 1.
    let tails2 = vec![op.tail_poly(), op.tail_poly()];
    let c2 = ginv_tail_coeffs(&tails2, &[0.5, 0.5], 2).unwrap();
    assert_eq!(c2[0][0], 1.0);
    assert_eq!(c2[1][1], 1.0);
    assert_eq!(c2[0][1], 0.0);
    assert!((c2[1][0] - 1.0).abs() < 1e-14);

    // Three subdomains, all dissipative: every coefficient stays <= 1.
    let tails3 = vec![op.tail_poly(), op.tail_poly(), op.tail_poly()];
    let c3 = ginv_tail_coeffs(&tails3, &[0.3, 0.3, 0.3], 2).unwrap();
    for row in &c3 {
        for v in row {
            assert!(*v <= 1.0 + 1e-12);
        }
    }
    // The coefficient skipping one interior subdomain picks up its decay:
    // mu_{3,1} = sup 2 tau P(n) <= 2*0.3*(-9) at N = 2.
    assert!(c3[2][0] <= (-2.0 * 0.3 * 9.0f64).exp() * (1.0 + 1e-10));
}

#[test]
fn linear_problem_bounds_collapse() {
    let nu = 1.0;
    let mut f = SeqL1::zeros(1, nu);
    f.set(0, CInterval::real(Interval::point(0.4)));
    f.set(1, CInterval::point(Cplx::new(0.2, -0.1)));
    f.set(-1, CInterval::point(Cplx::new(0.2, 0.1)));
    let problem = heat_problem(0.5, f, nu);
    let big_n = 2i64;
    let orbit = refined_orbit(&problem, big_n, 3, 2);
    let weights = vec![Weights::new(1.0, 1.0, nu); 2];
    let rep = compute_bounds(&problem, &orbit, big_n, &weights, &sigma_table(), &test_cfg())
        .unwrap();

    for m in 0..2 {
        for i in 0..2 {
            // No second derivative at all.
            assert_eq!(rep.w_kn[m][i], 0.0);
            assert_eq!(rep.w_infn[m][i], 0.0);
            assert_eq!(rep.w_inf[m][i], 0.0);
            // No nonlinearity feeding the tail equations.
            assert_eq!(rep.z_inf[m][i], 0.0);
            // The adapted operator matches the linearization up to the
            // eigen-enclosure defect, which is tiny here.
            assert!(rep.z_kn[m][i] < 1e-8, "z_kn = {}", rep.z_kn[m][i]);
            assert!(rep.z0[m][i] < 1e-6, "z0 = {}", rep.z0[m][i]);
        }
        // Initial data is fully resolved: no tail residual.
        assert_eq!(rep.y_inf[m], 0.0);
        // The finite system is solved to near machine precision.
        assert!(rep.y_kn[m] < 1e-9, "y_kn = {}", rep.y_kn[m]);
        assert!(rep.y_infn[m] < 1e-2);
        assert!(rep.z_total(m, m) < 0.5);
        assert!(rep.y_total(m) < 1e-1);
    }
}

#[test]
fn unresolved_tail_mass_lands_in_y_inf() {
    let nu = 1.0;
    let mut f = SeqL1::zeros(1, nu);
    f.set(0, CInterval::real(Interval::point(0.3)));
    let mut problem = heat_problem(0.5, f, nu);
    problem.f_tail_norm = Interval::point(1e-3);
    let big_n = 2i64;
    let orbit = refined_orbit(&problem, big_n, 3, 2);
    let weights = vec![Weights::new(1.0, 1.0, nu); 2];
    let rep = compute_bounds(&problem, &orbit, big_n, &weights, &sigma_table(), &test_cfg())
        .unwrap();
    // Dissipative tail: the mass can only shrink; on the first subdomain the
    // sup-norm transfer is exactly e^0 = 1.
    assert!(rep.y_inf[0] >= 0.999e-3);
    assert!(rep.y_inf[0] <= 1.0001e-3, "y_inf = {}", rep.y_inf[0]);
    // Reaching the second subdomain multiplies by e^{2 tau_1 P(n)} < 1.
    assert!(rep.y_inf[1] < 0.5 * rep.y_inf[0]);
}

#[test]
fn fisher_tail_constituents_match_hand_values() {
    // Zero orbit of the logistic problem: the deviation center equals the
    // true linearization, so Z_infty vanishes identically, while W_infty is
    // exactly chi * theta^2 |g''|.
    let nu = 1.05;
    let f = SeqL1::zeros(2, nu);
    let problem = fisher_problem(0.2, f, nu);
    let big_n = 2i64;
    let tau = 0.2;
    let orbit = PiecewiseOrbit {
        segments: vec![FourierChebFun::zeros(big_n, 2, nu)],
        taus: vec![tau],
    };
    let w = Weights::new(2.0, 0.5, nu);
    let theta = w.theta();
    let rep = compute_bounds(
        &problem,
        &orbit,
        big_n,
        &[w],
        &sigma_table(),
        &test_cfg(),
    )
    .unwrap();
    assert!(rep.z_inf[0][0] < 1e-14, "z_inf = {}", rep.z_inf[0][0]);
    let op = LinearizedOperator::from_segment(&problem, &orbit.segments[0], tau, big_n).unwrap();
    let chi = chi_bound(&op.tail_poly(), tau, 0, big_n).unwrap();
    let expected = chi.scale(2.0 * theta * theta);
    assert!(rep.w_inf[0][0] <= expected.hi * (1.0 + 1e-12));
    assert!(rep.w_inf[0][0] >= expected.lo * (1.0 - 1e-12));
    // Residual of the zero orbit with zero data is zero.
    assert!(rep.y_total(0) < 1e-12);
}

/// Assemble the full block matrices DF (enclosure) and A (floating point) of
/// a short orbit, exactly as the sweep defines them, and return the complete
/// defect R = I - A DF.
fn assemble_full_defect(
    problem: &PdeProblem,
    orbit: &PiecewiseOrbit,
    big_n: i64,
    k: usize,
) -> (CIMat, usize) {
    use rigor_pde::problem::{assemble_segment_derivative, build_segment_inverse};
    let m_count = orbit.m_count();
    let dim = (2 * big_n + 1) as usize;
    let d = dim * (k + 1);
    let e1 = e1_matrix(dim, k).to_interval();
    let total = m_count * d;
    let mut df = CIMat::zeros(total, total);
    let mut a_blocks: Vec<Vec<Option<CMat>>> = vec![vec![None; m_count]; m_count];
    let mut u_prev: Option<CMat> = None;
    for m in 0..m_count {
        let seg = &orbit.segments[m];
        let op = LinearizedOperator::from_segment(problem, seg, orbit.taus[m], big_n).unwrap();
        let sd = assemble_segment_derivative(problem, &op, seg, k, 1e-12).unwrap();
        let inv = build_segment_inverse(&sd).unwrap();
        for r in 0..d {
            for c in 0..d {
                df[(m * d + r, m * d + c)] = sd.df_diag[(r, c)];
            }
        }
        if m > 0 {
            // Coupling block: boundary propagator times endpoint evaluation.
            let couple = sd.exp_nodes.matmul(&e1);
            for r in 0..d {
                for c in 0..d {
                    df[(m * d + r, (m - 1) * d + c)] = couple[(r, c)];
                }
            }
        }
        a_blocks[m][m] = Some(inv.a_diag.clone());
        for i in 0..m {
            // A^(m,i) = -U^(m) E_1 A^(m-1,i).
            let prev = a_blocks[m - 1][i].clone().unwrap();
            let mut e1a = CMat::zeros(dim, d);
            for r in 0..dim {
                for c in 0..d {
                    let mut acc = Cplx::new(0.0, 0.0);
                    for q in 0..d {
                        acc += e1_matrix(dim, k)[(r, q)] * prev[(q, c)];
                    }
                    e1a[(r, c)] = acc;
                }
            }
            let mut blk = inv.u_couple.matmul(&e1a);
            for r in 0..d {
                for c in 0..d {
                    blk[(r, c)] = -blk[(r, c)];
                }
            }
            a_blocks[m][i] = Some(blk);
        }
        u_prev = Some(inv.u_couple.clone());
    }
    let _ = u_prev;
    let mut a_full = CMat::zeros(total, total);
    for m in 0..m_count {
        for i in 0..=m {
            let blk = a_blocks[m][i].as_ref().unwrap();
            for r in 0..d {
                for c in 0..d {
                    a_full[(m * d + r, i * d + c)] = blk[(r, c)];
                }
            }
        }
    }
    let prod = CIMat::matmul_point_left(&a_full, &df);
    (CIMat::identity(total).sub(&prod), d)
}

#[test]
fn z0_dominates_full_block_assembly() {
    let nu = 1.05;
    let mut f = SeqL1::zeros(1, nu);
    f.set(0, CInterval::real(Interval::point(0.3)));
    f.set(1, CInterval::point(Cplx::new(0.1, 0.05)));
    f.set(-1, CInterval::point(Cplx::new(0.1, -0.05)));
    let problem = fisher_problem(0.3, f, nu);
    let big_n = 2i64;
    let k = 2usize;
    let m_count = 3usize;
    let orbit = refined_orbit(&problem, big_n, k, m_count);
    let weights = vec![Weights::new(1.0, 1.0, nu); m_count];
    let rep = compute_bounds(&problem, &orbit, big_n, &weights, &sigma_table(), &test_cfg())
        .unwrap();

    let (defect, d) = assemble_full_defect(&problem, &orbit, big_n, k);
    // Random perturbations, one unit ball per subdomain: the row norms of
    // the defect image must be dominated by the z0 row combination.
    let mut rng = Lcg(99);
    for _ in 0..20 {
        let mut h = vec![CInterval::ZERO; m_count * d];
        let mut norms = Vec::with_capacity(m_count);
        for i in 0..m_count {
            let part: Vec<CInterval> = (0..d)
                .map(|_| CInterval::point(Cplx::new(rng.signed(), rng.signed())))
                .collect();
            let nn = xkn_norm(&part, big_n, k, nu);
            for (c, v) in part.iter().enumerate() {
                h[i * d + c] = *v;
            }
            norms.push(nn);
        }
        let img = defect.matvec(&h);
        for m in 0..m_count {
            let row = xkn_norm(&img[m * d..(m + 1) * d], big_n, k, nu);
            let mut bound = Interval::ZERO;
            for i in 0..m_count {
                bound = bound + Interval::point(rep.z0[m][i]) * norms[i];
            }
            assert!(
                row.hi <= bound.hi * (1.0 + 1e-9) + 1e-300,
                "row {} norm {} exceeds bound {}",
                m,
                row.hi,
                bound.hi
            );
        }
    }
}

/// Node values of the Duhamel image of a finite-mode forcing: per node t_k,
/// tau Q int_{-1}^{t_k} e^{tau (t_k - s) Lambda} Q^{-1} phi(s) ds, flattened
/// mode-major.
fn duhamel_flat(op: &LinearizedOperator, phi: &FourierChebFun, k: usize) -> Vec<CInterval> {
    let dim = op.dim();
    let kp1 = k + 1;
    let tau = Interval::point(op.tau);
    // Eigen coordinates of phi.
    let kg = phi.k_order();
    let mut coords: Vec<ChebPoly> = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut acc = ChebPoly::zeros(kg);
        for (jj, p) in phi.modes.iter().enumerate() {
            if !p.is_zero() {
                acc = acc.add(&p.mul_scalar(op.q_inv[(i, jj)]));
            }
        }
        coords.push(acc);
    }
    let nodes = cheb_nodes(k);
    let q_int = op.q.to_interval();
    let mut out = vec![CInterval::ZERO; dim * kp1];
    for (kk, t) in nodes.iter().enumerate() {
        let mut eig = Vec::with_capacity(dim);
        for i in 0..dim {
            let lam_tau = CInterval::point(op.lambda[i]).mul_real(tau);
            let integral = exp_kernel_integral_tol(lam_tau, *t, &coords[i], 1e-12).unwrap();
            eig.push(integral.mul_real(tau));
        }
        let row = q_int.matvec(&eig);
        for mode in 0..dim {
            out[mode * kp1 + kk] = row[mode];
        }
    }
    out
}

#[test]
fn z_kn_dominates_neglected_directions() {
    let nu = 1.1;
    let mut f = SeqL1::zeros(1, nu);
    f.set(0, CInterval::real(Interval::point(0.4)));
    f.set(1, CInterval::point(Cplx::new(0.15, 0.0)));
    f.set(-1, CInterval::point(Cplx::new(0.15, 0.0)));
    let problem = fisher_problem(0.2, f, nu);
    let big_n = 2i64;
    let k = 2usize;
    let orbit = refined_orbit(&problem, big_n, k, 1);
    let seg = &orbit.segments[0];
    let tau = orbit.taus[0];
    let eps_inftyn = 2.0;
    let eps_infty = 0.5;
    let w = Weights::new(eps_inftyn, eps_infty, nu);
    let rep = compute_bounds(
        &problem,
        &orbit,
        big_n,
        &[w],
        &sigma_table(),
        &test_cfg(),
    )
    .unwrap();
    let op = LinearizedOperator::from_segment(&problem, seg, tau, big_n).unwrap();
    let a_int = {
        use rigor_pde::problem::{assemble_segment_derivative, build_segment_inverse};
        let sd = assemble_segment_derivative(&problem, &op, seg, k, 1e-12).unwrap();
        build_segment_inverse(&sd).unwrap().a_diag.to_interval()
    };
    let gp_u = seg.apply_poly(&problem.gprime(0));

    // Direction 1: a pure tail mode, constant in time. Its image under the
    // true linearization lands on the finite modes through the convolution
    // with g'(ubar).
    let n0 = 3i64;
    let mut h_tail = FourierChebFun::zeros(n0, seg.k_order(), nu);
    h_tail.set(n0, ChebPoly::constant(CInterval::ONE).resized(seg.k_order()));
    let phi = gp_u.mul(&h_tail).truncated(big_n);
    let img = a_int.matvec(&duhamel_flat(&op, &phi, k));
    let value = xkn_norm(&img, big_n, k, nu);
    let h_norm = nu.powi(n0 as i32) / eps_infty;
    assert!(
        value.hi <= rep.z_kn[0][0] * h_norm * (1.0 + 1e-6),
        "tail direction: {} vs {}",
        value.hi,
        rep.z_kn[0][0] * h_norm
    );

    // Direction 2: a finite mode carrying T_3 minus its order-2 interpolant
    // (which is T_1), i.e. a pure infinite-order perturbation.
    let n1 = 1i64;
    let mut p = ChebPoly::zeros(3);
    p.coeffs[1] = CInterval::real(Interval::point(-0.5));
    p.coeffs[3] = CInterval::real(Interval::point(0.5));
    let mut h_fin = FourierChebFun::zeros(big_n, 3, nu);
    h_fin.set(n1, p);
    // True image: convolution part minus the finite linear block.
    let ln = op.ln_matrix();
    let phi2 = gp_u.mul(&h_fin).truncated(big_n).sub(&h_fin.matvec(&ln));
    let img2 = a_int.matvec(&duhamel_flat(&op, &phi2, k));
    let value2 = xkn_norm(&img2, big_n, k, nu);
    // Dense-sampled sup norm of T_3 - T_1 (a lower bound on the true norm).
    let mut sup = 0.0f64;
    for s in 0..=400 {
        let t = -1.0 + 2.0 * s as f64 / 400.0;
        sup = sup.max((4.0 * t * t * t - 3.0 * t - t).abs());
    }
    let h_norm2 = nu.powi(n1 as i32) * sup / eps_inftyn;
    assert!(
        value2.hi <= rep.z_kn[0][0] * h_norm2 * (1.0 + 1e-6),
        "infinite-order direction: {} vs {}",
        value2.hi,
        rep.z_kn[0][0] * h_norm2
    );
}

#[test]
fn w_kn_dominates_second_derivative_directions() {
    let nu = 1.05;
    let mut f = SeqL1::zeros(1, nu);
    f.set(0, CInterval::real(Interval::point(0.5)));
    let problem = fisher_problem(0.2, f, nu);
    let big_n = 2i64;
    let k = 2usize;
    let orbit = refined_orbit(&problem, big_n, k, 1);
    let seg = &orbit.segments[0];
    let tau = orbit.taus[0];
    let w = Weights::new(1.0, 1.0, nu);
    let rep = compute_bounds(
        &problem,
        &orbit,
        big_n,
        &[w],
        &sigma_table(),
        &test_cfg(),
    )
    .unwrap();
    let op = LinearizedOperator::from_segment(&problem, seg, tau, big_n).unwrap();
    let a_int = {
        use rigor_pde::problem::{assemble_segment_derivative, build_segment_inverse};
        let sd = assemble_segment_derivative(&problem, &op, seg, k, 1e-12).unwrap();
        build_segment_inverse(&sd).unwrap().a_diag.to_interval()
    };
    let mut rng = Lcg(1234);
    for _ in 0..10 {
        let mut rand_fun = || {
            let mut u = FourierChebFun::zeros(big_n, k, nu);
            for n in -big_n..=big_n {
                let coeffs: Vec<CInterval> = (0..=k)
                    .map(|_| CInterval::point(Cplx::new(rng.signed(), rng.signed())))
                    .collect();
                u.set(n, ChebPoly::new(coeffs));
            }
            u
        };
        let v = rand_fun();
        let h = rand_fun();
        // Second derivative of the logistic nonlinearity: -2 v h.
        let phi = v.mul(&h).scale(-2.0).truncated(big_n);
        let img = a_int.matvec(&duhamel_flat(&op, &phi, k));
        let value = xkn_norm(&img, big_n, k, nu);
        let bound = rep.w_kn[0][0] * v.norm_xkn().lo * h.norm_xkn().lo;
        assert!(
            value.hi <= bound * (1.0 + 1e-6),
            "second derivative image {} exceeds {}",
            value.hi,
            bound
        );
    }
}

#[test]
fn bounds_grow_under_widening() {
    let nu = 1.0;
    let mut f = SeqL1::zeros(1, nu);
    f.set(0, CInterval::real(Interval::point(0.3)));
    // Cubic nonlinearity so the second-derivative envelope depends on the
    // evaluation radius.
    let problem = PdeProblem::new(
        1,
        vec![vec![0.0, 0.5, 0.0, -1.0], vec![0.0]],
        2.0 * std::f64::consts::PI,
        0.2,
        f,
        nu,
    )
    .unwrap();
    let big_n = 2i64;
    let orbit = refined_orbit(&problem, big_n, 2, 1);
    let weights = vec![Weights::new(1.0, 1.0, nu)];
    let sigma = sigma_table();
    let rep1 = compute_bounds(&problem, &orbit, big_n, &weights, &sigma, &test_cfg()).unwrap();
    let mut wide_cfg = test_cfg();
    wide_cfg.r_star = 0.3;
    let rep2 = compute_bounds(&problem, &orbit, big_n, &weights, &sigma, &wide_cfg).unwrap();
    assert!(rep2.w_kn[0][0] > rep1.w_kn[0][0]);
    assert!(rep2.w_inf[0][0] > rep1.w_inf[0][0]);
    // Widening the unresolved initial mass grows the tail residual alone.
    let mut problem_wide = problem.clone();
    problem_wide.f_tail_norm = Interval::point(1e-4);
    let rep3 =
        compute_bounds(&problem_wide, &orbit, big_n, &weights, &sigma, &test_cfg()).unwrap();
    assert!(rep3.y_inf[0] > rep1.y_inf[0]);
    assert_eq!(rep3.y_kn[0], rep1.y_kn[0]);
    assert_eq!(rep3.z_total(0, 0), rep1.z_total(0, 0));
}
