//! Validation estimates for an approximate orbit: per-subdomain residual
//! bounds (Y), derivative-defect bounds (Z) and second-derivative bounds (W)
//! for the Newton-like fixed-point operator, split into finite (KN),
//! finite-mode/infinite-order (inftyN) and tail-mode (infty) constituents.
//!
//! The fixed-point operator is T = I - A F, where F stacks the integrated
//! subdomain equations and A is the block approximate inverse generated by
//! `SegmentInverse`: A^(m,m) is the floating-point inverse of the diagonal
//! derivative block and A^(m,i) = -U^(m) E_1 A^(m-1,i) for i < m, with
//! U^(m) = A^(m,m) times the boundary propagator at the nodes. All
//! off-diagonal contributions are evaluated without materializing the block
//! matrices: each coupling satisfies an exact recursion driven by
//! |E_1 U^(m)|, so a single (2N+1)-vector per source subdomain, updated once
//! per sweep step, bounds every later row.
//!
//! Everything is computed in one forward sweep over the subdomains, mirroring
//! the data flow of the Newton iteration, followed by a cheap post-pass that
//! assembles the tail-mode residual from per-segment endpoint and sup-norm
//! data.

use crate::cheb::{
    cheb_nodes, cheb_norm_bound, interp_error_exp_best, interp_error_integral, interpolate,
    refine_exp_error, IntegralErrorMode, SigmaTable,
};
use crate::linop::{chi_bound, tail_sup_combination, LinearizedOperator, TailPoly};
use crate::problem::{
    assemble_segment_derivative, build_segment_inverse, e1_matrix, evaluate_f_segment, gamma_eval,
    gamma_eigen_coords, PdeProblem, PiecewiseOrbit,
};
use crate::quadrature::exp_kernel_integral_tol;
use crate::seqspace::{
    phi_bounds, phi_tilde_bound, poly_tail_bound, upsilon, NormSeq, PhiVariant, SeqL1, Weights,
};
use rigor_core::{
    opnorm_l1nu, opnorm_weighted_upper, CIMat, CInterval, Interval, RMat, RigorError,
};

/// Tuning knobs for the bound computation.
#[derive(Clone, Debug)]
pub struct BoundsConfig {
    /// Refinement interpolation order for the finite-mode/infinite-order
    /// estimates; 0 selects the default 4K + 16.
    pub k0: usize,
    /// Absolute tolerance for the exponential-kernel quadratures.
    pub quad_tol: f64,
    /// Radius at which the second-derivative bounds are evaluated; the
    /// certified contraction radius must not exceed it.
    pub r_star: f64,
    /// Replace the solution-adapted linear operator by the constant-coefficient
    /// one (zero deviation center), for comparison runs.
    pub naive_linearization: bool,
}

impl Default for BoundsConfig {
    fn default() -> BoundsConfig {
        BoundsConfig {
            k0: 0,
            quad_tol: 1e-10,
            r_star: 1e-1,
            naive_linearization: false,
        }
    }
}

/// All bound constituents, stored separately (upper bounds, nonnegative).
///
/// Indexing: `y_*[m]` bounds the residual row of subdomain `m`;
/// `z_*[m][i]` and `w_*[m][i]` bound the action of row `m` on a perturbation
/// supported on subdomain `i <= m` (strictly lower block-triangular coupling;
/// entries with `i > m` are zero). Second-derivative coupling is diagonal in
/// the perturbation pair, so a single source index suffices for W.
#[derive(Clone, Debug)]
pub struct BoundsReport {
    pub big_n: i64,
    pub k: usize,
    pub m_count: usize,
    pub weights: Vec<Weights>,
    pub r_star: f64,
    pub y_kn: Vec<f64>,
    pub y_infn: Vec<f64>,
    pub y_inf: Vec<f64>,
    /// Norm defect of the approximate inverse times the finite derivative.
    pub z0: Vec<Vec<f64>>,
    /// Finite part of the deviation between exact and adapted linearization.
    pub z_kn: Vec<Vec<f64>>,
    pub z_infn: Vec<Vec<f64>>,
    pub z_inf: Vec<Vec<f64>>,
    pub w_kn: Vec<Vec<f64>>,
    pub w_infn: Vec<Vec<f64>>,
    pub w_inf: Vec<Vec<f64>>,
}

fn div_pos(a: f64, b: f64) -> f64 {
    Interval::point(a)
        .checked_div(Interval::point(b))
        .expect("positive denominator")
        .hi
}

impl BoundsReport {
    /// Assembled residual bound for subdomain `m`:
    /// Y_KN + eps_inftyN^-1 Y_inftyN + eps_infty^-1 Y_infty.
    pub fn y_total(&self, m: usize) -> f64 {
        let w = &self.weights[m];
        let acc = Interval::point(self.y_kn[m])
            + Interval::point(div_pos(self.y_infn[m], w.eps_inftyn))
            + Interval::point(div_pos(self.y_inf[m], w.eps_infty));
        acc.hi
    }

    /// Assembled derivative-defect bound for the pair (m, i).
    pub fn z_total(&self, m: usize, i: usize) -> f64 {
        let w = &self.weights[m];
        let acc = Interval::point(self.z0[m][i])
            + Interval::point(self.z_kn[m][i])
            + Interval::point(div_pos(self.z_infn[m][i], w.eps_inftyn))
            + Interval::point(div_pos(self.z_inf[m][i], w.eps_infty));
        acc.hi
    }

    /// Assembled second-derivative bound for the pair (m, i).
    pub fn w_total(&self, m: usize, i: usize) -> f64 {
        let w = &self.weights[m];
        let acc = Interval::point(self.w_kn[m][i])
            + Interval::point(div_pos(self.w_infn[m][i], w.eps_inftyn))
            + Interval::point(div_pos(self.w_inf[m][i], w.eps_infty));
        acc.hi
    }

    /// Largest row sum of the approximate-inverse defect; must stay below 1
    /// for the block inverse to be injective.
    pub fn max_z0_row(&self) -> f64 {
        let mut best = 0.0f64;
        for row in &self.z0 {
            let mut acc = Interval::ZERO;
            for v in row {
                acc = acc + Interval::point(*v);
            }
            best = best.max(acc.hi);
        }
        best
    }
}

// ---------------------------------------------------------------------------
// Small norm helpers over the finite coefficient space.
// ---------------------------------------------------------------------------

/// Per-mode weights nu^|n| for modes -N..N.
fn mode_weight_intervals(big_n: i64, nu: f64) -> Vec<Interval> {
    let nu_i = Interval::point(nu);
    (-big_n..=big_n)
        .map(|n| nu_i.powi(n.unsigned_abs() as i32))
        .collect()
}

/// Flat coefficient weights nu^|n| (1 for order 0, 2 otherwise), mode-major.
fn flat_weight_intervals(big_n: i64, k: usize, nu: f64) -> Vec<Interval> {
    let modes = mode_weight_intervals(big_n, nu);
    let mut out = Vec::with_capacity(modes.len() * (k + 1));
    for w in &modes {
        for kk in 0..=k {
            out.push(if kk == 0 { *w } else { w.scale(2.0) });
        }
    }
    out
}

fn norm_ci(v: &[CInterval], wt: &[Interval]) -> Interval {
    let mut acc = Interval::ZERO;
    for (x, w) in v.iter().zip(wt.iter()) {
        acc = acc + x.abs() * *w;
    }
    acc.clamp_nonneg()
}

fn norm_f64(v: &[f64], wt: &[Interval]) -> Interval {
    let mut acc = Interval::ZERO;
    for (x, w) in v.iter().zip(wt.iter()) {
        acc = acc + Interval::point(*x) * *w;
    }
    acc.clamp_nonneg()
}

/// max_c v[c] / wt[c], rounded up: the componentwise-to-norm reduction used
/// when seeding the propagated coupling vectors.
fn ratio_max(v: &[f64], wt: &[Interval]) -> f64 {
    let mut best = 0.0f64;
    for (x, w) in v.iter().zip(wt.iter()) {
        let q = Interval::point(*x).checked_div(*w).expect("positive weight");
        best = best.max(q.hi);
    }
    best
}

fn dot_up(w: &[f64], v: &[f64]) -> Interval {
    let mut acc = Interval::ZERO;
    for (a, b) in w.iter().zip(v.iter()) {
        acc = acc + Interval::point(*a) * Interval::point(*b);
    }
    acc.clamp_nonneg()
}

pub(crate) fn hi_pos(x: Interval) -> f64 {
    x.clamp_nonneg().hi
}

// ---------------------------------------------------------------------------
// Interpolation defect of the boundary-coupling term.
// ---------------------------------------------------------------------------

/// Row-functional weights w such that the infinite-order part of the
/// boundary-coupling term G w-bar on one subdomain satisfies
/// ||(I - P_K) Q e^{tau (t+1) Lambda} Q^{-1} b||_{l1_nu(C0)} <= w . |b|:
/// w = (nu-row-sums of |Q| times the per-eigenvalue interpolation errors)
/// composed with |Q^{-1}|.
pub fn g_interp_weights(
    op: &LinearizedOperator,
    k: usize,
    k0: usize,
    nu: f64,
) -> Result<Vec<f64>, RigorError> {
    let dim = op.dim();
    let q_abs = op.q.abs_upper();
    let qi_abs = op.q_inv.abs_upper();
    let wnu: Vec<f64> = mode_weight_intervals(op.big_n, nu)
        .iter()
        .map(|w| w.hi)
        .collect();
    let r1 = q_abs.row_functional_up(&wnu);
    let mut r2 = vec![0.0f64; dim];
    for i in 0..dim {
        let err = refine_exp_error(CInterval::point(op.lambda[i]), op.tau, k, k0)?;
        r2[i] = hi_pos(Interval::point(r1[i]) * err.clamp_nonneg());
    }
    Ok(qi_abs.row_functional_up(&r2))
}

/// Bound on the infinite-order interpolation defect of the boundary term fed
/// into subdomain `m_index` by the endpoint values `wbar_end` of the previous
/// subdomain. Zero for the first subdomain (no incoming coupling).
pub fn g_interp_bound(
    op: &LinearizedOperator,
    k: usize,
    k0: usize,
    nu: f64,
    wbar_end: &[CInterval],
    m_index: usize,
) -> Result<Interval, RigorError> {
    if m_index == 0 {
        return Ok(Interval::ZERO);
    }
    let w = g_interp_weights(op, k, k0, nu)?;
    assert_eq!(w.len(), wbar_end.len());
    let mut acc = Interval::ZERO;
    for (wi, b) in w.iter().zip(wbar_end.iter()) {
        acc = acc + Interval::point(*wi) * b.abs();
    }
    Ok(acc.clamp_nonneg())
}

/// Tail-mode transfer coefficients c[m][l] = e^{mu_{m,l}} bounding how the
/// sup norm of the tail equation on subdomain l is amplified when its
/// endpoint value propagates diagonally through subdomains l+1..m:
/// mu_{m,l} = sup_{|n|>N} ( 2 tau_m Re(lambda_n^(m))^+
/// + 2 sum_{j=l+1}^{m-1} tau_j Re(lambda_n^(j)) ). Diagonal entries are 1,
/// entries above the diagonal 0.
pub fn ginv_tail_coeffs(
    tails: &[TailPoly],
    taus: &[f64],
    big_n: i64,
) -> Result<Vec<Vec<f64>>, RigorError> {
    let m_count = tails.len();
    assert_eq!(taus.len(), m_count);
    let mut c = vec![vec![0.0f64; m_count]; m_count];
    for m in 0..m_count {
        c[m][m] = 1.0;
        for l in 0..m {
            let rest: Vec<(f64, &TailPoly)> = ((l + 1)..m)
                .map(|j| (2.0 * taus[j], &tails[j]))
                .collect();
            let sup = tail_sup_combination(Some((2.0 * taus[m], &tails[m])), &rest, big_n)?;
            c[m][l] = sup.exp().hi;
        }
    }
    Ok(c)
}

// ---------------------------------------------------------------------------
// Main sweep.
// ---------------------------------------------------------------------------

/// Compute all Y, Z and W constituents for the given approximate orbit.
///
/// `weights[m]` fixes the norm of subdomain m (the same nu throughout).
/// Errors if the approximate-inverse defect reaches 1 (the block inverse can
/// then not be certified injective) or if any tail estimate fails.
pub fn compute_bounds(
    problem: &PdeProblem,
    orbit: &PiecewiseOrbit,
    big_n: i64,
    weights: &[Weights],
    sigma: &SigmaTable,
    cfg: &BoundsConfig,
) -> Result<BoundsReport, RigorError> {
    let m_count = orbit.m_count();
    if m_count == 0 || weights.len() != m_count {
        return Err(RigorError::InvalidParams(
            "orbit and weights must cover the same, nonempty set of subdomains".into(),
        ));
    }
    let nu = problem.nu;
    for w in weights {
        if w.nu != nu {
            return Err(RigorError::InvalidParams(
                "norm weights must use the problem's nu".into(),
            ));
        }
    }
    let k = orbit.segments[0].k_order();
    let k0 = if cfg.k0 == 0 { 4 * k + 16 } else { cfg.k0 };
    if k0 <= k {
        return Err(RigorError::InvalidParams(format!(
            "refinement order {k0} must exceed the interpolation order {k}"
        )));
    }
    if sigma.k_max < k0 {
        return Err(RigorError::InvalidParams(format!(
            "sigma table covers orders up to {}, need {k0}",
            sigma.k_max
        )));
    }
    for seg in &orbit.segments {
        if seg.n_max != big_n || seg.k_order() != k {
            return Err(RigorError::InvalidParams(
                "orbit segments must share the discretization sizes N and K".into(),
            ));
        }
    }

    let dim = (2 * big_n + 1) as usize;
    let kp1 = k + 1;
    let d_flat = dim * kp1;
    let two_r = 2 * problem.r;
    let nodes = cheb_nodes(k);

    let wt_mode = mode_weight_intervals(big_n, nu);
    let wt_flat = flat_weight_intervals(big_n, k, nu);
    let wt_flat_hi: Vec<f64> = wt_flat.iter().map(|w| w.hi).collect();
    let wt_flat_lo: Vec<f64> = wt_flat.iter().map(|w| w.lo).collect();
    let wt_mode_lo: Vec<f64> = wt_mode.iter().map(|w| w.lo).collect();
    let e1abs: RMat = e1_matrix(dim, k).abs_upper();

    // Active nonlinearity orders: first derivative (Z estimates) and second
    // derivative (W estimates).
    let j_phi: Vec<usize> = (0..two_r)
        .filter(|&j| problem.gprime(j).iter().any(|c| *c != Interval::ZERO))
        .collect();
    let j_w: Vec<usize> = (0..two_r)
        .filter(|&j| problem.gsecond(j).iter().any(|c| *c != Interval::ZERO))
        .collect();
    // |c_j| |n'|^j per mode, for every order that appears.
    let mut dpow: Vec<Option<Vec<Interval>>> = vec![None; two_r.max(1)];
    for &j in j_phi.iter().chain(j_w.iter()) {
        if dpow[j].is_none() {
            let cj = Interval::point(problem.cj[j]).abs();
            dpow[j] = Some(
                (-big_n..=big_n)
                    .map(|n| cj * Interval::point(n as f64).powi(j as i32).abs())
                    .collect(),
            );
        }
    }

    // Tail-mode bookkeeping: every mode that can carry mass in the tail
    // equations (nonlinearity spreads the orbit support by the polynomial
    // degree; initial data may extend further). The unstructured remainder
    // `f_tail_norm` is handled separately through sup bounds.
    let n_act = (big_n * problem.max_degree().max(1) as i64).max(problem.f.n_max);
    let tail_modes: Vec<i64> = (big_n + 1..=n_act)
        .flat_map(|n| [n, -n])
        .collect();
    let nu_i = Interval::point(nu);
    let wt_tail: Vec<Interval> = tail_modes
        .iter()
        .map(|n| nu_i.powi(n.unsigned_abs() as i32))
        .collect();

    // Output constituents.
    let mut y_kn = vec![0.0f64; m_count];
    let mut y_infn = vec![0.0f64; m_count];
    let mut y_inf = vec![0.0f64; m_count];
    let zeros = || vec![vec![0.0f64; m_count]; m_count];
    let mut z0 = zeros();
    let mut z_kn = zeros();
    let mut z_infn = zeros();
    let mut z_inf = zeros();
    let mut w_kn = zeros();
    let mut w_infn = zeros();
    let mut w_inf = zeros();

    // Per-subdomain data consumed by the post-pass.
    let mut tails: Vec<TailPoly> = Vec::with_capacity(m_count);
    let mut zeta = vec![0.0f64; m_count];
    let mut omega_w = vec![0.0f64; m_count];
    let mut e64 = vec![vec![0.0f64; tail_modes.len()]; m_count];
    let mut e65 = vec![vec![0.0f64; tail_modes.len()]; m_count];

    // Propagated coupling state (one entry per already-visited subdomain):
    // r_vecs bounds E_1 (I - A DF) rows, t_vecs bounds E_1 |A| Xi (the
    // linearization-deviation image), wv_vecs the same for each
    // second-derivative order. Each is a (2N+1)-vector; propagation by
    // |E_1 U^(m)| is exact for the block recursion and the componentwise
    // reductions only ever tighten upward.
    let mut r_vecs: Vec<Vec<f64>> = Vec::with_capacity(m_count);
    let mut t_vecs: Vec<Vec<f64>> = Vec::with_capacity(m_count);
    let mut wv_vecs: Vec<Vec<Vec<f64>>> = Vec::with_capacity(m_count);
    let mut ptbs: Vec<Vec<Interval>> = Vec::with_capacity(m_count);

    // Incoming boundary data and the endpoint of the residual image.
    let mut boundary: Vec<CInterval> = (0..dim)
        .map(|i| problem.f.get(i as i64 - big_n))
        .collect();
    let mut s_prev: Vec<CInterval> = vec![CInterval::ZERO; dim];

    for m in 0..m_count {
        let tau = orbit.taus[m];
        let seg = &orbit.segments[m];
        let wm = &weights[m];
        let op = if cfg.naive_linearization {
            let vbar = vec![SeqL1::zeros(big_n, nu); two_r];
            LinearizedOperator::build(
                vbar,
                problem.r,
                problem.mu,
                problem.cj.clone(),
                tau,
                big_n,
            )?
        } else {
            LinearizedOperator::from_segment(problem, seg, tau, big_n)?
        };
        let tail_m = op.tail_poly();
        let q_abs = op.q.abs_upper();
        let qi_abs = op.q_inv.abs_upper();

        // --- Residual data -------------------------------------------------
        let gam = gamma_eval(seg, problem, &op);
        let fvals_k = evaluate_f_segment(problem, &op, seg, &boundary, k, cfg.quad_tol)?;
        let fvals_k0 = evaluate_f_segment(problem, &op, seg, &boundary, k0, cfg.quad_tol)?;

        // --- Derivative data and approximate inverse -----------------------
        let sd = assemble_segment_derivative(problem, &op, seg, k, cfg.quad_tol)?;
        let inv = build_segment_inverse(&sd)?;
        let a_int = inv.a_diag.to_interval();
        let u_int = inv.u_couple.to_interval();
        let a_abs = inv.a_diag.abs_upper();
        let u_abs = inv.u_couple.abs_upper();
        let e1u_abs = e1abs.matmul_up(&u_abs);

        // --- Y, finite part: the residual image under the block inverse ----
        let mut fflat = vec![CInterval::ZERO; d_flat];
        for mode in 0..dim {
            for kk in 0..kp1 {
                fflat[mode * kp1 + kk] = fvals_k[kk][mode];
            }
        }
        let mut y_vec = a_int.matvec(&fflat);
        if m > 0 {
            let coupled = u_int.matvec(&s_prev);
            for (y, c) in y_vec.iter_mut().zip(coupled.iter()) {
                *y = *y - *c;
            }
        }
        y_kn[m] = hi_pos(norm_ci(&y_vec, &wt_flat));
        let mut s_cur = vec![CInterval::ZERO; dim];
        for mode in 0..dim {
            let mut acc = y_vec[mode * kp1];
            for kk in 1..kp1 {
                acc = acc + y_vec[mode * kp1 + kk].scale(2.0);
            }
            s_cur[mode] = acc;
        }

        // --- Y, infinite-order part ----------------------------------------
        // Split at the refinement order: difference of the two interpolants,
        // plus the interpolation error of the refined one, plus (for m > 0)
        // the interpolation defect of the incoming boundary term.
        let ftil = op.q_inv.matvec(&boundary);
        let ctil = gamma_eigen_coords(problem, &op, seg);
        let mut mid_sum = Interval::ZERO;
        for mode in 0..dim {
            let vals_k: Vec<CInterval> = (0..=k).map(|kk| fvals_k[kk][mode]).collect();
            let vals_k0: Vec<CInterval> = (0..=k0).map(|kk| fvals_k0[kk][mode]).collect();
            let pk = interpolate(&vals_k)?;
            let p0 = interpolate(&vals_k0)?;
            mid_sum = mid_sum + wt_mode[mode] * cheb_norm_bound(&p0.sub(&pk), 1.0);
        }
        let mut acc_eig: Vec<Interval> = Vec::with_capacity(dim);
        for i in 0..dim {
            let lam = CInterval::point(op.lambda[i]);
            let omega = interp_error_exp_best(lam, tau, k0)? * ftil[i].abs();
            let c_i = if ctil[i].is_zero() {
                Interval::ZERO
            } else {
                let mut best: Option<Interval> = None;
                for q in 1..=k0 {
                    if let Ok(b) = interp_error_integral(
                        lam,
                        tau,
                        k0,
                        &ctil[i],
                        IntegralErrorMode::Smooth { q },
                        sigma,
                    ) {
                        best = Some(match best {
                            Some(cur) => cur.min_i(b),
                            None => b,
                        });
                    }
                }
                for g in 0..32 {
                    let rho = 1.0 + 10f64.powf(-3.0 + 5.0 * g as f64 / 31.0);
                    if let Ok(b) = interp_error_integral(
                        lam,
                        tau,
                        k0,
                        &ctil[i],
                        IntegralErrorMode::Analytic { rho },
                        sigma,
                    ) {
                        best = Some(match best {
                            Some(cur) => cur.min_i(b),
                            None => b,
                        });
                    }
                }
                best.ok_or_else(|| {
                    RigorError::NumericsBlewUp(
                        "no valid interpolation-error bound for the residual tail".into(),
                    )
                })?
            };
            acc_eig.push((omega + c_i).clamp_nonneg());
        }
        let mut prop_sum = Interval::ZERO;
        for n_row in 0..dim {
            let mut row = Interval::ZERO;
            for i in 0..dim {
                row = row + Interval::point(q_abs[(n_row, i)]) * acc_eig[i];
            }
            prop_sum = prop_sum + wt_mode[n_row] * row;
        }
        let gw = if m > 0 {
            Some(g_interp_weights(&op, k, k0, nu)?)
        } else {
            None
        };
        let mut y_infn_acc = mid_sum + prop_sum;
        if let Some(gw) = &gw {
            let mut gterm = Interval::ZERO;
            for (wi, s) in gw.iter().zip(s_prev.iter()) {
                gterm = gterm + Interval::point(*wi) * s.abs();
            }
            y_infn_acc = y_infn_acc + gterm;
        }
        y_infn[m] = hi_pos(y_infn_acc);

        // --- Z0: defect of the approximate inverse -------------------------
        let prod = CIMat::matmul_point_left(&inv.a_diag, &sd.df_diag);
        let r_mat = CIMat::identity(d_flat).sub(&prod);
        let r_abs = r_mat.abs_upper();
        z0[m][m] = opnorm_weighted_upper(&r_abs, &wt_flat_hi, &wt_flat_lo);
        let e1r = e1abs.matmul_up(&r_abs);
        let r_seed: Vec<f64> = (0..dim)
            .map(|n| {
                let row: Vec<f64> = (0..d_flat).map(|c| e1r[(n, c)]).collect();
                ratio_max(&row, &wt_flat)
            })
            .collect();

        // The true boundary propagator is an enclosure while the inverse is
        // built from its midpoint; the enclosure radii feed the defect of the
        // immediately preceding coupling block.
        let (dx_extra_norm, dx_extra_vec) = if m > 0 {
            let mut rad = RMat::zeros(d_flat, dim);
            for r_i in 0..d_flat {
                for c_i in 0..dim {
                    let e = sd.exp_nodes[(r_i, c_i)];
                    rad[(r_i, c_i)] = (Interval::point(e.re.width())
                        + Interval::point(e.im.width()))
                    .scale(0.5)
                    .hi;
                }
            }
            let dmat = a_abs.matmul_up(&rad);
            let norm = opnorm_weighted_upper(&dmat, &wt_flat_hi, &wt_mode_lo);
            let e1d = e1abs.matmul_up(&dmat);
            let vec: Vec<f64> = (0..dim)
                .map(|n| {
                    let row: Vec<f64> = (0..dim).map(|c| e1d[(n, c)]).collect();
                    ratio_max(&row, &wt_mode)
                })
                .collect();
            (norm, vec)
        } else {
            (0.0, Vec::new())
        };

        // --- Linearization-deviation image (Xi data) -----------------------
        // Componentwise bound on the finite modes of D gamma applied to the
        // neglected part of a unit perturbation, propagated through the
        // Duhamel kernel to the nodes.
        let mut a_norms: Vec<Option<NormSeq>> = vec![None; two_r.max(1)];
        let mut b_norms: Vec<Option<NormSeq>> = vec![None; two_r.max(1)];
        for &j in &j_phi {
            let gp = problem.gprime(j);
            let gp_u = seg.apply_poly(&gp);
            let bn = gp_u.c0_norms();
            let mut a_fun = gp_u;
            for n in -big_n..=big_n {
                let mut p = a_fun.get(n);
                let dev = op.vbar[j].get(n);
                p.coeffs[0] = p.coeffs[0] - dev;
                a_fun.set(n, p);
            }
            a_norms[j] = Some(a_fun.c0_norms());
            b_norms[j] = Some(bn);
        }
        let mut inner = vec![Interval::ZERO; dim];
        for &j in &j_phi {
            let pv = phi_bounds(
                a_norms[j].as_ref().unwrap(),
                b_norms[j].as_ref().unwrap(),
                wm,
                big_n,
                PhiVariant::Phi,
            );
            let dp = dpow[j].as_ref().unwrap();
            for idx in 0..dim {
                inner[idx] = inner[idx] + dp[idx] * pv[idx];
            }
        }
        let qr = op.q_inv.matmul(&op.rn);
        let upsqr = upsilon(&qr, nu, big_n as usize);
        let mut u1 = vec![Interval::ZERO; dim];
        for i in 0..dim {
            let mut acc = upsqr[i].scale(wm.eps_inftyn);
            for idx in 0..dim {
                acc = acc + Interval::point(qi_abs[(i, idx)]) * inner[idx];
            }
            u1[i] = acc.clamp_nonneg();
        }
        // |Q| D_N(t_kk) per node, as nonnegative matrices.
        let mut qdn: Vec<RMat> = Vec::with_capacity(kp1);
        for t in nodes.iter() {
            let dnv = op.dn_diag(*t);
            let mut qd = RMat::zeros(dim, dim);
            for r_i in 0..dim {
                for i in 0..dim {
                    qd[(r_i, i)] =
                        hi_pos(Interval::point(q_abs[(r_i, i)]) * dnv[i].clamp_nonneg());
                }
            }
            qdn.push(qd);
        }
        let mut xi = vec![0.0f64; d_flat];
        for (kk, qd) in qdn.iter().enumerate() {
            for mode in 0..dim {
                let mut acc = Interval::ZERO;
                for i in 0..dim {
                    acc = acc + Interval::point(qd[(mode, i)]) * u1[i];
                }
                xi[mode * kp1 + kk] = hi_pos(acc);
            }
        }
        let y1 = a_abs.matvec_up(&xi);
        z_kn[m][m] = hi_pos(norm_f64(&y1, &wt_flat));
        let t_seed = e1abs.matvec_up(&y1);

        // --- Z and W, infinite-order parts on the diagonal -----------------
        // Column sums of |Q| |Lambda_N| D_N(1) |Q^{-1}| against the nu
        // weights, factored through the eigenbasis.
        let dn1 = op.dn_diag(Interval::ONE);
        let mut qw = vec![Interval::ZERO; dim];
        for i in 0..dim {
            let mut acc = Interval::ZERO;
            for n_row in 0..dim {
                acc = acc + wt_mode[n_row] * Interval::point(q_abs[(n_row, i)]);
            }
            qw[i] = acc;
        }
        let mut colsum_p = vec![Interval::ZERO; dim];
        for idx in 0..dim {
            let mut acc = Interval::ZERO;
            for i in 0..dim {
                acc = acc
                    + qw[i]
                        * CInterval::point(op.lambda[i]).abs()
                        * dn1[i].clamp_nonneg()
                        * Interval::point(qi_abs[(i, idx)]);
            }
            colsum_p[idx] = acc.clamp_nonneg();
        }
        // (nu^|n'| + column sum) / nu^|n'| per mode, with and without the
        // derivative-order scaling.
        let ratio: Vec<Interval> = (0..dim)
            .map(|idx| {
                ((wt_mode[idx] + colsum_p[idx])
                    .checked_div(wt_mode[idx])
                    .expect("positive weight"))
                .clamp_nonneg()
            })
            .collect();
        let opnorm_dj = |j: usize| -> Interval {
            let dp = dpow[j].as_ref().unwrap();
            let mut best = Interval::ZERO;
            for idx in 0..dim {
                best = best.max_i(dp[idx] * ratio[idx]);
            }
            best
        };
        let sig_k0 = sigma.sigma(k, 0);
        let tau_i = Interval::point(tau);
        let mut direct = Interval::ZERO;
        for &j in &j_phi {
            let pt = phi_tilde_bound(
                a_norms[j].as_ref().unwrap(),
                b_norms[j].as_ref().unwrap(),
                wm,
                big_n,
            );
            direct = direct + opnorm_dj(j) * pt;
        }
        let rn_norm = opnorm_l1nu(&op.rn, nu, big_n as usize);
        let mut ip_ratio = Interval::ZERO;
        for r in &ratio {
            ip_ratio = ip_ratio.max_i(*r);
        }
        direct = direct
            + Interval::point(rn_norm).scale(wm.eps_inftyn.max(1.0)) * ip_ratio;
        z_infn[m][m] = hi_pos(tau_i * sig_k0 * direct);

        // --- W data on the diagonal ----------------------------------------
        let norm_m = seg.c0_norms().l1nu_norm();
        let mut w_seed: Vec<Vec<f64>> = Vec::with_capacity(j_w.len());
        let mut ptb_m: Vec<Interval> = Vec::with_capacity(j_w.len());
        if !j_w.is_empty() {
            let mut ximat = RMat::zeros(d_flat, dim);
            for (kk, qd) in qdn.iter().enumerate() {
                let bkk = qd.matmul_up(&qi_abs);
                for mode in 0..dim {
                    for idx in 0..dim {
                        ximat[(mode * kp1 + kk, idx)] = bkk[(mode, idx)];
                    }
                }
            }
            let bbase = a_abs.matmul_up(&ximat);
            let e1b = e1abs.matmul_up(&bbase);
            let colsums = bbase.row_functional_up(&wt_flat_hi);
            let mut w_kn_acc = Interval::ZERO;
            let mut w_infn_acc = Interval::ZERO;
            for &j in &j_w {
                let ptbv = poly_tail_bound(&problem.gsecond(j), norm_m, cfg.r_star, wm);
                let dp = dpow[j].as_ref().unwrap();
                let mut cnorm = Interval::ZERO;
                for idx in 0..dim {
                    let q = (Interval::point(colsums[idx]) * dp[idx])
                        .checked_div(wt_mode[idx])
                        .expect("positive weight");
                    cnorm = cnorm.max_i(q);
                }
                w_kn_acc = w_kn_acc + cnorm * ptbv;
                w_infn_acc = w_infn_acc + tau_i * sig_k0 * opnorm_dj(j) * ptbv;
                let seed: Vec<f64> = (0..dim)
                    .map(|n| {
                        let mut best = 0.0f64;
                        for idx in 0..dim {
                            let q = (Interval::point(e1b[(n, idx)]) * dp[idx])
                                .checked_div(wt_mode[idx])
                                .expect("positive weight");
                            best = best.max(q.hi);
                        }
                        best
                    })
                    .collect();
                w_seed.push(seed);
                ptb_m.push(ptbv);
            }
            w_kn[m][m] = hi_pos(w_kn_acc);
            w_infn[m][m] = hi_pos(w_infn_acc);
        }

        // --- Tail-mode (infty) data ----------------------------------------
        let mut zeta_acc = Interval::ZERO;
        for &j in &j_phi {
            let chi = chi_bound(&tail_m, tau, j, big_n)?;
            let an = a_norms[j].as_ref().unwrap();
            let bn = b_norms[j].as_ref().unwrap();
            let mut gt = Interval::ZERO;
            for n in -bn.n_max..=bn.n_max {
                let v = if n == 0 { an.get(0) } else { bn.get(n) };
                gt = gt + nu_i.powi(n.unsigned_abs() as i32) * v.clamp_nonneg();
            }
            zeta_acc = zeta_acc + chi * gt.scale(problem.cj[j].abs());
        }
        zeta[m] = hi_pos(zeta_acc.scale(wm.theta()));
        let mut om_acc = Interval::ZERO;
        for (jj, &j) in j_w.iter().enumerate() {
            let chi = chi_bound(&tail_m, tau, j, big_n)?;
            om_acc = om_acc + chi * ptb_m[jj].scale(problem.cj[j].abs());
        }
        omega_w[m] = hi_pos(om_acc);

        // Tail residual data: C0 bound of the tail equation on this
        // subdomain, and an enclosure of its endpoint value, per mode.
        for (idx, &n) in tail_modes.iter().enumerate() {
            let gn = gam.get(n);
            let bnd = if m == 0 {
                problem.f.get(n)
            } else {
                CInterval::ZERO
            };
            if gn.is_zero() && bnd == CInterval::ZERO {
                continue;
            }
            let lamn = op.lambda_tail(n);
            let re2 = lamn.re.scale(2.0 * tau);
            let gn_norm = cheb_norm_bound(&gn, 1.0);
            let growth = re2.expm1_over_x().scale(2.0 * tau).clamp_nonneg();
            let c0_bound = hi_pos(re2.pos_part().exp() * bnd.abs() + gn_norm * growth);
            e65[m][idx] = c0_bound;
            // Endpoint enclosure; never worse than the C0 bound, and skipped
            // when the C0 bound already vanishes to working precision.
            let mut endpoint = c0_bound;
            if c0_bound > 1e-250 {
                let mut acc = lamn.mul_real(Interval::point(2.0 * tau)).exp() * bnd;
                let quad_ok = if gn.is_zero() {
                    true
                } else {
                    match exp_kernel_integral_tol(
                        lamn.mul_real(tau_i),
                        Interval::ONE,
                        &gn,
                        cfg.quad_tol,
                    ) {
                        Ok(integral) => {
                            acc = acc + integral.mul_real(tau_i);
                            true
                        }
                        Err(_) => false,
                    }
                };
                if quad_ok {
                    endpoint = endpoint.min(acc.abs().hi.max(0.0));
                }
            }
            e64[m][idx] = endpoint;
        }

        // --- Off-diagonal rows from the propagated state -------------------
        for i in 0..m {
            let gwv = gw.as_ref().unwrap();
            z0[m][i] = hi_pos(norm_f64(&u_abs.matvec_up(&r_vecs[i]), &wt_flat));
            z_kn[m][i] = hi_pos(norm_f64(&u_abs.matvec_up(&t_vecs[i]), &wt_flat));
            z_infn[m][i] = hi_pos(dot_up(gwv, &r_vecs[i]) + dot_up(gwv, &t_vecs[i]));
            let mut wk = Interval::ZERO;
            let mut wn = Interval::ZERO;
            for (jj, wv) in wv_vecs[i].iter().enumerate() {
                wk = wk + norm_f64(&u_abs.matvec_up(wv), &wt_flat) * ptbs[i][jj];
                wn = wn + dot_up(gwv, wv) * ptbs[i][jj];
            }
            w_kn[m][i] = hi_pos(wk);
            w_infn[m][i] = hi_pos(wn);
        }
        if m > 0 {
            let prev = m - 1;
            z0[m][prev] =
                hi_pos(Interval::point(z0[m][prev]) + Interval::point(dx_extra_norm));
        }

        // Propagate the coupling state one step, then append this
        // subdomain's seeds.
        for i in 0..m {
            r_vecs[i] = e1u_abs.matvec_up(&r_vecs[i]);
            t_vecs[i] = e1u_abs.matvec_up(&t_vecs[i]);
            for wv in wv_vecs[i].iter_mut() {
                *wv = e1u_abs.matvec_up(wv);
            }
        }
        if m > 0 {
            let prev = m - 1;
            for (n, extra) in dx_extra_vec.iter().enumerate() {
                r_vecs[prev][n] = (Interval::point(r_vecs[prev][n])
                    + Interval::point(*extra))
                .hi;
            }
        }
        r_vecs.push(r_seed);
        t_vecs.push(t_seed);
        wv_vecs.push(w_seed);
        ptbs.push(ptb_m);

        tails.push(tail_m);
        boundary = {
            let end = seg.eval_one();
            (0..dim).map(|i| end.get(i as i64 - big_n)).collect()
        };
        s_prev = s_cur;
    }

    // --- Post-pass: tail-mode constituents ---------------------------------
    // Transfer coefficients through the diagonal tail flow.
    let coeffs = ginv_tail_coeffs(&tails, &orbit.taus, big_n)?;
    for m in 0..m_count {
        for i in 0..=m {
            z_inf[m][i] = hi_pos(Interval::point(coeffs[m][i]) * Interval::point(zeta[i]));
            w_inf[m][i] =
                hi_pos(Interval::point(coeffs[m][i]) * Interval::point(omega_w[i]));
        }
    }
    // Tail residual: the C0 bound on this subdomain plus every earlier
    // endpoint contribution amplified along the diagonal flow, evaluated
    // mode by mode over the explicitly tracked tail modes.
    let has_f_tail = problem.f_tail_norm.hi > 0.0;
    // 2 tau_j P^(j)(n) per segment and tracked mode.
    let pj: Vec<Vec<Interval>> = (0..m_count)
        .map(|j| {
            tail_modes
                .iter()
                .map(|&n| tails[j].eval(n).scale(2.0 * orbit.taus[j]))
                .collect()
        })
        .collect();
    for m in 0..m_count {
        let mut acc = Interval::ZERO;
        for (idx, _n) in tail_modes.iter().enumerate() {
            let pos_m = pj[m][idx].pos_part();
            let mut inner = Interval::point(e65[m][idx]);
            let mut run = Interval::ZERO;
            for l in (0..m).rev() {
                if e64[l][idx] != 0.0 {
                    inner = inner + Interval::point(e64[l][idx]) * (pos_m + run).exp();
                }
                run = run + pj[l][idx];
            }
            acc = acc + wt_tail[idx] * inner;
        }
        if has_f_tail {
            let rest: Vec<(f64, &TailPoly)> = (0..m)
                .map(|j| (2.0 * orbit.taus[j], &tails[j]))
                .collect();
            let sup =
                tail_sup_combination(Some((2.0 * orbit.taus[m], &tails[m])), &rest, big_n)?;
            acc = acc + problem.f_tail_norm.clamp_nonneg() * sup.exp();
        }
        y_inf[m] = hi_pos(acc);
    }

    let report = BoundsReport {
        big_n,
        k,
        m_count,
        weights: weights.to_vec(),
        r_star: cfg.r_star,
        y_kn,
        y_infn,
        y_inf,
        z0,
        z_kn,
        z_infn,
        z_inf,
        w_kn,
        w_infn,
        w_inf,
    };
    let z0_row = report.max_z0_row();
    if !(z0_row < 1.0) {
        return Err(RigorError::ZExceedsOne {
            z: z0_row,
            detail: "approximate-inverse defect reaches 1; the block inverse cannot be \
                     certified injective"
                .into(),
        });
    }
    Ok(report)
}
