//! Solution-adapted linear operator per time subdomain.
//!
//! For each subdomain, the operator is built from time-averaged linearization
//! data: L_tilde = (-1)^{R+1} mu D^{2R} + sum_j c_j D^j Pi_N (vbar^(j) * .)
//! on modes |n| <= N, then numerically diagonalized. Rigor enters only
//! through the exact definition L_N := Q Lambda Q^{-1} with a certified
//! enclosure of Q^{-1} and the interval residual R_N = L_N - L_tilde. Beyond
//! mode N the operator acts diagonally with the explicit tail eigenvalue law
//! lambda_n = -mu n^{2R} + sum_j c_j (i n)^j (vbar^(j))_0.

use crate::problem::{in_pow, FourierChebFun, PdeProblem};
use crate::seqspace::SeqL1;
use ndarray::Array2;
use ndarray_linalg::Eig;
use rigor_core::{
    enclose_matrix_inverse, lu_inverse, CIMat, CInterval, CMat, Cplx, Interval, RigorError,
};

/// Time-constant linearization coefficient sequences vbar^(j), one per
/// derivative order j = 0..2R-1, each supported on |n| <= N.
///
/// vbar^(j) is the Chebyshev mean (coefficient k = 0) in time of the Fourier
/// coefficients of (g^(j))'(ubar), truncated to |n| <= N.
pub fn build_vbar(
    ubar: &FourierChebFun,
    problem: &PdeProblem,
    big_n: i64,
) -> Vec<SeqL1> {
    (0..2 * problem.r)
        .map(|j| {
            let gp = problem.gprime(j);
            if gp.iter().all(|c| *c == Interval::ZERO) {
                return SeqL1::zeros(big_n, problem.nu);
            }
            let full = ubar.apply_poly(&gp);
            let mut out = SeqL1::zeros(big_n, problem.nu);
            for n in -big_n..=big_n {
                let p = full.get(n);
                if !p.coeffs.is_empty() {
                    out.set(n, p.coeffs[0]);
                }
            }
            out
        })
        .collect()
}

/// The linearized operator on one subdomain. Immutable after construction.
#[derive(Clone, Debug)]
pub struct LinearizedOperator {
    pub big_n: i64,
    pub r: usize,
    pub mu: f64,
    pub cj: Vec<f64>,
    /// Subdomain half-length: the subdomain covers 2 tau in original time.
    pub tau: f64,
    pub vbar: Vec<SeqL1>,
    /// Interval enclosure of the finite linearization matrix L_tilde.
    pub ltilde: CIMat,
    /// Numerical eigenvector matrix (point data, column-normalized).
    pub q: CMat,
    /// Certified enclosure of q^{-1}.
    pub q_inv: CIMat,
    /// Numerical eigenvalues, sorted by real part then imaginary part.
    pub lambda: Vec<Cplx>,
    /// Residual R_N = Q Lambda Q^{-1} - L_tilde (interval enclosure).
    pub rn: CIMat,
}

/// Assemble the interval matrix of L_tilde on modes |n| <= N.
fn assemble_ltilde(
    vbar: &[SeqL1],
    r: usize,
    mu: f64,
    cj: &[f64],
    big_n: i64,
) -> CIMat {
    let dim = (2 * big_n + 1) as usize;
    let mut m = CIMat::zeros(dim, dim);
    for row in 0..dim {
        let n = row as i64 - big_n;
        // Diagonal leading part (-1)^{R+1} mu (i n)^{2R} = -mu n^{2R}.
        let lead = -mu * (n as f64).powi(2 * r as i32);
        m[(row, row)] = m[(row, row)] + CInterval::real(Interval::point(lead));
        for (j, v) in vbar.iter().enumerate() {
            let dn = CInterval::point(in_pow(n, j) * cj[j]);
            for col in 0..dim {
                let mm = col as i64 - big_n;
                let c = v.get(n - mm);
                if c == CInterval::ZERO {
                    continue;
                }
                m[(row, col)] = m[(row, col)] + dn * c;
            }
        }
    }
    m
}

impl LinearizedOperator {
    pub fn build(
        vbar: Vec<SeqL1>,
        r: usize,
        mu: f64,
        cj: Vec<f64>,
        tau: f64,
        big_n: i64,
    ) -> Result<LinearizedOperator, RigorError> {
        let dim = (2 * big_n + 1) as usize;
        let ltilde = assemble_ltilde(&vbar, r, mu, &cj, big_n);
        let mid = ltilde.mid();

        // Numerical eigendecomposition of the midpoint matrix.
        let mut arr = Array2::<Cplx>::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                arr[(i, j)] = mid[(i, j)];
            }
        }
        let (vals, vecs) = arr.eig().map_err(|e| {
            RigorError::NotVerifiablyInvertible {
                beta: f64::INFINITY,
            }
            .tagged(&format!("eigendecomposition failed: {e}"))
        })?;

        // Deterministic ordering: sort eigenpairs by (Re, Im).
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| {
            (vals[a].re, vals[a].im)
                .partial_cmp(&(vals[b].re, vals[b].im))
                .unwrap_or(std::cmp::Ordering::Equal)
        });

        let mut q = CMat::zeros(dim, dim);
        let mut lambda = Vec::with_capacity(dim);
        for (col, &src) in order.iter().enumerate() {
            lambda.push(vals[src]);
            // Normalize: largest-modulus entry becomes real positive, for
            // reproducibility and conditioning.
            let mut piv = Cplx::new(0.0, 0.0);
            for i in 0..dim {
                if vecs[(i, src)].norm() > piv.norm() {
                    piv = vecs[(i, src)];
                }
            }
            if piv.norm() == 0.0 {
                return Err(RigorError::NotVerifiablyInvertible { beta: f64::INFINITY });
            }
            for i in 0..dim {
                q[(i, col)] = vecs[(i, src)] / piv;
            }
        }

        // Certified enclosure of Q^{-1}.
        let w = lu_inverse(&q)?;
        let (q_inv, _beta) = enclose_matrix_inverse(&q.to_interval(), &w)?;

        // R_N = Q Lambda Q^{-1} - L_tilde, all in interval arithmetic.
        let mut qlam = CIMat::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                qlam[(i, j)] = CInterval::point(q[(i, j)]) * CInterval::point(lambda[j]);
            }
        }
        let rn = qlam.matmul(&q_inv).sub(&ltilde);

        Ok(LinearizedOperator {
            big_n,
            r,
            mu,
            cj,
            tau,
            vbar,
            ltilde,
            q,
            q_inv,
            lambda,
            rn,
        })
    }

    /// Build from an approximate orbit segment.
    pub fn from_segment(
        problem: &PdeProblem,
        segment: &FourierChebFun,
        tau: f64,
        big_n: i64,
    ) -> Result<LinearizedOperator, RigorError> {
        let vbar = build_vbar(segment, problem, big_n);
        LinearizedOperator::build(
            vbar,
            problem.r,
            problem.mu,
            problem.cj.clone(),
            tau,
            big_n,
        )
    }

    pub fn dim(&self) -> usize {
        (2 * self.big_n + 1) as usize
    }

    /// The finite operator L_N = Q Lambda Q^{-1} = L_tilde + R_N.
    pub fn ln_matrix(&self) -> CIMat {
        self.rn.add(&self.ltilde)
    }

    /// Tail eigenvalue lambda_n = -mu n^{2R} + sum_j c_j (i n)^j (vbar^(j))_0
    /// for |n| > N (valid formula for any n).
    pub fn lambda_tail(&self, n: i64) -> CInterval {
        let lead = -self.mu * (n as f64).powi(2 * self.r as i32);
        let mut acc = CInterval::real(Interval::point(lead));
        for (j, v) in self.vbar.iter().enumerate() {
            let z = CInterval::point(in_pow(n, j) * self.cj[j]);
            acc = acc + z * v.get(0);
        }
        acc
    }

    /// Real-part tail polynomial, symmetrized over the mode sign.
    pub fn tail_poly(&self) -> TailPoly {
        let mut beta = Vec::with_capacity(2 * self.r);
        for (j, v) in self.vbar.iter().enumerate() {
            let v0 = v.get(0);
            // Re((i n)^j v0) = n^j * Re(i^j v0).
            let re = match j % 4 {
                0 => v0.re,
                1 => -v0.im,
                2 => -v0.re,
                _ => v0.im,
            }
            .scale(self.cj[j]);
            // Odd powers flip sign between n and -n; hull both so the
            // polynomial majorizes Re(lambda_{+-n}) simultaneously.
            let sym = if j % 2 == 1 { Interval::hull(re, -re) } else { re };
            beta.push(sym);
        }
        TailPoly {
            mu: self.mu,
            r: self.r,
            beta,
        }
    }

    /// Diagonal of D_N(t) = Re(Lambda)^{-1} (e^{tau (1+t) Re Lambda} - I),
    /// i.e. entries tau (1+t) zeta(tau (1+t) Re lambda_i), which bound
    /// tau int_{-1}^{t} |e^{tau (t-s) lambda_i}| ds.
    pub fn dn_diag(&self, t: Interval) -> Vec<Interval> {
        let s = (t + Interval::ONE).scale(self.tau).clamp_nonneg();
        self.lambda
            .iter()
            .map(|lam| {
                let x = s.scale(lam.re);
                (s * x.expm1_over_x()).clamp_nonneg()
            })
            .collect()
    }

    /// Entrywise upper bounds |e^{tau (1+t) Lambda}| = e^{tau (1+t) Re Lambda}.
    pub fn exp_lambda_abs(&self, t: Interval) -> Vec<Interval> {
        let s = (t + Interval::ONE).scale(self.tau).clamp_nonneg();
        self.lambda
            .iter()
            .map(|lam| s.scale(lam.re).exp())
            .collect()
    }

    /// Point enclosures of e^{tau (1+t) lambda_i}.
    pub fn exp_lambda(&self, t: Interval) -> Vec<CInterval> {
        let s = (t + Interval::ONE).scale(self.tau).clamp_nonneg();
        self.lambda
            .iter()
            .map(|lam| CInterval::point(*lam).mul_real(s).exp())
            .collect()
    }
}

trait Tagged {
    fn tagged(self, msg: &str) -> RigorError;
}

impl Tagged for RigorError {
    fn tagged(self, msg: &str) -> RigorError {
        RigorError::NumericsBlewUp(format!("{msg}: {self}"))
    }
}

// ---------------------------------------------------------------------------
// Tail real-part polynomial and the chi / tail-sup machinery.
// ---------------------------------------------------------------------------

/// Polynomial P with P(n) >= Re(lambda_{+-n}): P(n) = -mu n^{2R} +
/// sum_{j<2R} beta_j n^j, where odd-order beta are sign-symmetric hulls.
#[derive(Clone, Debug)]
pub struct TailPoly {
    pub mu: f64,
    pub r: usize,
    pub beta: Vec<Interval>,
}

impl TailPoly {
    /// Interval enclosure of P(n).
    pub fn eval(&self, n: i64) -> Interval {
        let nf = n as f64;
        let mut acc = Interval::point(-self.mu) * Interval::point(nf).powi(2 * self.r as i32);
        for (j, b) in self.beta.iter().enumerate() {
            if *b == Interval::ZERO {
                continue;
            }
            acc = acc + *b * Interval::point(nf).powi(j as i32);
        }
        acc
    }

    /// Smallest integer cutoff beyond which n -> n^j / (-P(n)) is certifiably
    /// positive and nonincreasing: the derivative criterion
    /// -j P(n) + n P'(n) <= 0 holds whenever (2R - j) mu n^{2R} dominates
    /// sum_l |l - j| |beta_l| n^l, which is implied termwise by
    /// n^{2R-l} >= 2R |l - j| |beta_l| / ((2R - j) mu).
    pub fn monotone_cutoff(&self, j: usize) -> i64 {
        let two_r = 2 * self.r;
        assert!(j < two_r);
        let denom = (two_r - j) as f64 * self.mu;
        let mut cut = 1.0f64;
        for (l, b) in self.beta.iter().enumerate() {
            let mag = b.abs().hi;
            if mag == 0.0 || l == j {
                continue;
            }
            let rhs = (two_r as f64) * (l as f64 - j as f64).abs() * mag / denom;
            let root = rhs.powf(1.0 / (two_r - l) as f64);
            cut = cut.max(root);
        }
        // Round up generously: the termwise bound is evaluated in f64.
        (cut * (1.0 + 1e-12)).ceil() as i64 + 1
    }

    /// Cutoff beyond which P(n) < 0 is certified termwise:
    /// mu n^{2R} > 2R |beta_l| n^l for every l.
    pub fn negativity_cutoff(&self) -> i64 {
        let two_r = 2 * self.r;
        let mut cut = 1.0f64;
        for (l, b) in self.beta.iter().enumerate() {
            let mag = b.abs().hi;
            if mag == 0.0 {
                continue;
            }
            let rhs = (two_r as f64) * mag / self.mu;
            cut = cut.max(rhs.powf(1.0 / (two_r - l) as f64));
        }
        (cut * (1.0 + 1e-12)).ceil() as i64 + 1
    }
}

/// Certified upper bound for chi^(j)_N = sup_{n>N} n^j (1 - e^{2 tau
/// Re(lambda_n)}) / (-Re(lambda_n)):
///
/// 1. scan N < n <= N^(j) (the monotonicity cutoff) with interval arithmetic,
///    requiring Re(lambda_n) < 0 throughout;
/// 2. beyond N^(j) the map n -> n^j / (-Re lambda_n) majorizes the scanned
///    expression and is nonincreasing, so its value at the cutoff bounds the
///    tail; if that value still exceeds the scanned max, the scan is extended
///    by doubling the cutoff until it does not.
pub fn chi_bound(tail: &TailPoly, tau: f64, j: usize, big_n: i64) -> Result<Interval, RigorError> {
    let two_tau = Interval::point(tau).scale(2.0);
    let n_j = tail.monotone_cutoff(j).max(big_n + 1);
    let expr = |n: i64| -> Result<Interval, RigorError> {
        let re = tail.eval(n);
        if re.hi >= 0.0 {
            return Err(RigorError::TailNotDissipative { n, value: re.hi });
        }
        // n^j (1 - e^{2 tau re}) / (-re) = n^j * 2 tau * zeta(2 tau re).
        let x = two_tau * re;
        let val = Interval::point(n as f64).powi(j as i32) * two_tau * x.expm1_over_x();
        Ok(val.clamp_nonneg())
    };
    let mut scan_max = Interval::ZERO;
    for n in (big_n + 1)..=n_j {
        let v = expr(n)?;
        if v.hi > scan_max.hi {
            scan_max = v;
        }
    }
    // Monotone tail majorant at a cutoff point.
    let tail_val = |n: i64| -> Result<Interval, RigorError> {
        let re = tail.eval(n);
        if re.hi >= 0.0 {
            return Err(RigorError::TailNotDissipative { n, value: re.hi });
        }
        Interval::point(n as f64)
            .powi(j as i32)
            .checked_div(-re)
    };
    let mut cutoff = n_j;
    loop {
        let tv = tail_val(cutoff)?;
        if tv.hi <= scan_max.hi {
            return Ok(scan_max);
        }
        // Extend the scan to the doubled cutoff.
        let next = cutoff
            .checked_mul(2)
            .ok_or_else(|| RigorError::NumericsBlewUp("chi cutoff overflow".into()))?;
        for n in (cutoff + 1)..=next {
            let v = expr(n)?;
            if v.hi > scan_max.hi {
                scan_max = v;
            }
        }
        cutoff = next;
        if cutoff > 1 << 40 {
            return Err(RigorError::NumericsBlewUp(
                "chi bound scan failed to close".into(),
            ));
        }
    }
}

/// Certified upper bound for sup_{n>N} [ w_pos * max(P_pos(n), 0)
/// + sum_i w_i * P_i(n) ], with all weights nonnegative.
///
/// Used for the exponents mu_{m,l} governing tail propagation through the
/// boundary-coupling inverse: P_pos carries the positive-part term, the rest
/// enter linearly. The supremum is certified by scanning up to a cutoff past
/// which the positive part vanishes and the linear combination decreases.
pub fn tail_sup_combination(
    pos: Option<(f64, &TailPoly)>,
    rest: &[(f64, &TailPoly)],
    big_n: i64,
) -> Result<Interval, RigorError> {
    // Combined linear part.
    let combined: Option<TailPoly> = if rest.is_empty() {
        None
    } else {
        let r = rest[0].1.r;
        let two_r = 2 * r;
        let mut mu = 0.0;
        let mut beta = vec![Interval::ZERO; two_r];
        for (w, p) in rest {
            assert!(*w >= 0.0);
            assert_eq!(p.r, r);
            mu += w * p.mu;
            for (j, b) in p.beta.iter().enumerate() {
                beta[j] = beta[j] + b.scale(*w);
            }
        }
        Some(TailPoly { mu, r, beta })
    };
    let mut cutoff = big_n + 1;
    if let Some((_, p)) = pos {
        cutoff = cutoff.max(p.negativity_cutoff());
    }
    if let Some(c) = &combined {
        // j = 0 monotonicity: beyond this cutoff the combined polynomial is
        // nonincreasing (and the positive part is already zero).
        cutoff = cutoff.max(c.monotone_cutoff(0));
    }
    let value = |n: i64| -> Interval {
        let mut acc = Interval::ZERO;
        if let Some((w, p)) = pos {
            let v = p.eval(n);
            let plus = Interval::new(v.lo.max(0.0), v.hi.max(0.0));
            acc = acc + plus.scale(w);
        }
        if let Some(c) = &combined {
            acc = acc + c.eval(n);
        }
        acc
    };
    let mut best = value(cutoff);
    for n in (big_n + 1)..cutoff {
        let v = value(n);
        if v.hi > best.hi {
            best = v;
        }
    }
    Ok(best)
}
