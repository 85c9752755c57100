//! Problem definition and the Fourier x Chebyshev function algebra.
//!
//! A problem is a scalar PDE u_t = (-1)^{R+1} u_x^{(2R)} + sum_j d^j/dx^j
//! g^(j)(u) with periodic boundary conditions, rescaled internally to space
//! period 2 pi (leading coefficient mu, derivative weights c_j) and to time
//! [-1, 1] on each subdomain. Approximate orbits are stored as vectors of
//! Chebyshev polynomials in time, one per Fourier mode.

use crate::cheb::{cheb_nodes, cheb_norm_bound, interpolate, ChebPoly};
use crate::seqspace::{NormSeq, SeqL1};
use rigor_core::{CIMat, CInterval, Cplx, Interval, RigorError};

/// Scalar semilinear parabolic problem, already rescaled to space period
/// 2 pi: u_t = (-1)^{R+1} mu D^{2R} u + sum_j c_j D^j g^(j)(u), with initial
/// Fourier data `f` plus an optional certified tail-norm bound for mass
/// beyond the stored modes.
#[derive(Clone, Debug)]
pub struct PdeProblem {
    pub r: usize,
    /// Coefficient lists of the polynomials g^(j), constant term first.
    pub g_polys: Vec<Vec<f64>>,
    pub l_x: f64,
    pub t_end: f64,
    pub f: SeqL1,
    pub f_tail_norm: Interval,
    pub nu: f64,
    /// (2 pi / L)^{2R}, the rescaled leading coefficient.
    pub mu: f64,
    /// c_j = (2 pi / L)^j multiplying D^j g^(j).
    pub cj: Vec<f64>,
}

impl PdeProblem {
    pub fn new(
        r: usize,
        g_polys: Vec<Vec<f64>>,
        l_x: f64,
        t_end: f64,
        f: SeqL1,
        nu: f64,
    ) -> Result<PdeProblem, RigorError> {
        if r < 1 || g_polys.len() != 2 * r || l_x <= 0.0 || t_end <= 0.0 || nu < 1.0 {
            return Err(RigorError::InvalidParams(
                "problem requires R >= 1, 2R nonlinearities, positive sizes, nu >= 1".into(),
            ));
        }
        let q = 2.0 * std::f64::consts::PI / l_x;
        let mu = q.powi(2 * r as i32);
        let cj = (0..2 * r).map(|j| q.powi(j as i32)).collect();
        Ok(PdeProblem {
            r,
            g_polys,
            l_x,
            t_end,
            f,
            f_tail_norm: Interval::ZERO,
            nu,
            mu,
            cj,
        })
    }

    /// Highest polynomial degree among the nonlinearities.
    pub fn max_degree(&self) -> usize {
        self.g_polys
            .iter()
            .map(|p| p.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    /// Coefficients of (g^(j))' as intervals.
    pub fn gprime(&self, j: usize) -> Vec<Interval> {
        poly_derivative(&self.g_polys[j])
    }

    /// Coefficients of (g^(j))'' as intervals.
    pub fn gsecond(&self, j: usize) -> Vec<Interval> {
        let first: Vec<f64> = poly_derivative(&self.g_polys[j])
            .iter()
            .map(|c| c.mid())
            .collect();
        poly_derivative(&first)
    }
}

fn poly_derivative(p: &[f64]) -> Vec<Interval> {
    if p.len() <= 1 {
        return vec![Interval::ZERO];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| Interval::point(*c).scale(i as f64))
        .collect()
}

/// A function of time and space stored as one Chebyshev polynomial in time
/// per Fourier mode, modes -n_max..n_max.
#[derive(Clone, Debug)]
pub struct FourierChebFun {
    pub n_max: i64,
    pub modes: Vec<ChebPoly>,
    pub nu: f64,
}

impl FourierChebFun {
    pub fn zeros(n_max: i64, k: usize, nu: f64) -> FourierChebFun {
        FourierChebFun {
            n_max,
            modes: vec![ChebPoly::zeros(k); (2 * n_max + 1) as usize],
            nu,
        }
    }

    /// Time-independent function from a Fourier sequence.
    pub fn from_seq(s: &SeqL1, k: usize) -> FourierChebFun {
        let mut out = FourierChebFun::zeros(s.n_max, k, s.nu);
        for n in s.modes() {
            let mut p = ChebPoly::zeros(k);
            p.coeffs[0] = s.get(n);
            out.set(n, p);
        }
        out
    }

    #[inline]
    pub fn get(&self, n: i64) -> ChebPoly {
        if n.abs() > self.n_max {
            ChebPoly::zeros(0)
        } else {
            self.modes[(n + self.n_max) as usize].clone()
        }
    }

    #[inline]
    pub fn set(&mut self, n: i64, p: ChebPoly) {
        assert!(n.abs() <= self.n_max);
        self.modes[(n + self.n_max) as usize] = p;
    }

    pub fn mode_iter(&self) -> impl Iterator<Item = (i64, &ChebPoly)> + '_ {
        self.modes
            .iter()
            .enumerate()
            .map(|(i, p)| (i as i64 - self.n_max, p))
    }

    pub fn k_order(&self) -> usize {
        self.modes.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    /// Coefficient-sum norm sum_n (|u_{n0}| + 2 sum_k |u_{nk}|) nu^|n|.
    pub fn norm_xkn(&self) -> Interval {
        let nu = Interval::point(self.nu);
        let mut acc = Interval::ZERO;
        for (n, p) in self.mode_iter() {
            let b = cheb_norm_bound(p, 1.0);
            if b == Interval::ZERO {
                continue;
            }
            acc += b * nu.powi(n.unsigned_abs() as i32);
        }
        acc.clamp_nonneg()
    }

    /// Per-mode C0 norm bounds |u_{n0}| + 2 sum_k |u_{nk}|.
    pub fn c0_norms(&self) -> NormSeq {
        let mut out = NormSeq::zeros(self.n_max, self.nu);
        for (n, p) in self.mode_iter() {
            out.set(n, cheb_norm_bound(p, 1.0));
        }
        out
    }

    /// Exact evaluation at t = 1: T_k(1) = 1 for all k.
    pub fn eval_one(&self) -> SeqL1 {
        let mut out = SeqL1::zeros(self.n_max, self.nu);
        for (n, p) in self.mode_iter() {
            let mut acc = p.coeffs[0];
            for c in p.coeffs.iter().skip(1) {
                acc = acc + c.scale(2.0);
            }
            out.set(n, acc);
        }
        out
    }

    /// Exact evaluation at t = -1: T_k(-1) = (-1)^k.
    pub fn eval_minus_one(&self) -> SeqL1 {
        let mut out = SeqL1::zeros(self.n_max, self.nu);
        for (n, p) in self.mode_iter() {
            let mut acc = p.coeffs[0];
            for (k, c) in p.coeffs.iter().enumerate().skip(1) {
                let s = if k % 2 == 0 { 2.0 } else { -2.0 };
                acc = acc + c.scale(s);
            }
            out.set(n, acc);
        }
        out
    }

    /// Enclosure of the space sequence at time `t`.
    pub fn eval_t(&self, t: Interval) -> SeqL1 {
        let mut out = SeqL1::zeros(self.n_max, self.nu);
        for (n, p) in self.mode_iter() {
            out.set(n, p.eval(t));
        }
        out
    }

    pub fn add(&self, o: &FourierChebFun) -> FourierChebFun {
        let n_max = self.n_max.max(o.n_max);
        let mut out = FourierChebFun::zeros(n_max, 0, self.nu);
        for n in -n_max..=n_max {
            out.set(n, self.get(n).add(&o.get(n)));
        }
        out
    }

    pub fn sub(&self, o: &FourierChebFun) -> FourierChebFun {
        let n_max = self.n_max.max(o.n_max);
        let mut out = FourierChebFun::zeros(n_max, 0, self.nu);
        for n in -n_max..=n_max {
            out.set(n, self.get(n).sub(&o.get(n)));
        }
        out
    }

    pub fn scale(&self, c: f64) -> FourierChebFun {
        FourierChebFun {
            n_max: self.n_max,
            modes: self.modes.iter().map(|p| p.scale(c)).collect(),
            nu: self.nu,
        }
    }

    /// Multiply every mode by the same complex interval scalar.
    pub fn mul_scalar(&self, z: CInterval) -> FourierChebFun {
        FourierChebFun {
            n_max: self.n_max,
            modes: self.modes.iter().map(|p| p.mul_scalar(z)).collect(),
            nu: self.nu,
        }
    }

    /// Space-time product: discrete convolution in Fourier, polynomial
    /// product in Chebyshev.
    pub fn mul(&self, o: &FourierChebFun) -> FourierChebFun {
        let n_max = self.n_max + o.n_max;
        let mut out = FourierChebFun::zeros(n_max, 0, self.nu);
        for (a, pa) in self.mode_iter() {
            if pa.is_zero() {
                continue;
            }
            for (b, pb) in o.mode_iter() {
                if pb.is_zero() {
                    continue;
                }
                let n = a + b;
                let cur = out.get(n);
                out.set(n, cur.add(&pa.mul(pb)));
            }
        }
        out
    }

    /// Apply the polynomial with the given coefficients (constant first)
    /// to this function, via Horner's scheme in the convolution algebra.
    pub fn apply_poly(&self, coeffs: &[Interval]) -> FourierChebFun {
        let mut acc = FourierChebFun::zeros(0, 0, self.nu);
        for c in coeffs.iter().rev() {
            acc = acc.mul(self);
            let mut p0 = acc.get(0);
            if p0.coeffs.is_empty() {
                p0 = ChebPoly::zeros(0);
            }
            p0.coeffs[0] = p0.coeffs[0] + CInterval::real(*c);
            acc.set(0, p0);
        }
        acc
    }

    /// Multiply mode n by (i n)^j, optionally scaled.
    pub fn dx_pow(&self, j: usize, scale: f64) -> FourierChebFun {
        let mut out = FourierChebFun::zeros(self.n_max, 0, self.nu);
        for (n, p) in self.mode_iter() {
            let z = in_pow(n, j) * Cplx::new(scale, 0.0);
            out.set(n, p.mul_scalar(CInterval::point(z)));
        }
        out
    }

    /// Restrict to modes |n| <= n_new.
    pub fn truncated(&self, n_new: i64) -> FourierChebFun {
        let mut out = FourierChebFun::zeros(n_new, 0, self.nu);
        for n in -n_new.min(self.n_max)..=n_new.min(self.n_max) {
            out.set(n, self.get(n));
        }
        out
    }

    /// The part of the function on modes |n| > n_keep, re-centered storage.
    pub fn tail_beyond(&self, n_keep: i64) -> FourierChebFun {
        let mut out = FourierChebFun::zeros(self.n_max, 0, self.nu);
        for (n, p) in self.mode_iter() {
            if n.abs() > n_keep {
                out.set(n, p.clone());
            }
        }
        out
    }

    /// Apply a (2N+1) x (2N+1) matrix to the mode vector (|n| <= N = n_max).
    pub fn matvec(&self, m: &CIMat) -> FourierChebFun {
        let dim = (2 * self.n_max + 1) as usize;
        assert_eq!(m.nrows, dim);
        assert_eq!(m.ncols, dim);
        let k = self.k_order();
        let mut out = FourierChebFun::zeros(self.n_max, k, self.nu);
        for i in 0..dim {
            let mut acc = ChebPoly::zeros(k);
            for (j, p) in self.modes.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                acc = acc.add(&p.mul_scalar(m[(i, j)]));
            }
            out.modes[i] = acc;
        }
        out
    }

    /// Interpolate per-mode values given at the K+1 Chebyshev nodes.
    pub fn from_node_values(
        values: &[Vec<CInterval>],
        n_max: i64,
        nu: f64,
    ) -> Result<FourierChebFun, RigorError> {
        let dim = (2 * n_max + 1) as usize;
        assert_eq!(values.len(), dim);
        let mut out = FourierChebFun::zeros(n_max, values[0].len() - 1, nu);
        for (i, v) in values.iter().enumerate() {
            out.modes[i] = interpolate(v)?;
        }
        Ok(out)
    }

    /// Midpoint values at the K+1 Chebyshev nodes for every mode.
    pub fn node_values_mid(&self, k: usize) -> Vec<Vec<Cplx>> {
        let nodes = cheb_nodes(k);
        self.modes
            .iter()
            .map(|p| nodes.iter().map(|t| p.eval(*t).mid()).collect())
            .collect()
    }
}

/// (i n)^j as an exact complex number.
pub fn in_pow(n: i64, j: usize) -> Cplx {
    let pw = (n as f64).powi(j as i32);
    match j % 4 {
        0 => Cplx::new(pw, 0.0),
        1 => Cplx::new(0.0, pw),
        2 => Cplx::new(-pw, 0.0),
        _ => Cplx::new(0.0, -pw),
    }
}

/// Piecewise orbit: one Fourier x Chebyshev segment per time subdomain, each
/// living on rescaled time [-1, 1] with half-length tau_m.
#[derive(Clone, Debug)]
pub struct PiecewiseOrbit {
    pub segments: Vec<FourierChebFun>,
    pub taus: Vec<f64>,
}

impl PiecewiseOrbit {
    pub fn m_count(&self) -> usize {
        self.segments.len()
    }
}

/// Equal subdivision of [0, t_end] into M subdomains of half-length tau_m.
pub fn equal_taus(t_end: f64, m: usize) -> Vec<f64> {
    vec![t_end / (2.0 * m as f64); m]
}

/// Geometrically graded half-lengths: subdomain lengths grow by the factor
/// `ratio` from one subdomain to the next, normalized to cover `[0, t_end]`.
/// Short early subdomains resolve fast initial transients; `ratio = 1`
/// reduces to the uniform schedule.
pub fn graded_taus(t_end: f64, m: usize, ratio: f64) -> Vec<f64> {
    assert!(m > 0 && t_end > 0.0 && ratio > 0.0);
    if (ratio - 1.0).abs() < 1e-12 {
        return equal_taus(t_end, m);
    }
    let total: f64 = (0..m).map(|i| ratio.powi(i as i32)).sum();
    (0..m)
        .map(|i| 0.5 * t_end * ratio.powi(i as i32) / total)
        .collect()
}

// ---------------------------------------------------------------------------
// Non-rigorous approximate orbit generation (spectral Galerkin + ETDRK4).
// ---------------------------------------------------------------------------

/// phi functions for the exponential integrator, evaluated stably.
fn phi_funcs(z: f64) -> (f64, f64, f64, f64) {
    // phi0 = e^z, phi1 = (e^z-1)/z, phi2 = (e^z-1-z)/z^2,
    // phi3 = (e^z-1-z-z^2/2)/z^3.
    if z.abs() < 1e-4 {
        let phi1 = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
        let phi2 = 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
        let phi3 = 1.0 / 6.0 + z / 24.0 + z * z / 120.0 + z * z * z / 720.0;
        (z.exp(), phi1, phi2, phi3)
    } else {
        let e = z.exp();
        let phi1 = (e - 1.0) / z;
        let phi2 = (phi1 - 1.0) / z;
        let phi3 = (phi2 - 0.5) / z;
        (e, phi1, phi2, phi3)
    }
}

/// Nonlinear part of the Galerkin vector field in f64: sum_j c_j (i n)^j
/// g^(j)(u)_n, truncated to |n| <= N.
fn galerkin_nonlinear(problem: &PdeProblem, u: &[Cplx], big_n: i64) -> Vec<Cplx> {
    let dim = (2 * big_n + 1) as usize;
    let mut out = vec![Cplx::new(0.0, 0.0); dim];
    for (j, poly) in problem.g_polys.iter().enumerate() {
        if poly.iter().all(|c| *c == 0.0) {
            continue;
        }
        // Horner in the convolution algebra, truncating to |n| <= N.
        let mut acc = vec![Cplx::new(0.0, 0.0); dim];
        for c in poly.iter().rev() {
            acc = conv_trunc(&acc, u, big_n);
            acc[big_n as usize] += c;
        }
        for (i, a) in acc.iter().enumerate() {
            let n = i as i64 - big_n;
            out[i] += in_pow(n, j) * problem.cj[j] * a;
        }
    }
    out
}

fn conv_trunc(a: &[Cplx], b: &[Cplx], big_n: i64) -> Vec<Cplx> {
    let dim = (2 * big_n + 1) as usize;
    let mut out = vec![Cplx::new(0.0, 0.0); dim];
    for (i, ai) in a.iter().enumerate() {
        if ai.norm_sqr() == 0.0 {
            continue;
        }
        let na = i as i64 - big_n;
        for (j, bj) in b.iter().enumerate() {
            let n = na + (j as i64 - big_n);
            if n.abs() <= big_n {
                out[(n + big_n) as usize] += ai * bj;
            }
        }
    }
    out
}

/// One ETDRK4 step of size h for u' = L u + N(u) with diagonal real L.
fn etdrk4_step(
    problem: &PdeProblem,
    u: &[Cplx],
    lin: &[f64],
    h: f64,
    big_n: i64,
) -> Vec<Cplx> {
    let dim = u.len();
    let mut e_full = vec![0.0; dim];
    let mut e_half = vec![0.0; dim];
    let mut p1h = vec![0.0; dim];
    let mut a_w = vec![0.0; dim];
    let mut b_w = vec![0.0; dim];
    let mut c_w = vec![0.0; dim];
    for i in 0..dim {
        let z = h * lin[i];
        let (e, p1, p2, p3) = phi_funcs(z);
        let (eh, p1h_i, _, _) = phi_funcs(0.5 * z);
        e_full[i] = e;
        e_half[i] = eh;
        p1h[i] = p1h_i;
        // Cox-Matthews weights.
        a_w[i] = p1 - 3.0 * p2 + 4.0 * p3;
        b_w[i] = 2.0 * p2 - 4.0 * p3;
        c_w[i] = 4.0 * p3 - p2;
    }
    let n1 = galerkin_nonlinear(problem, u, big_n);
    let ua: Vec<Cplx> = (0..dim)
        .map(|i| e_half[i] * u[i] + 0.5 * h * p1h[i] * n1[i])
        .collect();
    let n2 = galerkin_nonlinear(problem, &ua, big_n);
    let ub: Vec<Cplx> = (0..dim)
        .map(|i| e_half[i] * u[i] + 0.5 * h * p1h[i] * n2[i])
        .collect();
    let n3 = galerkin_nonlinear(problem, &ub, big_n);
    let uc: Vec<Cplx> = (0..dim)
        .map(|i| e_half[i] * ua[i] + 0.5 * h * p1h[i] * (2.0 * n3[i] - n1[i]))
        .collect();
    let n4 = galerkin_nonlinear(problem, &uc, big_n);
    (0..dim)
        .map(|i| {
            e_full[i] * u[i] + h * (a_w[i] * n1[i] + b_w[i] * (n2[i] + n3[i]) + c_w[i] * n4[i])
        })
        .collect()
}

/// Integrate the 2N+1 mode Galerkin system over [0, t_end] and sample each
/// subdomain at the K+1 Chebyshev nodes, producing point-valued segments.
pub fn approximate_orbit(
    problem: &PdeProblem,
    big_n: i64,
    k: usize,
    taus: &[f64],
) -> Result<PiecewiseOrbit, RigorError> {
    let dim = (2 * big_n + 1) as usize;
    // Leading linear symbol: (-1)^{R+1} mu (i n)^{2R} = -mu n^{2R}.
    let lin: Vec<f64> = (0..dim)
        .map(|i| {
            let n = (i as i64 - big_n) as f64;
            -problem.mu * n.powi(2 * problem.r as i32)
        })
        .collect();

    let mut u: Vec<Cplx> = (0..dim)
        .map(|i| problem.f.get(i as i64 - big_n).mid())
        .collect();
    let nodes = cheb_nodes(k);
    let mut segments = Vec::with_capacity(taus.len());
    for &tau_m in taus {
        // Node times within this subdomain, measured from its start, in
        // increasing order (nodes are stored decreasing).
        let len = 2.0 * tau_m;
        let mut times: Vec<f64> = nodes.iter().map(|t| tau_m * (t.mid() + 1.0)).collect();
        times.reverse();
        let mut node_vals: Vec<Vec<Cplx>> = vec![Vec::new(); k + 1];
        let mut t_cur = 0.0;
        let mut u_seg = u.clone();
        for (idx, &t_target) in times.iter().enumerate() {
            let span = t_target - t_cur;
            if span > 0.0 {
                let steps = ((span / (len / 64.0).min(2e-3)).ceil() as usize).max(1);
                let h = span / steps as f64;
                for _ in 0..steps {
                    u_seg = etdrk4_step(problem, &u_seg, &lin, h, big_n);
                }
                t_cur = t_target;
            }
            for v in &u_seg {
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(RigorError::NumericsBlewUp(
                        "orbit simulation produced non-finite values".into(),
                    ));
                }
            }
            // Slot K - idx holds the node with decreasing-order index.
            node_vals[k - idx] = u_seg.clone();
        }
        // Interpolate each mode through its node values.
        let values: Vec<Vec<CInterval>> = (0..dim)
            .map(|i| {
                (0..=k)
                    .map(|kk| CInterval::point(node_vals[kk][i]))
                    .collect()
            })
            .collect();
        segments.push(FourierChebFun::from_node_values(&values, big_n, problem.nu)?);
        u = u_seg;
    }
    Ok(PiecewiseOrbit {
        segments,
        taus: taus.to_vec(),
    })
}

// ---------------------------------------------------------------------------
// Orbit checkpoint (versioned text dump of all coefficients).
// ---------------------------------------------------------------------------

/// Serialize an orbit to a versioned text format (17 significant digits).
pub fn orbit_to_text(orbit: &PiecewiseOrbit) -> String {
    let mut out = String::from("orbit v1\n");
    out.push_str(&format!("segments {}\n", orbit.segments.len()));
    for (seg, tau) in orbit.segments.iter().zip(orbit.taus.iter()) {
        out.push_str(&format!(
            "segment tau {:.17e} n_max {} k {} nu {:.17e}\n",
            tau,
            seg.n_max,
            seg.k_order(),
            seg.nu
        ));
        for (n, p) in seg.mode_iter() {
            for (k, c) in p.coeffs.iter().enumerate() {
                let m = c.mid();
                if m.re != 0.0 || m.im != 0.0 {
                    out.push_str(&format!("{n} {k} {:.17e} {:.17e}\n", m.re, m.im));
                }
            }
        }
    }
    out
}

/// Parse the text produced by `orbit_to_text`.
pub fn orbit_from_text(text: &str) -> Result<PiecewiseOrbit, RigorError> {
    let bad = |msg: &str| RigorError::InvalidParams(format!("orbit file: {msg}"));
    let mut lines = text.lines();
    if lines.next() != Some("orbit v1") {
        return Err(bad("missing 'orbit v1' header"));
    }
    let seg_line = lines.next().ok_or_else(|| bad("missing segment count"))?;
    let m: usize = seg_line
        .strip_prefix("segments ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("malformed segment count"))?;
    let mut segments = Vec::with_capacity(m);
    let mut taus = Vec::with_capacity(m);
    let mut current: Option<FourierChebFun> = None;
    for line in lines {
        if let Some(rest) = line.strip_prefix("segment ") {
            if let Some(seg) = current.take() {
                segments.push(seg);
            }
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 8 || parts[0] != "tau" {
                return Err(bad("malformed segment header"));
            }
            let tau: f64 = parts[1].parse().map_err(|_| bad("bad tau"))?;
            let n_max: i64 = parts[3].parse().map_err(|_| bad("bad n_max"))?;
            let k: usize = parts[5].parse().map_err(|_| bad("bad k"))?;
            let nu: f64 = parts[7].parse().map_err(|_| bad("bad nu"))?;
            taus.push(tau);
            current = Some(FourierChebFun::zeros(n_max, k, nu));
        } else if !line.trim().is_empty() {
            let seg = current.as_mut().ok_or_else(|| bad("data before header"))?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(bad("malformed coefficient line"));
            }
            let n: i64 = parts[0].parse().map_err(|_| bad("bad mode"))?;
            let k: usize = parts[1].parse().map_err(|_| bad("bad order"))?;
            let re: f64 = parts[2].parse().map_err(|_| bad("bad real part"))?;
            let im: f64 = parts[3].parse().map_err(|_| bad("bad imag part"))?;
            let mut p = seg.get(n);
            if k >= p.coeffs.len() {
                return Err(bad("order out of range"));
            }
            p.coeffs[k] = CInterval::point(Cplx::new(re, im));
            seg.set(n, p);
        }
    }
    if let Some(seg) = current.take() {
        segments.push(seg);
    }
    if segments.len() != m {
        return Err(bad("segment count mismatch"));
    }
    Ok(PiecewiseOrbit { segments, taus })
}

// ---------------------------------------------------------------------------
// Discretized zero-finding map: gamma, F at Chebyshev nodes, the derivative
// blocks, and the block approximate inverse.
// ---------------------------------------------------------------------------

use crate::linop::LinearizedOperator;
use crate::quadrature::exp_kernel_integral_tol;
use rigor_core::{lu_inverse, CMat};

/// gamma(u) = (-1)^{R+1} mu D^{2R} u + sum_j c_j D^j g^(j)(u) - L u, with L
/// acting as Q Lambda Q^{-1} on modes |n| <= N and diagonally through the
/// tail eigenvalue law beyond.
pub fn gamma_eval(
    u: &FourierChebFun,
    problem: &PdeProblem,
    op: &LinearizedOperator,
) -> FourierChebFun {
    let sign = if problem.r % 2 == 0 { -1.0 } else { 1.0 };
    let mut gam = u.dx_pow(2 * problem.r, sign * problem.mu);
    for (j, poly) in problem.g_polys.iter().enumerate() {
        if poly.iter().all(|c| *c == 0.0) {
            continue;
        }
        let coeffs: Vec<Interval> = poly.iter().map(|c| Interval::point(*c)).collect();
        gam = gam.add(&u.apply_poly(&coeffs).dx_pow(j, problem.cj[j]));
    }
    // Finite part of L u.
    let ln = op.ln_matrix();
    let lu_fin = u.truncated(op.big_n).matvec(&ln);
    gam = gam.sub(&lu_fin);
    // Diagonal tail part of L u.
    let tail_modes: Vec<(i64, ChebPoly)> = u
        .mode_iter()
        .filter(|(n, p)| n.abs() > op.big_n && !p.is_zero())
        .map(|(n, p)| (n, p.clone()))
        .collect();
    for (n, p) in tail_modes {
        let cur = gam.get(n);
        gam.set(n, cur.sub(&p.mul_scalar(op.lambda_tail(n))));
    }
    gam
}

/// Eigen-coordinates of Pi_N gamma(ubar): the Chebyshev polynomials of
/// c = Q^{-1} Pi_N gamma(ubar), one per eigen index.
pub fn gamma_eigen_coords(
    problem: &PdeProblem,
    op: &LinearizedOperator,
    seg: &FourierChebFun,
) -> Vec<ChebPoly> {
    let gam = gamma_eval(seg, problem, op).truncated(op.big_n);
    let dim = op.dim();
    let kg = gam.k_order();
    let mut out = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut acc = ChebPoly::zeros(kg);
        for (jj, p) in gam.modes.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            acc = acc.add(&p.mul_scalar(op.q_inv[(i, jj)]));
        }
        out.push(acc);
    }
    out
}

/// Enclosures of Pi_N F(ubar) at the K+1 Chebyshev nodes of one subdomain:
/// F(t_k) = Q e^{tau (t_k+1) Lambda} Q^{-1} b + tau Q int_{-1}^{t_k}
/// e^{tau (t_k - s) Lambda} c(s) ds - ubar(t_k), with b the incoming boundary
/// data and c the eigen-coordinates of Pi_N gamma(ubar).
///
/// Returns values indexed [node][mode] with nodes in decreasing time order
/// (node 0 is t = 1).
pub fn evaluate_f_segment(
    problem: &PdeProblem,
    op: &LinearizedOperator,
    seg: &FourierChebFun,
    boundary: &[CInterval],
    k: usize,
    quad_tol: f64,
) -> Result<Vec<Vec<CInterval>>, RigorError> {
    let dim = op.dim();
    assert_eq!(boundary.len(), dim);
    let d = op.q_inv.matvec(boundary);
    let ctil = gamma_eigen_coords(problem, op, seg);
    let nodes = cheb_nodes(k);
    let q_int = op.q.to_interval();
    let tau = Interval::point(op.tau);
    let mut out = Vec::with_capacity(k + 1);
    for t in &nodes {
        let explam = op.exp_lambda(*t);
        let mut eigvec = Vec::with_capacity(dim);
        for i in 0..dim {
            let lam_tau = CInterval::point(op.lambda[i]).mul_real(tau);
            let integral = exp_kernel_integral_tol(lam_tau, *t, &ctil[i], quad_tol)?;
            eigvec.push(explam[i] * d[i] + integral.mul_real(tau));
        }
        let mut row = q_int.matvec(&eigvec);
        for (i, val) in row.iter_mut().enumerate() {
            let n = i as i64 - op.big_n;
            *val = *val - seg.get(n).eval(*t);
        }
        out.push(row);
    }
    Ok(out)
}

/// Chebyshev coefficient-space basis element: coefficient `k` set to one
/// (representing T_0 for k = 0 and 2 T_k otherwise).
pub fn basis_poly(k: usize, order: usize) -> ChebPoly {
    let mut p = ChebPoly::zeros(order);
    p.coeffs[k] = CInterval::ONE;
    p
}

/// Rigorous derivative data for one subdomain: the diagonal block of the
/// discretized derivative (coefficients of this segment to values at its
/// nodes) and the boundary propagator at the nodes.
#[derive(Clone, Debug)]
pub struct SegmentDerivative {
    /// (2N+1)(K+1) x (2N+1)(K+1), mode-major layout (mode index slow).
    pub df_diag: CIMat,
    /// (2N+1)(K+1) x (2N+1): node values of Q e^{tau (t_k+1) Lambda} Q^{-1}
    /// applied to incoming boundary data.
    pub exp_nodes: CIMat,
    pub k: usize,
}

/// Assemble the rigorous diagonal derivative block and the boundary
/// propagator for one subdomain.
///
/// The derivative of the integral term acts as u -> tau int e^{tau(t_k-s)L}
/// [sum_j c_j D^j Pi_N((g^(j))'(ubar) - vbar^(j)) * u - R_N u](s) ds, and the
/// identity part contributes -u(t_k).
pub fn assemble_segment_derivative(
    problem: &PdeProblem,
    op: &LinearizedOperator,
    seg: &FourierChebFun,
    k: usize,
    quad_tol: f64,
) -> Result<SegmentDerivative, RigorError> {
    let big_n = op.big_n;
    let dim = op.dim();
    let kp1 = k + 1;
    let d_flat = dim * kp1;
    let nodes = cheb_nodes(k);
    let q_int = op.q.to_interval();

    // Deviation multipliers a^(j) = Pi_N (g^(j))'(ubar) - vbar^(j).
    let mut devs: Vec<Option<FourierChebFun>> = Vec::with_capacity(2 * problem.r);
    let mut k_a = 0usize;
    for (j, _) in problem.g_polys.iter().enumerate() {
        let gp = problem.gprime(j);
        if gp.iter().all(|c| *c == Interval::ZERO) {
            devs.push(None);
            continue;
        }
        // Full-support convolution factor; only the output is projected.
        let mut a = seg.apply_poly(&gp);
        if a.n_max < big_n {
            a = a.add(&FourierChebFun::zeros(big_n, 0, a.nu));
        }
        for n in -big_n..=big_n {
            let mut p = a.get(n);
            if p.coeffs.is_empty() {
                p = ChebPoly::zeros(0);
            }
            p.coeffs[0] = p.coeffs[0] - op.vbar[j].get(n);
            a.set(n, p);
        }
        k_a = k_a.max(a.k_order());
        devs.push(Some(a));
    }
    let k_big = k + k_a;
    let kb1 = k_big + 1;

    // Integrals J[i][node][k'] = tau int_{-1}^{t_node} e^{tau lambda_i
    // (t_node - s)} phi_{k'}(s) ds for the coefficient basis.
    let tau = Interval::point(op.tau);
    let mut j_ints = vec![vec![vec![CInterval::ZERO; kb1]; kp1]; dim];
    for i in 0..dim {
        let lam_tau = CInterval::point(op.lambda[i]).mul_real(tau);
        for (knode, t) in nodes.iter().enumerate() {
            for kk in 0..kb1 {
                let phi = basis_poly(kk, k_big);
                let v = exp_kernel_integral_tol(lam_tau, *t, &phi, quad_tol)?;
                j_ints[i][knode][kk] = v.mul_real(tau);
            }
        }
    }

    // Basis evaluations phi_{k'}(t_node) for the identity part.
    let mut phi_at: Vec<Vec<CInterval>> = Vec::with_capacity(kp1);
    for t in &nodes {
        phi_at.push((0..kp1).map(|kk| basis_poly(kk, k).eval(*t)).collect());
    }

    let mut df = CIMat::zeros(d_flat, d_flat);
    for col_mode in 0..dim {
        let m_src = col_mode as i64 - big_n;
        for col_k in 0..kp1 {
            let col = col_mode * kp1 + col_k;
            let basis = basis_poly(col_k, k);
            // w = Dgamma_N basis, stored per output mode as ChebPoly.
            let mut w: Vec<ChebPoly> = vec![ChebPoly::zeros(k_big); dim];
            for (j, dev) in devs.iter().enumerate() {
                let Some(a) = dev else { continue };
                for row_mode in 0..dim {
                    let n = row_mode as i64 - big_n;
                    let an = a.get(n - m_src);
                    if an.is_zero() {
                        continue;
                    }
                    let z = CInterval::point(in_pow(n, j) * problem.cj[j]);
                    w[row_mode] = w[row_mode].add(&an.mul(&basis).mul_scalar(z));
                }
            }
            for row_mode in 0..dim {
                let rnc = op.rn[(row_mode, col_mode)];
                if rnc != CInterval::ZERO {
                    w[row_mode] = w[row_mode].sub(&basis.mul_scalar(rnc));
                }
            }
            // Eigen coordinates of w.
            let mut weig: Vec<ChebPoly> = Vec::with_capacity(dim);
            for i in 0..dim {
                let mut acc = ChebPoly::zeros(k_big);
                for (jj, p) in w.iter().enumerate() {
                    if p.is_zero() {
                        continue;
                    }
                    acc = acc.add(&p.mul_scalar(op.q_inv[(i, jj)]));
                }
                weig.push(acc.resized(k_big));
            }
            // Integrate, rotate back by Q, subtract the identity part.
            for (knode, _) in nodes.iter().enumerate() {
                let mut eigvec = Vec::with_capacity(dim);
                for i in 0..dim {
                    let mut acc = CInterval::ZERO;
                    for kk in 0..kb1 {
                        let c = weig[i].coeff(kk);
                        if c != CInterval::ZERO {
                            acc = acc + j_ints[i][knode][kk] * c;
                        }
                    }
                    eigvec.push(acc);
                }
                for row_mode in 0..dim {
                    let mut acc = CInterval::ZERO;
                    for i in 0..dim {
                        if eigvec[i] != CInterval::ZERO {
                            acc = acc + q_int[(row_mode, i)] * eigvec[i];
                        }
                    }
                    if row_mode == col_mode {
                        acc = acc - phi_at[knode][col_k];
                    }
                    df[(row_mode * kp1 + knode, col)] = acc;
                }
            }
        }
    }

    // Boundary propagator at the nodes.
    let mut exp_nodes = CIMat::zeros(d_flat, dim);
    for (knode, t) in nodes.iter().enumerate() {
        let explam = op.exp_lambda(*t);
        // Q diag(explam) Q^{-1}.
        for row_mode in 0..dim {
            for col_mode in 0..dim {
                let mut acc = CInterval::ZERO;
                for i in 0..dim {
                    acc = acc + q_int[(row_mode, i)] * explam[i] * op.q_inv[(i, col_mode)];
                }
                exp_nodes[(row_mode * kp1 + knode, col_mode)] = acc;
            }
        }
    }

    Ok(SegmentDerivative {
        df_diag: df,
        exp_nodes,
        k,
    })
}

/// Endpoint-evaluation matrix E_1: (2N+1) x (2N+1)(K+1), picking per mode
/// the coefficient sum u_{n0} + 2 sum_k u_{nk}.
pub fn e1_matrix(dim: usize, k: usize) -> CMat {
    let mut m = CMat::zeros(dim, dim * (k + 1));
    for i in 0..dim {
        for kk in 0..=k {
            m[(i, i * (k + 1) + kk)] = Cplx::new(if kk == 0 { 1.0 } else { 2.0 }, 0.0);
        }
    }
    m
}

/// Per-segment pieces of the block approximate inverse: A^(m,m) is the
/// floating-point inverse of the diagonal derivative block; the coupling
/// factor U^(m) = A^(m,m) * (boundary propagator at nodes) generates every
/// off-diagonal block as A^(m,m') = -U^(m) E_1 A^(m-1,m').
#[derive(Clone, Debug)]
pub struct SegmentInverse {
    pub a_diag: CMat,
    /// (2N+1)(K+1) x (2N+1).
    pub u_couple: CMat,
}

/// Build the per-segment approximate inverse from the midpoints of the
/// rigorous derivative data.
pub fn build_segment_inverse(sd: &SegmentDerivative) -> Result<SegmentInverse, RigorError> {
    let a_diag = lu_inverse(&sd.df_diag.mid()).map_err(|e| {
        RigorError::SingularApproxInverse(format!("diagonal derivative block: {e}"))
    })?;
    let u_couple = a_diag.matmul(&sd.exp_nodes.mid());
    Ok(SegmentInverse { a_diag, u_couple })
}

/// One forward Newton sweep on the finite discretization (non-rigorous):
/// solves the block lower-bidiagonal system DF delta = -F exactly and updates
/// the orbit coefficients in place. Returns the max-abs residual of F before
/// the update.
pub fn newton_sweep(
    problem: &PdeProblem,
    orbit: &mut PiecewiseOrbit,
    big_n: i64,
    k: usize,
) -> Result<f64, RigorError> {
    let dim = (2 * big_n + 1) as usize;
    let kp1 = k + 1;
    let e1 = e1_matrix(dim, k);
    let mut boundary: Vec<CInterval> = (0..dim)
        .map(|i| CInterval::point(problem.f.get(i as i64 - big_n).mid()))
        .collect();
    let mut delta_prev: Vec<Cplx> = vec![Cplx::new(0.0, 0.0); dim * kp1];
    let mut max_resid = 0.0f64;
    let m_count = orbit.m_count();
    for m in 0..m_count {
        let tau = orbit.taus[m];
        let seg = orbit.segments[m].clone();
        let op = LinearizedOperator::from_segment(problem, &seg, tau, big_n)?;
        let fvals = evaluate_f_segment(problem, &op, &seg, &boundary, k, 1e-10)?;
        let sd = assemble_segment_derivative(problem, &op, &seg, k, 1e-10)?;
        let inv = build_segment_inverse(&sd)?;
        // rhs = -(F + exp_nodes * E_1 delta_prev), all midpoints.
        let e1_delta = e1.matvec(&delta_prev);
        let coupled = sd.exp_nodes.mid().matvec(&e1_delta);
        let mut rhs = vec![Cplx::new(0.0, 0.0); dim * kp1];
        for mode in 0..dim {
            for kk in 0..kp1 {
                let f = fvals[kk][mode].mid();
                max_resid = max_resid.max(f.norm());
                rhs[mode * kp1 + kk] = -(f + coupled[mode * kp1 + kk]);
            }
        }
        let delta = inv.a_diag.matvec(&rhs);
        // Apply the correction to this segment's coefficients.
        let seg_mut = &mut orbit.segments[m];
        for mode in 0..dim {
            let n = mode as i64 - big_n;
            let mut p = seg_mut.get(n).resized(k);
            for kk in 0..kp1 {
                let cur = p.coeffs[kk].mid();
                p.coeffs[kk] = CInterval::point(cur + delta[mode * kp1 + kk]);
            }
            seg_mut.set(n, p);
        }
        // Boundary for the next segment: endpoint of the pre-update
        // coefficients, so that every residual in this sweep is evaluated at
        // the same base point (the coupling correction enters only through
        // delta_prev; using the updated endpoint would count it twice).
        let end = seg.eval_one();
        boundary = (0..dim)
            .map(|i| CInterval::point(end.get(i as i64 - big_n).mid()))
            .collect();
        delta_prev = delta;
    }
    Ok(max_resid)
}
