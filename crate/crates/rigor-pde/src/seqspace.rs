//! The weighted sequence space l1_nu and its estimate toolbox.
//!
//! Elements are finitely supported two-sided Fourier coefficient sequences
//! with norm sum_n |u_n| nu^|n|; the space is a Banach algebra under discrete
//! convolution. The Upsilon/Psi/Phi helpers turn matrix and convolution
//! actions into computable norm bounds.

use rigor_core::{CIMat, CInterval, Interval};

/// Finitely supported two-sided sequence of complex intervals, modes
/// -n_max..n_max; implicitly zero beyond.
#[derive(Clone, Debug)]
pub struct SeqL1 {
    pub n_max: i64,
    pub coeffs: Vec<CInterval>,
    pub nu: f64,
}

impl SeqL1 {
    pub fn zeros(n_max: i64, nu: f64) -> SeqL1 {
        assert!(n_max >= 0 && nu >= 1.0);
        SeqL1 {
            n_max,
            coeffs: vec![CInterval::ZERO; (2 * n_max + 1) as usize],
            nu,
        }
    }

    /// Kronecker delta at mode `n`.
    pub fn delta(n: i64, nu: f64) -> SeqL1 {
        let mut s = SeqL1::zeros(n.abs(), nu);
        s.set(n, CInterval::ONE);
        s
    }

    #[inline]
    pub fn get(&self, n: i64) -> CInterval {
        if n.abs() > self.n_max {
            CInterval::ZERO
        } else {
            self.coeffs[(n + self.n_max) as usize]
        }
    }

    #[inline]
    pub fn set(&mut self, n: i64, v: CInterval) {
        assert!(n.abs() <= self.n_max, "mode {n} outside support");
        self.coeffs[(n + self.n_max) as usize] = v;
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> + '_ {
        -self.n_max..=self.n_max
    }

    /// Enclosure of the norm sum_n |u_n| nu^|n|.
    pub fn l1nu_norm(&self) -> Interval {
        let nu = Interval::point(self.nu);
        let mut acc = Interval::ZERO;
        for n in self.modes() {
            let c = self.get(n);
            if c == CInterval::ZERO {
                continue;
            }
            acc += c.abs() * nu.powi(n.unsigned_abs() as i32);
        }
        acc.clamp_nonneg()
    }

    /// Discrete convolution (u*v)_n = sum_m u_m v_{n-m}.
    pub fn convolve(&self, v: &SeqL1) -> SeqL1 {
        assert_eq!(self.nu, v.nu, "convolution requires matching nu");
        let mut out = SeqL1::zeros(self.n_max + v.n_max, self.nu);
        for a in self.modes() {
            let ua = self.get(a);
            if ua == CInterval::ZERO {
                continue;
            }
            for b in v.modes() {
                let vb = v.get(b);
                if vb == CInterval::ZERO {
                    continue;
                }
                let n = a + b;
                let cur = out.get(n);
                out.set(n, cur + ua * vb);
            }
        }
        out
    }

    /// Truncate to modes |n| <= n_new.
    pub fn truncated(&self, n_new: i64) -> SeqL1 {
        let mut out = SeqL1::zeros(n_new, self.nu);
        for n in -n_new.min(self.n_max)..=n_new.min(self.n_max) {
            out.set(n, self.get(n));
        }
        out
    }

    pub fn scale(&self, c: f64) -> SeqL1 {
        SeqL1 {
            n_max: self.n_max,
            coeffs: self.coeffs.iter().map(|z| z.scale(c)).collect(),
            nu: self.nu,
        }
    }
}

/// Per-subdomain norm weights of the full-space norm
/// ||u|| = ||P_KN u|| + eps_inftyN^-1 ||P_infN u|| + eps_inf^-1 ||P_inf u||.
#[derive(Clone, Copy, Debug)]
pub struct Weights {
    pub eps_inftyn: f64,
    pub eps_infty: f64,
    pub nu: f64,
}

impl Weights {
    pub fn new(eps_inftyn: f64, eps_infty: f64, nu: f64) -> Weights {
        assert!(eps_inftyn > 0.0 && eps_infty > 0.0 && nu >= 1.0);
        Weights {
            eps_inftyn,
            eps_infty,
            nu,
        }
    }

    /// theta_eps = max(1, eps_inftyN, eps_inf).
    pub fn theta(&self) -> f64 {
        1.0f64.max(self.eps_inftyn).max(self.eps_infty)
    }
}

/// Upsilon_n(B) = max_{|m|<=N} |B_{n,m}| / nu^|m|, so that componentwise
/// |B v| <= Upsilon(B) ||v||_{l1_nu}. Rows/cols of B are indexed by modes
/// -N..N.
pub fn upsilon(b: &CIMat, nu: f64, big_n: usize) -> Vec<Interval> {
    let dim = 2 * big_n + 1;
    assert_eq!(b.nrows, dim);
    assert_eq!(b.ncols, dim);
    let nu_i = Interval::point(nu);
    let inv_pows: Vec<Interval> = (0..dim)
        .map(|j| nu_i.powi(-((j as i64 - big_n as i64).unsigned_abs() as i32)))
        .collect();
    (0..dim)
        .map(|i| {
            let mut best = Interval::ZERO;
            for j in 0..dim {
                best = best.max_i(b[(i, j)].abs() * inv_pows[j]);
            }
            best
        })
        .collect()
}

/// Psi_n(u) = sup_m |u_m| / nu^|n-m| (exact over the finite support).
pub fn psi(u: &SeqL1, n: i64) -> Interval {
    let nu_i = Interval::point(u.nu);
    let mut best = Interval::ZERO;
    for m in u.modes() {
        let c = u.get(m);
        if c == CInterval::ZERO {
            continue;
        }
        best = best.max_i(c.abs() * nu_i.powi(-((n - m).unsigned_abs() as i32)));
    }
    best
}

/// A sequence of nonnegative per-mode norm bounds (e.g. C0 norms of the
/// time-dependent Fourier coefficients of some function).
#[derive(Clone, Debug)]
pub struct NormSeq {
    pub n_max: i64,
    pub vals: Vec<Interval>,
    pub nu: f64,
}

impl NormSeq {
    pub fn zeros(n_max: i64, nu: f64) -> NormSeq {
        NormSeq {
            n_max,
            vals: vec![Interval::ZERO; (2 * n_max + 1) as usize],
            nu,
        }
    }

    #[inline]
    pub fn get(&self, n: i64) -> Interval {
        if n.abs() > self.n_max {
            Interval::ZERO
        } else {
            self.vals[(n + self.n_max) as usize]
        }
    }

    #[inline]
    pub fn set(&mut self, n: i64, v: Interval) {
        assert!(n.abs() <= self.n_max);
        self.vals[(n + self.n_max) as usize] = v;
    }

    pub fn l1nu_norm(&self) -> Interval {
        let nu = Interval::point(self.nu);
        let mut acc = Interval::ZERO;
        for n in -self.n_max..=self.n_max {
            acc += self.get(n) * nu.powi(n.unsigned_abs() as i32);
        }
        acc.clamp_nonneg()
    }
}

/// Weight-independent ingredients of the Phi-family bounds: for each
/// |n| <= N, `p[n]` = max_{|n-m|<=N} a_m / nu^|n-m| and
/// `q[n]` = max_{|n-m|>N} b_m / nu^|n-m| (finite support makes the sup a
/// max). Index shift: slot n + N.
pub struct PhiRaw {
    pub p: Vec<Interval>,
    pub q: Vec<Interval>,
}

pub fn phi_raw(a: &NormSeq, b: &NormSeq, big_n: i64) -> PhiRaw {
    assert_eq!(a.nu, b.nu);
    let nu_i = Interval::point(a.nu);
    let mut p = Vec::with_capacity((2 * big_n + 1) as usize);
    let mut q = Vec::with_capacity((2 * big_n + 1) as usize);
    for n in -big_n..=big_n {
        let mut pn = Interval::ZERO;
        for m in -a.n_max..=a.n_max {
            let d = (n - m).abs();
            if d <= big_n {
                pn = pn.max_i(a.get(m) * nu_i.powi(-(d as i32)));
            }
        }
        let mut qn = Interval::ZERO;
        for m in -b.n_max..=b.n_max {
            let d = (n - m).abs();
            if d > big_n {
                qn = qn.max_i(b.get(m) * nu_i.powi(-(d as i32)));
            }
        }
        p.push(pn);
        q.push(qn);
    }
    PhiRaw { p, q }
}

/// Weight-independent ingredients of the summed Phi-tilde bound:
/// `p` = max_{|m|<=N} sum_{|n|<=N} a_{n-m} nu^{|n|-|m|},
/// `q` = sup_{|m|>N} sum_{|n|<=N} b_{n-m} nu^{|n|-|m|}.
pub struct PhiTildeRaw {
    pub p: Interval,
    pub q: Interval,
}

pub fn phi_tilde_raw(a: &NormSeq, b: &NormSeq, big_n: i64) -> PhiTildeRaw {
    assert_eq!(a.nu, b.nu);
    let nu_i = Interval::point(a.nu);
    let col_sum = |seq: &NormSeq, m: i64| -> Interval {
        let mut acc = Interval::ZERO;
        for n in -big_n..=big_n {
            let v = seq.get(n - m);
            if v == Interval::ZERO {
                continue;
            }
            acc += v * nu_i.powi((n.abs() - m.abs()) as i32);
        }
        acc.clamp_nonneg()
    };
    let mut p = Interval::ZERO;
    for m in -big_n..=big_n {
        p = p.max_i(col_sum(a, m));
    }
    // b has finite support: terms vanish once |m| > N + b.n_max.
    let mut q = Interval::ZERO;
    let m_hi = big_n + b.n_max;
    for m in (big_n + 1)..=m_hi {
        q = q.max_i(col_sum(b, m));
        q = q.max_i(col_sum(b, -m));
    }
    PhiTildeRaw { p, q }
}

/// Which of the three convolution-split bounds to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhiVariant {
    /// eps_inftyN-weighted componentwise bound.
    Phi,
    /// max(1, eps_inftyN)-weighted componentwise bound.
    CheckPhi,
}

/// Componentwise Phi or checked-Phi bound vector over |n| <= N.
pub fn phi_bounds(
    a: &NormSeq,
    b: &NormSeq,
    w: &Weights,
    big_n: i64,
    variant: PhiVariant,
) -> Vec<Interval> {
    let raw = phi_raw(a, b, big_n);
    let e1 = match variant {
        PhiVariant::Phi => w.eps_inftyn,
        PhiVariant::CheckPhi => w.eps_inftyn.max(1.0),
    };
    raw.p
        .iter()
        .zip(raw.q.iter())
        .map(|(p, q)| p.scale(e1).max_i(q.scale(w.eps_infty)))
        .collect()
}

/// Scalar summed Phi-tilde bound.
pub fn phi_tilde_bound(a: &NormSeq, b: &NormSeq, w: &Weights, big_n: i64) -> Interval {
    let raw = phi_tilde_raw(a, b, big_n);
    raw.p
        .scale(w.eps_inftyn.max(1.0))
        .max_i(raw.q.scale(w.eps_infty))
}

/// Bound for |p|(||ubar|| + theta r) scaled by theta^2, where |p| is the
/// polynomial with absolute-value coefficients: dominates the second
/// derivative terms p(ubar + r v) * v * h in the norm.
pub fn poly_tail_bound(p_coeffs: &[Interval], ubar_norm: Interval, r: f64, w: &Weights) -> Interval {
    let theta = Interval::point(w.theta());
    let x = (ubar_norm.clamp_nonneg() + theta.scale(r)).clamp_nonneg();
    let mut acc = Interval::ZERO;
    // Horner on |p| with nonnegative argument.
    for c in p_coeffs.iter().rev() {
        acc = acc * x + c.abs();
    }
    (theta.powi(2) * acc).clamp_nonneg()
}
