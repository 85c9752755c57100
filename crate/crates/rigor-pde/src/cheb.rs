//! Chebyshev interpolation machinery: nodes, interpolants, norm bounds on
//! Bernstein ellipses, interpolation-error constants sigma_{K,l} (including a
//! rigorous global optimizer for sigma_{K,0}), and the exponential / Duhamel
//! integral interpolation error bounds used by the validation estimates.
//!
//! All polynomials use the convention P = P_0 + 2 sum_{k>=1} P_k T_k, which
//! makes the C0 norm bound |P_0| + 2 sum |P_k| and the ellipse bound
//! |P_0| + sum |P_k| (rho^k + rho^-k) uniform in rho (rho = 1 gives C0).

use rigor_core::{CInterval, Interval, RigorError};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Chebyshev points of the second kind, t_k = cos(pi k / K), ordered from
/// t_0 = 1 down to t_K = -1, as tight enclosures (endpoints and the midpoint
/// for even K are exact).
pub fn cheb_nodes(k: usize) -> Vec<Interval> {
    assert!(k >= 1, "need at least two nodes");
    (0..=k)
        .map(|j| {
            if j == 0 {
                Interval::ONE
            } else if j == k {
                -Interval::ONE
            } else if 2 * j == k {
                Interval::ZERO
            } else {
                let ang = Interval::pi()
                    .scale(j as f64)
                    .checked_div(Interval::point(k as f64))
                    .expect("k > 0");
                ang.cos()
            }
        })
        .collect()
}

/// Polynomial in the Chebyshev basis, P = P_0 + 2 sum_{k>=1} P_k T_k.
#[derive(Clone, Debug)]
pub struct ChebPoly {
    pub coeffs: Vec<CInterval>,
}

impl ChebPoly {
    pub fn new(coeffs: Vec<CInterval>) -> ChebPoly {
        assert!(!coeffs.is_empty());
        ChebPoly { coeffs }
    }

    pub fn zeros(k: usize) -> ChebPoly {
        ChebPoly {
            coeffs: vec![CInterval::ZERO; k + 1],
        }
    }

    pub fn constant(c: CInterval) -> ChebPoly {
        ChebPoly { coeffs: vec![c] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    #[inline]
    pub fn coeff(&self, k: usize) -> CInterval {
        self.coeffs.get(k).copied().unwrap_or(CInterval::ZERO)
    }

    /// Plain-basis coefficients c_k with P = sum c_k T_k.
    fn plain(&self) -> Vec<CInterval> {
        let mut c = self.coeffs.clone();
        for ck in c.iter_mut().skip(1) {
            *ck = ck.scale(2.0);
        }
        c
    }

    fn from_plain(mut c: Vec<CInterval>) -> ChebPoly {
        for ck in c.iter_mut().skip(1) {
            *ck = ck.scale(0.5);
        }
        ChebPoly { coeffs: c }
    }

    /// Clenshaw evaluation at an interval argument.
    pub fn eval(&self, t: Interval) -> CInterval {
        let c = self.plain();
        let n = c.len();
        let mut b1 = CInterval::ZERO;
        let mut b2 = CInterval::ZERO;
        for k in (1..n).rev() {
            let b = c[k] + b1.mul_real(t.scale(2.0)) - b2;
            b2 = b1;
            b1 = b;
        }
        c[0] + b1.mul_real(t) - b2
    }

    /// Derivative, degree reduced by one (constant input gives the zero
    /// constant).
    pub fn derivative(&self) -> ChebPoly {
        let c = self.plain();
        let k = self.degree();
        if k == 0 {
            return ChebPoly::constant(CInterval::ZERO);
        }
        // Raw backward recurrence d_{j-1} = d_{j+1} + 2j c_j; halving the
        // whole result instead of only d_0 lands directly in our convention.
        let mut d = vec![CInterval::ZERO; k + 2];
        for j in (1..=k).rev() {
            d[j - 1] = d[j + 1] + c[j].scale(2.0 * j as f64);
        }
        d.truncate(k);
        for dj in d.iter_mut() {
            *dj = dj.scale(0.5);
        }
        ChebPoly { coeffs: d }
    }

    pub fn add(&self, o: &ChebPoly) -> ChebPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        let mut c = vec![CInterval::ZERO; n];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = self.coeff(k) + o.coeff(k);
        }
        ChebPoly { coeffs: c }
    }

    pub fn sub(&self, o: &ChebPoly) -> ChebPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        let mut c = vec![CInterval::ZERO; n];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = self.coeff(k) - o.coeff(k);
        }
        ChebPoly { coeffs: c }
    }

    pub fn scale(&self, a: f64) -> ChebPoly {
        ChebPoly {
            coeffs: self.coeffs.iter().map(|c| c.scale(a)).collect(),
        }
    }

    pub fn mul_scalar(&self, a: CInterval) -> ChebPoly {
        ChebPoly {
            coeffs: self.coeffs.iter().map(|c| *c * a).collect(),
        }
    }

    /// Product via T_j T_k = (T_{j+k} + T_{|j-k|}) / 2.
    pub fn mul(&self, o: &ChebPoly) -> ChebPoly {
        let a = self.plain();
        let b = o.plain();
        let mut r = vec![CInterval::ZERO; a.len() + b.len() - 1];
        for (j, aj) in a.iter().enumerate() {
            if *aj == CInterval::ZERO {
                continue;
            }
            for (k, bk) in b.iter().enumerate() {
                if *bk == CInterval::ZERO {
                    continue;
                }
                let p = (*aj * *bk).scale(0.5);
                r[j + k] += p;
                r[j.abs_diff(k)] += p;
            }
        }
        ChebPoly::from_plain(r)
    }

    /// True if every stored coefficient is exactly the zero interval.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == CInterval::ZERO)
    }

    /// Truncate or zero-pad to degree `k`.
    pub fn resized(&self, k: usize) -> ChebPoly {
        let mut c = self.coeffs.clone();
        c.resize(k + 1, CInterval::ZERO);
        ChebPoly { coeffs: c }
    }
}

/// Interpolant through the given values at the K+1 Chebyshev nodes
/// (K = values.len() - 1), via the explicit cosine sums.
pub fn interpolate(values: &[CInterval]) -> Result<ChebPoly, RigorError> {
    if values.is_empty() {
        return Err(RigorError::DimensionMismatch(
            "interpolation needs at least one value".into(),
        ));
    }
    let k = values.len() - 1;
    if k == 0 {
        return Ok(ChebPoly::constant(values[0]));
    }
    // cos(pi m / K) for m = 0..2K, with exact values at multiples of K/2.
    let two_k = 2 * k;
    let cos_tab: Vec<Interval> = (0..two_k)
        .map(|m| {
            if m == 0 {
                Interval::ONE
            } else if m == k {
                -Interval::ONE
            } else if 2 * m == k || 2 * m == 3 * k {
                Interval::ZERO
            } else {
                Interval::pi()
                    .scale(m as f64)
                    .checked_div(Interval::point(k as f64))
                    .expect("k > 0")
                    .cos()
            }
        })
        .collect();
    let inv_2k = Interval::point(2.0 * k as f64).recip().expect("k > 0");
    let mut coeffs = Vec::with_capacity(k + 1);
    for l in 0..=k {
        let mut acc = CInterval::ZERO;
        for (j, vj) in values.iter().enumerate() {
            let w = if j == 0 || j == k { 1.0 } else { 2.0 };
            acc += vj.scale(w).mul_real(cos_tab[(j * l) % two_k]);
        }
        let mut c = acc.mul_real(inv_2k);
        if l == k {
            c = c.scale(0.5);
        }
        coeffs.push(c);
    }
    Ok(ChebPoly { coeffs })
}

/// Upper bound on sup_{E_rho} |P| over the Bernstein ellipse with semi-axis
/// sum rho >= 1: |P_0| + sum_{k>=1} |P_k| (rho^k + rho^-k). rho = 1 gives the
/// C0 bound |P_0| + 2 sum |P_k|.
pub fn cheb_norm_bound(p: &ChebPoly, rho: f64) -> Interval {
    assert!(rho >= 1.0, "ellipse parameter must be >= 1");
    let ri = Interval::point(rho);
    let ri_inv = ri.recip().expect("rho >= 1");
    let mut acc = p.coeff(0).abs();
    let mut pw = Interval::ONE;
    let mut pw_inv = Interval::ONE;
    for k in 1..p.coeffs.len() {
        pw = pw * ri;
        pw_inv = pw_inv * ri_inv;
        let c = p.coeffs[k];
        if c == CInterval::ZERO {
            continue;
        }
        acc += c.abs() * (pw + pw_inv);
    }
    acc.clamp_nonneg()
}

/// Rigorous enclosure [best_lo, hi] of sup_dom f via interval branch and
/// bound: subdivide while the gap to the best certified point value exceeds
/// `tol`, within `budget` box evaluations.
pub(crate) fn rigorous_sup_1d<F: Fn(Interval) -> Interval>(
    f: F,
    dom: Interval,
    tol: f64,
    budget: usize,
) -> Interval {
    let mut best_lo = f(Interval::point(dom.mid())).lo;
    let mut hi = f64::NEG_INFINITY;
    let mut stack = vec![dom];
    let mut visited = 0usize;
    while let Some(b) = stack.pop() {
        visited += 1;
        let fb = f(b);
        if fb.hi <= best_lo {
            continue;
        }
        let mid = f(Interval::point(b.mid())).lo;
        if mid > best_lo {
            best_lo = mid;
        }
        if fb.hi - best_lo <= tol || b.width() <= 4.0 * f64::EPSILON || visited >= budget {
            hi = hi.max(fb.hi);
            continue;
        }
        let m = b.mid();
        stack.push(Interval::new(b.lo, m));
        stack.push(Interval::new(m, b.hi));
    }
    if hi < best_lo {
        hi = best_lo;
    }
    Interval::new(best_lo, hi)
}

/// Certified upper bound on the Lebesgue constant of interpolation at the
/// K+1 Chebyshev nodes, via branch and bound on the Lebesgue function
/// sum_k |l_k(t)|.
pub fn lebesgue_bnb_upper(k: usize) -> f64 {
    assert!(k >= 1);
    let nodes = cheb_nodes(k);
    let recip_den: Vec<Interval> = (0..=k)
        .map(|j| {
            let mut d = Interval::ONE;
            for (i, ni) in nodes.iter().enumerate() {
                if i != j {
                    d = d * (nodes[j] - *ni);
                }
            }
            d.recip().expect("distinct nodes")
        })
        .collect();
    let f = |t: Interval| {
        let mut acc = Interval::ZERO;
        for j in 0..=k {
            let mut num = Interval::ONE;
            for (i, ni) in nodes.iter().enumerate() {
                if i != j {
                    num = num * (t - *ni);
                }
            }
            acc += (num * recip_den[j]).abs();
        }
        acc
    };
    rigorous_sup_1d(f, Interval::new(-1.0, 1.0), 1e-5, 1_000_000).hi
}

/// Upper bound on the Lebesgue constant used by `sigma_formula`. Small K use
/// fixed certified values (each dominating the branch-and-bound upper bound,
/// see the tests); larger K fall back to the logarithmic bound
/// (2/pi) log(K+1) + 1.
pub fn lebesgue_upper(k: usize) -> Interval {
    static CACHE: OnceLock<Mutex<HashMap<usize, Interval>>> = OnceLock::new();
    assert!(k >= 1);
    match k {
        1 => return Interval::point(1.0),
        2 => return Interval::point(1.25),
        3 => return Interval::point(5.0) / Interval::point(3.0),
        4 => return Interval::point(1.7988),
        5 => return Interval::point(1.9889),
        6 => return Interval::point(2.1044),
        _ => {}
    }
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&k) {
        return *v;
    }
    let v = Interval::point(2.0) / Interval::pi()
        * Interval::point((k + 1) as f64).ln().expect("k + 1 > 1")
        + Interval::ONE;
    cache.lock().unwrap().insert(k, v);
    v
}

fn factorial_i(n: usize) -> Interval {
    let mut acc = Interval::ONE;
    for i in 2..=n {
        acc = acc * Interval::point(i as f64);
    }
    acc
}

/// Closed-form interpolation-error constant sigma_{K,l}: the C0 error of the
/// K-th order interpolant of f is at most sigma_{K,l} ||f^(l+1)||_C0 (valid
/// for complex-valued f).
pub fn sigma_formula(k: usize, l: usize) -> Result<Interval, RigorError> {
    if k < 1 || l > k || k > 150 {
        return Err(RigorError::InvalidParams(format!(
            "sigma constant requires 1 <= K <= 150 and 0 <= l <= K, got K={k}, l={l}"
        )));
    }
    if l == k {
        // 1 / (2^{K-1} (K+1)!)
        let denom = factorial_i(k + 1).scale(2f64.powi(k as i32 - 1));
        return denom.recip();
    }
    // Jackson-type branch: (1 + Lambda_K) (pi/2)^{l+1} (K-l)!/(K+1)!
    let lam = lebesgue_upper(k);
    let mut falling = Interval::ONE; // (K+1)! / (K-l)!
    for i in (k - l + 1)..=(k + 1) {
        falling = falling * Interval::point(i as f64);
    }
    let jackson =
        (Interval::ONE + lam) * Interval::pi().scale(0.5).powi(l as i32 + 1) / falling;
    // Alternative branch: (1/(l+1)) sum_q 1/(4^q (l-2q)! (q!)^2)
    let mut sum = Interval::ZERO;
    for q in 0..=(l / 2) {
        let denom = factorial_i(l - 2 * q)
            .scale(4f64.powi(q as i32))
            * factorial_i(q).powi(2);
        sum += denom.recip()?;
    }
    let alt = sum / Interval::point((l + 1) as f64);
    Ok(jackson.min_i(alt).clamp_nonneg())
}

// ---------------------------------------------------------------------------
// Rigorous optimizer for sigma_{K,0}
// ---------------------------------------------------------------------------

struct Lagrange {
    k: usize,
    nodes: Vec<Interval>,
    recip_den: Vec<Interval>,
}

impl Lagrange {
    fn new(k: usize) -> Lagrange {
        let nodes = cheb_nodes(k);
        let recip_den = (0..=k)
            .map(|j| {
                let mut d = Interval::ONE;
                for (i, ni) in nodes.iter().enumerate() {
                    if i != j {
                        d = d * (nodes[j] - *ni);
                    }
                }
                d.recip().expect("distinct nodes")
            })
            .collect();
        Lagrange { k, nodes, recip_den }
    }

    fn basis(&self, j: usize, t: Interval) -> Interval {
        let mut num = Interval::ONE;
        for (i, ni) in self.nodes.iter().enumerate() {
            if i != j {
                num = num * (t - *ni);
            }
        }
        num * self.recip_den[j]
    }

    /// Derivative of the j-th basis polynomial as a sum of products (no
    /// singularities, unlike the logarithmic form).
    fn basis_deriv(&self, j: usize, t: Interval) -> Interval {
        let mut acc = Interval::ZERO;
        for i in 0..=self.k {
            if i == j {
                continue;
            }
            let mut prod = Interval::ONE;
            for (m, nm) in self.nodes.iter().enumerate() {
                if m != j && m != i {
                    prod = prod * (t - *nm);
                }
            }
            acc += prod;
        }
        acc * self.recip_den[j]
    }

    /// Enclosure of basis_j over `t` by the centered form
    /// l_j(mid) + l_j'(t) (t - mid), intersected with the direct product
    /// form; quadratic in the width of `t`.
    fn basis_centered(&self, j: usize, t: Interval) -> Interval {
        let direct = self.basis(j, t);
        if t.width() == 0.0 {
            return direct;
        }
        let m = Interval::point(t.mid());
        let centered = self.basis(j, m) + self.basis_deriv(j, t) * (t - m);
        centered.intersect(direct).expect("both enclose the range")
    }

    fn eval(&self, y: &[Interval], t: Interval) -> Interval {
        let mut acc = Interval::ZERO;
        for j in 0..=self.k {
            acc += y[j] * self.basis_centered(j, t);
        }
        acc
    }
}

/// Objective of the sigma_{K,0} optimization on cell c (t between nodes c+1
/// and c): largest deviation between the interpolant of y and the extremal
/// slope-1 envelopes through the data and the origin.
fn sigma_obj(lag: &Lagrange, y: &[Interval], c: usize, t: Interval) -> Interval {
    let p = lag.eval(y, t);
    let at = t.abs();
    let up = (y[c] + (lag.nodes[c] - t))
        .min_i(y[c + 1] + (t - lag.nodes[c + 1]))
        .min_i(at);
    let dn = (y[c] - (lag.nodes[c] - t))
        .max_i(y[c + 1] - (t - lag.nodes[c + 1]))
        .max_i(-at);
    (up - p).max_i(p - dn)
}

/// Constraint propagation on a candidate box: the slope condition
/// |y_{c+1} - y_c| <= t_c - t_{c+1} shrinks neighbors. Returns false when the
/// box provably contains no feasible point.
fn propagate(y: &mut [Interval], gaps_hi: &[f64]) -> bool {
    let k = y.len() - 1;
    for _ in 0..2 {
        for c in 0..k {
            let w = Interval::with_rad(0.0, gaps_hi[c]);
            match y[c + 1].intersect(y[c] + w) {
                Some(v) => y[c + 1] = v,
                None => return false,
            }
            match y[c].intersect(y[c + 1] + w) {
                Some(v) => y[c] = v,
                None => return false,
            }
        }
    }
    true
}

/// A feasible point near the box midpoint (None when the clamping collapses).
fn feasible_point(
    y: &[Interval],
    abs_lo: &[f64],
    gaps_lo: &[f64],
) -> Option<Vec<f64>> {
    let k = y.len() - 1;
    let mut z = Vec::with_capacity(k + 1);
    let z0 = y[0].mid().clamp(0.0, abs_lo[0]);
    z.push(z0);
    for c in 0..k {
        let lo = (z[c] - gaps_lo[c]).max(-abs_lo[c + 1]);
        let hi = (z[c] + gaps_lo[c]).min(abs_lo[c + 1]);
        if lo > hi {
            return None;
        }
        z.push(y[c + 1].mid().clamp(lo, hi));
    }
    Some(z)
}

/// Certified lower bound on the objective maximum for a fixed feasible y:
/// coarse t-grid per cell followed by two local refinement passes around the
/// best point.
fn point_lower(lag: &Lagrange, z: &[f64], pts_per_cell: usize) -> f64 {
    let zi: Vec<Interval> = z.iter().map(|v| Interval::point(*v)).collect();
    let mut best = f64::NEG_INFINITY;
    let mut best_at = (0usize, 0.0f64, 0.0f64); // cell, t, half-spacing
    for c in 0..lag.k {
        let lo = lag.nodes[c + 1].hi;
        let hi = lag.nodes[c].lo;
        let h = (hi - lo) / pts_per_cell as f64;
        for i in 0..pts_per_cell {
            let t = lo + h * (i as f64 + 0.5);
            let v = sigma_obj(lag, &zi, c, Interval::point(t)).lo;
            if v > best {
                best = v;
                best_at = (c, t, h);
            }
        }
    }
    let (c, mut t0, mut h) = best_at;
    let (clo, chi) = (lag.nodes[c + 1].hi, lag.nodes[c].lo);
    for _ in 0..6 {
        h *= 0.25;
        for i in -4i32..=4 {
            let t = (t0 + h * i as f64).clamp(clo, chi);
            let v = sigma_obj(lag, &zi, c, Interval::point(t)).lo;
            if v > best {
                best = v;
                t0 = t;
            }
        }
    }
    best
}

/// Deterministic random-restart hill climbing for a good feasible incumbent.
fn heuristic_incumbent(
    lag: &Lagrange,
    abs_lo: &[f64],
    gaps_lo: &[f64],
) -> f64 {
    let k = lag.k;
    let mut rng: u64 = 0x243f6a8885a308d3;
    let mut unit = move || {
        rng = rng
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((rng >> 11) as f64) / ((1u64 << 53) as f64)
    };
    // Sequential clamp projection; the abs and gap constraints touch at cell
    // boundaries, so rounding can make the clamp window empty by a few ulps.
    // A final uniform shrink restores strict feasibility, verified exactly.
    let project = |z: &mut Vec<f64>| -> bool {
        z[0] = z[0].clamp(0.0, abs_lo[0]);
        for c in 0..k {
            let lo = (z[c] - gaps_lo[c]).max(-abs_lo[c + 1]);
            let hi = (z[c] + gaps_lo[c]).min(abs_lo[c + 1]);
            z[c + 1] = if lo <= hi {
                z[c + 1].clamp(lo, hi)
            } else {
                0.5 * (lo + hi)
            };
        }
        for zj in z.iter_mut() {
            *zj *= 1.0 - 1e-9;
        }
        (0..=k).all(|j| z[j].abs() <= abs_lo[j])
            && (0..k).all(|c| (z[c + 1] - z[c]).abs() * (1.0 + 1e-12) <= gaps_lo[c])
    };
    let mut best = 0.0f64;
    for _ in 0..8 {
        let mut z: Vec<f64> = (0..=k).map(|_| 2.0 * unit() - 1.0).collect();
        if !project(&mut z) {
            continue;
        }
        let mut val = point_lower(lag, &z, 16);
        let mut step = 0.3;
        for _ in 0..300 {
            let mut cand = z.clone();
            for cj in cand.iter_mut() {
                *cj += step * (2.0 * unit() - 1.0);
            }
            if !project(&mut cand) {
                continue;
            }
            let v = point_lower(lag, &cand, 16);
            if v > val {
                val = v;
                z = cand;
                step = (step * 1.5).min(0.3);
            } else {
                step *= 0.93;
                if step < 1e-5 {
                    break;
                }
            }
        }
        if val > best {
            best = val;
        }
    }
    best
}

/// Search box of the joint (t, y) branch and bound: a t-range inside cell
/// `c` together with a box of node values.
#[derive(Clone)]
struct SigmaBox {
    t: Interval,
    cell: usize,
    y: Vec<Interval>,
}

/// Rigorous enclosure of the optimal sigma_{K,0} (the sharpest constant with
/// ||f - P_K f|| <= sigma ||f'||), by branch and bound over the node values
/// of f. The upper endpoint is always a valid sigma_{K,0}.
pub fn sigma_optimal(k: usize) -> Result<Interval, RigorError> {
    let (tol, budget) = match k {
        2 => (2e-5, 2_000_000),
        3 => (5e-5, 4_000_000),
        4 => (1e-4, 8_000_000),
        5 => (3e-4, 20_000_000),
        _ => (6e-4, 40_000_000),
    };
    sigma_optimal_with(k, budget, tol)
}

/// As `sigma_optimal`, with explicit box budget and target gap.
pub fn sigma_optimal_with(k: usize, budget: usize, tol: f64) -> Result<Interval, RigorError> {
    if !(2..=6).contains(&k) {
        return Err(RigorError::InvalidParams(format!(
            "optimal sigma constant implemented for 2 <= K <= 6, got {k}"
        )));
    }
    let lag = Lagrange::new(k);
    let abs_lo: Vec<f64> = lag.nodes.iter().map(|t| t.abs().lo).collect();
    let gaps_lo: Vec<f64> = (0..k)
        .map(|c| (lag.nodes[c] - lag.nodes[c + 1]).clamp_nonneg().lo)
        .collect();
    let gaps_hi: Vec<f64> = (0..k)
        .map(|c| (lag.nodes[c] - lag.nodes[c + 1]).hi)
        .collect();

    // Initial box: |y_j| <= |t_j|, with the sign symmetry y -> -y cut by
    // y_0 >= 0, and the middle value pinned to 0 for even K (its node is 0).
    let mut root: Vec<Interval> = lag
        .nodes
        .iter()
        .map(|t| {
            let a = t.abs().hi;
            Interval::new(-a, a)
        })
        .collect();
    root[0] = Interval::new(0.0, 1.0);

    // Incumbent from deterministic random-restart hill climbing.
    let mut best_lo = heuristic_incumbent(&lag, &abs_lo, &gaps_lo);

    let debug = std::env::var("RIGOR_SIGMA_DEBUG").is_ok();
    // Effective slope of the objective in t exceeds its slope in the node
    // values; weight the split choice accordingly.
    let t_split_weight = 1.0 + (k * k) as f64 / 4.0;
    // The map (t, y) -> (-t, reversed -y) leaves the objective and the
    // feasible set invariant, so the search can be restricted to t >= 0;
    // composing with the sign flip keeps the y_0 >= 0 cut valid too.
    let mut stack: Vec<SigmaBox> = (0..k)
        .filter(|&c| lag.nodes[c].hi > 0.0)
        .map(|c| SigmaBox {
            t: Interval::new(lag.nodes[c + 1].lo.max(0.0), lag.nodes[c].hi),
            cell: c,
            y: root.clone(),
        })
        .collect();
    let mut sup_hi = f64::NEG_INFINITY;
    let mut visited = 0usize;
    let mut out_of_budget = false;
    while let Some(mut b) = stack.pop() {
        visited += 1;
        if visited >= budget {
            out_of_budget = true;
        }
        if debug && visited % 200_000 == 0 {
            eprintln!(
                "visited={visited} stack={} best_lo={best_lo:.6} t=({:.4},{:.4}) cell={}",
                stack.len(),
                b.t.lo,
                b.t.hi,
                b.cell
            );
        }
        if !propagate(&mut b.y, &gaps_hi) {
            continue;
        }
        let fb = sigma_obj(&lag, &b.y, b.cell, b.t);
        if fb.hi <= best_lo {
            continue;
        }
        if visited % 64 == 0 {
            if let Some(z) = feasible_point(&b.y, &abs_lo, &gaps_lo) {
                let zi: Vec<Interval> = z.iter().map(|v| Interval::point(*v)).collect();
                let v = sigma_obj(&lag, &zi, b.cell, Interval::point(b.t.mid())).lo;
                if v > best_lo {
                    best_lo = v;
                }
                if fb.hi <= best_lo {
                    continue;
                }
            }
        }
        // Pick the split dimension: t (weighted) or the widest y coordinate.
        let (widest, wy) = b
            .y
            .iter()
            .enumerate()
            .map(|(i, yi)| (i, yi.width()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty box");
        let wt = b.t.width() * t_split_weight;
        if fb.hi - best_lo <= tol || wy.max(wt) <= 1e-10 || out_of_budget {
            if fb.hi > sup_hi {
                sup_hi = fb.hi;
            }
            continue;
        }
        let mut left = b.clone();
        if wt >= wy {
            let m = b.t.mid();
            left.t = Interval::new(b.t.lo, m);
            b.t = Interval::new(m, b.t.hi);
        } else {
            let m = b.y[widest].mid();
            left.y[widest] = Interval::new(b.y[widest].lo, m);
            b.y[widest] = Interval::new(m, b.y[widest].hi);
        }
        stack.push(left);
        stack.push(b);
    }
    if sup_hi < best_lo {
        sup_hi = best_lo;
    }
    let enc = Interval::new(best_lo, sup_hi);
    if out_of_budget && enc.width() > 0.05 {
        return Err(RigorError::BudgetExceeded {
            visited: visited as u64,
            width: enc.width(),
        });
    }
    Ok(enc)
}

// ---------------------------------------------------------------------------
// Interpolation error bounds for exponentials and Duhamel integrals
// ---------------------------------------------------------------------------

/// sup over the rho-ellipse of Re((z+1) lambda):
/// Re(lambda) + (1/2) sqrt(Re^2 (rho+1/rho)^2 + Im^2 (rho-1/rho)^2).
fn ellipse_sup_re(lambda: CInterval, rho: Interval) -> Interval {
    let plus = rho + rho.recip().expect("rho >= 1");
    let minus = rho - rho.recip().expect("rho >= 1");
    let s = (lambda.re.powi(2) * plus.powi(2) + lambda.im.powi(2) * minus.powi(2))
        .clamp_nonneg()
        .sqrt();
    lambda.re + s.scale(0.5)
}

/// C0 interpolation error of t -> e^{tau (t+1) lambda} for a fixed ellipse
/// parameter rho > 1:
/// (4 rho^-K / (rho - 1)) exp(tau sup_{E_rho} Re((z+1) lambda)).
pub fn interp_error_exp(
    lambda: CInterval,
    tau: f64,
    k: usize,
    rho: f64,
) -> Result<Interval, RigorError> {
    if !(rho > 1.0) {
        return Err(RigorError::InvalidParams(format!(
            "ellipse parameter must exceed 1, got {rho}"
        )));
    }
    if k as f64 * rho.ln() > 690.0 {
        return Err(RigorError::NumericsBlewUp(
            "overflow in ellipse power".into(),
        ));
    }
    let ri = Interval::point(rho);
    let arg = ellipse_sup_re(lambda, ri).scale(tau);
    if arg.hi > 700.0 {
        return Err(RigorError::NumericsBlewUp(
            "overflow in exponential interpolation error bound".into(),
        ));
    }
    let pref = Interval::point(4.0) * ri.powi(-(k as i32)) / (ri - Interval::ONE);
    Ok((pref * arg.exp()).clamp_nonneg())
}

/// `interp_error_exp` minimized over a fixed grid of ellipse parameters, with
/// a Lebesgue-constant fallback (1 + Lambda_K) sup|e^{tau(t+1)lambda}| when
/// every candidate overflows.
pub fn interp_error_exp_best(
    lambda: CInterval,
    tau: f64,
    k: usize,
) -> Result<Interval, RigorError> {
    let mut best: Option<Interval> = None;
    for i in 0..32 {
        let x = -3.0 + 5.0 * i as f64 / 31.0;
        let rho = 1.0 + 10f64.powf(x);
        if let Ok(b) = interp_error_exp(lambda, tau, k, rho) {
            best = Some(match best {
                Some(cur) if cur.hi <= b.hi => cur,
                _ => b,
            });
        }
    }
    if let Some(b) = best {
        return Ok(b);
    }
    let arg = lambda.re.pos_part().scale(2.0 * tau);
    if arg.hi > 700.0 {
        return Err(RigorError::NumericsBlewUp(
            "overflow in exponential interpolation error bound".into(),
        ));
    }
    Ok(((Interval::ONE + lebesgue_upper(k)) * arg.exp()).clamp_nonneg())
}

/// Mode selector for `interp_error_integral`.
#[derive(Clone, Copy, Debug)]
pub enum IntegralErrorMode {
    /// Bound through sigma_{K,q} and derivative norms of phi.
    Smooth { q: usize },
    /// Bound through analytic continuation of phi onto the rho-ellipse.
    Analytic { rho: f64 },
}

/// C0 interpolation error of t -> tau int_{-1}^t e^{tau (t-s) lambda} phi(s) ds
/// for a polynomial phi.
pub fn interp_error_integral(
    lambda: CInterval,
    tau: f64,
    k: usize,
    phi: &ChebPoly,
    mode: IntegralErrorMode,
    sigma: &SigmaTable,
) -> Result<Interval, RigorError> {
    assert!(tau > 0.0);
    match mode {
        IntegralErrorMode::Smooth { q } => {
            if q > k {
                return Err(RigorError::InvalidParams(format!(
                    "smooth mode needs q <= K, got q={q}, K={k}"
                )));
            }
            // ||d^i phi|| for i = 0..=q via Chebyshev differentiation.
            let mut norms = Vec::with_capacity(q + 1);
            let mut d = phi.clone();
            norms.push(cheb_norm_bound(&d, 1.0));
            for _ in 0..q {
                d = d.derivative();
                norms.push(cheb_norm_bound(&d, 1.0));
            }
            let tl = lambda.abs().scale(tau);
            // (e^{2 tau Re} - 1)/Re = 2 tau zeta(2 tau Re), continuous at 0.
            let re_arg = lambda.re.scale(2.0 * tau);
            if re_arg.hi > 700.0 {
                return Err(RigorError::NumericsBlewUp(
                    "overflow in integral interpolation error bound".into(),
                ));
            }
            let growth = re_arg.expm1_over_x().scale(2.0 * tau);
            let mut acc = tl.powi(q as i32 + 1) * growth * norms[0];
            let mut pw = Interval::ONE;
            for i in 0..=q {
                acc += (pw * norms[q - i]).scale(tau);
                pw = pw * tl;
            }
            Ok((sigma.sigma(k, q) * acc).clamp_nonneg())
        }
        IntegralErrorMode::Analytic { rho } => {
            if !(rho > 1.0) {
                return Err(RigorError::InvalidParams(format!(
                    "ellipse parameter must exceed 1, got {rho}"
                )));
            }
            if k as f64 * rho.ln() > 690.0 {
                return Err(RigorError::NumericsBlewUp(
                    "overflow in ellipse power".into(),
                ));
            }
            let ri = Interval::point(rho);
            let arg = ellipse_sup_re(lambda, ri).scale(tau);
            if arg.hi > 700.0 {
                return Err(RigorError::NumericsBlewUp(
                    "overflow in integral interpolation error bound".into(),
                ));
            }
            let m = cheb_norm_bound(phi, rho);
            let pref = (ri + ri.recip().expect("rho > 1") + Interval::point(2.0))
                .scale(2.0 * tau)
                / (ri.powi(k as i32) * (ri - Interval::ONE));
            Ok((pref * arg.expm1_over_x() * m).clamp_nonneg())
        }
    }
}

/// Sharper interpolation-error bound by splitting through a finer order K0:
/// ||(I - P_K) g|| <= ||(P_K0 - P_K) g|| + ||(I - P_K0) g||, where the first
/// term is an explicit polynomial norm and `tail_bound` must dominate the
/// second.
pub fn refine_with_k0(
    g: impl Fn(Interval) -> CInterval,
    k: usize,
    k0: usize,
    tail_bound: Interval,
) -> Result<Interval, RigorError> {
    if k0 < k {
        return Err(RigorError::InvalidParams(format!(
            "refinement order K0={k0} must be at least K={k}"
        )));
    }
    let fine_vals: Vec<CInterval> = cheb_nodes(k0).into_iter().map(&g).collect();
    let p_fine = interpolate(&fine_vals)?;
    let coarse_vals: Vec<CInterval> = cheb_nodes(k.max(1)).into_iter().map(&g).collect();
    let mut p_coarse = interpolate(&coarse_vals)?;
    if k == 0 {
        // Degenerate coarse order: interpolation at the single node t = 1.
        p_coarse = ChebPoly::constant(g(Interval::ONE));
    }
    let diff = p_fine.sub(&p_coarse.resized(k0));
    Ok((cheb_norm_bound(&diff, 1.0) + tail_bound).clamp_nonneg())
}

/// Refined bound for the exponential family g(t) = e^{tau (t+1) lambda},
/// never worse than the direct ellipse bound.
pub fn refine_exp_error(
    lambda: CInterval,
    tau: f64,
    k: usize,
    k0: usize,
) -> Result<Interval, RigorError> {
    let direct = interp_error_exp_best(lambda, tau, k)?;
    let tail = interp_error_exp_best(lambda, tau, k0)?;
    let g = |t: Interval| lambda.mul_real((t + Interval::ONE).scale(tau)).exp();
    let refined = refine_with_k0(g, k, k0, tail)?;
    Ok(refined.min_i(direct))
}

// ---------------------------------------------------------------------------
// Sigma table with caching
// ---------------------------------------------------------------------------

/// Table of interpolation-error constants sigma_{K,l} for 1 <= K <= k_max,
/// 0 <= l <= K. Entries are enclosures whose upper endpoints are valid
/// constants; optimizer-backed sigma_{K,0} entries are recorded with the
/// budget that produced them.
#[derive(Clone, Debug)]
pub struct SigmaTable {
    pub k_max: usize,
    entries: Vec<Vec<Interval>>,
    pub optimizer_budget: usize,
}

impl SigmaTable {
    /// Closed-form constants only.
    pub fn formula_only(k_max: usize) -> Result<SigmaTable, RigorError> {
        let mut entries = vec![Vec::new()];
        for k in 1..=k_max {
            entries.push((0..=k).map(|l| sigma_formula(k, l)).collect::<Result<_, _>>()?);
        }
        Ok(SigmaTable {
            k_max,
            entries,
            optimizer_budget: 0,
        })
    }

    /// Closed-form constants, with sigma_{K,0} tightened by the rigorous
    /// optimizer for 2 <= K <= 6.
    pub fn with_optimizer(k_max: usize) -> Result<SigmaTable, RigorError> {
        let mut table = SigmaTable::formula_only(k_max)?;
        let mut budget = 0usize;
        for k in 2..=k_max.min(6) {
            let opt = sigma_optimal(k)?;
            budget = budget.max(10_000_000);
            if opt.hi < table.entries[k][0].hi {
                table.entries[k][0] = opt;
            }
        }
        table.optimizer_budget = budget;
        Ok(table)
    }

    /// Enclosure whose upper endpoint is a valid sigma_{K,l}.
    pub fn sigma(&self, k: usize, l: usize) -> Interval {
        assert!(
            (1..=self.k_max).contains(&k) && l <= k,
            "sigma table lookup out of range: K={k}, l={l}, k_max={}",
            self.k_max
        );
        self.entries[k][l]
    }

    /// Versioned plain-text serialization (round-trips exactly).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("sigma-table v1\n");
        s.push_str(&format!("k_max {}\n", self.k_max));
        s.push_str(&format!("budget {}\n", self.optimizer_budget));
        for k in 1..=self.k_max {
            for l in 0..=k {
                let e = self.entries[k][l];
                s.push_str(&format!("{k} {l} {:e} {:e}\n", e.lo, e.hi));
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<SigmaTable, RigorError> {
        let bad = |m: &str| RigorError::InvalidParams(format!("sigma table parse: {m}"));
        let mut lines = text.lines();
        if lines.next() != Some("sigma-table v1") {
            return Err(bad("missing or unsupported header"));
        }
        let k_max: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("k_max "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad k_max line"))?;
        let budget: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("budget "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad budget line"))?;
        let mut entries = vec![Vec::new()];
        for k in 1..=k_max {
            entries.push(vec![Interval::ZERO; k + 1]);
        }
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let k: usize = it
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad("bad entry"))?;
            let l: usize = it
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad("bad entry"))?;
            let lo: f64 = it
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad("bad entry"))?;
            let hi: f64 = it
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad("bad entry"))?;
            if !(1..=k_max).contains(&k) || l > k {
                return Err(bad("entry indices out of range"));
            }
            entries[k][l] = Interval::new(lo, hi);
        }
        Ok(SigmaTable {
            k_max,
            entries,
            optimizer_budget: budget,
        })
    }
}
