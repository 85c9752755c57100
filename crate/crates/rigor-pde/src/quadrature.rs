//! Rigorous Clenshaw-Curtis quadrature for exponential-kernel integrals.
//!
//! Provides certified enclosures of int_{-1}^{t} e^{lambda (t-s)} psi(s) ds
//! for complex lambda and a Chebyshev-basis polynomial psi, by rewriting the
//! integral over [-1, 1], applying the Clenshaw-Curtis rule, and bounding the
//! truncation error through a Bernstein-ellipse estimate of the integrand.

use crate::cheb::{cheb_nodes, interpolate, ChebPoly};
use rigor_core::{CInterval, Interval, RigorError};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Clenshaw-Curtis quadrature rule of even order `k1`: nodes are the
/// Chebyshev extremal points, weights are the exact integrals of the
/// associated Lagrange basis polynomials, so the rule integrates polynomials
/// of degree <= k1 exactly and the weights sum to 2.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub k1: usize,
    pub nodes: Vec<Interval>,
    pub weights: Vec<Interval>,
}

/// Exact enclosure of int_{-1}^{1} p(s) ds from Chebyshev coefficients:
/// int T_j = 2/(1-j^2) for even j and 0 for odd j.
pub fn integrate_cheb(p: &ChebPoly) -> CInterval {
    let mut acc = p.coeffs[0].scale(2.0);
    for (j, c) in p.coeffs.iter().enumerate().skip(1) {
        if j % 2 == 0 {
            let factor = 4.0 / (1.0 - (j * j) as f64);
            acc = acc + c.scale(factor);
        }
    }
    acc
}

impl QuadratureRule {
    /// Build the rule of even order `k1 >= 2` by integrating each Lagrange
    /// basis polynomial exactly through its Chebyshev coefficients.
    pub fn new(k1: usize) -> Result<QuadratureRule, RigorError> {
        if k1 < 2 || k1 % 2 != 0 {
            return Err(RigorError::InvalidParams(format!(
                "quadrature order must be even and >= 2, got {k1}"
            )));
        }
        let nodes = cheb_nodes(k1);
        let mut weights = Vec::with_capacity(k1 + 1);
        for k in 0..=k1 {
            let mut vals = vec![CInterval::ZERO; k1 + 1];
            vals[k] = CInterval::ONE;
            let phi = interpolate(&vals)?;
            weights.push(integrate_cheb(&phi).re);
        }
        Ok(QuadratureRule { k1, nodes, weights })
    }

    /// Shared, lazily built rule for the given order.
    pub fn cached(k1: usize) -> Result<Arc<QuadratureRule>, RigorError> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        if let Some(r) = guard.get(&k1) {
            return Ok(r.clone());
        }
        let rule = Arc::new(QuadratureRule::new(k1)?);
        guard.insert(k1, rule.clone());
        Ok(rule)
    }

    /// Apply the rule to integrand enclosures at the nodes.
    pub fn apply(&self, values: &[CInterval]) -> CInterval {
        assert_eq!(values.len(), self.k1 + 1);
        let mut acc = CInterval::ZERO;
        for (v, w) in values.iter().zip(self.weights.iter()) {
            acc = acc + v.mul_real(*w);
        }
        acc
    }
}

/// Construct the rule weights for order `k1` (even).
pub fn cc_weights(k1: usize) -> Result<QuadratureRule, RigorError> {
    QuadratureRule::new(k1)
}

/// Ellipse bound on the transformed integrand
/// ((t+1)/2) exp((lambda/2)(t+1)(1-z)) psi(((t+1)/2)(z+1) - 1) over the
/// Bernstein ellipse of parameter rho: with lambda = alpha + i beta,
/// sup <= ((t+1)/2) exp(alpha + (1/2) sqrt(alpha^2 (rho+1/rho)^2
/// + beta^2 (rho-1/rho)^2)) (|psi_0| + sum |psi_k| (rho^k + rho^-k)).
fn ellipse_integrand_bound(
    lambda: CInterval,
    t: Interval,
    psi: &ChebPoly,
    rho: f64,
) -> Result<Interval, RigorError> {
    let deg = psi.degree();
    if deg as f64 * rho.ln() > 300.0 {
        return Err(RigorError::NumericsBlewUp(
            "rho^k overflows in quadrature ellipse bound".into(),
        ));
    }
    let rho_i = Interval::point(rho);
    let rho_inv = rho_i.recip()?;
    let plus = rho_i + rho_inv;
    let minus = rho_i - rho_inv;
    let alpha = lambda.re;
    let beta = lambda.im;
    let disc = ((alpha * plus).powi(2) + (beta * minus).powi(2)).sqrt();
    let arg = alpha + disc.scale(0.5);
    // Cap well below the overflow threshold so the later products with the
    // psi coefficient sum stay finite.
    if arg.hi > 300.0 {
        return Err(RigorError::NumericsBlewUp(
            "exponential overflows in quadrature ellipse bound".into(),
        ));
    }
    let mut psi_sum = psi.coeffs[0].abs();
    let mut pow = Interval::ONE;
    for c in psi.coeffs.iter().skip(1) {
        pow = pow * rho_i;
        psi_sum = psi_sum + c.abs() * (pow + pow.recip()?);
    }
    let half_tp1 = (t + Interval::ONE).scale(0.5).clamp_nonneg();
    Ok((half_tp1 * arg.exp() * psi_sum).clamp_nonneg())
}

/// Enclosure of int_{-1}^{t} e^{lambda (t-s)} psi(s) ds using the order-`k1`
/// rule: the variable change s -> ((t+1)/2)(s+1) - 1 maps the integral to
/// [-1, 1]; the rule is applied to the transformed integrand and the
/// truncation error is bounded by (64/15) rho^{-k1} / (rho^2 - 1) times the
/// ellipse bound, scanning a rho grid and keeping the smallest valid bound.
pub fn exp_kernel_integral(
    lambda: CInterval,
    t: Interval,
    psi: &ChebPoly,
    k1: usize,
) -> Result<CInterval, RigorError> {
    if t.lo < -1.0 || t.hi > 1.0 {
        return Err(RigorError::InvalidParams(format!(
            "upper integration limit must lie in (-1, 1], got [{}, {}]",
            t.lo, t.hi
        )));
    }
    let rule = QuadratureRule::cached(k1)?;
    let half_tp1 = (t + Interval::ONE).scale(0.5).clamp_nonneg();
    let lam_half = lambda.mul_real(half_tp1);
    let values: Vec<CInterval> = rule
        .nodes
        .iter()
        .map(|s| {
            let kernel = lam_half.mul_real(Interval::ONE - *s).exp();
            let inner = half_tp1 * (*s + Interval::ONE) - Interval::ONE;
            let inner = inner.intersect(Interval::new(-1.0, 1.0)).unwrap_or(inner);
            kernel * psi.eval(inner).mul_real(half_tp1)
        })
        .collect();
    let quad = rule.apply(&values);

    let mut err = f64::INFINITY;
    for i in 0..32 {
        let x = -3.0 + 5.0 * (i as f64) / 31.0;
        let rho = 1.0 + 10f64.powf(x);
        if (k1 as f64) * rho.ln() > 690.0 {
            continue;
        }
        let m = match ellipse_integrand_bound(lambda, t, psi, rho) {
            Ok(m) => m,
            Err(_) => continue,
        };
        let rho_i = Interval::point(rho);
        let denom = rho_i.powi(k1 as i32) * (rho_i.powi(2) - Interval::ONE);
        let e = (m.scale(64.0 / 15.0).checked_div(denom)?).hi;
        if e < err {
            err = e;
        }
    }
    if !err.is_finite() {
        return Err(RigorError::NumericsBlewUp(
            "no valid ellipse parameter for quadrature error bound".into(),
        ));
    }
    let ball = Interval::new(-err, err);
    Ok(quad + CInterval::new(ball, ball))
}

/// As `exp_kernel_integral`, doubling the order (up to 256) until the error
/// radius drops below the given absolute tolerance. Returns the tightest
/// enclosure found even if the tolerance is not met.
pub fn exp_kernel_integral_tol(
    lambda: CInterval,
    t: Interval,
    psi: &ChebPoly,
    tol: f64,
) -> Result<CInterval, RigorError> {
    let mut k1 = (psi.degree() + 10).max(20);
    if k1 % 2 == 1 {
        k1 += 1;
    }
    let mut best: Option<CInterval> = None;
    loop {
        if let Ok(enc) = exp_kernel_integral(lambda, t, psi, k1) {
            let better = match &best {
                Some(b) => enc.width() < b.width(),
                None => true,
            };
            if better {
                best = Some(enc);
            }
            if 0.5 * enc.width() <= tol {
                return Ok(enc);
            }
        }
        if k1 >= 256 {
            return best.ok_or_else(|| {
                RigorError::NumericsBlewUp("exponential-kernel quadrature failed".into())
            });
        }
        k1 = (2 * k1).min(256);
    }
}

/// As `exp_kernel_integral`, choosing the order automatically: start at
/// max(k + 8, 16) for `k` the degree of psi, and double (up to 128) until the
/// error radius drops below 10^-2 of the enclosure magnitude.
pub fn exp_kernel_integral_auto(
    lambda: CInterval,
    t: Interval,
    psi: &ChebPoly,
) -> Result<CInterval, RigorError> {
    let mut k1 = (psi.degree() + 8).max(16);
    if k1 % 2 == 1 {
        k1 += 1;
    }
    loop {
        let enc = exp_kernel_integral(lambda, t, psi, k1)?;
        let radius = 0.5 * enc.width();
        if radius <= 1e-2 * enc.abs().hi.max(1e-300) || k1 >= 128 {
            return Ok(enc);
        }
        k1 = (2 * k1).min(128);
    }
}
