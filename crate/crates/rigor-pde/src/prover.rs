//! Contraction-radius verification and proof orchestration: given the Y, Z
//! and W constituents of an approximate orbit, find and verify per-subdomain
//! radii certifying a unique true solution nearby; evaluate sharp enclosures
//! of the solution at the final time; chain validated steps to cover long
//! time intervals.

use crate::bounds::{compute_bounds, hi_pos, BoundsConfig, BoundsReport};
use crate::cheb::{cheb_norm_bound, SigmaTable};
use crate::linop::{chi_bound, tail_sup_combination, LinearizedOperator};
use crate::problem::{
    approximate_orbit, equal_taus, gamma_eval, gamma_eigen_coords, newton_sweep, PdeProblem,
    PiecewiseOrbit,
};
use crate::quadrature::exp_kernel_integral_tol;
use crate::seqspace::{
    phi_bounds, poly_tail_bound, upsilon, NormSeq, PhiVariant, SeqL1, Weights,
};
use rigor_core::{CIMat, CInterval, Interval, RigorError};

/// Smallest radius ever returned: a degenerate (exact) problem still gets a
/// positive radius so the uniqueness ball is nonempty.
const RADIUS_FLOOR: f64 = 1e-15;

// ---------------------------------------------------------------------------
// Radii verification.
// ---------------------------------------------------------------------------

/// Verified contraction radii `r` and uniqueness weights `eta`, both
/// per-subdomain and strictly positive.
#[derive(Clone, Debug)]
pub struct RadiiSolution {
    pub r: Vec<f64>,
    pub eta: Vec<f64>,
}

fn check_bound_table(y: &[f64], z: &[Vec<f64>], w: &[Vec<f64>]) -> Result<(), RigorError> {
    let m = y.len();
    if m == 0 || z.len() != m || w.len() != m {
        return Err(RigorError::InvalidParams(
            "radii data must cover a nonempty, consistent set of subdomains".into(),
        ));
    }
    let all = y
        .iter()
        .chain(z.iter().flatten())
        .chain(w.iter().flatten());
    for v in all {
        if !v.is_finite() || *v < 0.0 {
            return Err(RigorError::InvalidParams(
                "radii data must be finite and nonnegative".into(),
            ));
        }
    }
    for row in z.iter().chain(w.iter()) {
        if row.len() != m {
            return Err(RigorError::InvalidParams(
                "radii data rows must be square".into(),
            ));
        }
    }
    Ok(())
}

/// Upper bound on row m of the quadratic majorant Y + Z r + (1/2) W r^2.
fn majorant_row(y: &[f64], z: &[Vec<f64>], w: &[Vec<f64>], r: &[f64], m: usize) -> f64 {
    let mut acc = Interval::point(y[m]);
    for i in 0..r.len() {
        let ri = Interval::point(r[i]);
        acc = acc + Interval::point(z[m][i]) * ri;
        acc = acc + Interval::point(w[m][i]).scale(0.5) * ri * ri;
    }
    acc.hi
}

/// Index of the first subdomain where the contraction inequality
/// Y + Z r + (1/2) W r^2 <= r fails, verified with interval arithmetic.
fn first_violation(y: &[f64], z: &[Vec<f64>], w: &[Vec<f64>], r: &[f64]) -> Option<usize> {
    (0..y.len()).find(|&m| !(majorant_row(y, z, w, r, m) <= r[m]))
}

/// Find and verify contraction radii and uniqueness weights from raw bound
/// tables: Y^m residual, Z^m_i contraction, W^m_{ii} Lipschitz rows (Z and W
/// are lower triangular in the subdomain coupling).
///
/// Two-phase: iterate the monotone quadratic majorant from a tiny positive
/// start to approach its smallest fixed point, then verify the inequalities
/// strictly with interval arithmetic at a slightly inflated candidate. The
/// uniqueness weights solve the linearized system by Neumann iteration and
/// are verified the same way. Only the verification is trusted.
pub fn solve_radii_raw(
    y: &[f64],
    z: &[Vec<f64>],
    w: &[Vec<f64>],
    r_star: f64,
) -> Result<RadiiSolution, RigorError> {
    check_bound_table(y, z, w)?;
    if !(r_star > 0.0) {
        return Err(RigorError::InvalidParams("r_star must be positive".into()));
    }
    let m_count = y.len();
    // Necessary condition: with lower-triangular coupling each diagonal
    // contraction entry must be below one (off-diagonal mass is absorbed by
    // growing radii and uniqueness weights along the subdomain chain).
    for m in 0..m_count {
        if !(z[m][m] < 1.0) {
            return Err(RigorError::Infeasible(format!(
                "contraction impossible: diagonal Z entry {m} is {} >= 1",
                z[m][m]
            )));
        }
    }

    // Phase 1: monotone iteration toward the smallest fixed point.
    let mut r = vec![RADIUS_FLOOR; m_count];
    for _ in 0..200 {
        let mut next = vec![0.0f64; m_count];
        for m in 0..m_count {
            let v = majorant_row(y, z, w, &r, m).max(RADIUS_FLOOR);
            if !v.is_finite() || v > 1e6 {
                return Err(RigorError::Infeasible(format!(
                    "radius iteration diverged on subdomain {m}"
                )));
            }
            next[m] = v;
        }
        r = next;
    }

    // Phase 2: strict verification at an inflated candidate.
    let mut verified: Option<Vec<f64>> = None;
    'outer: for delta in [1e-13, 1e-11, 1e-9, 1e-7, 1e-5, 1e-3] {
        let cand: Vec<f64> = r
            .iter()
            .map(|v| (Interval::point(*v) * Interval::point(1.0 + delta)).hi)
            .collect();
        for v in &cand {
            if !(*v <= r_star) {
                continue 'outer;
            }
        }
        if first_violation(y, z, w, &cand).is_none() {
            verified = Some(cand);
            break;
        }
    }
    let r = match verified {
        Some(c) => c,
        None => {
            let detail = match first_violation(y, z, w, &r) {
                Some(m) => format!(
                    "contraction inequality not verifiable; binding subdomain {m} \
                     (majorant {} vs radius {})",
                    majorant_row(y, z, w, &r, m),
                    r[m]
                ),
                None => format!(
                    "iterated radius exceeds the Lipschitz validity radius r_star = {r_star}"
                ),
            };
            return Err(RigorError::Infeasible(detail));
        }
    };

    // Uniqueness weights: eta > 0 with (Z + W r) eta < eta strictly. The
    // coupling matrix is lower triangular, so the Neumann series
    // eta = sum_k B^k 1 converges iff every diagonal entry stays below one.
    let b: Vec<Vec<f64>> = (0..m_count)
        .map(|m| {
            (0..m_count)
                .map(|i| {
                    (Interval::point(z[m][i])
                        + Interval::point(w[m][i]) * Interval::point(r[i]))
                    .hi
                })
                .collect()
        })
        .collect();
    let mut eta = vec![1.0f64; m_count];
    let mut converged = false;
    for _ in 0..(10 * m_count + 200) {
        let mut next = vec![0.0f64; m_count];
        let mut change = 0.0f64;
        for m in 0..m_count {
            let mut acc = Interval::ONE;
            for i in 0..m_count {
                acc = acc + Interval::point(b[m][i]) * Interval::point(eta[i]);
            }
            if !acc.hi.is_finite() || acc.hi > 1e12 {
                let rho = (0..m_count).map(|i| b[i][i]).fold(0.0f64, f64::max);
                return Err(RigorError::Infeasible(format!(
                    "uniqueness weights diverged; spectral radius estimate {rho} of the \
                     linearized coupling is too large"
                )));
            }
            change = change.max((acc.hi - eta[m]).abs() / eta[m].max(1.0));
            next[m] = acc.hi;
        }
        eta = next;
        if change < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        let rho = (0..m_count).map(|i| b[i][i]).fold(0.0f64, f64::max);
        return Err(RigorError::Infeasible(format!(
            "uniqueness weights did not converge; spectral radius estimate {rho}"
        )));
    }
    // Normalize the first weight to one, then verify strictly; fall back to
    // the unnormalized weights if the normalization perturbs the rounding.
    let scaled: Vec<f64> = eta.iter().map(|v| v / eta[0]).collect();
    let strict_ok = |e: &[f64]| -> bool {
        (0..m_count).all(|m| {
            let mut acc = Interval::ZERO;
            for i in 0..m_count {
                acc = acc
                    + (Interval::point(z[m][i])
                        + Interval::point(w[m][i]) * Interval::point(r[i]))
                        * Interval::point(e[i]);
            }
            acc.hi < e[m]
        })
    };
    let eta = if strict_ok(&scaled) {
        scaled
    } else if strict_ok(&eta) {
        eta
    } else {
        let rho = (0..m_count).map(|i| b[i][i]).fold(0.0f64, f64::max);
        return Err(RigorError::Infeasible(format!(
            "uniqueness inequality not strictly verifiable; spectral radius estimate {rho}"
        )));
    };
    Ok(RadiiSolution { r, eta })
}

/// As `solve_radii_raw`, assembling the totals from a bound report.
pub fn solve_radii(report: &BoundsReport) -> Result<RadiiSolution, RigorError> {
    let m = report.m_count;
    let y: Vec<f64> = (0..m).map(|mm| report.y_total(mm)).collect();
    let z: Vec<Vec<f64>> = (0..m)
        .map(|mm| (0..m).map(|i| report.z_total(mm, i)).collect())
        .collect();
    let w: Vec<Vec<f64>> = (0..m)
        .map(|mm| (0..m).map(|i| report.w_total(mm, i)).collect())
        .collect();
    solve_radii_raw(&y, &z, &w, report.r_star)
}

// ---------------------------------------------------------------------------
// Proof certificates.
// ---------------------------------------------------------------------------

/// FNV-1a fingerprint of the defining data of a problem, used to tie a
/// certificate to its problem instance.
pub fn problem_hash(p: &PdeProblem) -> u64 {
    let mut s = String::new();
    s.push_str(&format!("r {}\n", p.r));
    for poly in &p.g_polys {
        s.push('g');
        for c in poly {
            s.push_str(&format!(" {c:.16e}"));
        }
        s.push('\n');
    }
    s.push_str(&format!(
        "l_x {:.16e}\nt_end {:.16e}\nnu {:.16e}\n",
        p.l_x, p.t_end, p.nu
    ));
    s.push_str(&format!(
        "f_tail {:.16e} {:.16e}\n",
        p.f_tail_norm.lo, p.f_tail_norm.hi
    ));
    s.push_str(&format!("f {}\n", p.f.n_max));
    for n in -p.f.n_max..=p.f.n_max {
        let c = p.f.get(n);
        s.push_str(&format!(
            "{:.16e} {:.16e} {:.16e} {:.16e}\n",
            c.re.lo, c.re.hi, c.im.lo, c.im.hi
        ));
    }
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Outcome of a validated proof: verified radii together with everything
/// needed to re-check the contraction argument from scratch.
///
/// The stored `y`, `z`, `w` are the assembled per-subdomain totals (the norm
/// weights are already folded in); `sup_error` bounds the uniform distance
/// between the approximate and the true orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct ProofCertificate {
    pub version: u32,
    pub problem_hash: u64,
    pub big_n: i64,
    pub k: usize,
    pub m_count: usize,
    pub nu: f64,
    pub r_star: f64,
    pub taus: Vec<f64>,
    pub eps_inftyn: Vec<f64>,
    pub eps_infty: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub r: Vec<f64>,
    pub eta: Vec<f64>,
    pub sup_error: f64,
}

pub const CERTIFICATE_VERSION: u32 = 1;

impl ProofCertificate {
    /// theta = max(1, eps_inftyN, eps_infty) for subdomain m: converts the
    /// certified norm radius into a uniform sup bound.
    pub fn theta(&self, m: usize) -> f64 {
        1.0f64.max(self.eps_inftyn[m]).max(self.eps_infty[m])
    }

    /// Re-verify every claim from the stored data with fresh interval
    /// arithmetic: dimensions, positivity, r <= r_star, the contraction
    /// inequality, the strict uniqueness inequality, and that `sup_error`
    /// dominates max_m theta^(m) r^(m).
    pub fn verify(&self) -> Result<(), RigorError> {
        let m_count = self.m_count;
        if self.version != CERTIFICATE_VERSION {
            return Err(RigorError::InvalidParams(format!(
                "unsupported certificate version {}",
                self.version
            )));
        }
        if self.taus.len() != m_count
            || self.eps_inftyn.len() != m_count
            || self.eps_infty.len() != m_count
            || self.y.len() != m_count
            || self.r.len() != m_count
            || self.eta.len() != m_count
        {
            return Err(RigorError::InvalidParams(
                "certificate dimensions are inconsistent".into(),
            ));
        }
        check_bound_table(&self.y, &self.z, &self.w)?;
        for m in 0..m_count {
            if !(self.r[m] > 0.0 && self.r[m] <= self.r_star && self.eta[m] > 0.0) {
                return Err(RigorError::Infeasible(format!(
                    "certificate radius or weight invalid on subdomain {m}"
                )));
            }
        }
        if let Some(m) = first_violation(&self.y, &self.z, &self.w, &self.r) {
            return Err(RigorError::Infeasible(format!(
                "stored radii violate the contraction inequality on subdomain {m}"
            )));
        }
        for m in 0..m_count {
            let mut acc = Interval::ZERO;
            for i in 0..m_count {
                acc = acc
                    + (Interval::point(self.z[m][i])
                        + Interval::point(self.w[m][i]) * Interval::point(self.r[i]))
                        * Interval::point(self.eta[i]);
            }
            if !(acc.hi < self.eta[m]) {
                return Err(RigorError::Infeasible(format!(
                    "stored weights violate the strict uniqueness inequality on subdomain {m}"
                )));
            }
        }
        let mut sup = 0.0f64;
        for m in 0..m_count {
            sup = sup.max((Interval::point(self.theta(m)) * Interval::point(self.r[m])).hi);
        }
        if !(self.sup_error >= sup) {
            return Err(RigorError::Infeasible(format!(
                "stored sup error {} is below the certified value {sup}",
                self.sup_error
            )));
        }
        Ok(())
    }

    /// Versioned, human-readable text dump; all floats are printed with 17
    /// significant digits, which round-trips every binary64 value exactly
    /// (so the re-loaded certificate verifies identically).
    pub fn to_text(&self) -> String {
        let fmt_vec = |name: &str, v: &[f64]| -> String {
            let body: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
            format!("{name} {}\n", body.join(" "))
        };
        let mut out = String::new();
        out.push_str(&format!("certificate v{}\n", self.version));
        out.push_str(&format!("problem_hash {:#018x}\n", self.problem_hash));
        out.push_str(&format!("big_n {}\n", self.big_n));
        out.push_str(&format!("k {}\n", self.k));
        out.push_str(&format!("m_count {}\n", self.m_count));
        out.push_str(&format!("nu {:.16e}\n", self.nu));
        out.push_str(&format!("r_star {:.16e}\n", self.r_star));
        out.push_str(&format!("sup_error {:.16e}\n", self.sup_error));
        out.push_str(&fmt_vec("taus", &self.taus));
        out.push_str(&fmt_vec("eps_inftyn", &self.eps_inftyn));
        out.push_str(&fmt_vec("eps_infty", &self.eps_infty));
        out.push_str(&fmt_vec("r", &self.r));
        out.push_str(&fmt_vec("eta", &self.eta));
        out.push_str(&fmt_vec("y", &self.y));
        for (m, row) in self.z.iter().enumerate() {
            out.push_str(&fmt_vec(&format!("z[{m}]"), row));
        }
        for (m, row) in self.w.iter().enumerate() {
            out.push_str(&fmt_vec(&format!("w[{m}]"), row));
        }
        out.push_str("end\n");
        out
    }

    /// Parse the text form produced by `to_text`. The result still has to be
    /// `verify()`d; parsing checks structure only.
    pub fn from_text(text: &str) -> Result<ProofCertificate, RigorError> {
        let bad = |msg: &str| RigorError::InvalidParams(format!("certificate parse: {msg}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty input"))?;
        let version: u32 = header
            .strip_prefix("certificate v")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing header"))?;
        let mut fields: Vec<(String, String)> = Vec::new();
        let mut saw_end = false;
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line == "end" {
                saw_end = true;
                break;
            }
            let (key, rest) = line.split_once(' ').ok_or_else(|| bad("malformed line"))?;
            fields.push((key.to_string(), rest.to_string()));
        }
        if !saw_end {
            return Err(bad("missing end marker"));
        }
        let get = |key: &str| -> Result<String, RigorError> {
            fields
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| bad(&format!("missing field {key}")))
        };
        let parse_f = |s: &str| -> Result<f64, RigorError> {
            s.trim().parse().map_err(|_| bad("malformed float"))
        };
        let parse_vec = |s: &str| -> Result<Vec<f64>, RigorError> {
            s.split_whitespace().map(parse_f).collect()
        };
        let hash_text = get("problem_hash")?;
        let problem_hash = u64::from_str_radix(
            hash_text.trim().trim_start_matches("0x"),
            16,
        )
        .map_err(|_| bad("malformed hash"))?;
        let m_count: usize = get("m_count")?
            .trim()
            .parse()
            .map_err(|_| bad("malformed m_count"))?;
        let mut z = Vec::with_capacity(m_count);
        let mut w = Vec::with_capacity(m_count);
        for m in 0..m_count {
            z.push(parse_vec(&get(&format!("z[{m}]"))?)?);
            w.push(parse_vec(&get(&format!("w[{m}]"))?)?);
        }
        Ok(ProofCertificate {
            version,
            problem_hash,
            big_n: get("big_n")?
                .trim()
                .parse()
                .map_err(|_| bad("malformed big_n"))?,
            k: get("k")?.trim().parse().map_err(|_| bad("malformed k"))?,
            m_count,
            nu: parse_f(&get("nu")?)?,
            r_star: parse_f(&get("r_star")?)?,
            taus: parse_vec(&get("taus")?)?,
            eps_inftyn: parse_vec(&get("eps_inftyn")?)?,
            eps_infty: parse_vec(&get("eps_infty")?)?,
            y: parse_vec(&get("y")?)?,
            z,
            w,
            r: parse_vec(&get("r")?)?,
            eta: parse_vec(&get("eta")?)?,
            sup_error: parse_f(&get("sup_error")?)?,
        })
    }
}

// ---------------------------------------------------------------------------
// Proof orchestration.
// ---------------------------------------------------------------------------

/// Knobs for the full proof pipeline.
#[derive(Clone, Debug)]
pub struct ProverConfig {
    pub big_n: i64,
    pub k: usize,
    /// Number of time subdomains (equal lengths over [0, t_end]).
    pub m_count: usize,
    /// Newton refinement sweeps applied to the simulated orbit.
    pub newton_iters: usize,
    /// Stop refining once the finite residual drops below this.
    pub newton_tol: f64,
    /// Norm weights, replicated over all subdomains.
    pub weights: Weights,
    pub bounds: BoundsConfig,
}

impl ProverConfig {
    pub fn new(big_n: i64, k: usize, m_count: usize, weights: Weights) -> ProverConfig {
        ProverConfig {
            big_n,
            k,
            m_count,
            newton_iters: 6,
            newton_tol: 1e-13,
            weights,
            bounds: BoundsConfig::default(),
        }
    }
}

/// Simulate and Newton-refine an approximate orbit on the given subdomain
/// lengths (non-rigorous; only its validated bounds are trusted).
pub fn prepare_orbit(
    problem: &PdeProblem,
    big_n: i64,
    k: usize,
    taus: &[f64],
    newton_iters: usize,
    newton_tol: f64,
) -> Result<PiecewiseOrbit, RigorError> {
    let mut orbit = approximate_orbit(problem, big_n, k, taus)?;
    for _ in 0..newton_iters {
        let resid = newton_sweep(problem, &mut orbit, big_n, k)?;
        if resid < newton_tol {
            break;
        }
    }
    Ok(orbit)
}

/// Validate a prepared orbit: evaluate all bound constituents, solve for the
/// radii and assemble a certificate.
pub fn prove_orbit(
    problem: &PdeProblem,
    orbit: &PiecewiseOrbit,
    big_n: i64,
    weights: &[Weights],
    sigma: &SigmaTable,
    cfg: &BoundsConfig,
) -> Result<ProofCertificate, RigorError> {
    let report = compute_bounds(problem, orbit, big_n, weights, sigma, cfg)?;
    let sol = solve_radii(&report)?;
    let m_count = report.m_count;
    let y: Vec<f64> = (0..m_count).map(|m| report.y_total(m)).collect();
    let z: Vec<Vec<f64>> = (0..m_count)
        .map(|m| (0..m_count).map(|i| report.z_total(m, i)).collect())
        .collect();
    let w: Vec<Vec<f64>> = (0..m_count)
        .map(|m| (0..m_count).map(|i| report.w_total(m, i)).collect())
        .collect();
    let mut sup = 0.0f64;
    for m in 0..m_count {
        let theta = weights[m].theta();
        sup = sup.max((Interval::point(theta) * Interval::point(sol.r[m])).hi);
    }
    let cert = ProofCertificate {
        version: CERTIFICATE_VERSION,
        problem_hash: problem_hash(problem),
        big_n,
        k: report.k,
        m_count,
        nu: problem.nu,
        r_star: report.r_star,
        taus: orbit.taus.clone(),
        eps_inftyn: weights.iter().map(|w| w.eps_inftyn).collect(),
        eps_infty: weights.iter().map(|w| w.eps_infty).collect(),
        y,
        z,
        w,
        r: sol.r,
        eta: sol.eta,
        sup_error: sup,
    };
    cert.verify()?;
    Ok(cert)
}

/// Full pipeline on one time interval: simulate, refine, bound, verify.
pub fn run_proof(
    problem: &PdeProblem,
    cfg: &ProverConfig,
    sigma: &SigmaTable,
) -> Result<ProofCertificate, RigorError> {
    let taus = equal_taus(problem.t_end, cfg.m_count);
    let orbit = prepare_orbit(
        problem,
        cfg.big_n,
        cfg.k,
        &taus,
        cfg.newton_iters,
        cfg.newton_tol,
    )?;
    let weights = vec![cfg.weights.clone(); cfg.m_count];
    prove_orbit(problem, &orbit, cfg.big_n, &weights, sigma, &cfg.bounds)
}

// ---------------------------------------------------------------------------
// Endpoint enclosures.
// ---------------------------------------------------------------------------

/// Enclosure of the true solution at the final time of a validated interval:
/// componentwise complex intervals for the modes |n| <= N plus a norm bound
/// on everything beyond.
#[derive(Clone, Debug)]
pub struct EndpointEnclosure {
    pub big_n: i64,
    pub nu: f64,
    /// Mode enclosures for n = -N..N.
    pub finite: Vec<CInterval>,
    /// Upper bound on the weighted l1 norm of the modes |n| > N.
    pub tail: Interval,
}

impl EndpointEnclosure {
    /// Largest componentwise width among the finite-mode enclosures.
    pub fn max_width(&self) -> f64 {
        self.finite
            .iter()
            .map(|c| c.re.width().max(c.im.width()))
            .fold(0.0f64, f64::max)
    }

    /// Finite part as a coefficient sequence (initial data for a next step).
    pub fn finite_seq(&self) -> SeqL1 {
        let mut s = SeqL1::zeros(self.big_n, self.nu);
        for (i, c) in self.finite.iter().enumerate() {
            s.set(i as i64 - self.big_n, *c);
        }
        s
    }
}

fn ball(e: f64) -> CInterval {
    let r = Interval::new(-e, e);
    CInterval::new(r, r)
}

/// Sharp enclosure of the true solution at the final time, chained through
/// the subdomains: the finite modes follow the exact variation-of-constants
/// formula of the adapted linear flow, inflated by first- and second-order
/// perturbation terms proportional to the certified radii; the tail combines
/// per-mode quadratures over the explicitly tracked modes with sup-norm
/// transfer of the unstructured remainder.
///
/// `radii[m]` must certify the orbit on subdomain m (from the step's
/// certificate); with all radii zero the result is the rigorous evaluation of
/// the linear formula alone.
pub fn endpoint_enclosure(
    problem: &PdeProblem,
    orbit: &PiecewiseOrbit,
    big_n: i64,
    weights: &[Weights],
    radii: &[f64],
    r_star: f64,
    quad_tol: f64,
) -> Result<EndpointEnclosure, RigorError> {
    let m_count = orbit.m_count();
    if m_count == 0 || weights.len() != m_count || radii.len() != m_count {
        return Err(RigorError::InvalidParams(
            "orbit, weights and radii must cover the same subdomains".into(),
        ));
    }
    for r in radii {
        if !(*r >= 0.0 && *r <= r_star) {
            return Err(RigorError::InvalidParams(
                "endpoint radii must lie in [0, r_star]".into(),
            ));
        }
    }
    let nu = problem.nu;
    let dim = (2 * big_n + 1) as usize;
    let two_r = 2 * problem.r;
    let nu_i = Interval::point(nu);

    let j_phi: Vec<usize> = (0..two_r)
        .filter(|&j| problem.gprime(j).iter().any(|c| *c != Interval::ZERO))
        .collect();
    let j_w: Vec<usize> = (0..two_r)
        .filter(|&j| problem.gsecond(j).iter().any(|c| *c != Interval::ZERO))
        .collect();
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

    // Tail modes carried explicitly through the chain.
    let n_act = (big_n * problem.max_degree().max(1) as i64).max(problem.f.n_max);
    let tail_modes: Vec<i64> = (big_n + 1..=n_act).flat_map(|n| [n, -n]).collect();
    let wt_tail: Vec<Interval> = tail_modes
        .iter()
        .map(|n| nu_i.powi(n.unsigned_abs() as i32))
        .collect();

    let mut boundary: Vec<CInterval> = (0..dim)
        .map(|i| problem.f.get(i as i64 - big_n))
        .collect();
    let mut b_tail: Vec<CInterval> = tail_modes.iter().map(|&n| problem.f.get(n)).collect();
    let mut t_rest: Interval = problem.f_tail_norm.clamp_nonneg();

    for m in 0..m_count {
        let tau = orbit.taus[m];
        let seg = &orbit.segments[m];
        let wm = &weights[m];
        let r_m = radii[m];
        let op = LinearizedOperator::from_segment(problem, seg, tau, big_n)?;
        let tail_m = op.tail_poly();
        let q_abs = op.q.abs_upper();
        let qi_abs = op.q_inv.abs_upper();
        let tau_i = Interval::point(tau);

        // --- Finite part: exact linear-flow formula at the endpoint --------
        let explam = op.exp_lambda(Interval::ONE);
        let d = op.q_inv.matvec(&boundary);
        let ctil = gamma_eigen_coords(problem, &op, seg);
        let mut eigvec = Vec::with_capacity(dim);
        for i in 0..dim {
            let lam_tau = CInterval::point(op.lambda[i]).mul_real(tau_i);
            let mut v = explam[i] * d[i];
            if !ctil[i].is_zero() {
                let integral =
                    exp_kernel_integral_tol(lam_tau, Interval::ONE, &ctil[i], quad_tol)?;
                v = v + integral.mul_real(tau_i);
            }
            eigvec.push(v);
        }
        let mid = op.q.to_interval().matvec(&eigvec);

        // First-order inflation: the kernel-integrated image of the
        // derivative of the nonlinearity on the certified ball.
        let dn1 = op.dn_diag(Interval::ONE);
        let mut err = vec![0.0f64; dim];
        if r_m > 0.0 {
            let mut inner = vec![Interval::ZERO; dim];
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
            for &j in &j_phi {
                let pv = phi_bounds(
                    a_norms[j].as_ref().unwrap(),
                    b_norms[j].as_ref().unwrap(),
                    wm,
                    big_n,
                    PhiVariant::CheckPhi,
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
                let mut acc = upsqr[i].scale(wm.eps_inftyn.max(1.0));
                for idx in 0..dim {
                    acc = acc + Interval::point(qi_abs[(i, idx)]) * inner[idx];
                }
                u1[i] = acc.clamp_nonneg();
            }
            let mut rad1 = vec![Interval::ZERO; dim];
            for n_row in 0..dim {
                let mut acc = Interval::ZERO;
                for i in 0..dim {
                    acc = acc
                        + Interval::point(q_abs[(n_row, i)]) * dn1[i].clamp_nonneg() * u1[i];
                }
                rad1[n_row] = acc.clamp_nonneg();
            }
            // Second-order inflation through the componentwise reduction of
            // the kernel-integrated second derivative.
            let norm_m = seg.c0_norms().l1nu_norm();
            let mut rad2 = vec![Interval::ZERO; dim];
            for &j in &j_w {
                let ptbv = poly_tail_bound(&problem.gsecond(j), norm_m, r_star, wm);
                let dp = dpow[j].as_ref().unwrap();
                let mut bmat = CIMat::zeros(dim, dim);
                for n_row in 0..dim {
                    for idx in 0..dim {
                        let mut acc = Interval::ZERO;
                        for i in 0..dim {
                            acc = acc
                                + Interval::point(q_abs[(n_row, i)])
                                    * dn1[i].clamp_nonneg()
                                    * Interval::point(qi_abs[(i, idx)]);
                        }
                        bmat[(n_row, idx)] =
                            CInterval::real((acc * dp[idx]).clamp_nonneg());
                    }
                }
                let upj = upsilon(&bmat, nu, big_n as usize);
                for n_row in 0..dim {
                    rad2[n_row] = rad2[n_row] + upj[n_row] * ptbv;
                }
            }
            for n_row in 0..dim {
                err[n_row] = hi_pos(
                    rad1[n_row].scale(r_m) + rad2[n_row].scale(0.5 * r_m * r_m),
                );
            }
        }
        let mut next_boundary = Vec::with_capacity(dim);
        for n_row in 0..dim {
            next_boundary.push(mid[n_row] + ball(err[n_row]));
        }

        // --- Tail part -----------------------------------------------------
        let gam = gamma_eval(seg, problem, &op);
        let mut next_tail = Vec::with_capacity(tail_modes.len());
        for (idx, &n) in tail_modes.iter().enumerate() {
            let lamn = op.lambda_tail(n);
            let mut acc = lamn.mul_real(tau_i.scale(2.0)).exp() * b_tail[idx];
            let gn = gam.get(n);
            if !gn.is_zero() {
                match exp_kernel_integral_tol(
                    lamn.mul_real(tau_i),
                    Interval::ONE,
                    &gn,
                    quad_tol,
                ) {
                    Ok(integral) => acc = acc + integral.mul_real(tau_i),
                    Err(_) => {
                        // C0 fallback for the source term.
                        let gn_norm = cheb_norm_bound(&gn, 1.0);
                        let growth = lamn
                            .re
                            .scale(2.0 * tau)
                            .expm1_over_x()
                            .scale(2.0 * tau)
                            .clamp_nonneg();
                        acc = acc + ball(hi_pos(gn_norm * growth));
                    }
                }
            }
            next_tail.push(acc);
        }
        // Unstructured remainder: sup transfer plus the perturbation terms,
        // which are only available at the norm level.
        let sup = tail_sup_combination(None, &[(2.0 * tau, &tail_m)], big_n)?;
        t_rest = (t_rest * sup.exp()).clamp_nonneg();
        if r_m > 0.0 {
            let mut zeta_acc = Interval::ZERO;
            for &j in &j_phi {
                let chi = chi_bound(&tail_m, tau, j, big_n)?;
                let gp_u = seg.apply_poly(&problem.gprime(j));
                let an = {
                    let mut a_fun = gp_u.clone();
                    for n in -big_n..=big_n {
                        let mut p = a_fun.get(n);
                        let dev = op.vbar[j].get(n);
                        p.coeffs[0] = p.coeffs[0] - dev;
                        a_fun.set(n, p);
                    }
                    a_fun.c0_norms()
                };
                let bn = gp_u.c0_norms();
                let mut gt = Interval::ZERO;
                for n in -bn.n_max..=bn.n_max {
                    let v = if n == 0 { an.get(0) } else { bn.get(n) };
                    gt = gt + nu_i.powi(n.unsigned_abs() as i32) * v.clamp_nonneg();
                }
                zeta_acc = zeta_acc + chi * gt.scale(problem.cj[j].abs());
            }
            let zeta_m = zeta_acc.scale(wm.theta());
            let norm_m = seg.c0_norms().l1nu_norm();
            let mut om_acc = Interval::ZERO;
            for &j in &j_w {
                let chi = chi_bound(&tail_m, tau, j, big_n)?;
                let ptbv = poly_tail_bound(&problem.gsecond(j), norm_m, r_star, wm);
                om_acc = om_acc + chi * ptbv.scale(problem.cj[j].abs());
            }
            t_rest = (t_rest + zeta_m.scale(r_m) + om_acc.scale(0.5 * r_m * r_m))
                .clamp_nonneg();
        }

        boundary = next_boundary;
        b_tail = next_tail;
    }

    let mut tail_total = t_rest;
    for (b, w) in b_tail.iter().zip(wt_tail.iter()) {
        tail_total = tail_total + b.abs() * *w;
    }
    Ok(EndpointEnclosure {
        big_n,
        nu,
        finite: boundary,
        tail: tail_total.clamp_nonneg(),
    })
}

// ---------------------------------------------------------------------------
// Time stepping.
// ---------------------------------------------------------------------------

/// Step layout for a long validated integration.
#[derive(Clone, Debug)]
pub struct StepSchedule {
    /// Lengths of the consecutive steps (in original time).
    pub step_lengths: Vec<f64>,
    /// Subdomains per step.
    pub m_per_step: usize,
    /// How often a failing step may be halved before the run aborts.
    pub max_halvings: u32,
}

impl StepSchedule {
    pub fn uniform(t_end: f64, n_steps: usize, m_per_step: usize) -> StepSchedule {
        assert!(t_end > 0.0 && n_steps > 0 && m_per_step > 0);
        StepSchedule {
            step_lengths: vec![t_end / n_steps as f64; n_steps],
            m_per_step,
            max_halvings: 0,
        }
    }
}

/// One validated step of a long integration.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub t_start: f64,
    pub t_len: f64,
    pub certificate: ProofCertificate,
    pub endpoint: EndpointEnclosure,
}

/// Outcome of a chained integration.
#[derive(Clone, Debug)]
pub struct TimesteppingResult {
    pub steps: Vec<StepRecord>,
    /// Uniform sup-norm error over the whole time range.
    pub sup_error: f64,
}

/// Validate a long orbit step by step: each step is proved on its own time
/// interval and its endpoint enclosure (finite interval vector plus tail
/// norm) becomes the initial data of the next step. A failing step is split
/// in half up to `max_halvings` times; the run aborts on the first step that
/// stays infeasible.
pub fn run_timestepping(
    problem: &PdeProblem,
    cfg: &ProverConfig,
    sigma: &SigmaTable,
    schedule: &StepSchedule,
) -> Result<TimesteppingResult, RigorError> {
    if schedule.step_lengths.is_empty() || schedule.m_per_step == 0 {
        return Err(RigorError::InvalidParams(
            "schedule must contain at least one step and one subdomain".into(),
        ));
    }
    let mut queue: Vec<(f64, u32)> = schedule
        .step_lengths
        .iter()
        .rev()
        .map(|&len| (len, 0u32))
        .collect();
    let mut f_cur = problem.f.clone();
    let mut tail_cur = problem.f_tail_norm;
    let mut t0 = 0.0f64;
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut sup_error = 0.0f64;
    let weights = vec![cfg.weights.clone(); schedule.m_per_step];
    while let Some((len, depth)) = queue.pop() {
        let mut sub = PdeProblem::new(
            problem.r,
            problem.g_polys.clone(),
            problem.l_x,
            len,
            f_cur.clone(),
            problem.nu,
        )?;
        sub.f_tail_norm = tail_cur;
        let attempt = (|| -> Result<StepRecord, RigorError> {
            let taus = equal_taus(len, schedule.m_per_step);
            let orbit = prepare_orbit(
                &sub,
                cfg.big_n,
                cfg.k,
                &taus,
                cfg.newton_iters,
                cfg.newton_tol,
            )?;
            let cert = prove_orbit(&sub, &orbit, cfg.big_n, &weights, sigma, &cfg.bounds)?;
            let endpoint = endpoint_enclosure(
                &sub,
                &orbit,
                cfg.big_n,
                &weights,
                &cert.r,
                cert.r_star,
                cfg.bounds.quad_tol,
            )?;
            Ok(StepRecord {
                t_start: t0,
                t_len: len,
                certificate: cert,
                endpoint,
            })
        })();
        match attempt {
            Ok(rec) => {
                sup_error = sup_error.max(rec.certificate.sup_error);
                f_cur = rec.endpoint.finite_seq();
                tail_cur = rec.endpoint.tail;
                t0 += len;
                steps.push(rec);
            }
            Err(e) => {
                if depth < schedule.max_halvings {
                    queue.push((len / 2.0, depth + 1));
                    queue.push((len / 2.0, depth + 1));
                } else {
                    return Err(RigorError::StepInfeasible {
                        step: steps.len(),
                        detail: format!("step of length {len} starting at t = {t0}: {e}"),
                    });
                }
            }
        }
    }
    Ok(TimesteppingResult { steps, sup_error })
}
