use crate::RigorError;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// Number of widening steps applied around libm transcendental results
/// (glibc documents exp/sin/cos/expm1 at <= 2 ulp; 4 is a safety margin).
const LIBM_STEPS: u32 = 4;

#[inline]
fn step_down(mut x: f64, n: u32) -> f64 {
    for _ in 0..n {
        x = x.next_down();
    }
    x
}

#[inline]
fn step_up(mut x: f64, n: u32) -> f64 {
    for _ in 0..n {
        x = x.next_up();
    }
    x
}

#[inline]
pub(crate) fn add_down(a: f64, b: f64) -> f64 {
    // Sums with an exact-zero term are exact.
    if a == 0.0 {
        return b;
    }
    if b == 0.0 {
        return a;
    }
    (a + b).next_down()
}
#[inline]
pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return b;
    }
    if b == 0.0 {
        return a;
    }
    (a + b).next_up()
}
#[inline]
pub(crate) fn sub_down(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        return a;
    }
    if a == 0.0 {
        return -b;
    }
    (a - b).next_down()
}
#[inline]
pub(crate) fn sub_up(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        return a;
    }
    if a == 0.0 {
        return -b;
    }
    (a - b).next_up()
}
#[inline]
pub(crate) fn mul_down(a: f64, b: f64) -> f64 {
    // Products with an exact-zero factor are exact; widening them leaks
    // spurious +-5e-324 endpoints into sparse data.
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    (a * b).next_down()
}
#[inline]
pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    (a * b).next_up()
}
#[inline]
fn div_down(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    (a / b).next_down()
}
#[inline]
fn div_up(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    (a / b).next_up()
}

/// Closed real interval `[lo, hi]` with outward-rounded arithmetic.
///
/// Invariants: `lo <= hi`, both finite (infinite endpoints are rejected at
/// construction so that overflow is caught loudly rather than silently
/// absorbed), and every operation returns an enclosure of the exact image of
/// all contained points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    /// Tight enclosure of pi.
    pub fn pi() -> Interval {
        Interval {
            lo: std::f64::consts::PI.next_down(),
            hi: std::f64::consts::PI.next_up(),
        }
    }

    #[inline]
    pub fn new(lo: f64, hi: f64) -> Interval {
        assert!(
            lo <= hi && lo.is_finite() && hi.is_finite(),
            "invalid interval endpoints [{lo}, {hi}]"
        );
        Interval { lo, hi }
    }

    /// Exact (zero-width) interval.
    #[inline]
    pub fn point(x: f64) -> Interval {
        assert!(x.is_finite(), "non-finite point {x}");
        Interval { lo: x, hi: x }
    }

    #[inline]
    pub fn with_rad(mid: f64, rad: f64) -> Interval {
        assert!(rad >= 0.0);
        Interval::new(sub_down(mid, rad), add_up(mid, rad))
    }

    #[inline]
    pub fn hull(a: Interval, b: Interval) -> Interval {
        Interval {
            lo: a.lo.min(b.lo),
            hi: a.hi.max(b.hi),
        }
    }

    #[inline]
    pub fn hull_point(self, x: f64) -> Interval {
        Interval {
            lo: self.lo.min(x),
            hi: self.hi.max(x),
        }
    }

    pub fn intersect(self, o: Interval) -> Option<Interval> {
        let lo = self.lo.max(o.lo);
        let hi = self.hi.min(o.hi);
        if lo <= hi {
            Some(Interval { lo, hi })
        } else {
            None
        }
    }

    #[inline]
    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    #[inline]
    pub fn contains_interval(self, o: Interval) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    #[inline]
    pub fn contains_zero(self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    #[inline]
    pub fn mid(self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    #[inline]
    pub fn width(self) -> f64 {
        sub_up(self.hi, self.lo)
    }

    /// Upper bound on |x| over the interval.
    #[inline]
    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Lower bound on |x| over the interval (mignitude).
    #[inline]
    pub fn mig(self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    /// Enclosure of |x|.
    #[inline]
    pub fn abs(self) -> Interval {
        Interval {
            lo: self.mig(),
            hi: self.mag(),
        }
    }

    /// Enclosure of max(x, y) over both intervals.
    #[inline]
    pub fn max_i(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo.max(o.lo),
            hi: self.hi.max(o.hi),
        }
    }

    /// Enclosure of min(x, y).
    #[inline]
    pub fn min_i(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo.min(o.lo),
            hi: self.hi.min(o.hi),
        }
    }

    /// Clamp the lower endpoint to >= 0 (for quantities known nonnegative
    /// where outward rounding produced a spurious -ulp endpoint).
    #[inline]
    pub fn clamp_nonneg(self) -> Interval {
        Interval {
            lo: self.lo.max(0.0),
            hi: self.hi.max(0.0),
        }
    }

    /// Enclosure of max(x, 0).
    #[inline]
    pub fn pos_part(self) -> Interval {
        Interval {
            lo: self.lo.max(0.0),
            hi: self.hi.max(0.0),
        }
    }

    /// Multiply by an exact scalar.
    #[inline]
    pub fn scale(self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval::new(mul_down(self.lo, c), mul_up(self.hi, c))
        } else {
            Interval::new(mul_down(self.hi, c), mul_up(self.lo, c))
        }
    }

    pub fn checked_div(self, o: Interval) -> Result<Interval, RigorError> {
        if o.contains_zero() {
            return Err(RigorError::DivisionByZeroEnclosure);
        }
        let (a, b, c, d) = (self.lo, self.hi, o.lo, o.hi);
        let cands = [
            (div_down(a, c), div_up(a, c)),
            (div_down(a, d), div_up(a, d)),
            (div_down(b, c), div_up(b, c)),
            (div_down(b, d), div_up(b, d)),
        ];
        let lo = cands.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = cands.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        Ok(Interval::new(lo, hi))
    }

    pub fn recip(self) -> Result<Interval, RigorError> {
        Interval::ONE.checked_div(self)
    }

    pub fn checked_sqrt(self) -> Result<Interval, RigorError> {
        if self.lo < 0.0 {
            return Err(RigorError::DomainError(format!(
                "sqrt of interval with negative lower endpoint {}",
                self.lo
            )));
        }
        let up = |x: f64| if x == 0.0 { 0.0 } else { x.sqrt().next_up() };
        Ok(Interval::new(
            self.lo.sqrt().next_down().max(0.0),
            up(self.hi),
        ))
    }

    /// `sqrt`, panicking on negative arguments (use `checked_sqrt` at API
    /// boundaries).
    pub fn sqrt(self) -> Interval {
        self.checked_sqrt().expect("sqrt of negative interval")
    }

    pub fn exp(self) -> Interval {
        Interval::new(
            step_down(self.lo.exp(), LIBM_STEPS).max(0.0),
            step_up(self.hi.exp(), LIBM_STEPS),
        )
    }

    pub fn ln(self) -> Result<Interval, RigorError> {
        if self.lo <= 0.0 {
            return Err(RigorError::DomainError(format!(
                "ln of interval with non-positive lower endpoint {}",
                self.lo
            )));
        }
        Ok(Interval::new(
            step_down(self.lo.ln(), LIBM_STEPS),
            step_up(self.hi.ln(), LIBM_STEPS),
        ))
    }

    /// Enclosure of cos over the interval.
    pub fn cos(self) -> Interval {
        if self.width() > 10.0 {
            return Interval::new(-1.0, 1.0);
        }
        let cos_pt = |x: f64| {
            let c = x.cos();
            Interval::new(step_down(c, LIBM_STEPS).max(-1.0), step_up(c, LIBM_STEPS).min(1.0))
        };
        let mut out = Interval::hull(cos_pt(self.lo), cos_pt(self.hi));
        // Interior extrema of cos sit at integer multiples of pi; include any
        // multiple whose enclosure could intersect the argument interval.
        let pi = Interval::pi();
        let k_lo = (self.lo / std::f64::consts::PI).floor() as i64 - 1;
        let k_hi = (self.hi / std::f64::consts::PI).ceil() as i64 + 1;
        for k in k_lo..=k_hi {
            let t = pi.scale(k as f64);
            if t.hi >= self.lo && t.lo <= self.hi {
                out = out.hull_point(if k % 2 == 0 { 1.0 } else { -1.0 });
            }
        }
        out.intersect(Interval::new(-1.0, 1.0)).unwrap()
    }

    /// Enclosure of sin over the interval.
    pub fn sin(self) -> Interval {
        // sin(x) = cos(x - pi/2)
        (self - Interval::pi().scale(0.5)).cos()
    }

    /// Integer power with even-power tightening.
    pub fn powi(self, n: i32) -> Interval {
        if n == 0 {
            return Interval::ONE;
        }
        if n < 0 {
            return self
                .powi(-n)
                .recip()
                .expect("powi: negative power of interval containing zero");
        }
        let pow_dir = |x: f64, n: i32, up: bool| -> f64 {
            let mut r = x;
            for _ in 1..n {
                r = if up { mul_up(r, x) } else { mul_down(r, x) };
            }
            r
        };
        if n % 2 == 0 {
            let a = self.abs();
            Interval::new(pow_dir(a.lo, n, false).max(0.0), pow_dir(a.hi, n, true))
        } else {
            Interval::new(pow_dir(self.lo, n, false), pow_dir(self.hi, n, true))
        }
    }

    /// Enclosure of zeta(x) = (e^x - 1)/x with zeta(0) = 1 (increasing on R).
    pub fn expm1_over_x(self) -> Interval {
        let pt = |a: f64| -> Interval {
            if a == 0.0 {
                return Interval::ONE;
            }
            let num = Interval::new(
                step_down(a.exp_m1(), LIBM_STEPS),
                step_up(a.exp_m1(), LIBM_STEPS),
            );
            num.checked_div(Interval::point(a)).unwrap()
        };
        let lo = pt(self.lo);
        let hi = pt(self.hi);
        // Monotone increasing: the hull of the endpoint evaluations encloses
        // the range (endpoint enclosures already carry the rounding slack).
        Interval::new(lo.lo.max(0.0), hi.hi)
    }
}

impl Neg for Interval {
    type Output = Interval;
    #[inline]
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    #[inline]
    fn add(self, o: Interval) -> Interval {
        Interval::new(add_down(self.lo, o.lo), add_up(self.hi, o.hi))
    }
}

impl Sub for Interval {
    type Output = Interval;
    #[inline]
    fn sub(self, o: Interval) -> Interval {
        Interval::new(sub_down(self.lo, o.hi), sub_up(self.hi, o.lo))
    }
}

impl Mul for Interval {
    type Output = Interval;
    #[inline]
    fn mul(self, o: Interval) -> Interval {
        let (a, b, c, d) = (self.lo, self.hi, o.lo, o.hi);
        let p1 = mul_down(a, c).min(mul_down(a, d));
        let p2 = mul_down(b, c).min(mul_down(b, d));
        let q1 = mul_up(a, c).max(mul_up(a, d));
        let q2 = mul_up(b, c).max(mul_up(b, d));
        let lo = p1.min(p2);
        let hi = q1.max(q2);
        debug_assert!(!lo.is_nan() && !hi.is_nan());
        Interval::new(lo, hi)
    }
}

impl Div for Interval {
    type Output = Interval;
    #[inline]
    fn div(self, o: Interval) -> Interval {
        self.checked_div(o)
            .expect("division by interval containing zero")
    }
}

impl AddAssign for Interval {
    #[inline]
    fn add_assign(&mut self, o: Interval) {
        *self = *self + o;
    }
}

impl SubAssign for Interval {
    #[inline]
    fn sub_assign(&mut self, o: Interval) {
        *self = *self - o;
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    #[inline]
    fn mul(self, c: f64) -> Interval {
        self.scale(c)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Interval {
        Interval::point(x)
    }
}
