use crate::{Cplx, Interval, RigorError};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Rectangular complex interval: independent enclosures of real and
/// imaginary part. Rectangles (rather than discs) match the componentwise
/// absolute values |Q|, |Q^-1| used throughout the operator estimates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CInterval {
    pub re: Interval,
    pub im: Interval,
}

impl CInterval {
    pub const ZERO: CInterval = CInterval {
        re: Interval::ZERO,
        im: Interval::ZERO,
    };
    pub const ONE: CInterval = CInterval {
        re: Interval::ONE,
        im: Interval::ZERO,
    };

    #[inline]
    pub fn new(re: Interval, im: Interval) -> CInterval {
        CInterval { re, im }
    }

    #[inline]
    pub fn point(z: Cplx) -> CInterval {
        CInterval {
            re: Interval::point(z.re),
            im: Interval::point(z.im),
        }
    }

    #[inline]
    pub fn real(x: Interval) -> CInterval {
        CInterval {
            re: x,
            im: Interval::ZERO,
        }
    }

    #[inline]
    pub fn mid(self) -> Cplx {
        Cplx::new(self.re.mid(), self.im.mid())
    }

    #[inline]
    pub fn contains(self, z: Cplx) -> bool {
        self.re.contains(z.re) && self.im.contains(z.im)
    }

    #[inline]
    pub fn contains_interval(self, o: CInterval) -> bool {
        self.re.contains_interval(o.re) && self.im.contains_interval(o.im)
    }

    pub fn hull(a: CInterval, b: CInterval) -> CInterval {
        CInterval {
            re: Interval::hull(a.re, b.re),
            im: Interval::hull(a.im, b.im),
        }
    }

    /// Enclosure of the modulus |z|.
    pub fn abs(self) -> Interval {
        (self.re.powi(2) + self.im.powi(2)).clamp_nonneg().sqrt()
    }

    /// Upper bound on |z| (cheaper than `abs` when only the sup is needed).
    #[inline]
    pub fn abs_upper(self) -> f64 {
        (self.re.powi(2) + self.im.powi(2)).hi.sqrt().next_up()
    }

    #[inline]
    pub fn conj(self) -> CInterval {
        CInterval {
            re: self.re,
            im: -self.im,
        }
    }

    #[inline]
    pub fn scale(self, c: f64) -> CInterval {
        CInterval {
            re: self.re.scale(c),
            im: self.im.scale(c),
        }
    }

    #[inline]
    pub fn mul_real(self, x: Interval) -> CInterval {
        CInterval {
            re: self.re * x,
            im: self.im * x,
        }
    }

    /// Complex exponential e^z.
    pub fn exp(self) -> CInterval {
        let r = self.re.exp();
        CInterval {
            re: r * self.im.cos(),
            im: r * self.im.sin(),
        }
    }

    /// Division; fails when the denominator modulus encloses zero.
    pub fn checked_div(self, o: CInterval) -> Result<CInterval, RigorError> {
        let denom = o.re.powi(2) + o.im.powi(2);
        if denom.contains_zero() {
            return Err(RigorError::DivisionByZeroEnclosure);
        }
        let num = self * o.conj();
        Ok(CInterval {
            re: num.re.checked_div(denom)?,
            im: num.im.checked_div(denom)?,
        })
    }

    /// Width of the wider of the two component intervals.
    pub fn width(self) -> f64 {
        self.re.width().max(self.im.width())
    }
}

impl Neg for CInterval {
    type Output = CInterval;
    #[inline]
    fn neg(self) -> CInterval {
        CInterval {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Add for CInterval {
    type Output = CInterval;
    #[inline]
    fn add(self, o: CInterval) -> CInterval {
        CInterval {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }
}

impl Sub for CInterval {
    type Output = CInterval;
    #[inline]
    fn sub(self, o: CInterval) -> CInterval {
        CInterval {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }
}

impl Mul for CInterval {
    type Output = CInterval;
    #[inline]
    fn mul(self, o: CInterval) -> CInterval {
        CInterval {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

impl AddAssign for CInterval {
    #[inline]
    fn add_assign(&mut self, o: CInterval) {
        *self = *self + o;
    }
}

impl SubAssign for CInterval {
    #[inline]
    fn sub_assign(&mut self, o: CInterval) {
        *self = *self - o;
    }
}

impl From<Cplx> for CInterval {
    fn from(z: Cplx) -> CInterval {
        CInterval::point(z)
    }
}

impl From<Interval> for CInterval {
    fn from(x: Interval) -> CInterval {
        CInterval::real(x)
    }
}

/// Fused point-times-interval product, used in the hot block recursions where
/// one factor is an exact floating-point matrix entry.
#[inline]
pub(crate) fn point_mul(a: Cplx, b: CInterval) -> CInterval {
    let ar = Interval::point(a.re);
    let ai = Interval::point(a.im);
    CInterval {
        re: ar * b.re - ai * b.im,
        im: ar * b.im + ai * b.re,
    }
}
