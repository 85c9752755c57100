use crate::complex::point_mul;
use crate::interval::{add_up, mul_up};
use crate::{CInterval, Cplx, Interval, RigorError};

/// Point complex matrix (row-major). Entries are exact floating-point
/// numbers; used for approximate inverses and other non-rigorous data that is
/// later consumed *exactly* inside interval expressions.
#[derive(Clone, Debug)]
pub struct CMat {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<Cplx>,
}

/// Interval complex matrix (row-major).
#[derive(Clone, Debug)]
pub struct CIMat {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<CInterval>,
}

/// Real matrix of upper bounds (row-major, entries >= 0 by convention where
/// used); products are accumulated with upward rounding.
#[derive(Clone, Debug)]
pub struct RMat {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<f64>,
}

impl CMat {
    pub fn zeros(nrows: usize, ncols: usize) -> CMat {
        CMat {
            nrows,
            ncols,
            data: vec![Cplx::new(0.0, 0.0); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> CMat {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Cplx::new(1.0, 0.0);
        }
        m
    }

    pub fn matmul(&self, o: &CMat) -> CMat {
        assert_eq!(self.ncols, o.nrows);
        let mut out = CMat::zeros(self.nrows, o.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a == Cplx::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..o.ncols {
                    out[(i, j)] += a * o[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Cplx]) -> Vec<Cplx> {
        assert_eq!(self.ncols, v.len());
        let mut out = vec![Cplx::new(0.0, 0.0); self.nrows];
        for i in 0..self.nrows {
            let mut acc = Cplx::new(0.0, 0.0);
            for k in 0..self.ncols {
                acc += self[(i, k)] * v[k];
            }
            out[i] = acc;
        }
        out
    }

    /// Entrywise modulus, rounded up.
    pub fn abs_upper(&self) -> RMat {
        RMat {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self
                .data
                .iter()
                .map(|z| CInterval::point(*z).abs_upper())
                .collect(),
        }
    }

    pub fn to_interval(&self) -> CIMat {
        CIMat {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|z| CInterval::point(*z)).collect(),
        }
    }
}

impl CIMat {
    pub fn zeros(nrows: usize, ncols: usize) -> CIMat {
        CIMat {
            nrows,
            ncols,
            data: vec![CInterval::ZERO; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> CIMat {
        let mut m = CIMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = CInterval::ONE;
        }
        m
    }

    pub fn mid(&self) -> CMat {
        CMat {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|z| z.mid()).collect(),
        }
    }

    pub fn matmul(&self, o: &CIMat) -> CIMat {
        assert_eq!(self.ncols, o.nrows);
        let mut out = CIMat::zeros(self.nrows, o.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                let row_o = &o.data[k * o.ncols..(k + 1) * o.ncols];
                let row_out = &mut out.data[i * o.ncols..(i + 1) * o.ncols];
                for (oj, rj) in row_out.iter_mut().zip(row_o.iter()) {
                    *oj += a * *rj;
                }
            }
        }
        out
    }

    /// Product with a point matrix on the left (fused, cheaper).
    pub fn matmul_point_left(p: &CMat, o: &CIMat) -> CIMat {
        assert_eq!(p.ncols, o.nrows);
        let mut out = CIMat::zeros(p.nrows, o.ncols);
        for i in 0..p.nrows {
            for k in 0..p.ncols {
                let a = p[(i, k)];
                if a == Cplx::new(0.0, 0.0) {
                    continue;
                }
                let row_o = &o.data[k * o.ncols..(k + 1) * o.ncols];
                let row_out = &mut out.data[i * o.ncols..(i + 1) * o.ncols];
                for (oj, rj) in row_out.iter_mut().zip(row_o.iter()) {
                    *oj += point_mul(a, *rj);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[CInterval]) -> Vec<CInterval> {
        assert_eq!(self.ncols, v.len());
        let mut out = vec![CInterval::ZERO; self.nrows];
        for i in 0..self.nrows {
            let mut acc = CInterval::ZERO;
            for k in 0..self.ncols {
                acc += self[(i, k)] * v[k];
            }
            out[i] = acc;
        }
        out
    }

    /// Entrywise upper bound on the modulus.
    pub fn abs_upper(&self) -> RMat {
        RMat {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|z| z.abs_upper()).collect(),
        }
    }

    pub fn add(&self, o: &CIMat) -> CIMat {
        assert_eq!((self.nrows, self.ncols), (o.nrows, o.ncols));
        CIMat {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self
                .data
                .iter()
                .zip(o.data.iter())
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }

    pub fn sub(&self, o: &CIMat) -> CIMat {
        assert_eq!((self.nrows, self.ncols), (o.nrows, o.ncols));
        CIMat {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self
                .data
                .iter()
                .zip(o.data.iter())
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }

    pub fn max_width(&self) -> f64 {
        self.data.iter().map(|z| z.width()).fold(0.0, f64::max)
    }
}

impl RMat {
    pub fn zeros(nrows: usize, ncols: usize) -> RMat {
        RMat {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    /// Upper-bound product of two nonnegative matrices: every multiply and
    /// add is rounded up, so the result dominates the exact product.
    pub fn matmul_up(&self, o: &RMat) -> RMat {
        assert_eq!(self.ncols, o.nrows);
        let mut out = RMat::zeros(self.nrows, o.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let row_o = &o.data[k * o.ncols..(k + 1) * o.ncols];
                let row_out = &mut out.data[i * o.ncols..(i + 1) * o.ncols];
                for (oj, rj) in row_out.iter_mut().zip(row_o.iter()) {
                    *oj = add_up(*oj, mul_up(a, *rj));
                }
            }
        }
        out
    }

    pub fn matvec_up(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.ncols, v.len());
        let mut out = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let mut acc = 0.0;
            for k in 0..self.ncols {
                acc = add_up(acc, mul_up(self[(i, k)], v[k]));
            }
            out[i] = acc;
        }
        out
    }

    /// Upper bound on a row-functional product w^T * M (w nonnegative).
    pub fn row_functional_up(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(self.nrows, w.len());
        let mut out = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            let wi = w[i];
            if wi == 0.0 {
                continue;
            }
            for j in 0..self.ncols {
                out[j] = add_up(out[j], mul_up(wi, self[(i, j)]));
            }
        }
        out
    }
}

macro_rules! impl_index {
    ($t:ty, $e:ty) => {
        impl std::ops::Index<(usize, usize)> for $t {
            type Output = $e;
            #[inline]
            fn index(&self, (i, j): (usize, usize)) -> &$e {
                debug_assert!(i < self.nrows && j < self.ncols);
                &self.data[i * self.ncols + j]
            }
        }
        impl std::ops::IndexMut<(usize, usize)> for $t {
            #[inline]
            fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut $e {
                debug_assert!(i < self.nrows && j < self.ncols);
                &mut self.data[i * self.ncols + j]
            }
        }
    };
}
impl_index!(CMat, Cplx);
impl_index!(CIMat, CInterval);
impl_index!(RMat, f64);

/// Upper bound on the infinity (max row sum of moduli) operator norm.
pub fn opnorm_inf_upper(m: &CIMat) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..m.nrows {
        let mut acc = 0.0;
        for j in 0..m.ncols {
            acc = add_up(acc, m[(i, j)].abs_upper());
        }
        best = best.max(acc);
    }
    best
}

/// Upper bound on the weighted operator norm
/// max_j ( sum_i row_w[i] * M[i,j] ) / col_w[j] for a nonnegative bound
/// matrix M (weights positive).
pub fn opnorm_weighted_upper(m: &RMat, row_w: &[f64], col_w: &[f64]) -> f64 {
    assert_eq!(m.nrows, row_w.len());
    assert_eq!(m.ncols, col_w.len());
    let sums = m.row_functional_up(row_w);
    let mut best: f64 = 0.0;
    for j in 0..m.ncols {
        let q = Interval::point(sums[j])
            .checked_div(Interval::point(col_w[j]))
            .expect("opnorm_weighted_upper: zero column weight");
        best = best.max(q.hi);
    }
    best
}

/// Upper bound on the l1_nu -> l1_nu operator norm of a (2N+1)x(2N+1)
/// matrix indexed by Fourier modes -N..N:
/// max over columns m of ( sum_n |B_{n,m}| nu^{|n|} ) / nu^{|m|}.
pub fn opnorm_l1nu(b: &CIMat, nu: f64, big_n: usize) -> f64 {
    let dim = 2 * big_n + 1;
    assert_eq!(b.nrows, dim, "opnorm_l1nu: row dimension");
    assert_eq!(b.ncols, dim, "opnorm_l1nu: column dimension");
    assert!(nu >= 1.0);
    let nu_i = Interval::point(nu);
    let row_w: Vec<f64> = (0..dim)
        .map(|i| nu_i.powi((i as i64 - big_n as i64).unsigned_abs() as i32).hi)
        .collect();
    let col_w: Vec<f64> = (0..dim)
        .map(|i| nu_i.powi((i as i64 - big_n as i64).unsigned_abs() as i32).lo)
        .collect();
    opnorm_weighted_upper(&b.abs_upper(), &row_w, &col_w)
}

/// Floating-point inverse by LU with partial pivoting (non-rigorous helper;
/// rigor is restored downstream via residual bounds).
pub fn lu_inverse(a: &CMat) -> Result<CMat, RigorError> {
    assert_eq!(a.nrows, a.ncols);
    let n = a.nrows;
    let mut lu = a.data.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    for col in 0..n {
        // Pivot selection.
        let mut pmax = 0.0;
        let mut prow = col;
        for r in col..n {
            let m = lu[r * n + col].norm_sqr();
            if m > pmax {
                pmax = m;
                prow = r;
            }
        }
        if pmax == 0.0 || !pmax.is_finite() {
            return Err(RigorError::SingularApproxInverse(format!(
                "zero/non-finite pivot in column {col}"
            )));
        }
        if prow != col {
            for j in 0..n {
                lu.swap(col * n + j, prow * n + j);
            }
            piv.swap(col, prow);
        }
        let d = lu[col * n + col];
        for r in col + 1..n {
            let f = lu[r * n + col] / d;
            lu[r * n + col] = f;
            for j in col + 1..n {
                let s = lu[col * n + j];
                lu[r * n + j] -= f * s;
            }
        }
    }
    // Solve A X = I column by column.
    let mut inv = CMat::zeros(n, n);
    let mut x = vec![Cplx::new(0.0, 0.0); n];
    for e in 0..n {
        for r in 0..n {
            x[r] = if piv[r] == e {
                Cplx::new(1.0, 0.0)
            } else {
                Cplx::new(0.0, 0.0)
            };
        }
        for r in 1..n {
            let mut acc = x[r];
            for j in 0..r {
                acc -= lu[r * n + j] * x[j];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = x[r];
            for j in r + 1..n {
                acc -= lu[r * n + j] * x[j];
            }
            x[r] = acc / lu[r * n + r];
        }
        for r in 0..n {
            inv[(r, e)] = x[r];
        }
    }
    for z in &inv.data {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(RigorError::SingularApproxInverse(
                "non-finite entry in computed inverse".into(),
            ));
        }
    }
    Ok(inv)
}

/// Certified enclosure of Q^-1 from an approximate inverse W.
///
/// Verifies beta = ||I - W*Q||_inf < 1 and returns W widened entrywise by
/// ||W||_inf * beta / (1 - beta), which encloses the exact inverse of every
/// point matrix inside Q (Neumann series bound). Also returns beta.
pub fn enclose_matrix_inverse(q: &CIMat, w: &CMat) -> Result<(CIMat, f64), RigorError> {
    assert_eq!(q.nrows, q.ncols);
    assert_eq!(w.nrows, q.nrows);
    assert_eq!(w.ncols, q.ncols);
    let n = q.nrows;
    let wq = CIMat::matmul_point_left(w, q);
    let resid = CIMat::identity(n).sub(&wq);
    let beta = opnorm_inf_upper(&resid);
    if !(beta < 1.0) {
        return Err(RigorError::NotVerifiablyInvertible { beta });
    }
    let wnorm = opnorm_inf_upper(&w.to_interval());
    let delta = (Interval::point(wnorm) * Interval::point(beta))
        .checked_div(Interval::point(1.0) - Interval::point(beta))?
        .hi;
    let pad = Interval::with_rad(0.0, delta);
    let mut out = CIMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let z = CInterval::point(w[(i, j)]);
            out[(i, j)] = CInterval::new(z.re + pad, z.im + pad);
        }
    }
    Ok((out, beta))
}
