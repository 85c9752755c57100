//! Directed-rounding interval arithmetic: the single source of rigor for the
//! workspace.
//!
//! Every quantity that feeds a certified bound is represented as an
//! [`Interval`] (real), [`CInterval`] (rectangular complex), or a matrix of
//! those. Outward rounding is realized by next-representable-value widening,
//! which is deterministic and free of global rounding-mode state.

mod complex;
mod error;
mod interval;
mod matrix;

pub use complex::CInterval;
pub use error::RigorError;
pub use interval::Interval;
pub use matrix::{
    enclose_matrix_inverse, lu_inverse, opnorm_inf_upper, opnorm_l1nu, opnorm_weighted_upper,
    CIMat, CMat, RMat,
};

pub type Cplx = num_complex::Complex64;
