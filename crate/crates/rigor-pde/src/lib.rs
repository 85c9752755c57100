//! Rigorous a-posteriori validation of Fourier x Chebyshev orbits for scalar
//! semilinear parabolic PDEs with periodic boundary conditions.
//!
//! Pipeline: a non-rigorous spectral solve produces an approximate orbit; a
//! solution-adapted linear operator is built per time subdomain; residual (Y),
//! contraction (Z) and Lipschitz (W) bounds are evaluated with interval
//! arithmetic; a Newton–Kantorovich radii argument then certifies a true
//! solution within an explicit sup-norm distance of the approximation.

pub mod bounds;
pub mod cheb;
pub mod linop;
pub mod problem;
pub mod prover;
pub mod quadrature;
pub mod seqspace;

pub use rigor_core::{CIMat, CInterval, CMat, Cplx, Interval, RMat, RigorError};
