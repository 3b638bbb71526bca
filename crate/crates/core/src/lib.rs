//! Least-squares finite element solver for the singularly perturbed Darcy
//! (Brinkman) equations
//!
//! ```text
//!   -t²Δu + u + ∇p = f,   div u = 0,   ∫p = 0,   u|Γ = g
//! ```
//!
//! written as a first-order system in the velocity `u` and the pseudostress
//! `M = t∇u − (p/t)I`. The pressure is eliminated and recovered afterwards as
//! `p = −(t/2) tr M`. Velocities are approximated with continuous P1 elements,
//! pseudostresses row-wise with lowest-order Raviart–Thomas elements, optionally
//! augmented with `ηI`, `η` a zero-mean continuous P1 function, which removes
//! locking for small `t`.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: conforming triangulations and newest-vertex bisection.
//! * [`quadrature`]: symmetric rules on the reference triangle.
//! * [`spaces`]: degree-of-freedom layout, basis functions, discrete fields.
//! * [`assembly`]: the SPD normal equations, Dirichlet lifting, functionals.
//! * [`solver`]: CSR storage, rank-1 matvec, Jacobi-PCG, dense Cholesky.
//! * [`adapt`]: error indicators, Dörfler marking, the adaptive loop.
//! * [`analysis`]: projections, interpolants, pressure recovery.
//! * [`problems`]: the shipped benchmark problems.
//! * [`cli`]: experiment runner and text output.

pub mod adapt;
pub mod analysis;
pub mod assembly;
pub mod cli;
mod error;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod spaces;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Point, Tensor, Vector};
