//! Numerical laboratory for a biological network formation system
//!
//! ```text
//! -div[(I + m (x) m) grad p] = S,
//! d_t m - D^2 Lap m - E^2 (m . grad p) grad p + |m|^{2(gamma-1)} m = 0,
//! ```
//!
//! with `p = 0`, `m = 0` on the boundary and `m(., 0) = m0`.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: grids, nodal fields, difference operators, norms.
//! - [`elliptic`]: assembly and solution of the pressure equation.
//! - [`parabolic`]: one IMEX step of the conductance equation.
//! - [`coupling`]: time marching, the successive-approximation scheme, and
//!   life-span sweeps.
//! - [`diagnostics`]: energy identities, excess functionals, oscillations,
//!   level-set measures and empirical exponents computed on trajectories.
//! - [`analysis`]: the recursive inequalities used to read solver traces.

pub mod analysis;
pub mod coupling;
pub mod diagnostics;
pub mod elliptic;
mod error;
pub mod mesh;
pub mod parabolic;
pub mod sparse;

pub use error::{Error, Result};
pub use mesh::{Grid, ScalarField, TruncationBounds, VectorField};
