//! Numerical laboratory for the free transportation cost inequality on the
//! unit circle.
//!
//! The crate is organised by subsystem:
//!
//! - [`circle`]: probability measures and potentials on the circle, Fourier
//!   coefficients, relative entropy and logarithmic energy.
//! - [`equilibrium`]: the weighted logarithmic energy, its minimiser, relative
//!   free entropy and relative free pressure.
//! - [`transport`]: quadratic Wasserstein distance on the circle, Kantorovich
//!   duality and the free TCI verdict.
//! - [`sk`]: distortion coefficients, their Taylor series and a brute-force
//!   Prékopa–Leindler verifier on the circle.
//! - [`sun`]: SU(N) geodesics, eigenvalue matching and Hessian probes.
//! - [`gas`]: Metropolis sampling of the SU(N) eigenvalue Coulomb gas and
//!   thermodynamic integration of the free pressure.

#![forbid(unsafe_code)]

pub mod assignment;
pub mod circle;
pub mod equilibrium;
mod error;
mod ext;
pub mod gas;
pub mod sk;
pub mod sun;
pub mod transport;

pub use error::{Error, Result};
pub use ext::ExtReal;

pub use circle::{
    angular_distance, CircleFunction, CircleMeasure, ConvexityParameter, Potential, TWO_PI,
};
