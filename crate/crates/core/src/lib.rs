//! Near-field sampling methods for two-dimensional inverse acoustic scattering.
//!
//! The crate covers the whole chain from forward data synthesis to imaging:
//!
//! - [`specfun`]: integer-order Bessel, Neumann and Hankel functions.
//! - [`geometry`]: the shape catalog and its boundary discretization.
//! - [`bie`]: Nyström boundary-integral solvers for sound-soft obstacles and
//!   cavities, analytic circle oracles, and the discrete single-layer and
//!   `T` operators.
//! - [`nearfield`]: near-field matrices, noise, and the `NFM` text format.
//! - [`imaging`]: Fourier-Bessel probe vectors, indicators and grid sweeps.
//! - [`completion`]: limited-aperture to full-aperture data completion with
//!   the prolate matrix.

pub mod bie;
pub mod completion;
pub mod error;
pub mod geometry;
pub mod imaging;
pub mod linalg;
pub mod nearfield;
pub mod specfun;

pub use error::{Error, Result};
pub use geometry::Point;
