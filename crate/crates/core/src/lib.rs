//! Semiclassical propagation for hyperbolic cat maps: metaplectic Gaussians,
//! the quantized torus, damped Lagrangian states and Birkhoff-sum asymptotics.

pub mod birkhoff;
pub mod classical;
pub mod dd;
pub mod error;
pub mod lagrangian;
pub mod metaplectic;
pub mod quadrature;
pub mod torus;

pub use classical::{Sl2IntMatrix, SpectralData, TorusPoint};
pub use error::{CatError, Result};
pub use metaplectic::GaussianState;
