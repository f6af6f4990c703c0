//! Numerics for vertical catenoids in slabs: closed-form geometry, marginal
//! stability, spanning thresholds, minimal annuli from Weierstrass data and
//! the ovals eigenvalue functional.

pub mod catenoid;
pub mod error;
pub mod laurent;
pub mod ovals;
pub mod par;
pub mod quadrature;
pub mod roots;
pub mod spectral;
pub mod stability;
pub mod thresholds;
pub mod weierstrass;

pub use catenoid::{ms_indicator, solve_lambda0, solve_t_star, vertical_flux, CatenoidPiece, Slab};
pub use error::{Error, Result};
pub use par::Execution;
