//! Numerical toolkit for the coupled generalized KdV system
//!
//! ```text
//! u_t + u_xxx + μ (f(u,v))_x = 0,   v_t + v_xxx + μ (g(u,v))_x = 0,
//! ```
//!
//! with `f = H_u`, `g = H_v` for a homogeneous polynomial density `H` of
//! degree `2k+2`. The crate builds solitary-wave ground states, checks their
//! variational identities, evolves the system pseudospectrally and examines
//! the linearized spectrum.

pub mod direction;
pub mod error;
pub mod evolution;
pub mod groundstate;
pub mod model;
pub mod petviashvili;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{eval_density, functionals, FieldPair, FunctionalRecord, Grid, ModelParams, Mu};
