//! Reconstruction of planar curves from the modulus of their velocity under
//! polar perspective parametrization.
//!
//! Given `U(theta)`, every depth function solving `rho'^2 + rho^2 = U` is built
//! from three ingredients: regular branches integrated from non-critical
//! initial conditions ([`ivp`]), analytic germs at critical points obtained by
//! Taylor recursion ([`taylor`]), and the global assembly of both into the
//! maximal-depth solution and convergence cones ([`assembler`]).

pub mod assembler;
pub mod cli;
pub mod error;
pub mod expr;
pub mod interval;
pub mod ivp;
pub mod maximal;
pub mod modulus;
pub mod param;
pub mod sampled;
pub mod series;
pub mod taylor;

pub use error::{Error, Result};
pub use expr::{parse, Expr, ParseError};
pub use interval::Interval;
pub use modulus::{Jet, ModulusModel};
pub use param::{DepthFunction, PlanarPoint};
