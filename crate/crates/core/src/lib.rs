//! Joint and conditional tails of bivariate elliptical pairs with a
//! Gumbel-type radial component: exact quadrature, asymptotic approximations,
//! simulation and semiparametric estimation.

// `!(v > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod estimators;
pub mod exact;
pub mod exec;
pub mod geometry;
pub mod pair;
pub mod quadrature;
pub mod radial;
pub mod simulation;
pub mod special;

pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{directional_constants, geometry_at, TailGeometry};
pub use pair::EllipticalPair;
pub use quadrature::QuadratureResult;
pub use radial::{ModelDescriptor, RadialModel, Survival};
