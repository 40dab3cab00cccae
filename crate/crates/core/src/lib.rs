//! Exterior calculus, instanton residuals and solution families on
//! cohomogeneity-one manifolds with special holonomy.

pub mod algebra;
pub mod catalog;
pub mod error;
pub mod exterior;
pub mod gauge;
pub mod geometries;
pub mod homogeneous;
pub mod scalar;
pub mod solvers;

pub use catalog::{instantiate, list_families, SolutionFamily};
pub use error::{Error, Result};
pub use exterior::{Coframe, DiagonalMetric, Form};
pub use gauge::{ConnectionAnsatz, ResidualReport};
pub use geometries::Geometry;
pub use scalar::{Expr, ParamEnv, Rational};
