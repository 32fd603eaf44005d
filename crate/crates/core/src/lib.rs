//! Symmetry analysis of optimal control problems.
//!
//! Given a problem `min ∫ L(t,x,u) dt` subject to `x' = φ(t,x,u)`, this crate
//! checks quasi-invariance under parameter families of transformations,
//! searches for infinitesimal symmetry generators, builds the associated
//! Noether first integrals `ψ0·f + ψ·ξ − H·τ`, and measures their drift along
//! numerically integrated Pontryagin extremals.

pub mod error;
pub mod expr;
pub mod extremal;
pub mod family;
pub mod homogeneity;
pub mod invariance;
pub mod linalg;
pub mod model;
pub mod noether;
pub mod search;

pub use error::{Error, Result};
pub use expr::{Expr, ExprError, Symbol};
pub use family::{generator_of, scaling_family, Family, Generator, Infinitesimal, ScalingForm};
pub use homogeneity::{detect_weights, scaling_integral, Weights};
pub use invariance::{check_family, check_generator, InvarianceReport};
pub use model::{ExtremalPoint, Problem};
pub use noether::{first_integral, gauge_adjust, verify_symbolic, FirstIntegral, IntegralSource};
pub use search::{search_generators, search_report, Ansatz};
