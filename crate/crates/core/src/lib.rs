//! Enhancement of the Milnor number for polynomial maps ℝ⁴ → ℝ² with an
//! isolated critical point at the origin.
//!
//! λ(F) and ρ(F) are Hopf invariants of the self-dual and anti-self-dual
//! Gauss triples of `F`; μ = λ + ρ. The [`hopf`] module computes Hopf
//! invariants two independent ways: by linking numbers of traced preimage
//! circles, and by a Monte Carlo evaluation of the helicity integral.

pub mod combinat;
pub mod dsl;
pub mod enhancement;
pub mod error;
pub mod hopf;
pub mod identities;
pub mod mapcore;
pub mod poly;
pub mod sphere;

pub use error::{Error, Result};
