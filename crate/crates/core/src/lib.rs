//! Exact tools for plane sheaves given by a resolution `0 -> E1 -> E0 -> F -> 0`
//! with `E0`, `E1` sums of line bundles: Hilbert polynomials, polarization regions
//! for semistability of the morphism, stability checks on explicit matrices, and
//! the duality `F -> Ext^1(F, omega)(1)` on types, matrices and cohomology tables.

// Dense linear algebra here reads more clearly with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod bundle;
pub mod cli;
pub mod duality;
pub mod expr;
pub mod hilbert;
pub mod mpoly;
pub mod poly;
pub mod polymatrix;
pub mod rat;
pub mod region;
pub mod registry;
pub mod ring;
pub mod stability;
pub mod upoly;
