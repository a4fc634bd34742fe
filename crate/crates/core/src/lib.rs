//! Generalized Lempert and Green function machinery on polydisks.
//!
//! The library works with four kinds of objects:
//!
//! - elementary local indicators `max_j m_j log |z . conj(v_j)|` built from a
//!   basis of C^n and nonnegative weights ([`indicator`]);
//! - analytic disks given coordinatewise by ratios of complex polynomials,
//!   with exact Taylor expansion, valuations and pole multiplicities ([`disk`]);
//! - pole systems, admissible disk/preimage assignments, the weighted
//!   log-modulus functional and the explicit bidisk Green formulas ([`polesys`]);
//! - upper-bound search over parameterized disk families and the pole-collision
//!   perturbation construction ([`search`]).
//!
//! All numerical routines are deterministic: stochastic ones take explicit
//! seeds, sampling grids are enumerated in fixed order.

pub mod disk;
pub mod extreal;
pub mod indicator;
pub mod linalg;
pub mod polesys;
pub mod poly;
pub mod search;

pub use extreal::ExtReal;
