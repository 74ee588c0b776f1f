//! Exact arithmetic for both scheme backends.
//!
//! [`group`] provides a prime-order multiplicative subgroup of `Z_p^*` with
//! scalar exponents in `Z_q`; [`ring`] provides the negacyclic polynomial
//! ring `R_q = Z_q[x]/(x^n + 1)` together with the bounded coefficient sets
//! used by the lattice scheme, and [`gaussian`] the table-driven discrete
//! Gaussian sampler over the integers.

pub mod gaussian;
pub mod group;
pub mod ring;

pub use gaussian::DiscreteGaussian;
pub use group::{GroupElement, GroupParams, ZqScalar};
pub use ring::{RingElement, RingParams, RingVector};
