//! Key-and-signature compact multi-signatures built from linear
//! identification schemes.
//!
//! The crate provides:
//!
//! - [`algebra`]: exact arithmetic for both backends — a prime-order group
//!   with `Z_q` exponents and the negacyclic ring `R_q = Z_q[x]/(x^n + 1)`
//!   with its bounded coefficient sets and discrete Gaussian sampler.
//! - [`id`]: the canonical linear identification contract (commit /
//!   challenge / response with Theta-weighted aggregation), realized by a
//!   Schnorr backend and a lattice backend.
//! - [`multisig`]: the compiler from a linear identification scheme to a
//!   multi-signature whose aggregated public key and signature sizes are
//!   independent of the number of signers: hash-weighted key aggregation,
//!   the 3-round commit-reveal-respond signing session, and aggregate-only
//!   verification.
//! - [`forklab`]: the nested forking algorithm over pluggable rewindable
//!   algorithms with Monte-Carlo estimation of accepting and forking
//!   probabilities, and extraction demos for both backends.
//! - [`harness`]: an in-process multi-signer simulation with an
//!   intercepting message bus, adversarial delivery policies, the rogue-key
//!   attack demonstration and the aggregated-key impersonation experiment.
//! - [`files`]: the versioned binary container for keys, signatures and
//!   parameter sets used by the command-line tools.

pub mod algebra;
pub mod error;
pub mod files;
pub mod forklab;
pub mod harness;
pub mod id;
pub mod multisig;

pub use error::{Error, Result};
