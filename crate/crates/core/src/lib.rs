//! Joint power and admission control for K-link interference networks.
//!
//! Given channel gains, SINR targets and power budgets, the solvers look for
//! a largest set of links that can be served simultaneously, using as little
//! total transmit power as possible.
//!
//! - [`model`]: networks, normalization to `(A, c)`, SINR evaluation.
//! - [`numerics`]: dense LU / Cholesky and a Perron-root estimator.
//! - [`feasibility`]: exact supportability certificates, Foschini–Miljanic
//!   power control and an exhaustive optimal-admission oracle.
//! - [`lp`]: interior-point LP solver and the ℓ1 approximation.
//! - [`nlpd`]: ℓ1-guided deflation (the NLPD baseline).
//! - [`pnmd`]: ℓp-guided deflation with a log-barrier Newton solver.
//! - [`bench`]: random instance generation and the Monte-Carlo harness.
//! - [`verify`]: quick randomized self-checks.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod feasibility;
pub mod lp;
pub mod model;
pub mod nlpd;
pub mod numerics;
pub mod pnmd;
pub mod verify;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use feasibility::{is_supportable, FeasibilityCertificate, FeasibilityReason, OracleResult};
pub use model::{LinkNetwork, NormalizedChannel, SolverSolution};
pub use nlpd::{AdmissionResult, AlphaParams, NlpdParams};
pub use pnmd::{IpmParams, PnmdParams};
