//! Grover search with a prior distribution over the solution location.
//!
//! Given a prior `p` over `N` items and a fixed number of oracle queries `T`,
//! the search starts from `|s> = sum_i sqrt(q_i)|i> + sqrt(1 - sum q)|sink>`
//! and alternates the phase oracle with the reflection `I - 2|s><s|`. Item `i`
//! is then found with probability `sin^2((2T+1) asin sqrt(q_i))`, and the
//! expected success probability is the `p`-weighted sum of those terms.
//!
//! The crate is split by role:
//!
//! * [`prior`] builds, compares and samples prior distributions.
//! * [`esp`] evaluates the objective and the classical / Grover baselines.
//! * [`optimizer`] finds the optimal amplitude plan (water-filling on the
//!   Lagrange multiplier) plus the closed-form single-query route.
//! * [`simulator`] is an exact statevector simulator used as the oracle for
//!   every analytic probability.
//! * [`bounds`] machine-checks the optimality statements independently of the
//!   optimizer.
//! * [`circuit`] produces the 3-qubit "half-half" circuits and OpenQASM text.
//! * [`experiments`] drives the `qsearch` command line tool.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod circuit;
pub mod error;
pub mod esp;
pub mod experiments;
pub mod optimizer;
pub mod prior;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
pub use esp::{AmplitudePlan, EspReport, Method};
pub use optimizer::{cap, optimize, optimize_t1_closed_form, OptimizerConfig, Optimum};
pub use prior::Prior;
