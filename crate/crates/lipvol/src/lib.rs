//! Growth constants of Lipschitz functions on finite graphs.
//!
//! For a finite graph `G` with components `C_1..C_k`, an integer function
//! `f : V -> Z` is `h`-Lipschitz when `|f(u) - f(v)| <= h` across every edge,
//! and rooted when it vanishes at one fixed vertex per component.  The number
//! `N_G(h)` of rooted `h`-Lipschitz functions is a polynomial in `h` of degree
//! `|V| - k`, and the growth constant `c(G)` is defined by
//!
//! ```text
//! c(G)^(|V|-k) = lim_{h -> inf} N_G(h) / h^(|V|-k)
//!              = Vol { x : x(r_i) = 0, |x(u) - x(v)| <= 1 on edges }.
//! ```
//!
//! The crate computes `c(G)` exactly on small graphs by lattice-point counting
//! and finite differences ([`exact`]), estimates the polytope volume
//! stochastically on larger graphs by sequential importance sampling ([`mc`]),
//! and verifies the closed-form ingredients of the sharp `pi^2/(6d)` asymptotic
//! for sparse random graphs: logistic boundary-layer integrals ([`profile`])
//! and q-Pochhammer / Gaussian-binomial identities ([`qseries`]).
//!
//! The `lipvol` binary exposes all of it behind seeded, reproducible
//! subcommands; [`experiment`] drives the larger sweeps.

pub mod exact;
pub mod experiment;
pub mod graph;
pub mod mc;
pub mod profile;
pub mod qseries;

mod quad;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("work budget exceeded: {spent} node expansions against a budget of {budget}")]
    WorkBudget { spent: u64, budget: u64 },
    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for assertion-style failures,
    /// 3 for exhausted resource budgets, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Assertion(_) => 2,
            Error::WorkBudget { .. } => 3,
            _ => 1,
        }
    }
}
