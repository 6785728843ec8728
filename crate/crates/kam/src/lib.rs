//! Construction of Kolmogorov invariant tori by a quadratic Newton iteration.
//!
//! Given a real-analytic Hamiltonian `H` on the annulus `T^n x R^n` close to a
//! non-degenerate normal form `K° = c + α·r + Q(θ)·r² + O(r³)` with Diophantine
//! frequency `α`, this crate computes a normal form `K` and a fibered
//! symplectomorphism `G` with `H = K ∘ G`, and then verifies dynamically that
//! the constructed torus is invariant with frequency `α`.
//!
//! Everything analytic is represented as a truncated Fourier-Taylor series
//! (Fourier modes in the angles, Taylor powers in the actions) with a
//! computable majorant norm playing the role of the sup norm on complex strips.
//!
//! # Module map
//!
//! - [`series`] — truncated Fourier-Taylor algebra and strip norms
//! - [`cohomology`] — the small-divisor solver `L_α⁻¹` and Diophantine scans
//! - [`normalform`] — Kolmogorov forms and the linearized conjugacy solve
//! - [`group`] — fibered symplectomorphisms: exp, compose, inverse, pullback
//! - [`scheme`] — the Newton step, the shrinking-strip driver, the convergence
//!   certificate
//! - [`verify`] — independent dynamical verification (embedding, vector-field
//!   residual, trajectory integration)
//! - [`config`] / [`cli`] — problem ingestion, machine-readable reports, and
//!   the `kam` command-line front end
//!
//! # Runnable examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --release -p kam --example check_alpha       # Diophantine scan + spectrum
//! cargo run --release -p kam --example series_algebra    # series ops and strip norms
//! cargo run --release -p kam --example homological_solve # the L_α⁻¹ solver
//! cargo run --release -p kam --example linearized_solve  # triangular conjugacy solve
//! cargo run --release -p kam --example exp_and_group     # flows, composition, inversion
//! cargo run --release -p kam --example newton_pendulum   # full run: forced pendulum
//! cargo run --release -p kam --example exact_conjugate   # recovery of a known conjugacy
//! cargo run --release -p kam --example certificate       # fixed-point convergence bounds
//! cargo run --release -p kam --example verify_torus      # embedding + flow check
//! cargo run --release -p kam --example two_torus         # n = 2 smoke run
//! ```
//!
//! The thin `kam` binary exposes the same pipeline as subcommands
//! (`check-alpha`, `run`, `certificate`, `verify`); see the crate README.

// Index-parallel loops over small dense vectors/matrices read better with
// explicit indices here.
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod cohomology;
pub mod config;
mod error;
pub mod grid;
pub mod group;
mod linalg;
pub mod normalform;
pub mod sampling;
pub mod scheme;
pub mod series;
pub mod verify;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
