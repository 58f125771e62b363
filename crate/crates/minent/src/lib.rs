//! # minent
//!
//! One-shot quantum entropies on small dense systems: smoothed min- and
//! max-entropies, the divergence family behind them, explicit auxiliary-state
//! constructions, and a verification harness that evaluates both sides of the
//! operator and entropy inequalities these constructions satisfy.
//!
//! Everything works on register-labeled complex matrices at desk scale
//! (total dimension on the order of a few dozen). The crate favours
//! certificates over trust: optimizers return witnesses, smoothing returns
//! the achieving state together with its distance, and every inequality check
//! reports its slack.
//!
//! ## Layout
//!
//! - [`registers`], [`operator`], [`linalg`]: labeled tensor algebra, partial
//!   traces, matrix functions of Hermitian operators, state distances.
//! - [`divergence`]: relative entropy, max-relative entropy, sandwiched Rényi
//!   divergences, measured relative entropy (variational ascent), and a
//!   lower-bound search for the observational divergence.
//! - [`entropy`]: unsmoothed conditional entropies with certificates
//!   (min-entropy as a small SDP, the closed-form down-variant, max-entropy,
//!   and the support-based alternative max-entropy).
//! - [`solver`]: the self-contained feasibility engine (Douglas–Rachford
//!   splitting between an affine subspace and simple cones) plus the
//!   bisection driver used by all convex entropy programs.
//! - [`smooth`]: ε-ball optimization of entropies and of the max-relative
//!   entropy in purified distance, with brute-force cross-check oracles.
//! - [`construct`]: the explicit auxiliary objects: the β₀ quadrature and
//!   chain state, conditional rebasing, uniform mixing, the good projector,
//!   pinched and damped projector chains.
//! - [`classical`]: probability-table analogues and the classical chain-rule
//!   pipelines.
//! - [`eat`]: channels, Choi matrices, Markov/independence checks, per-round
//!   entropy infima, and entropy-accumulation bound evaluation.
//! - [`verify`]: one entry point per named inequality; each produces a
//!   [`verify::ChainRuleReport`] with slack and intermediate diagnostics.
//! - [`scenario`]: seeded instance generation, scenario files, batch runs,
//!   and JSON/table report emission (this backs the `minent` binary).
//!
//! All entropies are in nats (natural logarithm throughout).

#![forbid(unsafe_code)]

pub mod classical;
pub mod construct;
pub mod divergence;
pub mod eat;
pub mod entropy;
pub mod linalg;
pub mod operator;
pub mod registers;
pub mod scenario;
pub mod smooth;
pub mod solver;
pub mod verify;

mod error;

pub use error::{Error, Result};
pub use operator::{LabeledOperator, Projector, QuantumState};
pub use registers::RegisterSpace;

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix used throughout.
pub type CMat = nalgebra::DMatrix<C64>;
