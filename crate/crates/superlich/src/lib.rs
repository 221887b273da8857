//! A computational calculus for Clifford modules over coordinate charts:
//! gamma representations, chart geometry with algorithmic differentiation,
//! endomorphism-valued differential forms, superconnections and the Dirac
//! operators they determine. Everything culminates in a catalog of operator
//! identities that are checked numerically to tiered tolerances by the
//! verification suite (`src/bin/superlich.rs` drives it from the command
//! line).
//!
//! Module map:
//! - [`clifford`]: finite-dimensional Clifford algebra, quantization map,
//!   supercommutator.
//! - [`geometry`]: coordinate charts, metric jets, curvature, vielbein and
//!   spin connection; the built-in geometry catalog.
//! - [`fields`]: pointwise-evaluated matrix fields carrying first and second
//!   derivatives, plus seeded random smooth fields.
//! - [`forms`]: graded algebra of endomorphism-valued forms, contraction,
//!   metric evaluation, quantization of forms.
//! - [`superconn`]: superconnections on S (x) W, their curvature expansion,
//!   the canonical projection onto one-forms, and the associated connection.
//! - [`diffop`]: order-two differential operators, Dirac operators, the
//!   decomposition right-hand sides, weak operator equality.
//! - [`degenerate`]: the degenerate Clifford action on a split cotangent
//!   space, pointwise algebra only.
//! - [`suite`]: the case runner, configuration and machine-readable reports.

pub mod clifford;
pub mod degenerate;
pub mod diffop;
pub mod fields;
pub mod forms;
pub mod geometry;
pub mod jet;
pub mod linalg;
pub mod par;
pub mod suite;
pub mod superconn;

pub use linalg::{CMat, Parity, C64};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("factorization error: {0}")]
    Factorization(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
