//! Coherent explanations of fuzzy functions.
//!
//! A fuzzy function `f: [0,1]^n -> [0,1]^m` is explained by projecting its
//! inputs and outputs onto a small set of values (usually `{0,1}`) and reading
//! off a truth table. The explanation is faithful only where `f` is
//! *coherent*: `δ(f(x)) = δ(f(δ(x)))`. This crate measures coherence,
//! extracts Boolean rules, checks when explanation commutes with composition,
//! repairs incoherent functions and trains coherence-regularized networks.

pub mod coherence;
pub mod corpus;
pub mod dnf;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod functor;
pub mod gamma;
pub mod nn;
pub mod projection;
pub mod truth_table;

pub use coherence::{check_coherence, CoherenceReport, SamplingSpec};
pub use error::{Error, Result};
pub use expr::FuzzyExpr;
pub use nn::{MlpModel, TrainConfig};
pub use projection::Projection;
