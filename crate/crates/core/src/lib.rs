//! Exact maximum-load statistics for throwing `r` balls into `r` distinct
//! bins out of `n`, `T` times.
//!
//! The pipeline is: exact sequence `A(n,r;T)` ([`engine`]) → recurrence
//! guessing ([`guess`]) → long-range evaluation ([`eval`]) → the constant `C`
//! in `A ~ C sqrt(T)` ([`asymptotics`]). [`sim`] is an independent Monte Carlo
//! cross-check.

pub mod asymptotics;
pub mod engine;
pub mod error;
pub mod eval;
pub mod formats;
pub mod guess;
pub mod linalg;
pub mod modular;
pub mod poly;
pub mod problem;
pub mod rational;
pub mod real;
pub mod sim;

pub use engine::{
    a_sequence, brute_force_oracle, closed_form_n2, heuristic_constant, max_pmf, EngineConfig,
    GapProfile, MaxPmf, RationalSequence, StateTable,
};
pub use asymptotics::{compare_report, estimate_constant, estimate_constant_with, AsymptoticFit, Comparison, Corrections};
pub use error::{Error, Result};
pub use eval::{extend_exact, extend_float, EvaluationResult, PrecisionPolicy};
pub use guess::{search, GuessReport, RecurrenceOperator};
pub use problem::ProblemSpec;
pub use num_bigint::{BigInt, BigUint};
pub use num_rational::BigRational;
