//! A finite-precision computation laboratory.
//!
//! The crate emulates floating-point systems over exact rationals, evaluates
//! algebraic circuits under exact, rounded, adversarial and interval
//! semantics, brackets evaluation condition numbers with certificates, and
//! runs the canonical-grid feasibility decider together with its precision
//! schedule.
//!
//! Module map:
//!
//! * [`fp_system`]: formats, rounding, standard-model arithmetic, `γ_n`,
//!   magnitude and size accounting.
//! * [`circuit`]: circuit representation, text format, validation and the
//!   four evaluation semantics.
//! * [`condition`]: certified `ρ_eval` brackets and feasibility-condition
//!   estimates.
//! * [`feasibility`]: testing grids, the grid-point decoder, the grid
//!   decider and the 1-D sign-change scheme.
//! * [`showcase`]: Hero's square root and the precision-hierarchy problem.

pub mod circuit;
pub mod condition;
pub mod feasibility;
pub mod fp_system;
pub mod rational;
pub mod seed;
pub mod showcase;

pub use rational::{parse_rational, ExtRational, Rational};
