//! Canonical testing grids, the grid-point decoder, the grid-search
//! feasibility decider and the 1-D sign-change scheme.
//!
//! Grid coordinates are packed as
//! `zero-flag(1) | sign(1) | e + 2^k (k+2 bits) | d_2..d_{k+1} (k bits)`,
//! so each coordinate takes `2k+4` bits. Sorting by packed code lists
//! positive values by `(e, m)`, then negative ones, then zero.

mod decide;
mod decode;
mod grid;

use thiserror::Error;

use crate::circuit::EvalError;
use crate::fp_system::FpError;

pub use decide::{
    decide_feasible_grid, decide_sign_change_1d, DecideMode, DecideOptions, Decision,
    DecisionRecord, SignChangeRecord, DEFAULT_GRID_CAP,
};
pub(crate) use decide::with_workers;
pub use decode::{decode_grid_code, decode_grid_point, IntervalArithmetic};
pub use grid::{enumerate_grid, CoordCode, GridCode, GridIter, GridSpec, MAX_K};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeasError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid grid code: {0}")]
    InvalidCode(String),
    #[error("grid of {} points exceeds the cap of {cap}", points.map_or_else(|| "more than 2^128".to_string(), |p| p.to_string()))]
    CapExceeded { points: Option<u128>, cap: u64 },
    #[error(transparent)]
    Arithmetic(#[from] FpError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
