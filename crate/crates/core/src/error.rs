//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A node index fell outside the grid closure `0..=n1 x 0..=n2`.
    #[error("node ({i}, {j}) lies outside the grid closure 0..={n1} x 0..={n2}")]
    OutsideClosure {
        i: i64,
        j: i64,
        n1: usize,
        n2: usize,
    },

    /// An edge stencil touched nodes outside the closure; the caller must
    /// apply boundary ghost values first.
    #[error("edge stencil of node ({i}, {j}) touches nodes outside the grid closure")]
    BoundaryStencil { i: usize, j: usize },

    /// Two grid functions (or a function and a grid) do not live on the same grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A non-finite value appeared during a flow evaluation; signals blow-up
    /// or a too-large time step.
    #[error("non-finite value at node ({i}, {j}) at t = {t:.6e}")]
    Divergence { i: usize, j: usize, t: f64 },

    /// The adaptive stepper would need a time step below `dt_min`.
    #[error("time step would fall below dt_min = {dt_min:.3e} at t = {t:.6e}")]
    StepFailure { t: f64, dt_min: f64 },

    /// A state vector turned non-finite inside a Runge-Kutta stage.
    #[error("non-finite state inside a Runge-Kutta stage at t = {t:.6e}")]
    NonFiniteState { t: f64 },

    /// Invalid run configuration; the message names the offending key.
    #[error("config error: {0}")]
    Config(String),

    /// An operation was called outside its stated contract.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
