//! Complementary finite volume solver for the anisotropic Willmore flow of
//! graphs: a fourth order parabolic system for a height function `u` over a
//! rectangular domain, driven by a pluggable anisotropic surface energy
//! density and integrated in time with an adaptive Runge-Kutta-Merson
//! stepper.
//!
//! The crate is organised around the stages of the method of lines:
//!
//! * [`grid`] — node lattice, dual finite volume mesh and stencil primitives,
//! * [`anisotropy`] — surface energy densities, their gradients and Hessians,
//! * [`spatial`] — the semidiscrete right-hand side and boundary conditions,
//! * [`integrator`] — adaptive Runge-Kutta-Merson time stepping,
//! * [`mms`] — manufactured solution, forcing term and convergence norms,
//! * [`energy`] — discrete scalar products, Green formula and energy monitor,
//! * [`config`], [`io`], [`run`] — experiment configuration, serialization
//!   and the `evolve` / `eoc` / `wulff` drivers behind the CLI.

// `!(x > 0.0)`-style guards deliberately reject NaN along with the
// out-of-range values; the flipped comparison would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anisotropy;
pub mod config;
pub mod energy;
pub mod error;
pub mod grid;
pub mod integrator;
pub mod io;
pub mod mms;
pub mod run;
pub mod spatial;

pub use error::{Error, Result};
