//! Simulation and statistical verification toolkit for Bessel and
//! path-dependent Bessel processes in low dimension (`delta` in `[0, 1]`),
//! where the process is not a semimartingale solution of a classical SDE and
//! the generator carries a singular drift term.
//!
//! The crate provides:
//! - exact and Euler-type samplers for the squared process and its square
//!   root ([`sde`]), with non-anticipative path-dependent drift functionals
//!   ([`functional`]);
//! - the singular generator, its divergence form, domain classification, and
//!   the scale/harmonic transforms ([`operator`]);
//! - closed-form transition densities, their small-space limits, and
//!   tabulated CDFs ([`density`]);
//! - statistical martingale-problem verification ([`martingale`]) and
//!   Girsanov reweighting ([`girsanov`]);
//! - path-dependent solvers, assumption probes, and coupling/uniqueness
//!   diagnostics ([`pathdep`]).

pub mod cli;
pub mod density;
pub mod ensemble;
pub mod error;
pub mod functional;
pub mod girsanov;
pub mod grid;
pub mod io;
pub mod martingale;
pub mod operator;
pub mod pathdep;
pub mod rng;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
pub use functional::{bar_gamma, clamp_functional, PathFunctional};
pub use grid::{stop_path, Dimension, SamplePath, TimeGrid};
pub use sde::{sample_bes_exact, sample_besq_exact, SchemeVariant};
