//! Open harmonic chain with momentum-exchange noise, Langevin baths at both
//! ends and a tension applied at the right end.
//!
//! Engines: exact first and second moments ([`moments`]), a splitting
//! simulator ([`sim`]) and the macroscopic diffusive system ([`pde`]).
//! [`verify`] runs convergence studies across them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod cli;
pub mod config;
pub mod error;
pub mod linsolve;
pub mod moments;
pub mod output;
pub mod params;
pub mod pde;
pub mod sim;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
pub use params::{ChainParams, TensionSchedule};
