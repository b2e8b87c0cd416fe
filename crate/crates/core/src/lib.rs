//! Policy evaluation with temporal-difference learning under linear function
//! approximation.
//!
//! The crate is `no_std` (it needs `alloc`) and carries everything that is
//! pure computation:
//!
//! - [`numerics`]: small dense linear algebra and reproducible random streams.
//! - [`environments`]: the random walk, the random Markov reward process and
//!   Baird's seven-state counterexample, with their feature maps.
//! - [`algorithms`]: explicit, implicit and projected TD(0), TD(λ) and TDC,
//!   step-size schedules and trajectory runners.
//! - [`oracle`]: stationary quantities, steady-state matrices, fixed points,
//!   true value functions and the error metrics used to score runs.
//!
//! File formats, the experiment harness and the command-line tool live in the
//! companion `implicit-td` crate.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algorithms;
pub mod environments;
mod error;
pub mod numerics;
pub mod oracle;

pub use error::{Error, Result};
