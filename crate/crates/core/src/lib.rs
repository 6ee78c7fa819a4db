//! Capture-point push recovery for a biped modelled as a linear inverted
//! pendulum with a flywheel.
//!
//! One model-predictive controller drives both the ZMP (ankle strategy) and
//! the angular momentum rate of the upper body (hip strategy, moving the CMP),
//! solved as a dense QP every control period.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod model;
pub mod mpc;
pub mod qp;
pub mod sim;
