//! Exact steady-state analysis of multi-server queues with general renewal
//! arrivals and exponential service: GI/M/c, GI/M/c/N, and the batch-arrival
//! GI^X/M/c and GI^X/M/c/N models with partial or full batch rejection.
//!
//! The pipeline is the one an analyst would run by hand:
//!
//! 1. describe the interarrival law ([`InterarrivalSpec`]) and, optionally, the
//!    batch-size law ([`BatchSpec`]);
//! 2. assemble a [`ModelSpec`];
//! 3. compute the pre-arrival distribution with [`solver`];
//! 4. map it to time averages and performance measures with [`measures`].
//!
//! One-step transition probabilities of the embedded chain are evaluated as
//! finite sums of Laplace–Stieltjes transform derivatives, never by numerical
//! integration. All of that runs in configurable-precision arithmetic
//! ([`Real`], [`PrecisionContext`]), so that models with tens of servers and
//! truncation levels in the thousands stay well inside representable range.
//!
//! [`simulator`] is a plain floating-point discrete-event simulation used as an
//! independent oracle.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
mod real;

pub mod distributions;
pub mod kernel;
pub mod measures;
pub mod numerics;
pub mod simulator;
pub mod solver;

pub use distributions::{BatchSpec, InterarrivalLaw, InterarrivalSpec, PhaseType};
pub use error::{Error, Result};
pub use kernel::{Buffer, ModelSpec, Rejection, SingleKernel, TransitionMatrix};
pub use measures::{PerformanceReport, StationaryResult, TimeAverageDistribution, WaitConvention};
pub use numerics::PrecisionContext;
pub use real::Real;
pub use simulator::SimulationResult;
pub use solver::{ArrivalDistribution, FiniteMethod};
