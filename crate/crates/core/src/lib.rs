//! Explicit solution of the Bayesian sequential test for the drift of a
//! Wiener process when the observer controls the signal intensity.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the pure
//! numerics:
//!
//! - [`penalty`]: terminal penalties `g` induced by classification losses.
//! - [`geometry`]: the function `Ψ(π) = (1-2π) ln(π/(1-π))`, the auxiliary
//!   `H(π; K) = g(π) - KΨ(π)` and the free-boundary root finder.
//! - [`control`]: control sets, running costs and the infimum `M` of
//!   `η(u) = (φ(u) + c)/u²`.
//! - [`solver`]: the three-regime value function, policies and the
//!   variational-inequality residual check.
//! - [`stats`]: operating characteristics of the optimal test (exit
//!   probabilities, conditional mean stopping times, Laplace transforms and
//!   series densities).
//! - [`simulate`]: reproducible per-path simulation of the posterior in
//!   three equivalent representations.
//!
//! IO, configuration files and the parallel Monte Carlo driver live in the
//! `ctlseq` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod math;

pub mod control;
pub mod geometry;
pub mod penalty;
pub mod simulate;
pub mod solver;
pub mod stats;

pub use crate::control::{ControlSet, CostModel, EtaRegime, EtaSolution, MinimizingSequence, Phi, Piece};
pub use crate::error::{Error, Result};
pub use crate::geometry::HClassification;
pub use crate::math::{logit, sigmoid, ExtReal};
pub use crate::penalty::{DecisionSet, PenaltyKind, PenaltyModel};
pub use crate::simulate::{McEstimate, PathOutcome, Representation, SimConfig, ThetaMode};
pub use crate::solver::{PolicyDescription, PolicyKind, Regime, Solution, ViReport, XBoundaries};
pub use crate::stats::{DensitySeries, TestCharacteristics};
