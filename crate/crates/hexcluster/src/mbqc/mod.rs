//! Measurement-based computation on the six-level cluster state.
//!
//! A logical wire runs right-to-left through a row of sites: the input qubit
//! enters on a dangling right leg, each measured site applies a one-qubit
//! operation, and the wire exits on a dangling left leg. Vertical bonds
//! between two wires realize controlled-Z interactions. [`basis`] fixes the
//! measurement bases and the classical correction rules, [`simulator`]
//! collapses patches exactly, [`reference`] is an independent circuit oracle
//! the realized operations are compared against, [`patterns`] describes
//! runnable measurement sequences, and [`checks`] verifies every gate family
//! over all outcome tuples.

pub mod basis;
pub mod checks;
pub mod patterns;
pub mod reference;
pub mod simulator;

use thiserror::Error;

use crate::lattice::{LatticeError, LegId, SiteId};
use crate::peps::PepsError;

#[derive(Debug, Error)]
pub enum MbqcError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Peps(#[from] PepsError),
    #[error("site {0} is not part of the simulated region or was already measured")]
    UnknownSite(SiteId),
    #[error("leg {0:?} is not an open leg of the simulated state")]
    UnknownLeg(LegId),
    #[error("outcome {outcome} at site {site} has probability {probability:.3e}")]
    DeadBranch {
        site: SiteId,
        outcome: usize,
        probability: f64,
    },
    #[error("{0} sites are still unmeasured")]
    SitesRemain(usize),
    #[error("outcome {outcome} out of range for a {dim}-outcome basis")]
    BadOutcome { outcome: usize, dim: usize },
    #[error("invalid pattern: {0}")]
    BadPattern(String),
    #[error("invalid circuit: {0}")]
    BadCircuit(String),
}
