//! Verification workbench for a six-level projected-entangled-pair state on
//! finite hexagonal (brick-wall) patches.
//!
//! The crate is organized around five domains:
//!
//! - [`lattice`]: patch geometry, leg labeling, bond orientations, connected
//!   regions, and the two-site block partition used by the gap lemmas.
//! - [`peps`]: bond states, site projectors, contraction to physical
//!   statevectors, and boundary-to-physical support maps for regions.
//! - [`hamiltonian`]: two-body parent-Hamiltonian terms in projector form and
//!   explicit spin-operator form, four-site block projectors, and global
//!   assembly with matrix-free application.
//! - [`verification`]: subspace-intersection (uniqueness) checks,
//!   injectivity, low-lying spectra, and the operator inequalities behind the
//!   spectral-gap bound.
//! - [`mbqc`]: single-site measurement simulation on the state, Pauli-frame
//!   tracking, and validation of the gate tables against an independent
//!   circuit-model oracle.
//!
//! Supporting modules: [`linalg`] (dense/iterative Hermitian solvers,
//! subspace utilities), [`tensorops`] (strided local-operator application),
//! [`par`] (data-parallel helpers with a sequential fallback), [`serialize`]
//! (statevector / subspace file formats).

pub mod hamiltonian;
pub mod lattice;
pub mod linalg;
pub mod mbqc;
pub mod par;
pub mod peps;
pub mod serialize;
pub mod tensorops;
pub mod verification;
