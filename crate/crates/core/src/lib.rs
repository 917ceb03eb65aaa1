// Copyright 2026 chiralwg Contributors
// SPDX-License-Identifier: Apache-2.0

//! Simulation toolkit for chiral light–matter coupling in one-dimensional
//! photonic channels.
//!
//! * [`operators`]: tensor-product algebra for N two-level emitters.
//! * [`field`]: longitudinal fields, electric spin density, evanescent TIR
//!   fields and directional emission rates.
//! * [`scattering`]: single-emitter and chain scattering, isolators and
//!   circulators.
//! * [`master`]: cascaded, bidirectional and general chiral Lindblad
//!   generators.
//! * [`dynamics`]: time evolution, steady states, Liouvillian spectra and
//!   quantum-jump trajectories.
//! * [`protocols`]: state transfer, driven-dimer scans and device reports.

pub mod dynamics;
pub mod error;
pub mod field;
pub mod master;
pub mod operators;
pub mod protocols;
pub mod scattering;

pub use error::{Error, Result};
pub use operators::{DensityMatrix, Operator, PureState, C64};
