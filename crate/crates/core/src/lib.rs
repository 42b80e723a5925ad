//! Electromagnetic formation flight: dynamics, control and dipole inversion.
//!
//! Satellites exchange forces and torques through sinusoidally driven
//! magnetic dipoles. The crate models the far-field interaction, the
//! carrier-averaged wrenches, the formation dynamics with reaction wheels,
//! a momentum-aware feedback controller and the inversion from commanded
//! wrenches to coil dipoles.

// Index loops over satellites; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod acmod;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod frames;
pub mod harness;
pub mod inversion;
pub mod kinematics;
pub mod magnetics;

pub use acmod::AcDipoleSet;
pub use error::*;
pub use frames::{CircularOrbit, Frame, Mrp};
pub use kinematics::{Disturbances, FormationParams, FormationState, SatelliteParams};
pub use magnetics::{Dipole, Wrench};
