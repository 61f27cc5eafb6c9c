//! Backstepping boundary control of radial reaction-diffusion on a disk:
//! kernel solver, its Catalan-number majorants, and a closed-loop simulator.

pub mod combinatorics;
mod error;
pub mod kernel;
pub mod profile;
pub mod simulator;
pub mod special;

pub use error::{Error, Result};
pub use profile::{Lambda, LambdaDescriptor, ReactionProfile};
