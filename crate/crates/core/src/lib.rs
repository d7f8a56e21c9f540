//! Poisson-Lie deformation of trigonometric spin Sutherland models on SU(n):
//! explicit reduced states, Lax matrices, integrators, the projection solver,
//! the scaling limit and numerical checks of the Poisson structure on B.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constraint;
pub mod dynamics;
pub mod error;
pub mod heisenberg;
pub mod matrix;
pub mod par;
pub mod phasespace;
pub mod poisson;
pub mod sample;
pub mod sutherland;

pub use error::{Error, Result};
