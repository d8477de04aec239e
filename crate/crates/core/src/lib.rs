//! Classical trajectories and quantum spectra of the complex-deformed oscillators
//! `H = p^2 + x^{2K} (ix)^eps` and `H = p^2 + |x|^P (ix)^eps`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod dynamics;
pub mod error;
pub mod flow;
pub mod ode;
pub mod potential;
pub mod quad;
pub mod shooting;
pub mod special;
pub mod sweep;
pub mod wkb;

pub use error::{PtError, Result};
pub use potential::{Deformation, Family};
