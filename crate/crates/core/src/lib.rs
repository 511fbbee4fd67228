//! Collapse dynamics in which each reduction's statistics depend only on the
//! reductions in its past light cone, run side by side with standard
//! (globally time-ordered) collapse, plus a Bell/CHSH harness for comparing
//! the two as wing separation and collapse delays vary.

pub mod bell;
pub mod collapse;
pub mod engine;
pub mod error;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod spacetime;

pub use error::{Error, Result};
