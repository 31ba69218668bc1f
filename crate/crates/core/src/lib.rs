//! Model-free data-driven solver for inelastic trusses.
//!
//! Each time step looks for the compatible, equilibrated state closest in
//! phase space to a material data set conditioned on the element's previous
//! state. The data sets are sampled on the fly from reference viscoelastic
//! and elastic-plastic laws, which also provide the convergence oracles.

pub mod error;
pub mod experiments;
pub mod material_data;
pub mod materials;
pub mod phase_space;
pub mod seeding;
pub mod solver;
pub mod truss;

pub use error::{Error, Result};
