//! Opinion-dynamics message passing on graphs and hypergraphs.
//!
//! The crate covers French–DeGroot and Hegselmann–Krause updates, a
//! bounded-confidence scheme with attraction, repulsion and a confining
//! control term, hypergraph diffusion, Dirichlet-energy diagnostics and two
//! end-to-end pipelines (network simplification and label propagation).

pub mod cli;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod influence;
pub mod integrators;
pub mod io;
pub mod pipeline;
pub mod state;

pub use error::{Error, Result};
pub use state::StateMatrix;
