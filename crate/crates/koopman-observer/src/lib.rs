//! Data-driven observer synthesis for nonlinear systems via lifted linear models.
//!
//! The workflow: lift the state through a dictionary of observables, identify a
//! linear generator surrogate from sampled trajectories data (`edmd`), estimate how
//! much data makes that surrogate trustworthy (`bounds`), synthesize an observer
//! gain with a certified decay rate by semidefinite programming (`lmi` on top of
//! `sdp`), and validate the closed loop in simulation (`sim`). Two worked systems
//! live in `systems`; `pipeline` strings the stages together for the CLI and the
//! examples.

pub mod bounds;
pub mod config;
pub mod dict;
pub mod edmd;
pub mod error;
pub mod linalg;
pub mod lmi;
pub mod model;
pub mod pipeline;
pub mod plot;
pub mod samples;
pub mod sdp;
pub mod sim;
pub mod systems;

pub use error::Error;
