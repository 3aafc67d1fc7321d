//! Truncated Galerkin / pseudo-spectral integrator for the regularized
//! coupled system.
//!
//! The velocity lives on the Fourier modes `|k|_inf <= K` and is kept
//! divergence-free and mean-free; the concentration lives on the full
//! dealiased grid. Time stepping is an integrating-factor IMEX scheme: the
//! constant-coefficient diffusion `nu0 Δv` and `Δc` are integrated exactly,
//! convection and the stress remainder `div(S - 2 nu0 Dv)` explicitly.

mod config;
pub mod initial;
mod pressure;
mod run;
mod state;
mod stepper;

pub use config::{ForcingSpec, Scheme, SolverConfig};
pub use pressure::{recover_pressure, PressureField};
pub use run::{
    galerkin_refinement, run, twin_run, ContractionReport, RefinementReport, RunOptions, RunReport, Snapshot,
    StepRecord, Termination,
};
pub use state::{init_state, State};
pub use stepper::{step, velocity_tendency, Stage, StageDiagnostics, Stepper};
