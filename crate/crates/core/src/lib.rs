//! Pseudo-spectral simulation and verification toolkit for incompressible
//! shear-thinning fluids whose power-law index depends on a transported
//! concentration, on the periodic unit torus in two or three dimensions.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command-line driver live in the companion `chemflow` crate.
//!
//! Layout:
//! - [`grid`], [`field`], [`calculus`], [`norms`]: periodic fields and their
//!   spectral calculus.
//! - [`constitutive`]: the stress law and its derivatives.
//! - [`energies`]: diagnostic functionals and the local comparison bound.
//! - [`solver`]: the truncated Galerkin / pseudo-spectral time integrator.
//! - [`verify`]: numerical checks of the structural and energy inequalities.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod calculus;
pub mod constitutive;
pub mod energies;
pub mod error;
mod fft;
pub mod field;
pub mod grid;
pub mod norms;
pub mod solver;
pub mod tensor;
pub mod verify;

pub use calculus::{
    divergence, leray_project, mollify, spectral_gradient, sym_gradient, truncate, Divergence, Gradient,
};
pub use constitutive::{p_eval, ExponentFn, ExponentShape, Gap, StressConstants, StressModel};
pub use energies::{
    d_bar, energy_ip, energy_jp, energy_report, gronwall_bound, gronwall_zeta, EnergyReport, GronwallParams, ZetaTerms,
};
pub use error::{Error, Result};
pub use field::{Field, ScalarField, Spectrum, SymTensorField, TensorField, VectorField};
pub use grid::GridSpec;
pub use norms::{lp_norm, modular, sobolev_seminorm};
pub use solver::{
    galerkin_refinement, init_state, recover_pressure, run, step, twin_run, velocity_tendency, ContractionReport,
    ForcingSpec, PressureField, RefinementReport, RunOptions, RunReport, Scheme, SolverConfig, State, Termination,
};
pub use tensor::{SymTensor, Tensor4};
pub use verify::{
    check_energy_balance, check_gronwall_chain, check_lemma_difference, check_lemma_hessian, check_max_principle,
    estimate_stress_constants, InequalityReport,
};
