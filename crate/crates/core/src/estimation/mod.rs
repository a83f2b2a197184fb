//! Inverse problems: recovering beating parameters, power-scan
//! coefficients, the reduced density matrix and its uncertainties from
//! simulated or measured counts.

mod beating_fit;
mod bootstrap;
mod density;
mod guess;
pub mod lm;
mod polyfit;

pub use beating_fit::{
    fit_beating, fit_beating_with, subtract_accidentals, BeatingFit, FitOptions,
};
pub use bootstrap::{
    bootstrap_replicate, propagate_uncertainties, BootstrapSummary, Estimate, ReplicateDraw,
    MIN_REPLICATES,
};
pub use density::{
    fidelity_closed_form, fidelity_to_bell, physicality_margin, project_physical,
    reconstruct_density, DensityMatrix, PHYSICALITY_TOLERANCE,
};
pub use guess::{dominant_angular_frequency, initial_guess, MIN_GUESS_POINTS};
pub use polyfit::{fit_power_scan, PolynomialFit, ScanDecomposition};
