//! Forward model and inverse estimators for a frequency-bin entangled
//! photon-pair source built from cascaded SHG/SPDC in a Sagnac loop.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure numerics:
//!
//! - [`statekit`]: pump polarization to two-photon state, fiber PBS
//!   decomposition into bunching/antibunching path states, branch
//!   probabilities and energy-conservation helpers.
//! - [`counting`]: singles/coincidence/accidental rate models, CAR, seeded
//!   Poisson sampling of branch counts, dB ratio and balance parameter.
//! - [`beating`]: the spatial-quantum-beating interferogram and noisy
//!   dataset synthesis.
//! - [`estimation`]: beating-curve fits, power-scan fits, density-matrix
//!   reconstruction, Bell-state fidelity and bootstrap uncertainties.
//!
//! File formats, configuration and the command-line front end live in the
//! `freqbin` crate.
#![no_std]
// `!(x > 0.0)` is deliberate throughout: it also rejects NaN. Index loops mirror the matrix algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod beating;
pub mod counting;
mod error;
pub mod estimation;
pub mod linalg;
mod rng;
pub mod statekit;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use rng::replicate_rng;
