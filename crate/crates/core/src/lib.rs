//! Numerics for the spherical Sherrington–Kirkpatrick free energy near the
//! spin-glass/paramagnetic transition.
//!
//! The crate samples GOE/GUE-class disorder (tridiagonal and dense), computes
//! spectra and linear statistics, evaluates the free energy through contour
//! integrals over the spectrum, and compares replica samples with their
//! Gaussian, Tracy–Widom and mixed limit laws.

// NaN must fail range checks, hence `!(x > 0.0)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensembles;
pub mod error;
pub mod experiments;
pub mod free_energy;
pub mod limit_laws;
pub mod numeric;
pub mod par;
pub mod seed;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use seed::SeedPlan;
