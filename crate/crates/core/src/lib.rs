//! Reduced density operators of harmonic models and the length-scale duality
//! of their spectra.
//!
//! A model is fixed by a positive-definite coupling matrix `D` for the
//! hamiltonian `H = -½Δ + ½ xᵀ D x`. Its eigenstates are products of Hermite
//! functions in the normal-mode coordinates `y = R x`, with widths
//! `ℓ_μ = d_μ^(-1/4)`. Replacing every width by its inverse (equivalently
//! `D → D⁻¹`) leaves the spectrum of every reduced density operator
//! unchanged, because the two states are related by the Fourier transform.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: coupling matrices, model families, duals and equivalence
//!   classes.
//! - [`modes`]: normal modes, length scales and δ-coordinates.
//! - [`wavefunction`]: Hermite functions, eigenstates, superpositions and
//!   their energies.
//! - [`rdm`]: Gauss–Hermite grids and Nyström kernels of reduced density
//!   operators, plus the closed-form Gaussian marginal.
//! - [`spectra`]: occupation spectra and entropies.
//! - [`duality`]: end-to-end checks producing [`duality::DualityReport`]s.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod duality;
pub mod error;
pub mod linalg;
pub mod model;
pub mod modes;
pub mod parallel;
pub mod rdm;
pub mod spectra;
pub mod wavefunction;

pub use error::{Error, Result};
pub use model::InteractionMatrix;
pub use modes::NormalModes;
pub use parallel::Parallelism;
