//! Steady-state transport and full counting statistics for quasi-free fermions
//! on tight-binding lattices.
//!
//! The physical setup is a finite sample (arbitrary Hermitian `H_S`) coupled to
//! `M` semi-infinite one-band leads (half-line Dirichlet Laplacians with hopping
//! 1/2, band `[-1, 1]`), each lead held by a reservoir at inverse temperature
//! `β_k` and chemical potential `μ_k`. The crate computes:
//!
//! - on-shell scattering matrices and transmittances from the lead surface
//!   Green's function ([`scattering`]),
//! - Landauer-Büttiker steady currents, entropy production and the Onsager
//!   matrix ([`transport`]),
//! - the Levitov cumulant generating function of charge/energy full counting
//!   statistics, its fluctuation symmetries and large-deviation rate functions
//!   ([`fcs`]),
//! - exact finite-lead oracles: one-particle time evolution, finite-time FCS
//!   determinants and wavepacket scattering ([`timeevo`]), and a Fock-space
//!   simulator for the two-time measurement protocol ([`fock`]).
//!
//! Matrices are `ndarray` arrays with `num_complex::Complex64` scalars; dense
//! factorizations are delegated to `faer` internally.

pub mod fcs;
pub mod fock;
pub mod lead;
mod linalg;
pub mod model;
pub mod numerics;
pub mod scattering;
pub mod timeevo;
pub mod transport;

pub use model::{EquilibriumRef, LeadCoupling, ReservoirParams, SampleSpec, SystemSpec};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
