//! Thermofield dynamics for time-dependent quadratic boson and fermion
//! Hamiltonians.
//!
//! The crate is organised around two independent routes to every physical
//! quantity:
//!
//! * the analytic route: invariant-operator mode equations integrated by
//!   [`mode_solver`], turned into Bogoliubov coefficients by [`bogoliubov`]
//!   and into finite-temperature observables by [`thermal`];
//! * the brute-force route: dense matrices in truncated (boson) or exact
//!   (fermion) Fock spaces, evolved by products of matrix exponentials in
//!   [`oracle`].
//!
//! [`verify`] runs the cross-checks between the two.

pub mod bogoliubov;
pub mod error;
pub mod mode_solver;
pub mod oracle;
pub mod protocols;
pub mod thermal;
pub mod verify;

pub use num_complex::Complex64 as C64;

pub use bogoliubov::{BogoliubovCoefficients, ReferenceMode, StaticFrame};
pub use error::{Result, TfdError};
pub use mode_solver::{
    BosonModeVector, DriftReport, FermionModeState, IntegratorConfig, IntegratorStats,
    OscillatorMode, Trajectory,
};
pub use protocols::{
    BosonProtocol, ComplexProfile, FermionProtocol, OscillatorProtocol, Profile, Protocol,
};
pub use thermal::{Statistics, ThermalParameters};

/// Imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);
