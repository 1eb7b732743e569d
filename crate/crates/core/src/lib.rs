//! Pseudospectral kernels for the multifluid relativistic Vlasov-Maxwell system
//! and its Vlasov-Poisson limit on the periodic torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`] holds band-limited Fourier fields, grid transforms, analytic
//!   norms and the elliptic solvers (Poisson, Leray, Helmholtz, Biot-Savart).
//! * [`fields`] carries the Maxwell state in potential form and integrates the
//!   stiff wave part exactly with exponential (ETD) propagators.
//! * [`multifluid`] evolves a finite ensemble of monokinetic phases and provides
//!   the coupled Vlasov-Maxwell and Vlasov-Poisson time steps.
//! * [`lagrangian`] pushes tagged particles through the stage fields so that a
//!   common-noise coupling between the two systems is available for transport
//!   diagnostics.

pub mod fields;
pub mod lagrangian;
pub mod multifluid;
pub mod spectral;

pub use fields::{EmState, FieldsError};

pub use lagrangian::{ParticleCloud, Trajectory};
pub use multifluid::{Phase, PhaseEnsemble, SolverError, ValidityGate};
pub use spectral::{SpectralError, SpectralField};
