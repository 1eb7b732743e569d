//! Paired Vlasov-Maxwell / Vlasov-Poisson experiments: configuration, paired
//! particle runs with transport diagnostics, `ε` sweeps, the Cauchy-Kovalevskaya
//! iteration and a verification battery.

pub mod ck;
pub mod config;
pub mod error;
pub mod io;
pub mod osgood;
pub mod report;
pub mod run;
pub mod setup;
pub mod verify;
pub mod sweep;

pub use config::RunConfig;
pub use error::HarnessError;
