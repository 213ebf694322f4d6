//! Simulation of "2+1" STIRAP population transfer in noise-protected
//! superconducting multilevel circuits.
//!
//! The pump leg of the usual Lambda scheme is forbidden by parity at the
//! device symmetry point, so it is synthesized as a dispersive two-photon
//! process and the resulting dynamical Stark shifts are cancelled by a slow
//! modulation of the drive phases. This crate provides
//!
//! - circuit Hamiltonians for a four-junction flux qudit and a transmon,
//!   with spectra, coupling matrix elements and selection rules
//!   ([`device`]);
//! - synthesis of the three-tone control field: Gaussian envelopes, carrier
//!   assignment, Stark shifts and the phase-modulation (chirp) laws for the
//!   strongly anharmonic and the nearly harmonic regime ([`control`]);
//! - model Hamiltonians at each level of description and a second-order
//!   Magnus coarse-graining engine to derive effective Hamiltonians
//!   numerically ([`effective`]);
//! - closed-system, Lindblad and quantum-jump propagation with population,
//!   leakage and transfer-efficiency extraction ([`dynamics`]);
//! - the quasistatic low-frequency noise model: correlated Gaussian detuning
//!   draws, calibration from qubit coherence times and ensemble averaging
//!   ([`noise`]);
//! - reproducible experiment configs and the sweep drivers behind the CLI
//!   ([`config`], [`experiments`]).
//!
//! All internal quantities use angular frequencies in rad/µs (ℏ = 1) and
//! times in µs; ordinary GHz/MHz values appear only at the config boundary.

pub mod control;
pub mod device;
pub mod dynamics;
pub mod effective;
pub mod experiments;
pub mod config;
pub mod linalg;
pub mod noise;
pub mod units;

pub use num_complex::Complex64 as C64;

/// Top-level error type aggregating the per-module failure modes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Device(#[from] device::DeviceError),
    #[error(transparent)]
    Control(#[from] control::ControlError),
    #[error(transparent)]
    Effective(#[from] effective::EffectiveError),
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error(transparent)]
    Noise(#[from] noise::NoiseError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
