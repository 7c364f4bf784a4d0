//! Event-driven simulation and certification of integrate-and-fire spiking
//! controllers that emulate static output feedback on LTI plants.
//!
//! The crate is organised bottom-up:
//!
//! * [`matrixkit`]: dense kernels (matrix exponential, 2-norm, Lyapunov
//!   certificates, iSISS gain).
//! * [`plant`]: the LTI plant, its exact inter-spike flow and impulse jumps,
//!   and the ideal continuous closed loop.
//! * [`neuron`]: integrate-and-fire units, spike events and spiking signals
//!   with their running integral and ⋆-norm.
//! * [`network`]: controller builders (SISO pair, MIMO grid, row-gain,
//!   piecewise-affine emulator).
//! * [`simulator`]: the hybrid closed-loop simulation with event localization.
//! * [`certify`]: closed-form bounds and verification of simulated runs.
//! * [`scenario`] / [`output`]: scenario files, presets and CSV/report output.

pub mod certify;
pub mod error;
pub mod matrixkit;
pub mod network;
pub mod neuron;
pub mod output;
pub mod plant;
pub mod scenario;
pub mod simulator;

pub use error::{Error, Result};
pub use matrixkit::{DecayEnvelope, Matrix};
